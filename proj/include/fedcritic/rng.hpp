// SPDX-License-Identifier: Apache-2.0

#ifndef FEDCRITIC_RNG_HPP
#define FEDCRITIC_RNG_HPP

#include <complex>
#include <cstdint>
#include <random>
#include <string_view>

namespace fedcritic {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent stream seed from a root seed, a stream name and an
/// index. Streams for different names/indices never share state, so e.g.
/// changing learner randomness cannot perturb channel draws.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stream,
                                 std::uint64_t index = 0) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the stream tag
    for (char c : stream) {
        h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
        h *= 0x100000001b3ULL;
    }
    return splitmix64(root ^ splitmix64(h ^ splitmix64(index)));
}

class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : gen_(seed) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(gen_); }

    double normal() { return normal_(gen_); }

    /// Circularly-symmetric complex normal with unit total variance.
    std::complex<double> complex_normal() {
        static constexpr double half = 0.7071067811865476;  // sqrt(1/2)
        return {normal() * half, normal() * half};
    }

    /// Uniform integer in [0, n).
    int uniform_int(int n) { return std::uniform_int_distribution<int>(0, n - 1)(gen_); }

    std::uint64_t next_u64() { return gen_(); }

    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace fedcritic

#endif
