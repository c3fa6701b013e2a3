// SPDX-License-Identifier: Apache-2.0

#ifndef FEDCRITIC_CHECKPOINT_HPP
#define FEDCRITIC_CHECKPOINT_HPP

#include <Eigen/Dense>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace fedcritic {

/// Checkpoint file layout (all integers and floats little-endian):
///   magic "FCRITIC1" | u32 version | u32 role (0 actor, 1 critic) |
///   u32 bs_index | u64 update_counter | u32 descriptor length |
///   descriptor bytes | u64 parameter count | f64 parameters.
struct Checkpoint {
    std::uint32_t role = 0;
    std::uint32_t bs_index = 0;
    std::uint64_t update_counter = 0;
    std::string descriptor;
    Eigen::VectorXd params;
};

inline constexpr char kCheckpointMagic[8] = {'F', 'C', 'R', 'I', 'T', 'I', 'C', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename T>
void write_le(std::ostream& os, T v) {
    static_assert(std::is_integral_v<T>);
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i)
        buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
    static_assert(std::is_integral_v<T>);
    unsigned char buf[sizeof(T)];
    is.read(reinterpret_cast<char*>(buf), sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
}

inline void write_f64_le(std::ostream& os, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof(bits));
    write_le(os, bits);
}

inline double read_f64_le(std::istream& is) {
    const std::uint64_t bits = read_le<std::uint64_t>(is);
    double d;
    std::memcpy(&d, &bits, sizeof(d));
    return d;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    detail::write_le(os, kCheckpointVersion);
    detail::write_le(os, ckpt.role);
    detail::write_le(os, ckpt.bs_index);
    detail::write_le(os, ckpt.update_counter);
    detail::write_le(os, static_cast<std::uint32_t>(ckpt.descriptor.size()));
    os.write(ckpt.descriptor.data(),
             static_cast<std::streamsize>(ckpt.descriptor.size()));
    detail::write_le(os, static_cast<std::uint64_t>(ckpt.params.size()));
    for (int i = 0; i < ckpt.params.size(); ++i)
        detail::write_f64_le(os, ckpt.params[i]);
    if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
        throw std::runtime_error("bad checkpoint magic: " + path);
    const auto version = detail::read_le<std::uint32_t>(is);
    if (version != kCheckpointVersion)
        throw std::runtime_error("unsupported checkpoint version");
    Checkpoint c;
    c.role = detail::read_le<std::uint32_t>(is);
    c.bs_index = detail::read_le<std::uint32_t>(is);
    c.update_counter = detail::read_le<std::uint64_t>(is);
    const auto dlen = detail::read_le<std::uint32_t>(is);
    c.descriptor.resize(dlen);
    is.read(c.descriptor.data(), dlen);
    const auto count = detail::read_le<std::uint64_t>(is);
    c.params.resize(static_cast<Eigen::Index>(count));
    for (std::uint64_t i = 0; i < count; ++i)
        c.params[static_cast<Eigen::Index>(i)] = detail::read_f64_le(is);
    if (!is) throw std::runtime_error("truncated checkpoint: " + path);
    return c;
}

}  // namespace fedcritic

#endif
