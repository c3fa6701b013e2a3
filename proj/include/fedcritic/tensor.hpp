// SPDX-License-Identifier: Apache-2.0

#ifndef FEDCRITIC_TENSOR_HPP
#define FEDCRITIC_TENSOR_HPP

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace fedcritic {

/// Dense row-major tensor with three indices.
template <typename T>
class Tensor3 {
public:
    Tensor3() : d_{0, 0, 0} {}
    Tensor3(int d0, int d1, int d2, T fill = T{})
        : d_{d0, d1, d2}, v_(static_cast<std::size_t>(d0) * d1 * d2, fill) {}

    T& operator()(int i, int j, int k) { return v_[idx(i, j, k)]; }
    const T& operator()(int i, int j, int k) const { return v_[idx(i, j, k)]; }

    int dim(int axis) const { return d_[axis]; }
    std::size_t size() const { return v_.size(); }
    const std::vector<T>& data() const { return v_; }
    std::vector<T>& data() { return v_; }

    bool same_shape(const Tensor3& o) const { return d_ == o.d_; }

private:
    std::size_t idx(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * d_[1] + j) * d_[2] + k;
    }
    std::array<int, 3> d_;
    std::vector<T> v_;
};

/// Dense row-major tensor with four indices.
template <typename T>
class Tensor4 {
public:
    Tensor4() : d_{0, 0, 0, 0} {}
    Tensor4(int d0, int d1, int d2, int d3, T fill = T{})
        : d_{d0, d1, d2, d3},
          v_(static_cast<std::size_t>(d0) * d1 * d2 * d3, fill) {}

    T& operator()(int i, int j, int k, int l) { return v_[idx(i, j, k, l)]; }
    const T& operator()(int i, int j, int k, int l) const { return v_[idx(i, j, k, l)]; }

    int dim(int axis) const { return d_[axis]; }
    std::size_t size() const { return v_.size(); }
    const std::vector<T>& data() const { return v_; }
    std::vector<T>& data() { return v_; }

    bool same_shape(const Tensor4& o) const { return d_ == o.d_; }

private:
    std::size_t idx(int i, int j, int k, int l) const {
        return ((static_cast<std::size_t>(i) * d_[1] + j) * d_[2] + k) * d_[3] + l;
    }
    std::array<int, 4> d_;
    std::vector<T> v_;
};

}  // namespace fedcritic

#endif
