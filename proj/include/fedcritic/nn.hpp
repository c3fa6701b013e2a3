// SPDX-License-Identifier: Apache-2.0

#ifndef FEDCRITIC_NN_HPP
#define FEDCRITIC_NN_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedcritic/rng.hpp"

namespace fedcritic {

/// Flat learner parameters plus a layout descriptor. Vectors are exchanged
/// and averaged by the federation module, which requires identical layouts.
struct ParamVector {
    Eigen::VectorXd values;
    std::string layout;

    bool finite() const { return values.allFinite(); }
};

// ---------------------------------------------------------------------------
// Categorical head utilities

/// Numerically stable softmax over the unmasked entries; masked entries get
/// probability zero and stay out of the normalization.
inline Eigen::VectorXd masked_softmax(const Eigen::VectorXd& logits,
                                      const std::vector<bool>& mask) {
    const int n = static_cast<int>(logits.size());
    double max_logit = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
        if (mask.empty() || mask[i]) max_logit = std::max(max_logit, logits[i]);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    double z = 0.0;
    for (int i = 0; i < n; ++i) {
        if (!mask.empty() && !mask[i]) continue;
        p[i] = std::exp(logits[i] - max_logit);
        z += p[i];
    }
    if (z <= 0.0) throw std::invalid_argument("softmax mask excludes every entry");
    p /= z;
    return p;
}

inline Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    return masked_softmax(logits, {});
}

inline double categorical_entropy(const Eigen::VectorXd& p) {
    double h = 0.0;
    for (int i = 0; i < p.size(); ++i)
        if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
    return h;
}

inline int sample_categorical(const Eigen::VectorXd& p, RngStream& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (int i = 0; i < p.size(); ++i) {
        acc += p[i];
        if (u < acc) return i;
    }
    return static_cast<int>(p.size()) - 1;
}

inline int argmax(const Eigen::VectorXd& v) {
    int best = 0;
    for (int i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

// ---------------------------------------------------------------------------
// Optimization

/// Rescales the gradient in place so its L2 norm is at most max_norm.
inline double clip_grad_norm(Eigen::VectorXd& grad, double max_norm) {
    const double norm = grad.norm();
    if (max_norm > 0.0 && norm > max_norm) grad *= max_norm / norm;
    return norm;
}

class Adam {
public:
    Adam() = default;
    Adam(int dim, double lr, double beta1 = 0.9, double beta2 = 0.999,
         double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
          m_(Eigen::VectorXd::Zero(dim)), v_(Eigen::VectorXd::Zero(dim)) {}

    void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
        ++t_;
        m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
        v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        params -= (lr_ / bc1) * m_.cwiseQuotient(
                      ((v_ / bc2).cwiseSqrt().array() + eps_).matrix());
    }

    struct Snapshot {
        Eigen::VectorXd m, v;
        long t = 0;
    };
    Snapshot snapshot() const { return {m_, v_, t_}; }
    void restore(const Snapshot& s) {
        m_ = s.m;
        v_ = s.v;
        t_ = s.t;
    }

private:
    double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    Eigen::VectorXd m_, v_;
    long t_ = 0;
};

// ---------------------------------------------------------------------------
// Initialization

/// Uniform Xavier/Glorot initialization.
inline void xavier_init(Eigen::MatrixXd& w, RngStream& rng, double gain = 1.0) {
    const double a = gain * std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (int j = 0; j < w.cols(); ++j)
        for (int i = 0; i < w.rows(); ++i) w(i, j) = a * (2.0 * rng.uniform() - 1.0);
}

// ---------------------------------------------------------------------------
// Flattening helpers (column-major, matching Eigen storage)

inline void append_flat(Eigen::VectorXd& out, int& at, const Eigen::MatrixXd& m) {
    Eigen::Map<const Eigen::VectorXd> flat(m.data(), m.size());
    out.segment(at, m.size()) = flat;
    at += static_cast<int>(m.size());
}

inline void read_flat(const Eigen::VectorXd& in, int& at, Eigen::MatrixXd& m) {
    Eigen::Map<Eigen::VectorXd> flat(m.data(), m.size());
    flat = in.segment(at, m.size());
    at += static_cast<int>(m.size());
}

inline void append_flat(Eigen::VectorXd& out, int& at, const Eigen::VectorXd& v) {
    out.segment(at, v.size()) = v;
    at += static_cast<int>(v.size());
}

inline void read_flat(const Eigen::VectorXd& in, int& at, Eigen::VectorXd& v) {
    v = in.segment(at, v.size());
    at += static_cast<int>(v.size());
}

}  // namespace fedcritic

#endif
