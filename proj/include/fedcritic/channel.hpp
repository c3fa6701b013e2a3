// SPDX-License-Identifier: Apache-2.0

#ifndef FEDCRITIC_CHANNEL_HPP
#define FEDCRITIC_CHANNEL_HPP

#include <cmath>
#include <complex>
#include <stdexcept>

#include "fedcritic/rng.hpp"
#include "fedcritic/tensor.hpp"

namespace fedcritic {

/// Static parameters of the multi-cell downlink channel. Gains are linear
/// power units; rates are measured in units of delta_f * bit/s/Hz.
struct ChannelConfig {
    int n_bs = 7;
    int n_subcarriers = 32;
    int ues_per_cell = 8;
    double mu_pl = -2.3;           // log-domain mean of the large-scale gain
    double sigma_pl = 0.8;         // log-domain std deviation
    double crosslink_scale = 1.2;  // multiplier on cross-link power gains
    double rho = 0.85;             // slot-to-slot fading correlation
    double noise_psd_times_df = 1e-3;  // N0 * delta_f per subcarrier
    double delta_f = 1.0;              // subcarrier bandwidth (rate scale)
    bool freq_selective_shadowing = false;  // independent draw per subcarrier

    void validate() const {
        if (n_bs < 1) throw std::invalid_argument("n_bs must be >= 1");
        if (n_subcarriers < 1) throw std::invalid_argument("n_subcarriers must be >= 1");
        if (ues_per_cell < 1) throw std::invalid_argument("ues_per_cell must be >= 1");
        if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("rho must be in [0,1)");
        if (sigma_pl < 0.0) throw std::invalid_argument("sigma_pl must be >= 0");
        if (!(noise_psd_times_df > 0.0))
            throw std::invalid_argument("noise_psd_times_df must be > 0");
        if (!(delta_f > 0.0)) throw std::invalid_argument("delta_f must be > 0");
        if (!(crosslink_scale > 0.0))
            throw std::invalid_argument("crosslink_scale must be > 0");
    }
};

/// Large-scale power gains alpha, indexed (source BS, subcarrier, cell, UE).
/// The source equals the cell index on the serving link; any other source is
/// a cross link. Fixed for an episode.
struct LargeScaleGains {
    Tensor4<double> alpha;
};

/// Small-scale complex fading, same index structure as LargeScaleGains.
struct FadingState {
    Tensor4<std::complex<double>> h;
};

/// Log-normal large-scale gains: exp(z) with z ~ N(mu_pl, sigma_pl^2) on the
/// serving link and crosslink_scale * exp(z') with an independent z' on cross
/// links. Frequency-flat per link unless freq_selective_shadowing is set.
inline LargeScaleGains init_large_scale(const ChannelConfig& cfg, RngStream& rng) {
    const int N = cfg.n_bs, K = cfg.n_subcarriers, M = cfg.ues_per_cell;
    LargeScaleGains ls{Tensor4<double>(N, K, N, M)};
    for (int src = 0; src < N; ++src) {
        for (int cell = 0; cell < N; ++cell) {
            const double scale = (src == cell) ? 1.0 : cfg.crosslink_scale;
            for (int m = 0; m < M; ++m) {
                if (cfg.freq_selective_shadowing) {
                    for (int k = 0; k < K; ++k)
                        ls.alpha(src, k, cell, m) =
                            scale * std::exp(cfg.mu_pl + cfg.sigma_pl * rng.normal());
                } else {
                    const double a =
                        scale * std::exp(cfg.mu_pl + cfg.sigma_pl * rng.normal());
                    for (int k = 0; k < K; ++k) ls.alpha(src, k, cell, m) = a;
                }
            }
        }
    }
    return ls;
}

/// Stationary fading draw: i.i.d. unit-variance circular complex normals.
inline FadingState init_fading(const ChannelConfig& cfg, RngStream& rng) {
    const int N = cfg.n_bs, K = cfg.n_subcarriers, M = cfg.ues_per_cell;
    FadingState f{Tensor4<std::complex<double>>(N, K, N, M)};
    for (auto& h : f.h.data()) h = rng.complex_normal();
    return f;
}

/// First-order Gauss-Markov step: h' = rho*h + sqrt(1-rho^2)*w with
/// w ~ CN(0,1) i.i.d. per entry. rho = 1 freezes the channel (test mode).
inline FadingState step_fading(const FadingState& state, double rho, RngStream& rng) {
    if (!(rho >= 0.0 && rho <= 1.0))
        throw std::invalid_argument("rho must be in [0,1]");
    const double innov = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    FadingState next = state;
    for (auto& h : next.h.data()) h = rho * h + innov * rng.complex_normal();
    return next;
}

/// Per-link power gains g = alpha * |h|^2.
inline Tensor4<double> power_gains(const LargeScaleGains& ls, const FadingState& f) {
    for (int axis = 0; axis < 4; ++axis)
        if (ls.alpha.dim(axis) != f.h.dim(axis))
            throw std::invalid_argument("large-scale and fading tensors have mismatched shapes");
    Tensor4<double> g(ls.alpha.dim(0), ls.alpha.dim(1), ls.alpha.dim(2), ls.alpha.dim(3));
    const auto& a = ls.alpha.data();
    const auto& h = f.h.data();
    auto& out = g.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * std::norm(h[i]);
    return g;
}

}  // namespace fedcritic

#endif
