// SPDX-License-Identifier: Apache-2.0

#ifndef FEDCRITIC_ENV_HPP
#define FEDCRITIC_ENV_HPP

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fedcritic/action_space.hpp"
#include "fedcritic/allocation.hpp"
#include "fedcritic/channel.hpp"
#include "fedcritic/graph.hpp"
#include "fedcritic/rng.hpp"

namespace fedcritic {

struct EnvConfig {
    ChannelConfig channel;
    int graph_radius = 1;  // line neighbor graph radius
    PowerLevels levels;
    double r_min = 2.0;        // per-UE long-term minimum rate target
    double lambda_int = 0.1;   // leakage penalty weight
    double eta_leakage = 1.0;  // uniform leakage weight on every neighbor pair
    double alpha_g = 0.99;     // cross-link gain EMA factor
    double alpha_o = 0.9;      // occupancy EMA factor
    int warmup_slots = 100;    // slots used to seed the cross-link averages
    bool freeze_queues = false;  // virtual queues pinned at their value (CTDE-B1)

    InterferenceGraph make_graph() const {
        return InterferenceGraph::path(channel.n_bs, graph_radius);
    }
    /// Team reward is divided by this before reaching the learners so that
    /// advantages stay O(1); the raw value is kept for metrics.
    double reward_scale() const {
        return static_cast<double>(channel.n_bs) * channel.n_subcarriers *
               channel.delta_f;
    }
    void validate() const {
        channel.validate();
        levels.validate();
        if (graph_radius < 0) throw std::invalid_argument("graph_radius must be >= 0");
        if (r_min < 0.0) throw std::invalid_argument("r_min must be >= 0");
        if (lambda_int < 0.0) throw std::invalid_argument("lambda_int must be >= 0");
        if (eta_leakage < 0.0) throw std::invalid_argument("eta_leakage must be >= 0");
        if (!(alpha_g >= 0.0 && alpha_g <= 1.0))
            throw std::invalid_argument("alpha_g must be in [0,1]");
        if (!(alpha_o >= 0.0 && alpha_o <= 1.0))
            throw std::invalid_argument("alpha_o must be in [0,1]");
        if (warmup_slots < 0) throw std::invalid_argument("warmup_slots must be >= 0");
    }
};

/// Nonnegative QoS deficit counters, one per (BS, UE).
struct VirtualQueues {
    Eigen::MatrixXd q;      // deficit pressure, always >= 0
    Eigen::MatrixXd r_min;  // per-UE minimum-rate targets
};

/// EMA of each BS's subcarrier activity indicator.
struct OccupancyState {
    Eigen::MatrixXd ema;  // (BS, subcarrier), entries in [0,1]
    double alpha_o = 0.9;
};

/// Long-term cross-link gain proxies and the leakage penalty parameters.
struct CrossLinkAverages {
    Tensor3<double> g_bar;  // (source BS, target cell, subcarrier)
    Eigen::MatrixXd eta;    // leakage weights, nonzero only on graph edges
    double lambda_int = 0.1;
    double alpha_g = 0.99;
};

/// Streaming mean/std of the log own-cell gains, used to standardize the
/// gain block of the observations.
struct RunningStat {
    long count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++count;
        const double d = x - mean;
        mean += d / static_cast<double>(count);
        m2 += d * (x - mean);
    }
    double std_dev() const {
        if (count < 2) return 1.0;
        return std::sqrt(m2 / static_cast<double>(count));
    }
};

/// Layout of one BS's observation vector: standardized log own-cell gains
/// (subcarrier-major), scaled queues, own occupancy EMA, neighbor mean/max
/// aggregates and the previous slot's own activity.
struct ObsLayout {
    int n_subcarriers = 0;
    int ues_per_cell = 0;

    int gains_offset() const { return 0; }
    int queues_offset() const { return n_subcarriers * ues_per_cell; }
    int ema_offset() const { return queues_offset() + ues_per_cell; }
    int nbr_mean_offset() const { return ema_offset() + n_subcarriers; }
    int nbr_max_offset() const { return nbr_mean_offset() + n_subcarriers; }
    int prev_activity_offset() const { return nbr_max_offset() + n_subcarriers; }
    int dim() const { return prev_activity_offset() + n_subcarriers; }

    /// Feature indices owned by subcarrier k: its M gain entries plus its
    /// occupancy, neighbor-mean, neighbor-max and previous-activity scalars.
    int slice_dim() const { return ues_per_cell + 4; }
    void slice_indices(int k, std::vector<int>& out) const {
        out.clear();
        for (int m = 0; m < ues_per_cell; ++m)
            out.push_back(gains_offset() + k * ues_per_cell + m);
        out.push_back(ema_offset() + k);
        out.push_back(nbr_mean_offset() + k);
        out.push_back(nbr_max_offset() + k);
        out.push_back(prev_activity_offset() + k);
    }
};

/// Full Dec-POMDP global state; transitions only through step().
struct EnvState {
    LargeScaleGains large_scale;
    FadingState fading;
    VirtualQueues queues;
    OccupancyState occupancy;
    CrossLinkAverages crosslink;
    Eigen::MatrixXd prev_activity;  // (BS, subcarrier)
    RunningStat gain_stats;
    long slot = 0;
};

// ---------------------------------------------------------------------------
// Per-slot physics

/// Downlink SINR for every (BS, subcarrier, UE): own received power over
/// active cross-link interference plus noise. Defined everywhere, consumed
/// only where x = 1; zero transmit power gives zero SINR.
inline Tensor3<double> compute_sinr(const Allocation& alloc,
                                    const Tensor4<double>& gains, double noise) {
    const int N = alloc.n_bs(), K = alloc.n_subcarriers(), M = alloc.ues_per_cell();
    Tensor3<double> sinr(N, K, M);
    for (int n = 0; n < N; ++n)
        for (int k = 0; k < K; ++k)
            for (int m = 0; m < M; ++m) {
                double denom = noise;
                for (int o = 0; o < N; ++o)
                    if (o != n && alloc.active(o, k))
                        denom += alloc.power(o, k) * gains(o, k, n, m);
                sinr(n, k, m) = alloc.power(n, k) * gains(n, k, n, m) / denom;
            }
    return sinr;
}

/// Per-UE rates R_{n,m} = sum_k x * delta_f * log2(1 + sinr).
inline Eigen::MatrixXd per_ue_rates(const Allocation& alloc,
                                    const Tensor3<double>& sinr, double delta_f) {
    const int N = alloc.n_bs(), K = alloc.n_subcarriers(), M = alloc.ues_per_cell();
    Eigen::MatrixXd rates = Eigen::MatrixXd::Zero(N, M);
    for (int n = 0; n < N; ++n)
        for (int k = 0; k < K; ++k) {
            const int m = alloc.scheduled_ue(n, k);
            if (m >= 0) rates(n, m) += delta_f * std::log2(1.0 + sinr(n, k, m));
        }
    return rates;
}

/// Per-subcarrier rates c_{n,k}; summing over k reproduces the per-BS rate.
inline Eigen::MatrixXd per_subcarrier_rates(const Allocation& alloc,
                                            const Tensor3<double>& sinr,
                                            double delta_f) {
    const int N = alloc.n_bs(), K = alloc.n_subcarriers();
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(N, K);
    for (int n = 0; n < N; ++n)
        for (int k = 0; k < K; ++k) {
            const int m = alloc.scheduled_ue(n, k);
            if (m >= 0) c(n, k) = delta_f * std::log2(1.0 + sinr(n, k, m));
        }
    return c;
}

// ---------------------------------------------------------------------------
// State statistics

/// Deficit update q' = [q + r_min - R]^+, elementwise.
inline VirtualQueues update_virtual_queues(const VirtualQueues& vq,
                                           const Eigen::MatrixXd& rates) {
    VirtualQueues next = vq;
    next.q = (vq.q + vq.r_min - rates).cwiseMax(0.0);
    return next;
}

/// Occupancy EMA: convex combination of the previous EMA and the activity.
inline OccupancyState update_occupancy(const OccupancyState& occ,
                                       const Eigen::MatrixXd& activity) {
    OccupancyState next = occ;
    next.ema = occ.alpha_o * occ.ema + (1.0 - occ.alpha_o) * activity;
    return next;
}

/// Neighbor mean and max of the occupancy EMAs; isolated BSs get zeros.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> neighbor_aggregates(
    const OccupancyState& occ, const InterferenceGraph& graph) {
    const int N = static_cast<int>(occ.ema.rows());
    const int K = static_cast<int>(occ.ema.cols());
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(N, K);
    Eigen::MatrixXd max = Eigen::MatrixXd::Zero(N, K);
    for (int n = 0; n < N; ++n) {
        const auto& nbrs = graph.neighbors(n);
        if (nbrs.empty()) continue;
        for (int k = 0; k < K; ++k) {
            double s = 0.0, mx = 0.0;
            for (int j : nbrs) {
                s += occ.ema(j, k);
                mx = std::max(mx, occ.ema(j, k));
            }
            mean(n, k) = s / static_cast<double>(nbrs.size());
            max(n, k) = mx;
        }
    }
    return {mean, max};
}

/// EMA of the per-cell mean cross-link gains g_bar_{n->j,k}.
inline CrossLinkAverages update_crosslink_avg(const CrossLinkAverages& xl,
                                              const Tensor4<double>& gains) {
    CrossLinkAverages next = xl;
    const int N = xl.g_bar.dim(0), K = xl.g_bar.dim(2);
    const int M = gains.dim(3);
    for (int n = 0; n < N; ++n)
        for (int j = 0; j < N; ++j) {
            if (j == n) continue;
            for (int k = 0; k < K; ++k) {
                double inst = 0.0;
                for (int m = 0; m < M; ++m) inst += gains(n, k, j, m);
                inst /= static_cast<double>(M);
                next.g_bar(n, j, k) =
                    xl.alpha_g * xl.g_bar(n, j, k) + (1.0 - xl.alpha_g) * inst;
            }
        }
    return next;
}

// ---------------------------------------------------------------------------
// Reward shaping

struct RewardBreakdown {
    std::vector<double> rate_term;     // c_n
    std::vector<double> qos_term;      // sum_m Q_{n,m} R_{n,m}
    std::vector<double> leakage_term;  // lambda_int * L_n
    std::vector<double> shaped;        // rate + qos - leakage
    double team = 0.0;
};

/// Shaped per-slot reward of one BS:
/// c_n + sum_m Q_{n,m} R_{n,m} - lambda_int * sum_k sum_{j in N(n)} eta p g_bar.
inline double shaped_reward(int n, const Eigen::MatrixXd& rates,
                            const Allocation& alloc, const VirtualQueues& vq,
                            const CrossLinkAverages& xl,
                            const InterferenceGraph& graph) {
    const int K = alloc.n_subcarriers(), M = alloc.ues_per_cell();
    double c_n = 0.0, qos = 0.0, leak = 0.0;
    for (int m = 0; m < M; ++m) {
        c_n += rates(n, m);
        qos += vq.q(n, m) * rates(n, m);
    }
    for (int j : graph.neighbors(n))
        for (int k = 0; k < K; ++k)
            leak += xl.eta(n, j) * alloc.power(n, k) * xl.g_bar(n, j, k);
    return c_n + qos - xl.lambda_int * leak;
}

inline RewardBreakdown reward_breakdown(const Eigen::MatrixXd& rates,
                                        const Allocation& alloc,
                                        const VirtualQueues& vq,
                                        const CrossLinkAverages& xl,
                                        const InterferenceGraph& graph) {
    const int N = alloc.n_bs(), K = alloc.n_subcarriers(), M = alloc.ues_per_cell();
    RewardBreakdown b;
    b.rate_term.resize(N);
    b.qos_term.resize(N);
    b.leakage_term.resize(N);
    b.shaped.resize(N);
    for (int n = 0; n < N; ++n) {
        double c_n = 0.0, qos = 0.0, leak = 0.0;
        for (int m = 0; m < M; ++m) {
            c_n += rates(n, m);
            qos += vq.q(n, m) * rates(n, m);
        }
        for (int j : graph.neighbors(n))
            for (int k = 0; k < K; ++k)
                leak += xl.eta(n, j) * alloc.power(n, k) * xl.g_bar(n, j, k);
        b.rate_term[n] = c_n;
        b.qos_term[n] = qos;
        b.leakage_term[n] = xl.lambda_int * leak;
        b.shaped[n] = c_n + qos - xl.lambda_int * leak;
        b.team += b.shaped[n];
    }
    return b;
}

/// Cooperative team reward: the sum of the shaped per-BS rewards. Every
/// learner receives this same scalar.
inline double team_reward(const std::vector<double>& shaped) {
    double r = 0.0;
    for (double v : shaped) r += v;
    return r;
}

// ---------------------------------------------------------------------------
// Observations

inline ObsLayout obs_layout(const EnvConfig& cfg) {
    return ObsLayout{cfg.channel.n_subcarriers, cfg.channel.ues_per_cell};
}

namespace detail {
inline std::vector<Eigen::VectorXd> build_observations(
    const EnvState& state, const EnvConfig& cfg, const InterferenceGraph& graph,
    const Tensor4<double>& gains) {
    const int N = cfg.channel.n_bs, K = cfg.channel.n_subcarriers,
              M = cfg.channel.ues_per_cell;
    const ObsLayout layout = obs_layout(cfg);
    const auto [nbr_mean, nbr_max] = neighbor_aggregates(state.occupancy, graph);
    const double mu = state.gain_stats.mean;
    const double sd = state.gain_stats.std_dev() + 1e-8;
    const double queue_scale = cfg.r_min > 0.0 ? 1.0 / cfg.r_min : 1.0;

    std::vector<Eigen::VectorXd> obs(N);
    for (int n = 0; n < N; ++n) {
        Eigen::VectorXd o(layout.dim());
        int at = layout.gains_offset();
        for (int k = 0; k < K; ++k)
            for (int m = 0; m < M; ++m)
                o[at++] = (std::log(gains(n, k, n, m) + 1e-12) - mu) / sd;
        for (int m = 0; m < M; ++m) o[at++] = state.queues.q(n, m) * queue_scale;
        for (int k = 0; k < K; ++k) o[at++] = state.occupancy.ema(n, k);
        for (int k = 0; k < K; ++k) o[at++] = nbr_mean(n, k);
        for (int k = 0; k < K; ++k) o[at++] = nbr_max(n, k);
        for (int k = 0; k < K; ++k) o[at++] = state.prev_activity(n, k);
        obs[n] = std::move(o);
    }
    return obs;
}
}  // namespace detail

/// Deterministic observation function Z_n applied to the global state.
inline std::vector<Eigen::VectorXd> observe(const EnvState& state,
                                            const EnvConfig& cfg) {
    const InterferenceGraph graph = cfg.make_graph();
    const Tensor4<double> gains = power_gains(state.large_scale, state.fading);
    return detail::build_observations(state, cfg, graph, gains);
}

// ---------------------------------------------------------------------------
// Lifecycle

/// Fresh episode state: new large-scale draw, stationary fading, zero queues
/// and occupancy, and cross-link averages seeded from warm-up slots of
/// channel evolution.
inline EnvState init_env(const EnvConfig& cfg, RngStream& channel_rng) {
    cfg.validate();
    const int N = cfg.channel.n_bs, K = cfg.channel.n_subcarriers,
              M = cfg.channel.ues_per_cell;
    const InterferenceGraph graph = cfg.make_graph();

    EnvState s;
    s.large_scale = init_large_scale(cfg.channel, channel_rng);
    s.fading = init_fading(cfg.channel, channel_rng);
    s.queues.q = Eigen::MatrixXd::Zero(N, M);
    s.queues.r_min = Eigen::MatrixXd::Constant(N, M, cfg.r_min);
    s.occupancy.ema = Eigen::MatrixXd::Zero(N, K);
    s.occupancy.alpha_o = cfg.alpha_o;
    s.crosslink.g_bar = Tensor3<double>(N, N, K);
    s.crosslink.eta = Eigen::MatrixXd::Zero(N, N);
    for (int n = 0; n < N; ++n)
        for (int j : graph.neighbors(n)) s.crosslink.eta(n, j) = cfg.eta_leakage;
    s.crosslink.lambda_int = cfg.lambda_int;
    s.crosslink.alpha_g = cfg.alpha_g;
    s.prev_activity = Eigen::MatrixXd::Zero(N, K);
    s.slot = 0;

    auto absorb_gain_stats = [&](const Tensor4<double>& gains) {
        for (int n = 0; n < N; ++n)
            for (int k = 0; k < K; ++k)
                for (int m = 0; m < M; ++m)
                    s.gain_stats.add(std::log(gains(n, k, n, m) + 1e-12));
    };

    Tensor4<double> gains = power_gains(s.large_scale, s.fading);
    absorb_gain_stats(gains);
    for (int w = 0; w < cfg.warmup_slots; ++w) {
        s.crosslink = update_crosslink_avg(s.crosslink, gains);
        s.fading = step_fading(s.fading, cfg.channel.rho, channel_rng);
        gains = power_gains(s.large_scale, s.fading);
        absorb_gain_stats(gains);
    }
    return s;
}

struct StepResult {
    std::vector<Eigen::VectorXd> observations;  // o_n(t+1), one per BS
    double team_reward_raw = 0.0;
    double team_reward_scaled = 0.0;
    RewardBreakdown breakdown;
    Eigen::MatrixXd rates;     // (BS, UE)
    Tensor3<double> sinr;      // (BS, subcarrier, UE)
    Eigen::MatrixXd activity;  // (BS, subcarrier)
    EnvState next;
};

/// Advances the environment one slot: rates and rewards from the current
/// channel, then queue/occupancy/cross-link updates, then fading evolution
/// and the next observations. The joint allocation must be feasible (the
/// action-space decoder guarantees this).
inline StepResult step(const EnvState& state, const Allocation& alloc,
                       const EnvConfig& cfg, RngStream& channel_rng) {
    const auto feasible = check_feasibility(alloc, cfg.levels.budget);
    if (!feasible.ok)
        throw std::logic_error("infeasible allocation reached the environment: " +
                               feasible.violation);
    const int N = cfg.channel.n_bs, K = cfg.channel.n_subcarriers,
              M = cfg.channel.ues_per_cell;
    const InterferenceGraph graph = cfg.make_graph();

    StepResult r;
    const Tensor4<double> gains = power_gains(state.large_scale, state.fading);
    r.sinr = compute_sinr(alloc, gains, cfg.channel.noise_psd_times_df);
    r.rates = per_ue_rates(alloc, r.sinr, cfg.channel.delta_f);
    r.activity = alloc.activity_matrix();
    r.breakdown = reward_breakdown(r.rates, alloc, state.queues, state.crosslink, graph);
    r.team_reward_raw = r.breakdown.team;
    r.team_reward_scaled = r.breakdown.team / cfg.reward_scale();

    r.next = state;
    if (!cfg.freeze_queues)
        r.next.queues = update_virtual_queues(state.queues, r.rates);
    r.next.occupancy = update_occupancy(state.occupancy, r.activity);
    r.next.crosslink = update_crosslink_avg(state.crosslink, gains);
    r.next.fading = step_fading(state.fading, cfg.channel.rho, channel_rng);
    r.next.prev_activity = r.activity;
    r.next.slot = state.slot + 1;

    const Tensor4<double> next_gains = power_gains(r.next.large_scale, r.next.fading);
    for (int n = 0; n < N; ++n)
        for (int k = 0; k < K; ++k)
            for (int m = 0; m < M; ++m)
                r.next.gain_stats.add(std::log(next_gains(n, k, n, m) + 1e-12));
    r.observations = detail::build_observations(r.next, cfg, graph, next_gains);
    return r;
}

}  // namespace fedcritic

#endif
