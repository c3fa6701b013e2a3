// SPDX-License-Identifier: Apache-2.0

#ifndef FEDCRITIC_FEDERATION_HPP
#define FEDCRITIC_FEDERATION_HPP

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "fedcritic/graph.hpp"
#include "fedcritic/nn.hpp"
#include "fedcritic/rng.hpp"

namespace fedcritic {

/// Doubly-stochastic mixing weights consistent with an interference graph:
/// w_{nj} > 0 only on edges or the diagonal, rows and columns sum to one.
struct MixingMatrix {
    Eigen::MatrixXd w;
    InterferenceGraph graph;
};

/// Metropolis-Hastings construction: w_{nj} = 1/(1 + max(deg n, deg j)) on
/// edges, diagonal takes the remainder. Symmetric, hence doubly stochastic.
inline MixingMatrix metropolis_weights(const InterferenceGraph& graph) {
    const int n = graph.n_bs();
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        double off = 0.0;
        for (int j : graph.neighbors(i)) {
            w(i, j) = 1.0 / (1.0 + std::max(graph.degree(i), graph.degree(j)));
            off += w(i, j);
        }
        w(i, i) = 1.0 - off;
    }
    return {w, graph};
}

/// Spectral contraction factor sigma = ||W - (1/N) 1 1^T||_2. Below one for
/// connected graphs; disconnected graphs may report sigma = 1.
inline double contraction_factor(const MixingMatrix& mix) {
    const int n = static_cast<int>(mix.w.rows());
    const Eigen::MatrixXd centered =
        mix.w - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
    return svd.singularValues()[0];
}

/// Optional transport hook invoked for every neighbor-to-self parameter
/// transfer, so an out-of-process exchange can replace the in-memory one
/// without touching the mixing arithmetic.
using ExchangeHook =
    std::function<ParamVector(int from, int to, const ParamVector&)>;

/// One gossip round: psi'_n = sum_j w_{nj} psi_j over self and neighbors.
/// Preserves the parameter mean and contracts disagreement by sigma per
/// application on connected graphs.
inline std::vector<ParamVector> gossip_mix(const std::vector<ParamVector>& params,
                                           const MixingMatrix& mix,
                                           const ExchangeHook& exchange = {}) {
    const int n = static_cast<int>(params.size());
    if (n != mix.w.rows())
        throw std::invalid_argument("parameter count does not match mixing matrix");
    for (int i = 1; i < n; ++i)
        if (params[i].layout != params[0].layout ||
            params[i].values.size() != params[0].values.size())
            throw std::invalid_argument("parameter layout mismatch across agents");

    std::vector<ParamVector> mixed(n);
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd acc = mix.w(i, i) * params[i].values;
        for (int j : mix.graph.neighbors(i)) {
            if (mix.w(i, j) == 0.0) continue;
            if (exchange) {
                acc += mix.w(i, j) * exchange(j, i, params[j]).values;
            } else {
                acc += mix.w(i, j) * params[j].values;
            }
        }
        mixed[i].values = std::move(acc);
        mixed[i].layout = params[i].layout;
    }
    return mixed;
}

/// Total squared consensus error: sum_n ||psi_n - mean||^2.
inline double disagreement(const std::vector<ParamVector>& params) {
    if (params.empty()) throw std::invalid_argument("need at least one vector");
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(params[0].values.size());
    for (const auto& p : params) mean += p.values;
    mean /= static_cast<double>(params.size());
    double d = 0.0;
    for (const auto& p : params) d += (p.values - mean).squaredNorm();
    return d;
}

/// Gossip cadence: mixing fires on rounds that are multiples of the period
/// and is the identity otherwise.
struct GossipSchedule {
    int period = 1;

    GossipSchedule() = default;
    explicit GossipSchedule(int k_g) : period(k_g) {
        if (k_g < 1) throw std::invalid_argument("gossip period must be >= 1");
    }
    bool mixes_at(long round) const { return round % period == 0; }
};

// ---------------------------------------------------------------------------
// Numerical verification of the consensus behavior

struct ConsensusRecord {
    long round = 0;
    double disagreement = 0.0;   // sum_n ||psi_n - mean||^2
    double grad_norm_sq = 0.0;   // ||grad F(mean)||^2 for the quadratic losses
};

struct ConsensusConfig {
    int dim = 4;
    int rounds = 5000;
    int gossip_period = 1;
    int repeats = 5;
    double step_a = 0.5;   // eta_s = step_a / (s + step_b)
    double step_b = 10.0;
    double noise_bound = 0.05;  // per-coordinate uniform gradient noise
    bool zero_gradients = false;  // pure gossip mode
    double target_spread = 1.0;   // scale of the distinct quadratic targets
    double init_offset = 0.2;     // ||initial mean - mean target||
    double init_spread = 1.0;     // per-agent deviation around the mean
    std::uint64_t seed = 0;
};

/// Decentralized SGD on quadratic losses F_n(psi) = 0.5*||psi - c_n||^2 with
/// periodic gossip mixing; diminishing steps and bounded noise match the
/// consensus theorem's assumptions, and the targets are deliberately
/// distinct so mixing has real work to do. Records are averaged over
/// independent repeats.
inline std::vector<ConsensusRecord> consensus_experiment(
    const InterferenceGraph& graph, const ConsensusConfig& cfg) {
    const int n = graph.n_bs(), d = cfg.dim;
    const MixingMatrix mix = metropolis_weights(graph);

    std::vector<ConsensusRecord> records(cfg.rounds + 1);
    for (int s = 0; s <= cfg.rounds; ++s) records[s].round = s;

    for (int rep = 0; rep < cfg.repeats; ++rep) {
        RngStream rng(derive_seed(cfg.seed, "consensus", rep));

        std::vector<Eigen::VectorXd> targets(n);
        Eigen::VectorXd target_mean = Eigen::VectorXd::Zero(d);
        for (int i = 0; i < n; ++i) {
            targets[i].resize(d);
            for (int j = 0; j < d; ++j) targets[i][j] = cfg.target_spread * rng.normal();
            target_mean += targets[i];
        }
        target_mean /= static_cast<double>(n);

        // start at the mean target plus a fixed-norm offset, with zero-mean
        // per-agent spread so the initial disagreement is nonzero
        Eigen::VectorXd offset(d);
        for (int j = 0; j < d; ++j) offset[j] = rng.normal();
        if (offset.norm() > 0.0) offset *= cfg.init_offset / offset.norm();
        std::vector<Eigen::VectorXd> dev(n);
        Eigen::VectorXd dev_mean = Eigen::VectorXd::Zero(d);
        for (int i = 0; i < n; ++i) {
            dev[i].resize(d);
            for (int j = 0; j < d; ++j) dev[i][j] = cfg.init_spread * rng.normal();
            dev_mean += dev[i];
        }
        dev_mean /= static_cast<double>(n);

        std::vector<Eigen::VectorXd> psi(n);
        for (int i = 0; i < n; ++i) psi[i] = target_mean + offset + dev[i] - dev_mean;

        auto record = [&](int s) {
            Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
            for (const auto& p : psi) mean += p;
            mean /= static_cast<double>(n);
            double dis = 0.0;
            for (const auto& p : psi) dis += (p - mean).squaredNorm();
            const double gnorm =
                cfg.zero_gradients ? 0.0 : (mean - target_mean).squaredNorm();
            records[s].disagreement += dis / cfg.repeats;
            records[s].grad_norm_sq += gnorm / cfg.repeats;
        };
        record(0);

        const GossipSchedule schedule(cfg.gossip_period);
        for (int s = 0; s < cfg.rounds; ++s) {
            if (!cfg.zero_gradients) {
                const double eta = cfg.step_a / (s + cfg.step_b);
                for (int i = 0; i < n; ++i) {
                    Eigen::VectorXd g = psi[i] - targets[i];
                    for (int j = 0; j < d; ++j)
                        g[j] += cfg.noise_bound * (2.0 * rng.uniform() - 1.0);
                    psi[i] -= eta * g;
                }
            }
            if (schedule.mixes_at(s)) {
                std::vector<Eigen::VectorXd> next(n);
                for (int i = 0; i < n; ++i) {
                    next[i] = mix.w(i, i) * psi[i];
                    for (int j : graph.neighbors(i)) next[i] += mix.w(i, j) * psi[j];
                }
                psi = std::move(next);
            }
            record(s + 1);
        }
    }
    return records;
}

// ---------------------------------------------------------------------------
// Advantage disagreement bound for linear critics

struct AdvantageDisagreementReport {
    double lipschitz = 0.0;   // L_V = max_t ||phi(o_t)|| over the rollout
    double max_gap = 0.0;     // max_{n,t} |A^(n)_t - A^(avg)_t|
    double max_excess = 0.0;  // max over samples of gap - bound (<= 0 iff holds)
    bool holds = true;
    long samples = 0;
};

/// Checks, pointwise over a rollout, that one-step TD advantages computed
/// with each agent's linear critic deviate from the mean-critic advantages
/// by at most (1 + beta) * L_V * ||psi_n - mean||.
inline AdvantageDisagreementReport advantage_disagreement_check(
    const std::vector<Eigen::VectorXd>& critics, const Eigen::MatrixXd& features,
    const Eigen::VectorXd& rewards, double beta) {
    const int n = static_cast<int>(critics.size());
    const long horizon = rewards.size();
    if (features.rows() != horizon + 1)
        throw std::invalid_argument("features must have horizon+1 rows");

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(critics[0].size());
    for (const auto& c : critics) mean += c;
    mean /= static_cast<double>(n);

    AdvantageDisagreementReport rep;
    for (long t = 0; t <= horizon; ++t)
        rep.lipschitz = std::max(rep.lipschitz, features.row(t).norm());

    rep.max_excess = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double dist = (critics[i] - mean).norm();
        const double bound = (1.0 + beta) * rep.lipschitz * dist;
        for (long t = 0; t < horizon; ++t) {
            const double adv_i = rewards[t] + beta * critics[i].dot(features.row(t + 1)) -
                                 critics[i].dot(features.row(t));
            const double adv_avg = rewards[t] + beta * mean.dot(features.row(t + 1)) -
                                   mean.dot(features.row(t));
            const double gap = std::abs(adv_i - adv_avg);
            rep.max_gap = std::max(rep.max_gap, gap);
            rep.max_excess = std::max(rep.max_excess, gap - bound);
            ++rep.samples;
        }
    }
    rep.holds = rep.max_excess <= 0.0;
    return rep;
}

}  // namespace fedcritic

#endif
