// SPDX-License-Identifier: Apache-2.0

#ifndef FEDCRITIC_ORACLE_HPP
#define FEDCRITIC_ORACLE_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fedcritic/action_space.hpp"
#include "fedcritic/allocation.hpp"
#include "fedcritic/rng.hpp"
#include "fedcritic/tensor.hpp"

namespace fedcritic {

/// A per-slot surrogate problem small enough for exhaustive search. Serves
/// as ground truth for the reward pipeline and the heuristics.
struct TinyInstance {
    int n_bs = 2;
    int n_subcarriers = 2;
    int ues_per_cell = 2;
    Tensor4<double> gains;   // (source BS, subcarrier, cell, UE)
    Eigen::MatrixXd queues;  // (BS, UE)
    Eigen::MatrixXd r_min;   // (BS, UE)
    PowerLevels levels;
    double noise = 1e-3;
    double delta_f = 1.0;

    std::uint64_t joint_decision_count() const {
        const std::uint64_t options =
            1ull + static_cast<std::uint64_t>(ues_per_cell) * levels.count();
        std::uint64_t total = 1;
        for (int i = 0; i < n_bs * n_subcarriers; ++i) {
            total *= options;
            if (total > 2'000'000ull) return total;  // early out on overflow risk
        }
        return total;
    }

    void validate() const {
        levels.validate();
        if (n_bs < 1 || n_bs > 3) throw std::invalid_argument("oracle requires N <= 3");
        if (n_subcarriers < 1 || n_subcarriers > 3)
            throw std::invalid_argument("oracle requires K <= 3");
        if (ues_per_cell < 1 || ues_per_cell > 2)
            throw std::invalid_argument("oracle requires M <= 2");
        if (levels.count() > 2) throw std::invalid_argument("oracle requires L <= 2");
        if (joint_decision_count() > 1'000'000ull)
            throw std::invalid_argument("joint decision count exceeds enumeration bound");
    }

    static TinyInstance random(RngStream& rng, int n_bs = 2, int n_subcarriers = 2,
                               int ues_per_cell = 2, int n_levels = 2) {
        TinyInstance inst;
        inst.n_bs = n_bs;
        inst.n_subcarriers = n_subcarriers;
        inst.ues_per_cell = ues_per_cell;
        inst.levels.levels.clear();
        for (int l = 0; l < n_levels; ++l)
            inst.levels.levels.push_back(0.3 + 0.7 * l / std::max(1, n_levels - 1));
        inst.levels.budget = 1.0;
        inst.gains = Tensor4<double>(n_bs, n_subcarriers, n_bs, ues_per_cell);
        for (auto& g : inst.gains.data()) g = std::exp(-2.3 + 0.8 * rng.normal());
        inst.queues = Eigen::MatrixXd::Zero(n_bs, ues_per_cell);
        inst.r_min = Eigen::MatrixXd::Constant(n_bs, ues_per_cell, 2.0);
        for (int n = 0; n < n_bs; ++n)
            for (int m = 0; m < ues_per_cell; ++m)
                inst.queues(n, m) = 3.0 * rng.uniform();
        return inst;
    }
};

struct ObjectiveValue {
    double surrogate = 0.0;  // sum c_{n,k} - sum Q (r_min - R)
    double weighted = 0.0;   // sum c_{n,k} + sum Q R (constant dropped)
    double constant = 0.0;   // sum Q r_min, so weighted - constant == surrogate
};

/// Objective of one allocation, computed with plain scalar loops so it is an
/// independent route from the environment's SINR/rate pipeline.
inline ObjectiveValue objective_value(const TinyInstance& inst,
                                      const Allocation& alloc) {
    const auto feasible = check_feasibility(alloc, inst.levels.budget);
    if (!feasible.ok)
        throw std::logic_error("infeasible allocation passed to the oracle: " +
                               feasible.violation);
    const int N = inst.n_bs, K = inst.n_subcarriers, M = inst.ues_per_cell;
    ObjectiveValue out;
    Eigen::MatrixXd rates = Eigen::MatrixXd::Zero(N, M);
    for (int n = 0; n < N; ++n)
        for (int k = 0; k < K; ++k) {
            const int m = alloc.scheduled_ue(n, k);
            if (m < 0) continue;
            double denom = inst.noise;
            for (int o = 0; o < N; ++o)
                if (o != n && alloc.active(o, k))
                    denom += alloc.power(o, k) * inst.gains(o, k, n, m);
            const double sinr = alloc.power(n, k) * inst.gains(n, k, n, m) / denom;
            rates(n, m) += inst.delta_f * std::log2(1.0 + sinr);
        }
    for (int n = 0; n < N; ++n)
        for (int m = 0; m < M; ++m) {
            out.surrogate += rates(n, m) -
                             inst.queues(n, m) * (inst.r_min(n, m) - rates(n, m));
            out.weighted += rates(n, m) + inst.queues(n, m) * rates(n, m);
            out.constant += inst.queues(n, m) * inst.r_min(n, m);
        }
    return out;
}

struct OracleResult {
    Allocation best;
    double best_objective = 0.0;
    std::uint64_t enumerated = 0;
};

/// Exhaustive search over every joint (mute/UE/level) decision, decoded
/// through the shared action space (including the power projection). Ties
/// break to the first maximum in lexicographic enumeration order, with the
/// last (BS, subcarrier) cycling fastest.
inline OracleResult enumerate_and_solve(const TinyInstance& inst) {
    inst.validate();
    const int N = inst.n_bs, K = inst.n_subcarriers, M = inst.ues_per_cell;
    const int L = inst.levels.count();
    const int cells = N * K;
    const int options = 1 + M * L;

    std::vector<int> odometer(cells, 0);
    std::vector<SubcarrierDecision> decisions(cells);
    OracleResult result;
    result.best_objective = -std::numeric_limits<double>::infinity();

    bool done = false;
    while (!done) {
        for (int i = 0; i < cells; ++i) {
            const int o = odometer[i];
            if (o == 0) {
                decisions[i] = {0, 0, 0};
            } else {
                decisions[i] = {1, (o - 1) / L, (o - 1) % L};
            }
        }
        Allocation alloc = decode(decisions, N, K, M, inst.levels);
        const double obj = objective_value(inst, alloc).surrogate;
        if (obj > result.best_objective) {
            result.best_objective = obj;
            result.best = alloc;
        }
        ++result.enumerated;

        int pos = cells - 1;
        while (pos >= 0) {
            if (++odometer[pos] < options) break;
            odometer[pos] = 0;
            --pos;
        }
        done = pos < 0;
    }
    return result;
}

}  // namespace fedcritic

#endif
