// SPDX-License-Identifier: Apache-2.0

#ifndef FEDCRITIC_ACTION_SPACE_HPP
#define FEDCRITIC_ACTION_SPACE_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <stdexcept>
#include <vector>

#include "fedcritic/allocation.hpp"

namespace fedcritic {

/// Numerical-stability constant of the power projection.
inline constexpr double kPowerEps = 1e-8;

/// Structured decision for one (BS, subcarrier): mute/active flag, scheduled
/// UE and discrete power level (both meaningful only when active).
struct SubcarrierDecision {
    int active = 0;  // u in {0,1}
    int ue = 0;      // 0-based UE index within the cell
    int level = 0;   // 0-based index into PowerLevels
};

/// Ascending discrete transmit-power levels plus the per-BS sum budget.
struct PowerLevels {
    std::vector<double> levels{0.05, 0.15, 0.35, 0.60, 1.0};
    double budget = 1.0;

    int count() const { return static_cast<int>(levels.size()); }
    double level(int idx) const { return levels[static_cast<std::size_t>(idx)]; }

    void validate() const {
        if (levels.empty()) throw std::invalid_argument("power levels must be nonempty");
        if (!(budget > 0.0)) throw std::invalid_argument("power budget must be > 0");
        double prev = 0.0;
        for (double p : levels) {
            if (!(p > prev)) throw std::invalid_argument("power levels must be positive ascending");
            prev = p;
        }
    }
};

/// Projects per-subcarrier powers onto the sum budget: within budget the
/// vector is untouched, otherwise every entry is scaled by
/// budget / (sum + eps), preserving relative proportions.
inline Eigen::VectorXd normalize_power(const Eigen::VectorXd& p, double budget) {
    for (int i = 0; i < p.size(); ++i)
        if (p[i] < 0.0) throw std::invalid_argument("powers must be nonnegative");
    const double total = accurate_sum(p.data(), static_cast<std::size_t>(p.size()));
    if (total <= budget) return p;
    return p * (budget / (total + kPowerEps));
}

/// Decodes raw per-(BS, subcarrier) decisions into a feasible Allocation:
/// the UE/power choices take effect only where active, powers are masked to
/// zero when muted and then projected onto the per-BS budget.
inline Allocation decode(const std::vector<SubcarrierDecision>& decisions,
                         int n_bs, int n_subcarriers, int ues_per_cell,
                         const PowerLevels& levels) {
    if (static_cast<int>(decisions.size()) != n_bs * n_subcarriers)
        throw std::invalid_argument("decision list size must be n_bs * n_subcarriers");
    Allocation alloc(n_bs, n_subcarriers, ues_per_cell);
    for (int n = 0; n < n_bs; ++n) {
        Eigen::VectorXd p = Eigen::VectorXd::Zero(n_subcarriers);
        for (int k = 0; k < n_subcarriers; ++k) {
            const auto& d = decisions[static_cast<std::size_t>(n) * n_subcarriers + k];
            if (!d.active) continue;
            if (d.ue < 0 || d.ue >= ues_per_cell)
                throw std::invalid_argument("UE index out of range");
            if (d.level < 0 || d.level >= levels.count())
                throw std::invalid_argument("power level index out of range");
            alloc.set_scheduled_ue(n, k, d.ue);
            p[k] = levels.level(d.level);
        }
        alloc.power_matrix().row(n) = normalize_power(p, levels.budget).transpose();
    }
    return alloc;
}

/// Per-head selectability masks conditioned on the mute/active choice. With
/// u = 0 the UE and power heads are removed from the action log-probability;
/// with u = 1 every UE and level stays selectable.
struct ActionMasks {
    std::vector<bool> ue_when_active;
    std::vector<bool> ue_when_muted;
    std::vector<bool> level_when_active;
    std::vector<bool> level_when_muted;
};

inline ActionMasks validity_mask(int ues_per_cell, int n_levels) {
    ActionMasks m;
    m.ue_when_active.assign(ues_per_cell, true);
    m.ue_when_muted.assign(ues_per_cell, false);
    m.level_when_active.assign(n_levels, true);
    m.level_when_muted.assign(n_levels, false);
    return m;
}

}  // namespace fedcritic

#endif
