// SPDX-License-Identifier: Apache-2.0

#ifndef FEDCRITIC_BASELINES_HPP
#define FEDCRITIC_BASELINES_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedcritic/action_space.hpp"
#include "fedcritic/allocation.hpp"
#include "fedcritic/tensor.hpp"

namespace fedcritic {

enum class MethodKind {
    FedCritic,     // proposed: neighbor-gossiped critics, local actors
    CTDE,          // B1: centralized critic, virtual queues frozen at zero
    CTDE_VQ,       // B2: centralized critic with virtual queues
    FedActor,      // B3: gossip on actor parameters, critics local
    Greedy,        // interference-unaware heuristic
    QoSHeuristic,  // deficit-driven conservative heuristic
};

inline std::string to_string(MethodKind m) {
    switch (m) {
        case MethodKind::FedCritic: return "fedcritic";
        case MethodKind::CTDE: return "ctde";
        case MethodKind::CTDE_VQ: return "ctde_vq";
        case MethodKind::FedActor: return "fedactor";
        case MethodKind::Greedy: return "greedy";
        case MethodKind::QoSHeuristic: return "qos";
    }
    return "unknown";
}

inline MethodKind parse_method(const std::string& s) {
    if (s == "fedcritic") return MethodKind::FedCritic;
    if (s == "ctde") return MethodKind::CTDE;
    if (s == "ctde_vq") return MethodKind::CTDE_VQ;
    if (s == "fedactor") return MethodKind::FedActor;
    if (s == "greedy") return MethodKind::Greedy;
    if (s == "qos") return MethodKind::QoSHeuristic;
    throw std::invalid_argument("unknown method: " + s);
}

inline bool is_learning_method(MethodKind m) {
    return m != MethodKind::Greedy && m != MethodKind::QoSHeuristic;
}

/// Interference-unaware heuristic: every subcarrier active, best own-gain UE
/// (lowest index on ties), maximum power level, then the budget projection.
inline Allocation greedy_policy(const Tensor4<double>& gains,
                                const PowerLevels& levels, int n_bs,
                                int n_subcarriers, int ues_per_cell) {
    std::vector<SubcarrierDecision> decisions(
        static_cast<std::size_t>(n_bs) * n_subcarriers);
    for (int n = 0; n < n_bs; ++n)
        for (int k = 0; k < n_subcarriers; ++k) {
            int best = 0;
            for (int m = 1; m < ues_per_cell; ++m)
                if (gains(n, k, n, m) > gains(n, k, n, best)) best = m;
            decisions[static_cast<std::size_t>(n) * n_subcarriers + k] = {
                1, best, levels.count() - 1};
        }
    return decode(decisions, n_bs, n_subcarriers, ues_per_cell, levels);
}

/// Constraint-driven heuristic: UEs ranked by queue deficit (largest first,
/// lowest index on ties) claim their best-gain subcarriers round-robin at
/// the median power level; with no positive deficits the BS stays silent.
inline Allocation qos_policy(const Tensor4<double>& gains,
                             const Eigen::MatrixXd& queues,
                             const PowerLevels& levels, int n_bs,
                             int n_subcarriers, int ues_per_cell) {
    const int median_level = (levels.count() - 1) / 2;
    std::vector<SubcarrierDecision> decisions(
        static_cast<std::size_t>(n_bs) * n_subcarriers);
    for (int n = 0; n < n_bs; ++n) {
        std::vector<int> deficit_ues;
        for (int m = 0; m < ues_per_cell; ++m)
            if (queues(n, m) > 0.0) deficit_ues.push_back(m);
        std::stable_sort(deficit_ues.begin(), deficit_ues.end(),
                         [&](int a, int b) { return queues(n, a) > queues(n, b); });
        if (deficit_ues.empty()) continue;  // all subcarriers muted

        // per-UE subcarrier preference: descending own gain, lowest k on ties
        std::vector<std::vector<int>> pref(ues_per_cell);
        for (int m : deficit_ues) {
            pref[m].resize(n_subcarriers);
            for (int k = 0; k < n_subcarriers; ++k) pref[m][k] = k;
            std::stable_sort(pref[m].begin(), pref[m].end(), [&](int a, int b) {
                return gains(n, a, n, m) > gains(n, b, n, m);
            });
        }

        std::vector<bool> taken(n_subcarriers, false);
        std::vector<std::size_t> cursor(ues_per_cell, 0);
        int assigned = 0;
        std::size_t turn = 0;
        while (assigned < n_subcarriers) {
            const int m = deficit_ues[turn % deficit_ues.size()];
            ++turn;
            while (cursor[m] < pref[m].size() && taken[pref[m][cursor[m]]])
                ++cursor[m];
            if (cursor[m] >= pref[m].size()) continue;
            const int k = pref[m][cursor[m]];
            taken[k] = true;
            decisions[static_cast<std::size_t>(n) * n_subcarriers + k] = {
                1, m, median_level};
            ++assigned;
        }
    }
    return decode(decisions, n_bs, n_subcarriers, ues_per_cell, levels);
}

}  // namespace fedcritic

#endif
