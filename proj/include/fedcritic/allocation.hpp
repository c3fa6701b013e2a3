// SPDX-License-Identifier: Apache-2.0

#ifndef FEDCRITIC_ALLOCATION_HPP
#define FEDCRITIC_ALLOCATION_HPP

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "fedcritic/tensor.hpp"

namespace fedcritic {

/// Neumaier-compensated sum. The power projection's in-budget branch and the
/// feasibility checker both decide on sums this accurate, so a summation-order
/// discrepancy can never make one side see a budget violation the other
/// missed.
inline double accurate_sum(const double* data, std::size_t n) {
    double sum = 0.0, comp = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = data[i];
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }
    return sum + comp;
}

/// One slot's scheduling and power decision for the whole network.
/// Subcarrier (n,k) carries at most one UE; `ue(n,k) == -1` means muted.
/// Feasibility (at most one UE per subcarrier, per-BS power budget, zero
/// power when muted) is guaranteed by the action-space decoder.
class Allocation {
public:
    Allocation() = default;
    Allocation(int n_bs, int n_subcarriers, int ues_per_cell)
        : n_bs_(n_bs), n_sc_(n_subcarriers), n_ue_(ues_per_cell),
          ue_(static_cast<std::size_t>(n_bs) * n_subcarriers, -1),
          power_(Eigen::MatrixXd::Zero(n_bs, n_subcarriers)) {}

    int n_bs() const { return n_bs_; }
    int n_subcarriers() const { return n_sc_; }
    int ues_per_cell() const { return n_ue_; }

    int scheduled_ue(int n, int k) const { return ue_[idx(n, k)]; }
    void set_scheduled_ue(int n, int k, int m) { ue_[idx(n, k)] = m; }

    bool active(int n, int k) const { return ue_[idx(n, k)] >= 0; }
    double activity(int n, int k) const { return active(n, k) ? 1.0 : 0.0; }

    double x(int n, int k, int m) const { return ue_[idx(n, k)] == m ? 1.0 : 0.0; }

    double power(int n, int k) const { return power_(n, k); }
    Eigen::MatrixXd& power_matrix() { return power_; }
    const Eigen::MatrixXd& power_matrix() const { return power_; }

    Eigen::MatrixXd activity_matrix() const {
        Eigen::MatrixXd a(n_bs_, n_sc_);
        for (int n = 0; n < n_bs_; ++n)
            for (int k = 0; k < n_sc_; ++k) a(n, k) = activity(n, k);
        return a;
    }

    /// Materializes the binary scheduling tensor x_{n,k,m}.
    Tensor3<double> expand_x() const {
        Tensor3<double> x(n_bs_, n_sc_, n_ue_);
        for (int n = 0; n < n_bs_; ++n)
            for (int k = 0; k < n_sc_; ++k) {
                int m = ue_[idx(n, k)];
                if (m >= 0) x(n, k, m) = 1.0;
            }
        return x;
    }

private:
    std::size_t idx(int n, int k) const {
        return static_cast<std::size_t>(n) * n_sc_ + k;
    }

    int n_bs_ = 0, n_sc_ = 0, n_ue_ = 0;
    std::vector<int> ue_;
    Eigen::MatrixXd power_;
};

struct FeasibilityReport {
    bool ok = true;
    std::string violation;
};

/// Independent checker for the per-slot constraints: at most one UE per
/// (BS, subcarrier), nonnegative powers within the per-BS budget, and zero
/// power on muted subcarriers. Works on the materialized x tensor so it does
/// not rely on the Allocation representation shortcuts.
inline FeasibilityReport check_feasibility(const Allocation& alloc, double budget) {
    FeasibilityReport rep;
    const int N = alloc.n_bs(), K = alloc.n_subcarriers(), M = alloc.ues_per_cell();
    const Tensor3<double> x = alloc.expand_x();
    std::vector<double> powers(static_cast<std::size_t>(K));
    for (int n = 0; n < N; ++n) {
        for (int k = 0; k < K; ++k) {
            double sched = 0.0;
            for (int m = 0; m < M; ++m) {
                double v = x(n, k, m);
                if (v != 0.0 && v != 1.0) {
                    rep.ok = false;
                    rep.violation = "non-binary scheduling entry";
                    return rep;
                }
                sched += v;
            }
            if (sched > 1.0) {
                rep.ok = false;
                rep.violation = "more than one UE on a subcarrier";
                return rep;
            }
            const double p = alloc.power(n, k);
            if (p < 0.0) {
                rep.ok = false;
                rep.violation = "negative power";
                return rep;
            }
            if (p > budget * sched) {
                rep.ok = false;
                rep.violation = sched == 0.0 ? "power on a muted subcarrier"
                                             : "per-subcarrier power above budget";
                return rep;
            }
            powers[static_cast<std::size_t>(k)] = p;
        }
        if (accurate_sum(powers.data(), powers.size()) > budget) {
            rep.ok = false;
            rep.violation = "per-BS power budget exceeded";
            return rep;
        }
    }
    return rep;
}

}  // namespace fedcritic

#endif
