// SPDX-License-Identifier: Apache-2.0

#ifndef FEDCRITIC_METRICS_HPP
#define FEDCRITIC_METRICS_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedcritic/graph.hpp"
#include "fedcritic/tensor.hpp"

namespace fedcritic {

/// Everything the metrics pipeline needs from one environment slot.
struct SlotTrace {
    Eigen::MatrixXd rates;     // (BS, UE)
    Eigen::MatrixXd activity;  // (BS, subcarrier)
    std::vector<double> active_sinr;  // linear SINR per scheduled link
    Eigen::MatrixXd queues;    // (BS, UE)
    double team_reward = 0.0;
};

struct MetricRecord {
    long update = 0;
    double sum_rate = 0.0;        // per-slot average network sum rate
    double sum_rate_ci = 0.0;     // 95% half-width over per-seed means
    double mean_sinr = 0.0;       // linear mean over active links
    double collision_rate = 0.0;  // active (BS,subcarrier) pairs with a busy neighbor
    double jain_fairness = 0.0;
    double mean_queue = 0.0;
    double max_queue = 0.0;
    double critic_disagreement = 0.0;
    double team_reward = 0.0;  // raw shaped team reward, per-slot average
};

/// Aggregates a slot trace into scalar metrics. Collision counts an active
/// (BS, subcarrier) pair when at least one graph neighbor is active on the
/// same subcarrier; Jain fairness runs over the long-run per-UE rates.
inline MetricRecord compute_metrics(const std::vector<SlotTrace>& trace,
                                    const InterferenceGraph& graph) {
    if (trace.empty()) throw std::invalid_argument("empty slot trace");
    const int N = static_cast<int>(trace[0].rates.rows());
    const int M = static_cast<int>(trace[0].rates.cols());
    const int K = static_cast<int>(trace[0].activity.cols());

    MetricRecord rec;
    Eigen::MatrixXd long_run_rates = Eigen::MatrixXd::Zero(N, M);
    double sinr_sum = 0.0;
    long sinr_count = 0;
    long active_pairs = 0, colliding_pairs = 0;
    double queue_sum = 0.0;

    for (const auto& slot : trace) {
        rec.sum_rate += slot.rates.sum();
        rec.team_reward += slot.team_reward;
        long_run_rates += slot.rates;
        for (double s : slot.active_sinr) {
            sinr_sum += s;
            ++sinr_count;
        }
        for (int n = 0; n < N; ++n)
            for (int k = 0; k < K; ++k) {
                if (slot.activity(n, k) == 0.0) continue;
                ++active_pairs;
                for (int j : graph.neighbors(n))
                    if (slot.activity(j, k) != 0.0) {
                        ++colliding_pairs;
                        break;
                    }
            }
        queue_sum += slot.queues.mean();
        rec.max_queue = std::max(rec.max_queue, slot.queues.maxCoeff());
    }

    const double slots = static_cast<double>(trace.size());
    rec.sum_rate /= slots;
    rec.team_reward /= slots;
    rec.mean_queue = queue_sum / slots;
    rec.mean_sinr = sinr_count > 0 ? sinr_sum / static_cast<double>(sinr_count) : 0.0;
    rec.collision_rate = active_pairs > 0
                             ? static_cast<double>(colliding_pairs) /
                                   static_cast<double>(active_pairs)
                             : 0.0;

    long_run_rates /= slots;
    const double total = long_run_rates.sum();
    const double sq = long_run_rates.array().square().sum();
    rec.jain_fairness = sq > 0.0 ? (total * total) / (N * M * sq) : 1.0;
    return rec;
}

/// Time-averaged activity per (BS, subcarrier) — the reuse-intensity map.
inline Eigen::MatrixXd activity_heatmap(const std::vector<SlotTrace>& trace) {
    if (trace.empty()) throw std::invalid_argument("empty slot trace");
    Eigen::MatrixXd heat = Eigen::MatrixXd::Zero(trace[0].activity.rows(),
                                                 trace[0].activity.cols());
    for (const auto& slot : trace) heat += slot.activity;
    return heat / static_cast<double>(trace.size());
}

inline std::vector<double> pooled_active_sinr_db(const std::vector<SlotTrace>& trace) {
    std::vector<double> out;
    for (const auto& slot : trace)
        for (double s : slot.active_sinr)
            out.push_back(10.0 * std::log10(std::max(s, 1e-12)));
    return out;
}

// ---------------------------------------------------------------------------
// Tabular export / import. Doubles are printed with 17 significant digits so
// an export/import round trip reproduces every value exactly.

namespace detail {
inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace detail

inline const std::vector<std::string>& metric_columns() {
    static const std::vector<std::string> cols = {
        "update",        "sum_rate",     "sum_rate_ci",  "mean_sinr",
        "collision_rate", "jain_fairness", "mean_queue",  "max_queue",
        "critic_disagreement", "team_reward"};
    return cols;
}

inline void export_records_tsv(const std::string& path,
                               const std::vector<MetricRecord>& records) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write metric file: " + path);
    const auto& cols = metric_columns();
    for (std::size_t i = 0; i < cols.size(); ++i)
        os << cols[i] << (i + 1 < cols.size() ? '\t' : '\n');
    for (const auto& r : records) {
        os << r.update << '\t' << detail::fmt_double(r.sum_rate) << '\t'
           << detail::fmt_double(r.sum_rate_ci) << '\t'
           << detail::fmt_double(r.mean_sinr) << '\t'
           << detail::fmt_double(r.collision_rate) << '\t'
           << detail::fmt_double(r.jain_fairness) << '\t'
           << detail::fmt_double(r.mean_queue) << '\t'
           << detail::fmt_double(r.max_queue) << '\t'
           << detail::fmt_double(r.critic_disagreement) << '\t'
           << detail::fmt_double(r.team_reward) << '\n';
    }
    if (!os) throw std::runtime_error("metric export failed: " + path);
}

inline std::vector<MetricRecord> import_records_tsv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open metric file: " + path);
    std::string header;
    std::getline(is, header);
    std::vector<MetricRecord> records;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        MetricRecord r;
        ls >> r.update >> r.sum_rate >> r.sum_rate_ci >> r.mean_sinr >>
            r.collision_rate >> r.jain_fairness >> r.mean_queue >> r.max_queue >>
            r.critic_disagreement >> r.team_reward;
        if (ls.fail()) throw std::runtime_error("malformed metric row: " + line);
        records.push_back(r);
    }
    return records;
}

/// Empirical CDF export: sorted samples as (value, i/n) pairs.
inline void export_cdf_tsv(const std::string& path, std::vector<double> samples) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write CDF file: " + path);
    os << "value\tcumulative_probability\n";
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        os << detail::fmt_double(samples[i]) << '\t'
           << detail::fmt_double(static_cast<double>(i + 1) / n) << '\n';
    if (!os) throw std::runtime_error("CDF export failed: " + path);
}

inline void export_matrix_tsv(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write matrix file: " + path);
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j)
            os << detail::fmt_double(m(i, j)) << (j + 1 < m.cols() ? '\t' : '\n');
    }
    if (!os) throw std::runtime_error("matrix export failed: " + path);
}

inline nlohmann::ordered_json record_to_json(const MetricRecord& r) {
    nlohmann::ordered_json j;
    j["update"] = r.update;
    j["sum_rate"] = r.sum_rate;
    j["sum_rate_ci"] = r.sum_rate_ci;
    j["mean_sinr"] = r.mean_sinr;
    j["collision_rate"] = r.collision_rate;
    j["jain_fairness"] = r.jain_fairness;
    j["mean_queue"] = r.mean_queue;
    j["max_queue"] = r.max_queue;
    j["critic_disagreement"] = r.critic_disagreement;
    j["team_reward"] = r.team_reward;
    return j;
}

}  // namespace fedcritic

#endif
