// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: training, evaluation, consensus theory checks,
// oracle comparison and plot-data export.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fedcritic/baselines.hpp"
#include "fedcritic/config.hpp"
#include "fedcritic/federation.hpp"
#include "fedcritic/harness.hpp"
#include "fedcritic/metrics.hpp"
#include "fedcritic/oracle.hpp"

namespace {

using namespace fedcritic;

struct CommonOpts {
    std::string config_path;
    std::string method;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir;
};

ExperimentConfig resolve_config(const CommonOpts& opts) {
    ExperimentConfig cfg;
    if (!opts.config_path.empty()) cfg = load_config(opts.config_path);
    if (!opts.method.empty()) cfg.method = parse_method(opts.method);
    if (opts.seed_set) cfg.seed = opts.seed;
    if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
    return cfg;
}

int cmd_train(const CommonOpts& opts, long updates_override) {
    ExperimentConfig cfg = resolve_config(opts);
    if (updates_override >= 0) cfg.n_updates = updates_override;
    Trainer trainer(cfg);
    const RunSummary summary = trainer.run();
    std::cout << "method=" << to_string(cfg.method) << " seed=" << cfg.seed
              << " updates=" << cfg.n_updates
              << " final_sum_rate=" << summary.final_eval.sum_rate
              << " collision_rate=" << summary.final_eval.collision_rate
              << " mean_sinr=" << summary.final_eval.mean_sinr << "\n";
    std::cout << "outputs written to " << cfg.out_dir << "\n";
    return 0;
}

int cmd_eval(const CommonOpts& opts, const std::string& checkpoint_dir,
             bool stochastic) {
    ExperimentConfig cfg = resolve_config(opts);
    Trainer trainer(cfg);
    if (!checkpoint_dir.empty()) trainer.load_checkpoints(checkpoint_dir);
    EvalOutcome outcome = trainer.evaluate(stochastic);
    std::filesystem::create_directories(cfg.out_dir);
    std::vector<MetricRecord> records{outcome.record};
    for (const auto& r : outcome.per_seed) records.push_back(r);
    export_records_tsv(
        (std::filesystem::path(cfg.out_dir) / "eval_records.tsv").string(), records);
    export_cdf_tsv((std::filesystem::path(cfg.out_dir) / "cdf_sinr_db.tsv").string(),
                   pooled_active_sinr_db(outcome.pooled_trace));
    export_matrix_tsv(
        (std::filesystem::path(cfg.out_dir) / "heatmap_activity.tsv").string(),
        activity_heatmap(outcome.pooled_trace));
    std::cout << "sum_rate=" << outcome.record.sum_rate << " +/- "
              << outcome.record.sum_rate_ci
              << " collision_rate=" << outcome.record.collision_rate
              << " mean_sinr=" << outcome.record.mean_sinr << "\n";
    return 0;
}

void export_consensus_records(const std::string& path,
                              const std::vector<ConsensusRecord>& records) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "round\tdisagreement\tgrad_norm_sq\n";
    for (const auto& r : records)
        os << r.round << '\t' << detail::fmt_double(r.disagreement) << '\t'
           << detail::fmt_double(r.grad_norm_sq) << '\n';
}

int cmd_theory_check(std::uint64_t seed, int n_agents, int rounds,
                     const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const auto graph = InterferenceGraph::path(n_agents, 1);
    const MixingMatrix mix = metropolis_weights(graph);
    const double sigma = contraction_factor(mix);
    bool all_ok = true;

    double max_row_err = 0.0, max_col_err = 0.0;
    for (int i = 0; i < n_agents; ++i) {
        max_row_err = std::max(max_row_err, std::abs(mix.w.row(i).sum() - 1.0));
        max_col_err = std::max(max_col_err, std::abs(mix.w.col(i).sum() - 1.0));
    }
    const bool stochastic_ok = max_row_err < 1e-12 && max_col_err < 1e-12;
    all_ok = all_ok && stochastic_ok && sigma < 1.0;
    std::cout << (stochastic_ok && sigma < 1.0 ? "PASS" : "FAIL")
              << " mixing matrix: doubly stochastic within 1e-12, sigma=" << sigma
              << "\n";

    // pure gossip must contract disagreement within the sigma^{2s} envelope
    ConsensusConfig pure;
    pure.zero_gradients = true;
    pure.rounds = std::min(rounds, 300);
    pure.gossip_period = 1;
    pure.repeats = 3;
    pure.seed = seed;
    const auto pure_records = consensus_experiment(graph, pure);
    bool envelope_ok = true;
    const double d0 = pure_records[0].disagreement;
    for (const auto& r : pure_records) {
        const double bound = 1.05 * d0 * std::pow(sigma, 2.0 * r.round);
        if (r.disagreement > bound + 1e-30) envelope_ok = false;
    }
    all_ok = all_ok && envelope_ok;
    std::cout << (envelope_ok ? "PASS" : "FAIL")
              << " pure gossip contraction within 1.05 * sigma^(2s) envelope\n";
    export_consensus_records((fs::path(out_dir) / "consensus_pure_gossip.tsv").string(),
                             pure_records);

    for (int kg : {1, 5}) {
        ConsensusConfig cc;
        cc.rounds = rounds;
        cc.gossip_period = kg;
        cc.repeats = 5;
        cc.seed = seed;
        const auto records = consensus_experiment(graph, cc);
        const double initial = records.front().disagreement;
        const double terminal = records.back().disagreement;
        double min_grad = std::numeric_limits<double>::infinity();
        for (const auto& r : records) min_grad = std::min(min_grad, r.grad_norm_sq);
        const bool ok = terminal < 1e-3 * initial && min_grad < 1e-4;
        all_ok = all_ok && ok;
        std::cout << (ok ? "PASS" : "FAIL") << " consensus K_g=" << kg
                  << ": terminal/initial=" << terminal / initial
                  << " min ||grad F(mean)||^2=" << min_grad << "\n";
        export_consensus_records(
            (fs::path(out_dir) / ("consensus_kg" + std::to_string(kg) + ".tsv")).string(),
            records);
    }

    // advantage disagreement bound with linear critics on a synthetic rollout
    RngStream rng(derive_seed(seed, "prop1"));
    const int dim = 6, horizon = 128;
    Eigen::MatrixXd features(horizon + 1, dim);
    for (int t = 0; t <= horizon; ++t)
        for (int j = 0; j < dim; ++j) features(t, j) = 2.0 * rng.uniform() - 1.0;
    Eigen::VectorXd rewards(horizon);
    for (int t = 0; t < horizon; ++t) rewards[t] = rng.normal();
    bool prop_ok = true;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Eigen::VectorXd> critics(n_agents);
        for (auto& c : critics) {
            c.resize(dim);
            for (int j = 0; j < dim; ++j) c[j] = rng.normal();
        }
        const auto rep = advantage_disagreement_check(critics, features, rewards, 0.99);
        prop_ok = prop_ok && rep.holds;
    }
    all_ok = all_ok && prop_ok;
    std::cout << (prop_ok ? "PASS" : "FAIL")
              << " advantage disagreement bound (pointwise, 20 critic sets)\n";

    std::cout << (all_ok ? "all theory checks passed" : "THEORY CHECKS FAILED")
              << "; records in " << out_dir << "\n";
    return all_ok ? 0 : 1;
}

int cmd_oracle_compare(std::uint64_t seed, int instances) {
    RngStream rng(derive_seed(seed, "oracle-compare"));
    std::cout << "instance\toptimum\tgreedy_gap\tqos_gap\tenumerated\n";
    bool dominance = true;
    for (int i = 0; i < instances; ++i) {
        TinyInstance inst = TinyInstance::random(rng);
        const OracleResult result = enumerate_and_solve(inst);
        const Allocation g = greedy_policy(inst.gains, inst.levels, inst.n_bs,
                                           inst.n_subcarriers, inst.ues_per_cell);
        const Allocation q = qos_policy(inst.gains, inst.queues, inst.levels,
                                        inst.n_bs, inst.n_subcarriers,
                                        inst.ues_per_cell);
        const double g_obj = objective_value(inst, g).surrogate;
        const double q_obj = objective_value(inst, q).surrogate;
        dominance = dominance && g_obj <= result.best_objective + 1e-9 &&
                    q_obj <= result.best_objective + 1e-9;
        std::cout << i << '\t' << result.best_objective << '\t'
                  << result.best_objective - g_obj << '\t'
                  << result.best_objective - q_obj << '\t' << result.enumerated
                  << "\n";
    }
    std::cout << (dominance ? "oracle dominance holds on every instance"
                            : "ORACLE DOMINANCE VIOLATED")
              << "\n";
    return dominance ? 0 : 1;
}

int cmd_export_plots(const std::string& in_dir, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const auto records =
        import_records_tsv((fs::path(in_dir) / "metrics_eval_argmax.tsv").string());
    {
        std::ofstream os(fs::path(out_dir) / "plot_sum_rate_curve.tsv");
        os << "update\tsum_rate\tci_low\tci_high\n";
        for (const auto& r : records)
            os << r.update << '\t' << detail::fmt_double(r.sum_rate) << '\t'
               << detail::fmt_double(r.sum_rate - r.sum_rate_ci) << '\t'
               << detail::fmt_double(r.sum_rate + r.sum_rate_ci) << '\n';
    }
    {
        std::ofstream os(fs::path(out_dir) / "plot_final_bars.tsv");
        os << "metric\tvalue\n";
        if (!records.empty()) {
            const auto& last = records.back();
            os << "sum_rate\t" << detail::fmt_double(last.sum_rate) << '\n'
               << "mean_sinr\t" << detail::fmt_double(last.mean_sinr) << '\n'
               << "collision_rate\t" << detail::fmt_double(last.collision_rate) << '\n'
               << "jain_fairness\t" << detail::fmt_double(last.jain_fairness) << '\n';
        }
    }
    for (const char* name : {"cdf_sinr_db.tsv", "cdf_active_link_rate.tsv",
                             "cdf_active_link_rate_mbps.tsv", "heatmap_activity.tsv"}) {
        const auto src = fs::path(in_dir) / name;
        if (fs::exists(src))
            fs::copy_file(src, fs::path(out_dir) / name,
                          fs::copy_options::overwrite_existing);
    }
    std::cout << "plot data written to " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-cell OFDMA downlink simulator and federated MARL laboratory"};
    app.require_subcommand(1);

    CommonOpts opts;
    long updates_override = -1;
    std::string checkpoint_dir;
    bool eval_stochastic = false;
    int agents = 7, rounds = 5000, instances = 20;
    std::string in_dir, plot_out = "plots";

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "path to a JSON config file");
        sub->add_option("--method", opts.method,
                        "fedcritic | ctde | ctde_vq | fedactor | greedy | qos");
        sub->add_option("--seed", opts.seed, "root seed")
            ->each([&](const std::string&) { opts.seed_set = true; });
        sub->add_option("--out", opts.out_dir, "output directory");
    };

    auto* train = app.add_subcommand("train", "run training with periodic evaluation");
    add_common(train);
    train->add_option("--updates", updates_override, "override the number of updates");

    auto* eval = app.add_subcommand("eval", "evaluate checkpoints");
    add_common(eval);
    eval->add_option("--checkpoints", checkpoint_dir, "checkpoint directory");
    eval->add_flag("--stochastic", eval_stochastic, "sample the policy instead of argmax");

    auto* theory = app.add_subcommand("theory-check",
                                      "consensus and advantage-bound verification");
    theory->add_option("--seed", opts.seed, "root seed");
    theory->add_option("--agents", agents, "number of agents on the path graph");
    theory->add_option("--rounds", rounds, "learning rounds");
    theory->add_option("--out", plot_out, "output directory");

    auto* oracle = app.add_subcommand("oracle-compare",
                                      "brute-force optimum vs heuristics on tiny instances");
    oracle->add_option("--seed", opts.seed, "root seed");
    oracle->add_option("--instances", instances, "number of random instances");

    auto* plots = app.add_subcommand("export-plots", "derive plot tables from a run directory");
    plots->add_option("--in", in_dir, "run output directory")->required();
    plots->add_option("--out", plot_out, "plot data directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(train)) return cmd_train(opts, updates_override);
        if (app.got_subcommand(eval)) return cmd_eval(opts, checkpoint_dir, eval_stochastic);
        if (app.got_subcommand(theory))
            return cmd_theory_check(opts.seed, agents, rounds, plot_out);
        if (app.got_subcommand(oracle)) return cmd_oracle_compare(opts.seed, instances);
        if (app.got_subcommand(plots)) return cmd_export_plots(in_dir, plot_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
