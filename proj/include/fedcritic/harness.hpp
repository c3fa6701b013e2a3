// SPDX-License-Identifier: Apache-2.0

#ifndef FEDCRITIC_HARNESS_HPP
#define FEDCRITIC_HARNESS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedcritic/baselines.hpp"
#include "fedcritic/checkpoint.hpp"
#include "fedcritic/config.hpp"
#include "fedcritic/env.hpp"
#include "fedcritic/federation.hpp"
#include "fedcritic/learner.hpp"
#include "fedcritic/metrics.hpp"

namespace fedcritic {

inline Eigen::VectorXd concat_observations(const std::vector<Eigen::VectorXd>& obs) {
    Eigen::Index total = 0;
    for (const auto& o : obs) total += o.size();
    Eigen::VectorXd joint(total);
    Eigen::Index at = 0;
    for (const auto& o : obs) {
        joint.segment(at, o.size()) = o;
        at += o.size();
    }
    return joint;
}

struct TrainingRow {
    long update = 0;
    double team_reward = 0.0;  // raw, per-slot average over the rollout
    double actor_loss = 0.0;
    double critic_loss = 0.0;
    double entropy = 0.0;
    double approx_kl = 0.0;
    double clip_fraction = 0.0;
    double critic_disagreement = 0.0;
    double entropy_coef = 0.0;
};

inline void export_training_rows(const std::string& path,
                                 const std::vector<TrainingRow>& rows) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write training metrics: " + path);
    os << "update\tteam_reward\tactor_loss\tcritic_loss\tentropy\tapprox_kl"
          "\tclip_fraction\tcritic_disagreement\tentropy_coef\n";
    for (const auto& r : rows)
        os << r.update << '\t' << detail::fmt_double(r.team_reward) << '\t'
           << detail::fmt_double(r.actor_loss) << '\t'
           << detail::fmt_double(r.critic_loss) << '\t'
           << detail::fmt_double(r.entropy) << '\t'
           << detail::fmt_double(r.approx_kl) << '\t'
           << detail::fmt_double(r.clip_fraction) << '\t'
           << detail::fmt_double(r.critic_disagreement) << '\t'
           << detail::fmt_double(r.entropy_coef) << '\n';
    if (!os) throw std::runtime_error("training metrics export failed: " + path);
}

/// Per-evaluation-point outcome: the seed-aggregated record plus the pooled
/// slot trace for distribution exports.
struct EvalOutcome {
    MetricRecord record;
    std::vector<MetricRecord> per_seed;
    std::vector<SlotTrace> pooled_trace;
};

struct RunSummary {
    std::vector<TrainingRow> training;
    std::vector<MetricRecord> eval_argmax;
    std::vector<MetricRecord> eval_stochastic;
    MetricRecord final_eval;  // argmax mode
    std::vector<MetricRecord> final_per_seed;
};

/// Orchestrates one experiment: the shared interference-coupled environment,
/// one learner per BS (or a centralized critic for the CTDE variants),
/// periodic gossip, evaluation checkpoints and file exports.
class Trainer {
public:
    explicit Trainer(ExperimentConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.validate();
        env_cfg_ = cfg_.env;
        if (cfg_.method == MethodKind::CTDE) env_cfg_.freeze_queues = true;
        graph_ = env_cfg_.make_graph();
        layout_ = obs_layout(env_cfg_);
        n_bs_ = env_cfg_.channel.n_bs;

        if (is_learning_method(cfg_.method)) {
            // gossiped parameter sets start from one shared draw so that
            // parameter averaging acts on aligned networks; everything else
            // gets an independent per-BS draw
            for (int n = 0; n < n_bs_; ++n) {
                const std::uint64_t idx = gossips_actors() ? 0 : n;
                RngStream init_rng(derive_seed(cfg_.seed, "init-actor", idx));
                actors_.emplace_back(layout_, env_cfg_.levels.count(), cfg_.hidden);
                actors_.back().init_weights(init_rng);
                actor_opts_.emplace_back(actors_.back().param_count(), cfg_.ppo.actor_lr);
                policy_rngs_.emplace_back(derive_seed(cfg_.seed, "policy", n));
            }
            if (uses_central_critic()) {
                RngStream init_rng(derive_seed(cfg_.seed, "init-critic", n_bs_));
                central_critic_ = CriticNet(layout_.dim() * n_bs_, cfg_.hidden);
                central_critic_.init_weights(init_rng);
                central_critic_opt_ =
                    Adam(central_critic_.param_count(), cfg_.ppo.critic_lr);
            } else {
                for (int n = 0; n < n_bs_; ++n) {
                    const std::uint64_t idx = gossips_critics() ? 0 : n;
                    RngStream init_rng(derive_seed(cfg_.seed, "init-critic", idx));
                    critics_.emplace_back(layout_.dim(), cfg_.hidden);
                    critics_.back().init_weights(init_rng);
                    critic_opts_.emplace_back(critics_.back().param_count(),
                                              cfg_.ppo.critic_lr);
                }
            }
            mixing_ = metropolis_weights(graph_);
        }
    }

    const ExperimentConfig& config() const { return cfg_; }
    bool uses_central_critic() const {
        return cfg_.method == MethodKind::CTDE || cfg_.method == MethodKind::CTDE_VQ;
    }
    bool gossips_critics() const { return cfg_.method == MethodKind::FedCritic; }
    bool gossips_actors() const { return cfg_.method == MethodKind::FedActor; }

    /// Sum over training slots of |h_{0,0,0,0}|^2: a digest of the channel
    /// trajectory used to verify seed-stream isolation across methods.
    double channel_trace_digest() const { return channel_digest_; }

    double critic_disagreement() const {
        if (!is_learning_method(cfg_.method) || uses_central_critic() ||
            critics_.size() < 2)
            return 0.0;
        std::vector<ParamVector> params;
        params.reserve(critics_.size());
        for (const auto& c : critics_) params.push_back(c.params());
        return disagreement(params);
    }

    double actor_disagreement() const {
        if (actors_.size() < 2) return 0.0;
        std::vector<ParamVector> params;
        params.reserve(actors_.size());
        for (const auto& a : actors_) params.push_back(a.params());
        return disagreement(params);
    }

    /// Full training per the experiment config, with evaluation and file
    /// exports every eval_every updates. Returns the in-memory summary.
    RunSummary run() {
        namespace fs = std::filesystem;
        fs::create_directories(cfg_.out_dir);
        written_files_.clear();

        RunSummary summary;
        try {
            save_config(path("config.json"), cfg_);
            written_files_.push_back("config.json");

            RngStream channel_rng(derive_seed(cfg_.seed, "channel"));
            EnvState state = init_env(env_cfg_, channel_rng);
            std::vector<Eigen::VectorXd> obs = observe(state, env_cfg_);

            evaluate_and_export(0, summary);

            const int horizon = cfg_.ppo.horizon;
            for (long update = 1; update <= cfg_.n_updates; ++update) {
                if (!is_learning_method(cfg_.method)) break;

                std::vector<RolloutBuffer> buffers(
                    static_cast<std::size_t>(n_bs_), RolloutBuffer(horizon));
                RolloutBuffer central_buffer(horizon);
                double reward_acc = 0.0;

                for (int t = 0; t < horizon; ++t) {
                    std::vector<SampledAction> sampled(n_bs_);
                    std::vector<SubcarrierDecision> decisions;
                    decisions.reserve(static_cast<std::size_t>(n_bs_) *
                                      layout_.n_subcarriers);
                    for (int n = 0; n < n_bs_; ++n) {
                        sampled[n] = sample_action(actors_[n], obs[n], policy_rngs_[n]);
                        for (const auto& d : to_decisions(sampled[n].action))
                            decisions.push_back(d);
                    }
                    Allocation alloc =
                        decode(decisions, n_bs_, layout_.n_subcarriers,
                               layout_.ues_per_cell, env_cfg_.levels);

                    const Eigen::VectorXd joint = concat_observations(obs);
                    const double central_value =
                        uses_central_critic() ? central_critic_.value(joint) : 0.0;

                    StepResult sr = step(state, alloc, env_cfg_, channel_rng);
                    channel_digest_ += std::norm(state.fading.h(0, 0, 0, 0));
                    reward_acc += sr.team_reward_raw;

                    for (int n = 0; n < n_bs_; ++n) {
                        SlotSample sample;
                        sample.obs = obs[n];
                        sample.action = sampled[n].action;
                        sample.logp_k = sampled[n].logp_k;
                        sample.value = uses_central_critic()
                                           ? central_value
                                           : critics_[n].value(obs[n]);
                        sample.reward = sr.team_reward_scaled;
                        buffers[n].add(std::move(sample));
                    }
                    if (uses_central_critic()) {
                        SlotSample sample;
                        sample.obs = joint;
                        sample.value = central_value;
                        sample.reward = sr.team_reward_scaled;
                        central_buffer.add(std::move(sample));
                    }
                    state = std::move(sr.next);
                    obs = std::move(sr.observations);
                }

                // bootstrap at truncation and compute advantages
                const Eigen::VectorXd joint = concat_observations(obs);
                for (int n = 0; n < n_bs_; ++n) {
                    const double bootstrap = uses_central_critic()
                                                 ? central_critic_.value(joint)
                                                 : critics_[n].value(obs[n]);
                    buffers[n].finish(bootstrap, cfg_.ppo.discount, cfg_.ppo.gae_lambda);
                }
                if (uses_central_critic())
                    central_buffer.finish(central_critic_.value(joint),
                                          cfg_.ppo.discount, cfg_.ppo.gae_lambda);

                const double entropy_coef =
                    cfg_.ppo.entropy_coef(update - 1, cfg_.n_updates);
                TrainingRow row;
                row.update = update;
                row.team_reward = reward_acc / horizon;
                row.entropy_coef = entropy_coef;

                for (int n = 0; n < n_bs_; ++n) {
                    CriticNet& critic =
                        uses_central_critic() ? central_critic_ : critics_[n];
                    Adam& copt =
                        uses_central_critic() ? central_critic_opt_ : critic_opts_[n];
                    const RolloutBuffer& critic_buffer =
                        uses_central_critic() ? central_buffer : buffers[n];
                    // with a central critic the actor update still runs per BS
                    // while the shared critic regresses on the joint buffer,
                    // exactly once per round
                    PPODiagnostics diag = ppo_update(
                        actors_[n], critic, actor_opts_[n], copt, buffers[n],
                        critic_buffer, cfg_.ppo, entropy_coef, policy_rngs_[n],
                        !uses_central_critic() || n == 0);
                    row.actor_loss += diag.actor_loss / n_bs_;
                    row.critic_loss += diag.critic_loss / n_bs_;
                    row.entropy += diag.entropy / n_bs_;
                    row.approx_kl += diag.approx_kl / n_bs_;
                    row.clip_fraction += diag.clip_fraction / n_bs_;
                }

                if (gossips_critics() && update % cfg_.gossip_period == 0) {
                    std::vector<ParamVector> params;
                    for (const auto& c : critics_) params.push_back(c.params());
                    auto mixed = gossip_mix(params, mixing_);
                    for (int n = 0; n < n_bs_; ++n) critics_[n].set_params(mixed[n]);
                }
                if (gossips_actors() && update % cfg_.gossip_period == 0) {
                    std::vector<ParamVector> params;
                    for (const auto& a : actors_) params.push_back(a.params());
                    auto mixed = gossip_mix(params, mixing_);
                    for (int n = 0; n < n_bs_; ++n) actors_[n].set_params(mixed[n]);
                }
                row.critic_disagreement = critic_disagreement();
                summary.training.push_back(row);

                if (update % cfg_.eval_every == 0 || update == cfg_.n_updates)
                    evaluate_and_export(update, summary);
            }

            if (!is_learning_method(cfg_.method) && cfg_.n_updates > 0)
                evaluate_and_export(cfg_.n_updates, summary);

            if (!summary.eval_argmax.empty()) {
                summary.final_eval = summary.eval_argmax.back();
            }
            write_summary(summary);
        } catch (const std::exception& e) {
            write_partial_manifest(e.what());
            throw;
        }
        return summary;
    }

    /// Evaluation protocol: eval_seeds independent channel seeds, each with
    /// eval_episodes fresh episodes of eval_steps slots; reports the mean
    /// per-seed metrics with a normal-approximation 95% interval on the sum
    /// rate. Stochastic mode samples the policy; otherwise argmax heads.
    EvalOutcome evaluate(bool stochastic, long update_index = 0) {
        EvalOutcome out;
        std::vector<double> seed_sum_rates;
        for (int s = 0; s < cfg_.eval_seeds; ++s) {
            std::vector<SlotTrace> seed_trace;
            for (int e = 0; e < cfg_.eval_episodes; ++e) {
                RngStream channel_rng(
                    derive_seed(cfg_.seed, "eval-channel",
                                static_cast<std::uint64_t>(s) * 1000003 + e));
                RngStream policy_rng(derive_seed(
                    cfg_.seed, "eval-policy",
                    (static_cast<std::uint64_t>(update_index) * 1009 + s) * 1000003 + e));
                EnvState state = init_env(env_cfg_, channel_rng);
                std::vector<Eigen::VectorXd> obs = observe(state, env_cfg_);
                for (int t = 0; t < cfg_.eval_steps; ++t) {
                    Allocation alloc = act(state, obs, stochastic, policy_rng);
                    StepResult sr = step(state, alloc, env_cfg_, channel_rng);
                    SlotTrace trace;
                    trace.rates = sr.rates;
                    trace.activity = sr.activity;
                    for (int n = 0; n < n_bs_; ++n)
                        for (int k = 0; k < layout_.n_subcarriers; ++k) {
                            const int m = alloc.scheduled_ue(n, k);
                            if (m >= 0) trace.active_sinr.push_back(sr.sinr(n, k, m));
                        }
                    trace.queues = sr.next.queues.q;
                    trace.team_reward = sr.team_reward_raw;
                    seed_trace.push_back(trace);
                    out.pooled_trace.push_back(std::move(trace));
                    state = std::move(sr.next);
                    obs = std::move(sr.observations);
                }
            }
            MetricRecord rec = compute_metrics(seed_trace, graph_);
            rec.update = update_index;
            rec.critic_disagreement = critic_disagreement();
            seed_sum_rates.push_back(rec.sum_rate);
            out.per_seed.push_back(rec);
        }

        MetricRecord agg;
        agg.update = update_index;
        for (const auto& r : out.per_seed) {
            agg.sum_rate += r.sum_rate;
            agg.mean_sinr += r.mean_sinr;
            agg.collision_rate += r.collision_rate;
            agg.jain_fairness += r.jain_fairness;
            agg.mean_queue += r.mean_queue;
            agg.max_queue = std::max(agg.max_queue, r.max_queue);
            agg.team_reward += r.team_reward;
        }
        const double ns = static_cast<double>(out.per_seed.size());
        agg.sum_rate /= ns;
        agg.mean_sinr /= ns;
        agg.collision_rate /= ns;
        agg.jain_fairness /= ns;
        agg.mean_queue /= ns;
        agg.team_reward /= ns;
        agg.critic_disagreement = critic_disagreement();
        if (out.per_seed.size() > 1) {
            double var = 0.0;
            for (double v : seed_sum_rates) var += (v - agg.sum_rate) * (v - agg.sum_rate);
            var /= (ns - 1.0);
            agg.sum_rate_ci = 1.96 * std::sqrt(var / ns);
        }
        out.record = agg;
        return out;
    }

    void save_checkpoints(long update) const {
        namespace fs = std::filesystem;
        const fs::path dir = fs::path(cfg_.out_dir) / "checkpoints";
        fs::create_directories(dir);
        for (int n = 0; n < static_cast<int>(actors_.size()); ++n) {
            Checkpoint c;
            c.role = 0;
            c.bs_index = static_cast<std::uint32_t>(n);
            c.update_counter = static_cast<std::uint64_t>(update);
            c.descriptor = actors_[n].layout_descriptor();
            c.params = actors_[n].params().values;
            save_checkpoint((dir / ("bs" + std::to_string(n) + "_actor.ckpt")).string(), c);
        }
        for (int n = 0; n < static_cast<int>(critics_.size()); ++n) {
            Checkpoint c;
            c.role = 1;
            c.bs_index = static_cast<std::uint32_t>(n);
            c.update_counter = static_cast<std::uint64_t>(update);
            c.descriptor = critics_[n].layout_descriptor();
            c.params = critics_[n].params().values;
            save_checkpoint((dir / ("bs" + std::to_string(n) + "_critic.ckpt")).string(), c);
        }
        if (uses_central_critic() && is_learning_method(cfg_.method)) {
            Checkpoint c;
            c.role = 1;
            c.bs_index = static_cast<std::uint32_t>(n_bs_);
            c.update_counter = static_cast<std::uint64_t>(update);
            c.descriptor = central_critic_.layout_descriptor();
            c.params = central_critic_.params().values;
            save_checkpoint((dir / "central_critic.ckpt").string(), c);
        }
    }

    /// Restores actors (and critics, when present) from a checkpoint
    /// directory; a descriptor mismatch against the configured architecture
    /// is a structural error.
    void load_checkpoints(const std::string& dir) {
        namespace fs = std::filesystem;
        for (int n = 0; n < static_cast<int>(actors_.size()); ++n) {
            const auto p = fs::path(dir) / ("bs" + std::to_string(n) + "_actor.ckpt");
            Checkpoint c = load_checkpoint(p.string());
            if (c.descriptor != actors_[n].layout_descriptor())
                throw std::runtime_error("checkpoint descriptor mismatch: " +
                                         c.descriptor + " vs " +
                                         actors_[n].layout_descriptor());
            ParamVector pv{c.params, c.descriptor};
            actors_[n].set_params(pv);
        }
        for (int n = 0; n < static_cast<int>(critics_.size()); ++n) {
            const auto p = fs::path(dir) / ("bs" + std::to_string(n) + "_critic.ckpt");
            if (!fs::exists(p)) continue;
            Checkpoint c = load_checkpoint(p.string());
            if (c.descriptor != critics_[n].layout_descriptor())
                throw std::runtime_error("checkpoint descriptor mismatch: " +
                                         c.descriptor + " vs " +
                                         critics_[n].layout_descriptor());
            ParamVector pv{c.params, c.descriptor};
            critics_[n].set_params(pv);
        }
        if (uses_central_critic()) {
            const auto p = fs::path(dir) / "central_critic.ckpt";
            if (fs::exists(p)) {
                Checkpoint c = load_checkpoint(p.string());
                if (c.descriptor != central_critic_.layout_descriptor())
                    throw std::runtime_error("checkpoint descriptor mismatch: " +
                                             c.descriptor + " vs " +
                                             central_critic_.layout_descriptor());
                ParamVector pv{c.params, c.descriptor};
                central_critic_.set_params(pv);
            }
        }
    }

    std::vector<PolicyNet>& actors() { return actors_; }
    std::vector<CriticNet>& critics() { return critics_; }
    CriticNet& central_critic() { return central_critic_; }

private:
    std::string path(const std::string& name) const {
        return (std::filesystem::path(cfg_.out_dir) / name).string();
    }

    /// One BS's joint allocation decision for evaluation or heuristics.
    Allocation act(const EnvState& state, const std::vector<Eigen::VectorXd>& obs,
                   bool stochastic, RngStream& policy_rng) {
        const int K = layout_.n_subcarriers, M = layout_.ues_per_cell;
        if (cfg_.method == MethodKind::Greedy) {
            const auto gains = power_gains(state.large_scale, state.fading);
            return greedy_policy(gains, env_cfg_.levels, n_bs_, K, M);
        }
        if (cfg_.method == MethodKind::QoSHeuristic) {
            const auto gains = power_gains(state.large_scale, state.fading);
            return qos_policy(gains, state.queues.q, env_cfg_.levels, n_bs_, K, M);
        }
        std::vector<SubcarrierDecision> decisions;
        decisions.reserve(static_cast<std::size_t>(n_bs_) * K);
        for (int n = 0; n < n_bs_; ++n) {
            BSAction a = stochastic
                             ? sample_action(actors_[n], obs[n], policy_rng).action
                             : greedy_action(actors_[n], obs[n]);
            for (const auto& d : to_decisions(a)) decisions.push_back(d);
        }
        return decode(decisions, n_bs_, K, M, env_cfg_.levels);
    }

    void evaluate_and_export(long update, RunSummary& summary) {
        EvalOutcome argmax_eval = evaluate(false, update);
        EvalOutcome stochastic_eval = evaluate(true, update);
        summary.eval_argmax.push_back(argmax_eval.record);
        summary.eval_stochastic.push_back(stochastic_eval.record);
        summary.final_per_seed = argmax_eval.per_seed;

        export_records_tsv(path("metrics_eval_argmax.tsv"), summary.eval_argmax);
        export_records_tsv(path("metrics_eval_stochastic.tsv"),
                           summary.eval_stochastic);
        export_training_rows(path("metrics_train.tsv"), summary.training);
        written_files_.push_back("metrics_eval_argmax.tsv");
        written_files_.push_back("metrics_eval_stochastic.tsv");
        written_files_.push_back("metrics_train.tsv");

        // distribution exports reflect the latest checkpoint
        const auto sinr_db = pooled_active_sinr_db(argmax_eval.pooled_trace);
        export_cdf_tsv(path("cdf_sinr_db.tsv"), sinr_db);
        std::vector<double> link_rates, link_rates_mbps;
        for (const auto& slot : argmax_eval.pooled_trace)
            for (double s : slot.active_sinr) {
                const double r = env_cfg_.channel.delta_f * std::log2(1.0 + s);
                link_rates.push_back(r);
                link_rates_mbps.push_back(r * cfg_.mbps_per_unit);
            }
        export_cdf_tsv(path("cdf_active_link_rate.tsv"), link_rates);
        export_cdf_tsv(path("cdf_active_link_rate_mbps.tsv"), link_rates_mbps);
        export_matrix_tsv(path("heatmap_activity.tsv"),
                          activity_heatmap(argmax_eval.pooled_trace));
        written_files_.push_back("cdf_sinr_db.tsv");
        written_files_.push_back("cdf_active_link_rate.tsv");
        written_files_.push_back("cdf_active_link_rate_mbps.tsv");
        written_files_.push_back("heatmap_activity.tsv");

        if (is_learning_method(cfg_.method)) {
            save_checkpoints(update);
            written_files_.push_back("checkpoints");
        }
    }

    void write_summary(const RunSummary& summary) {
        nlohmann::ordered_json j;
        j["schema_version"] = 1;
        j["config"] = to_json(cfg_);
        j["final_eval"] = record_to_json(summary.final_eval);
        nlohmann::ordered_json seeds = nlohmann::ordered_json::array();
        for (const auto& r : summary.final_per_seed) seeds.push_back(record_to_json(r));
        j["final_eval_per_seed"] = seeds;
        nlohmann::ordered_json evals = nlohmann::ordered_json::array();
        for (const auto& r : summary.eval_argmax) evals.push_back(record_to_json(r));
        j["eval_argmax"] = evals;
        j["n_training_rows"] = summary.training.size();
        std::ofstream os(path("summary.json"));
        if (!os) throw std::runtime_error("cannot write summary.json");
        os << j.dump(2) << "\n";
        written_files_.push_back("summary.json");
    }

    void write_partial_manifest(const std::string& reason) {
        try {
            nlohmann::ordered_json j;
            j["aborted"] = true;
            j["reason"] = reason;
            j["written"] = written_files_;
            std::ofstream os(path("partial_results_manifest.json"));
            os << j.dump(2) << "\n";
        } catch (...) {
            // manifest writing is best-effort
        }
    }

    ExperimentConfig cfg_;
    EnvConfig env_cfg_;
    InterferenceGraph graph_;
    ObsLayout layout_;
    int n_bs_ = 0;
    std::vector<PolicyNet> actors_;
    std::vector<CriticNet> critics_;
    CriticNet central_critic_;
    std::vector<Adam> actor_opts_, critic_opts_;
    Adam central_critic_opt_;
    std::vector<RngStream> policy_rngs_;
    MixingMatrix mixing_;
    double channel_digest_ = 0.0;
    std::vector<std::string> written_files_;
};

}  // namespace fedcritic

#endif
