// SPDX-License-Identifier: Apache-2.0

#ifndef FEDCRITIC_CONFIG_HPP
#define FEDCRITIC_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "fedcritic/baselines.hpp"
#include "fedcritic/env.hpp"
#include "fedcritic/learner.hpp"

namespace fedcritic {

/// Full experiment configuration. The defaults reproduce the reference
/// setup: 7 BSs on a radius-1 line graph, 32 subcarriers, 8 UEs per cell,
/// power levels {0.05,0.15,0.35,0.60,1.0} under a unit budget, noise 1e-3,
/// log-normal gains (-2.3, 0.8) with cross-link scale 1.2, fading
/// correlation 0.85, 250 PPO updates at horizon 128 with gossip every
/// update, and evaluation every 10 updates over 6 seeds x 6 episodes x 24
/// steps.
struct ExperimentConfig {
    std::uint64_t seed = 1;
    MethodKind method = MethodKind::FedCritic;
    EnvConfig env;
    PPOConfig ppo;
    int hidden = 128;
    long n_updates = 250;
    int gossip_period = 1;  // K_g
    int eval_every = 10;
    int eval_seeds = 6;
    int eval_episodes = 6;
    int eval_steps = 24;
    bool eval_stochastic = false;  // argmax heads by default; both exported
    double mbps_per_unit = 0.18;   // nominal 180 kHz subcarrier conversion
    std::string out_dir = "out";

    void validate() const {
        env.validate();
        ppo.validate();
        if (hidden < 1) throw std::invalid_argument("hidden must be >= 1");
        if (n_updates < 0) throw std::invalid_argument("n_updates must be >= 0");
        if (gossip_period < 1) throw std::invalid_argument("gossip_period must be >= 1");
        if (eval_every < 1) throw std::invalid_argument("eval_every must be >= 1");
        if (eval_seeds < 1 || eval_episodes < 1 || eval_steps < 1)
            throw std::invalid_argument("evaluation sizes must be >= 1");
    }
};

inline nlohmann::ordered_json to_json(const ExperimentConfig& c) {
    nlohmann::ordered_json j;
    j["seed"] = c.seed;
    j["method"] = to_string(c.method);
    j["n_bs"] = c.env.channel.n_bs;
    j["n_subcarriers"] = c.env.channel.n_subcarriers;
    j["ues_per_cell"] = c.env.channel.ues_per_cell;
    j["mu_pl"] = c.env.channel.mu_pl;
    j["sigma_pl"] = c.env.channel.sigma_pl;
    j["crosslink_scale"] = c.env.channel.crosslink_scale;
    j["rho"] = c.env.channel.rho;
    j["noise_psd_times_df"] = c.env.channel.noise_psd_times_df;
    j["delta_f"] = c.env.channel.delta_f;
    j["freq_selective_shadowing"] = c.env.channel.freq_selective_shadowing;
    j["graph_radius"] = c.env.graph_radius;
    j["power_levels"] = c.env.levels.levels;
    j["p_max"] = c.env.levels.budget;
    j["r_min"] = c.env.r_min;
    j["lambda_int"] = c.env.lambda_int;
    j["eta_leakage"] = c.env.eta_leakage;
    j["alpha_g"] = c.env.alpha_g;
    j["alpha_o"] = c.env.alpha_o;
    j["warmup_slots"] = c.env.warmup_slots;
    j["discount"] = c.ppo.discount;
    j["gae_lambda"] = c.ppo.gae_lambda;
    j["clip_eps"] = c.ppo.clip_eps;
    j["ppo_epochs"] = c.ppo.epochs;
    j["minibatch"] = c.ppo.minibatch;
    j["max_grad_norm"] = c.ppo.max_grad_norm;
    j["entropy_start"] = c.ppo.entropy_start;
    j["entropy_end"] = c.ppo.entropy_end;
    j["actor_lr"] = c.ppo.actor_lr;
    j["critic_lr"] = c.ppo.critic_lr;
    j["horizon"] = c.ppo.horizon;
    j["hidden"] = c.hidden;
    j["n_updates"] = c.n_updates;
    j["gossip_period"] = c.gossip_period;
    j["eval_every"] = c.eval_every;
    j["eval_seeds"] = c.eval_seeds;
    j["eval_episodes"] = c.eval_episodes;
    j["eval_steps"] = c.eval_steps;
    j["eval_stochastic"] = c.eval_stochastic;
    j["mbps_per_unit"] = c.mbps_per_unit;
    j["out_dir"] = c.out_dir;
    return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).template get<std::decay_t<decltype(field)>>();
    };
    get("seed", c.seed);
    if (j.contains("method")) c.method = parse_method(j.at("method").get<std::string>());
    get("n_bs", c.env.channel.n_bs);
    get("n_subcarriers", c.env.channel.n_subcarriers);
    get("ues_per_cell", c.env.channel.ues_per_cell);
    get("mu_pl", c.env.channel.mu_pl);
    get("sigma_pl", c.env.channel.sigma_pl);
    get("crosslink_scale", c.env.channel.crosslink_scale);
    get("rho", c.env.channel.rho);
    get("noise_psd_times_df", c.env.channel.noise_psd_times_df);
    get("delta_f", c.env.channel.delta_f);
    get("freq_selective_shadowing", c.env.channel.freq_selective_shadowing);
    get("graph_radius", c.env.graph_radius);
    get("power_levels", c.env.levels.levels);
    get("p_max", c.env.levels.budget);
    get("r_min", c.env.r_min);
    get("lambda_int", c.env.lambda_int);
    get("eta_leakage", c.env.eta_leakage);
    get("alpha_g", c.env.alpha_g);
    get("alpha_o", c.env.alpha_o);
    get("warmup_slots", c.env.warmup_slots);
    get("discount", c.ppo.discount);
    get("gae_lambda", c.ppo.gae_lambda);
    get("clip_eps", c.ppo.clip_eps);
    get("ppo_epochs", c.ppo.epochs);
    get("minibatch", c.ppo.minibatch);
    get("max_grad_norm", c.ppo.max_grad_norm);
    get("entropy_start", c.ppo.entropy_start);
    get("entropy_end", c.ppo.entropy_end);
    get("actor_lr", c.ppo.actor_lr);
    get("critic_lr", c.ppo.critic_lr);
    get("horizon", c.ppo.horizon);
    get("hidden", c.hidden);
    get("n_updates", c.n_updates);
    get("gossip_period", c.gossip_period);
    get("eval_every", c.eval_every);
    get("eval_seeds", c.eval_seeds);
    get("eval_episodes", c.eval_episodes);
    get("eval_steps", c.eval_steps);
    get("eval_stochastic", c.eval_stochastic);
    get("mbps_per_unit", c.mbps_per_unit);
    get("out_dir", c.out_dir);
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config file: " + path);
    nlohmann::json j;
    is >> j;
    return config_from_json(j);
}

inline void save_config(const std::string& path, const ExperimentConfig& c) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write config file: " + path);
    os << to_json(c).dump(2) << "\n";
}

}  // namespace fedcritic

#endif
