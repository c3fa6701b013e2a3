// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite. Runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exit code is the number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "fedcritic/baselines.hpp"
#include "fedcritic/config.hpp"
#include "fedcritic/federation.hpp"
#include "fedcritic/harness.hpp"
#include "fedcritic/learner.hpp"
#include "fedcritic/metrics.hpp"
#include "fedcritic/oracle.hpp"

using namespace fedcritic;
namespace fs = std::filesystem;

namespace {

struct Criterion {
    int number;
    std::string name;
    std::function<bool(std::string&)> run;
};

bool nearly(double a, double b, double tol = 1e-10) { return std::abs(a - b) <= tol; }

#define EXPECT(cond)                                                        \
    do {                                                                    \
        if (!(cond)) {                                                      \
            detail = std::string("failed: ") + #cond + " (line " +          \
                     std::to_string(__LINE__) + ")";                        \
            return false;                                                   \
        }                                                                   \
    } while (0)

// ---------------------------------------------------------------------------
// 1. Equation unit suite: every closed-form example holds to 1e-10.

bool criterion_equations(std::string& detail) {
    // channel power gains
    {
        LargeScaleGains ls{Tensor4<double>(1, 1, 1, 1, 2.0)};
        FadingState f{Tensor4<std::complex<double>>(1, 1, 1, 1, {1.0, 0.0})};
        EXPECT(nearly(power_gains(ls, f)(0, 0, 0, 0), 2.0));
        FadingState zero{Tensor4<std::complex<double>>(1, 1, 1, 1, {0.0, 0.0})};
        EXPECT(power_gains(ls, zero)(0, 0, 0, 0) == 0.0);
    }
    {
        ChannelConfig cfg;
        cfg.n_bs = 2;
        cfg.n_subcarriers = 2;
        cfg.ues_per_cell = 2;
        cfg.sigma_pl = 0.0;
        cfg.mu_pl = -2.3;
        cfg.crosslink_scale = 1.0;
        RngStream rng(derive_seed(1, "acc"));
        const auto ls = init_large_scale(cfg, rng);
        for (double a : ls.alpha.data()) EXPECT(nearly(a, std::exp(-2.3)));
    }
    // fading recursion degenerate cases
    {
        ChannelConfig cfg;
        cfg.n_bs = 1;
        cfg.n_subcarriers = 2;
        cfg.ues_per_cell = 1;
        RngStream rng(derive_seed(2, "acc"));
        const auto f0 = init_fading(cfg, rng);
        const auto frozen = step_fading(f0, 1.0, rng);
        for (std::size_t i = 0; i < f0.h.size(); ++i)
            EXPECT(frozen.h.data()[i] == f0.h.data()[i]);
        RngStream ra(derive_seed(3, "acc")), rb(derive_seed(3, "acc"));
        FadingState shifted = f0;
        for (auto& h : shifted.h.data()) h += std::complex<double>(5.0, 2.0);
        const auto fa = step_fading(f0, 0.0, ra);
        const auto fb = step_fading(shifted, 0.0, rb);
        for (std::size_t i = 0; i < fa.h.size(); ++i)
            EXPECT(fa.h.data()[i] == fb.h.data()[i]);
    }
    // SINR
    {
        Allocation alloc(1, 1, 1);
        alloc.set_scheduled_ue(0, 0, 0);
        alloc.power_matrix()(0, 0) = 1.0;
        Tensor4<double> g(1, 1, 1, 1, 2.0);
        EXPECT(nearly(compute_sinr(alloc, g, 1e-3)(0, 0, 0), 2000.0, 1e-7));
    }
    {
        Allocation alloc(2, 1, 1);
        alloc.set_scheduled_ue(0, 0, 0);
        alloc.set_scheduled_ue(1, 0, 0);
        alloc.power_matrix().setOnes();
        Tensor4<double> g(2, 1, 2, 1, 1.0);
        EXPECT(nearly(compute_sinr(alloc, g, 1e-3)(0, 0, 0), 1.0 / 1.001));
    }
    // rates
    {
        Allocation alloc(1, 1, 1);
        alloc.set_scheduled_ue(0, 0, 0);
        alloc.power_matrix()(0, 0) = 1.0;
        Tensor3<double> sinr(1, 1, 1, 1.0);
        EXPECT(nearly(per_ue_rates(alloc, sinr, 1.0)(0, 0), 1.0));
        Allocation idle(1, 2, 2);
        idle.set_scheduled_ue(0, 0, 0);
        idle.power_matrix()(0, 0) = 0.3;
        Tensor3<double> s2(1, 2, 2, 7.0);
        EXPECT(per_ue_rates(idle, s2, 1.0)(0, 1) == 0.0);
    }
    // virtual queues
    {
        VirtualQueues vq;
        vq.q = Eigen::MatrixXd::Zero(1, 1);
        vq.r_min = Eigen::MatrixXd::Constant(1, 1, 2.0);
        Eigen::MatrixXd r5 = Eigen::MatrixXd::Constant(1, 1, 5.0);
        EXPECT(update_virtual_queues(vq, r5).q(0, 0) == 0.0);
        vq.q(0, 0) = 1.0;
        Eigen::MatrixXd rhalf = Eigen::MatrixXd::Constant(1, 1, 0.5);
        EXPECT(nearly(update_virtual_queues(vq, rhalf).q(0, 0), 2.5));
        vq.q(0, 0) = 3.0;
        Eigen::MatrixXd exact = Eigen::MatrixXd::Constant(1, 1, 2.0);
        VirtualQueues q = vq;
        for (int t = 0; t < 10; ++t) q = update_virtual_queues(q, exact);
        EXPECT(nearly(q.q(0, 0), 3.0));
    }
    // occupancy EMA
    {
        OccupancyState occ;
        occ.ema = Eigen::MatrixXd::Zero(1, 1);
        occ.alpha_o = 0.9;
        Eigen::MatrixXd on = Eigen::MatrixXd::Constant(1, 1, 1.0);
        EXPECT(nearly(update_occupancy(occ, on).ema(0, 0), 0.1));
        occ.alpha_o = 1.0;
        occ.ema(0, 0) = 0.4;
        EXPECT(update_occupancy(occ, on).ema(0, 0) == 0.4);
    }
    // neighbor aggregates
    {
        OccupancyState occ;
        occ.ema = Eigen::MatrixXd::Zero(3, 1);
        occ.ema(0, 0) = 0.2;
        occ.ema(2, 0) = 0.6;
        const auto [mean, max] =
            neighbor_aggregates(occ, InterferenceGraph::path(3, 1));
        EXPECT(nearly(mean(1, 0), 0.4));
        EXPECT(nearly(max(1, 0), 0.6));
        const auto [m0, x0] = neighbor_aggregates(occ, InterferenceGraph::edgeless(3));
        EXPECT(m0(1, 0) == 0.0 && x0(1, 0) == 0.0);
        occ.ema.setConstant(0.37);
        const auto [me, xe] = neighbor_aggregates(occ, InterferenceGraph::path(3, 1));
        for (int n = 0; n < 3; ++n) EXPECT(me(n, 0) == xe(n, 0));
    }
    // action decoding and power projection
    {
        PowerLevels levels;
        std::vector<SubcarrierDecision> mute(4);
        const Allocation a = decode(mute, 2, 2, 3, levels);
        for (int n = 0; n < 2; ++n)
            for (int k = 0; k < 2; ++k) EXPECT(!a.active(n, k) && a.power(n, k) == 0.0);

        PowerLevels lv06;
        lv06.levels = {0.6};
        std::vector<SubcarrierDecision> both{{1, 0, 0}, {1, 0, 0}};
        const Allocation b = decode(both, 1, 2, 1, lv06);
        EXPECT(nearly(b.power(0, 0), 0.6 / (1.2 + kPowerEps)));
        EXPECT(std::abs(b.power(0, 0) - 0.5) < 1e-7);

        Eigen::VectorXd within(2);
        within << 0.2, 0.3;
        EXPECT(normalize_power(within, 1.0) == within);
        Eigen::VectorXd over(2);
        over << 1.0, 1.0;
        const auto scaled = normalize_power(over, 1.0);
        EXPECT(nearly(scaled[0], 1.0 / (2.0 + kPowerEps)));
        EXPECT(normalize_power(Eigen::VectorXd::Zero(3), 1.0).sum() == 0.0);
        const auto twice = normalize_power(scaled, 1.0);
        EXPECT(twice == scaled);

        const ActionMasks masks = validity_mask(3, 5);
        EXPECT(masks.ue_when_muted == std::vector<bool>(3, false));
        EXPECT(masks.ue_when_active == std::vector<bool>(3, true));
    }
    // reward shaping and team reward
    {
        const auto graph = InterferenceGraph::path(2, 1);
        Allocation alloc(2, 2, 1);
        alloc.set_scheduled_ue(0, 0, 0);
        alloc.power_matrix()(0, 0) = 0.5;
        VirtualQueues vq;
        vq.q = Eigen::MatrixXd::Zero(2, 1);
        vq.r_min = Eigen::MatrixXd::Constant(2, 1, 2.0);
        CrossLinkAverages xl;
        xl.g_bar = Tensor3<double>(2, 2, 2, 0.3);
        xl.eta = Eigen::MatrixXd::Ones(2, 2);
        xl.lambda_int = 0.0;
        Eigen::MatrixXd rates = Eigen::MatrixXd::Zero(2, 1);
        rates(0, 0) = 3.0;
        EXPECT(nearly(shaped_reward(0, rates, alloc, vq, xl, graph), 3.0));
        vq.q(0, 0) = 2.0;
        rates(0, 0) = 1.0;
        EXPECT(nearly(shaped_reward(0, rates, alloc, vq, xl, graph), 3.0));
        Allocation silent(2, 2, 1);
        Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(2, 1);
        vq.q.setConstant(9.0);
        xl.lambda_int = 0.7;
        EXPECT(shaped_reward(0, zero, silent, vq, xl, graph) == 0.0);
        EXPECT(team_reward({1.0, 2.0, 3.0}) == 6.0);
        EXPECT(team_reward({0.0, 0.0}) == 0.0);
    }
    // policy factorization
    {
        PolicyNet net(ObsLayout{1, 2}, 2, 2);  // zero weights: uniform heads
        Eigen::VectorXd obs = Eigen::VectorXd::Zero(net.obs_layout().dim());
        const auto f = net.forward(obs);
        BSAction active{{1}, {0}, {1}};
        EXPECT(nearly(net.action_logp(f, active),
                      std::log(0.5) + std::log(0.5) + std::log(0.5)));
        BSAction muted{{0}, {1}, {0}};
        EXPECT(nearly(net.action_logp(f, muted), std::log(0.5)));
        RngStream rng(derive_seed(4, "acc"));
        for (int i = 0; i < 20; ++i) {
            const auto s = sample_action(net, obs, rng);
            EXPECT(std::isfinite(s.logp_k.sum()) && s.logp_k.sum() <= 0.0);
        }
    }
    // critic value and TD regression target
    {
        CriticNet critic(3, 2);  // zero weights
        EXPECT(critic.value(Eigen::VectorXd::Constant(3, 4.0)) == 0.0);
        RolloutBuffer buffer(1);
        SlotSample s;
        s.obs = Eigen::VectorXd::Zero(3);
        s.value = 0.0;
        s.reward = 1.5;
        buffer.add(std::move(s));
        buffer.finish(0.0, 1e-300, 0.0);
        std::vector<SampleRef> batch{{0, 0}};
        EXPECT(nearly(critic_batch_loss_grad(critic, buffer, batch, nullptr), 2.25));
    }
    // GAE degenerate cases
    {
        Eigen::VectorXd rewards(3), values(3);
        rewards << 1.0, -0.5, 2.0;
        values << 0.3, 0.1, -0.2;
        const auto g0 = gae_advantages(rewards, values, 0.7, 0.9, 0.0);
        EXPECT(nearly(g0.advantages[1], -0.5 + 0.9 * (-0.2) - 0.1));
        const auto g1 = gae_advantages(rewards, values, 0.7, 1.0, 1.0);
        EXPECT(nearly(g1.advantages[0], 1.0 - 0.5 + 2.0 + 0.7 - 0.3));
    }
    // gossip mixing
    {
        const auto mix3 = metropolis_weights(InterferenceGraph::path(3, 1));
        Eigen::MatrixXd expected(3, 3);
        expected << 2.0 / 3, 1.0 / 3, 0.0, 1.0 / 3, 1.0 / 3, 1.0 / 3, 0.0,
            1.0 / 3, 2.0 / 3;
        EXPECT((mix3.w - expected).cwiseAbs().maxCoeff() < 1e-12);
        EXPECT(nearly(contraction_factor(mix3), 2.0 / 3.0));

        const auto mix2 = metropolis_weights(InterferenceGraph::complete(2));
        EXPECT(nearly(mix2.w(0, 1), 0.5) && nearly(mix2.w(1, 1), 0.5));
        std::vector<ParamVector> two(2);
        two[0] = {Eigen::VectorXd::Constant(1, 1.0), "t"};
        two[1] = {Eigen::VectorXd::Constant(1, 5.0), "t"};
        const auto avg = gossip_mix(two, mix2);
        EXPECT(nearly(avg[0].values[0], 3.0) && nearly(avg[1].values[0], 3.0));

        std::vector<ParamVector> same(3);
        for (auto& p : same) p = {Eigen::VectorXd::Constant(4, 1.25), "t"};
        const auto fixed = gossip_mix(same, mix3);
        for (const auto& p : fixed)
            EXPECT((p.values.array() - 1.25).abs().maxCoeff() < 1e-12);

        std::vector<ParamVector> pair(2);
        pair[0] = {Eigen::VectorXd::Constant(1, 0.0), "t"};
        pair[1] = {Eigen::VectorXd::Constant(1, 2.0), "t"};
        EXPECT(nearly(disagreement(pair), 2.0));
        pair[1].values[0] = 0.0;
        EXPECT(disagreement(pair) == 0.0);

        MixingMatrix identity{Eigen::MatrixXd::Identity(3, 3),
                              InterferenceGraph::edgeless(3)};
        EXPECT(nearly(contraction_factor(identity), 1.0));
        MixingMatrix uniform{Eigen::MatrixXd::Constant(4, 4, 0.25),
                             InterferenceGraph::complete(4)};
        EXPECT(contraction_factor(uniform) < 1e-12);
    }
    // oracle objective on trivial instances
    {
        TinyInstance inst;
        inst.n_bs = 1;
        inst.n_subcarriers = 1;
        inst.ues_per_cell = 1;
        inst.levels.levels = {0.5};
        inst.gains = Tensor4<double>(1, 1, 1, 1, 0.8);
        inst.queues = Eigen::MatrixXd::Zero(1, 1);
        inst.r_min = Eigen::MatrixXd::Constant(1, 1, 2.0);
        Allocation mute(1, 1, 1);
        EXPECT(objective_value(inst, mute).surrogate == 0.0);
        inst.queues(0, 0) = 1.0;
        EXPECT(nearly(objective_value(inst, mute).surrogate, -2.0));
    }
    // empirical CDF of {1,2,3}
    {
        const fs::path dir = fs::temp_directory_path() / "fedcritic_acc_cdf";
        fs::create_directories(dir);
        const auto path = (dir / "cdf.tsv").string();
        export_cdf_tsv(path, {1.0, 2.0, 3.0});
        std::ifstream is(path);
        std::string header, line;
        std::getline(is, header);
        std::getline(is, line);
        EXPECT(line == "1\t" + fedcritic::detail::fmt_double(1.0 / 3.0));
        std::getline(is, line);
        EXPECT(line == "2\t" + fedcritic::detail::fmt_double(2.0 / 3.0));
        std::getline(is, line);
        EXPECT(line == "3\t1");
    }
    detail = "every closed-form example within 1e-10";
    return true;
}

// ---------------------------------------------------------------------------
// 2. Feasibility property suite: 1e4 random raw action tensors decode to
// allocations satisfying the OFDMA, budget, masking and binary constraints.

bool criterion_feasibility(std::string& detail) {
    PowerLevels levels;  // {0.05,...,1.0}, budget 1.0: projection binds often
    RngStream rng(derive_seed(10, "acc"));
    const int N = 3, K = 8, M = 4, L = levels.count();
    long violations = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        std::vector<SubcarrierDecision> d(N * K);
        for (auto& dec : d)
            dec = {rng.uniform() < 0.7 ? 1 : 0, rng.uniform_int(M), rng.uniform_int(L)};
        const Allocation a = decode(d, N, K, M, levels);
        const auto rep = check_feasibility(a, levels.budget);
        if (!rep.ok) ++violations;
        for (int n = 0; n < N && rep.ok; ++n)
            for (int k = 0; k < K; ++k) {
                double sched = 0.0;
                for (int m = 0; m < M; ++m) sched += a.x(n, k, m);
                if (sched != static_cast<double>(d[n * K + k].active)) ++violations;
            }
    }
    std::ostringstream os;
    os << violations << " violations over 10000 random decision tensors";
    detail = os.str();
    return violations == 0;
}

// ---------------------------------------------------------------------------
// 3. Gradient correctness: analytic actor gradients vs central finite
// differences on a 78-parameter network over 100 random instances.

bool criterion_gradients(std::string& detail) {
    PolicyNet net(ObsLayout{1, 2}, 2, 2);
    RngStream init(derive_seed(11, "acc"));
    net.init_weights(init);
    if (net.param_count() > 100) {
        detail = "network too large for the criterion";
        return false;
    }
    RngStream rng(derive_seed(12, "acc"));
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        RolloutBuffer buffer(4);
        for (int t = 0; t < 4; ++t) {
            SlotSample s;
            s.obs = Eigen::VectorXd::NullaryExpr(net.obs_layout().dim(),
                                                 [&]() { return rng.normal(); });
            auto sampled = sample_action(net, s.obs, rng);
            s.action = sampled.action;
            s.logp_k = sampled.logp_k;
            for (int k = 0; k < s.logp_k.size(); ++k)
                s.logp_k[k] += 0.15 * (rng.uniform() - 0.5);
            s.value = rng.normal();
            s.reward = rng.normal();
            buffer.add(std::move(s));
        }
        buffer.finish(rng.normal(), 0.95, 0.9);
        std::vector<SampleRef> batch{{0, 0}, {1, 0}, {2, 0}, {3, 0}};
        const double clip = 0.2, ent = 0.01;

        PolicyNet::Grad grad;
        grad.zero_like(net);
        actor_batch_grad(net, buffer, batch, clip, ent, grad);
        const Eigen::VectorXd analytic = grad.flatten();

        const ParamVector theta = net.params();
        Eigen::VectorXd fd(analytic.size());
        const double h = 1e-6;
        for (int i = 0; i < theta.values.size(); ++i) {
            ParamVector plus = theta, minus = theta;
            plus.values[i] += h;
            minus.values[i] -= h;
            PolicyNet np = net, nm = net;
            np.set_params(plus);
            nm.set_params(minus);
            fd[i] = (actor_batch_loss(np, buffer, batch, clip, ent) -
                     actor_batch_loss(nm, buffer, batch, clip, ent)) /
                    (2.0 * h);
        }
        const double rel = (analytic - fd).norm() / std::max(1e-12, fd.norm());
        worst = std::max(worst, rel);
        if (rel >= 1e-4) {
            std::ostringstream os;
            os << "relative error " << rel << " at trial " << trial;
            detail = os.str();
            return false;
        }
    }
    std::ostringstream os;
    os << "worst relative error " << worst << " over 100 instances";
    detail = os.str();
    return true;
}

// ---------------------------------------------------------------------------
// 4. Consensus behavior: measured contraction factor below one, terminal
// disagreement and gradient stationarity under the diminishing-step
// schedule for K_g in {1, 5}, and the pure-gossip sigma^(2s) envelope.

bool criterion_consensus(std::string& detail) {
    const auto graph = InterferenceGraph::path(7, 1);
    const auto mix = metropolis_weights(graph);
    const double sigma = contraction_factor(mix);
    EXPECT(sigma < 1.0);

    ConsensusConfig pure;
    pure.zero_gradients = true;
    pure.rounds = 300;
    pure.repeats = 3;
    pure.gossip_period = 1;
    pure.seed = 21;
    const auto pure_records = consensus_experiment(graph, pure);
    const double d0 = pure_records[0].disagreement;
    EXPECT(d0 > 0.0);
    for (const auto& r : pure_records) {
        const double envelope = 1.05 * d0 * std::pow(sigma, 2.0 * r.round);
        EXPECT(r.disagreement <= envelope + 1e-30);
    }

    std::ostringstream os;
    os << "sigma=" << sigma;
    for (int kg : {1, 5}) {
        ConsensusConfig cfg;  // eta_s = 0.5/(s+10), bounded noise, 5000 rounds
        cfg.rounds = 5000;
        cfg.gossip_period = kg;
        cfg.repeats = 5;
        cfg.seed = 22;
        const auto records = consensus_experiment(graph, cfg);
        const double initial = records.front().disagreement;
        const double terminal = records.back().disagreement;
        double min_grad = std::numeric_limits<double>::infinity();
        for (const auto& r : records) min_grad = std::min(min_grad, r.grad_norm_sq);
        EXPECT(initial > 0.0);
        EXPECT(terminal < 1e-3 * initial);
        EXPECT(min_grad < 1e-4);
        os << "; K_g=" << kg << ": terminal/initial=" << terminal / initial
           << ", min grad^2=" << min_grad;
    }
    detail = os.str();
    return true;
}

// ---------------------------------------------------------------------------
// 5. Advantage disagreement bound: pointwise on every sample of a 128-step
// rollout for 20 random linear critic sets, with L_V computed exactly.

bool criterion_advantage_bound(std::string& detail) {
    RngStream rng(derive_seed(23, "acc"));
    const int dim = 6, horizon = 128, agents = 7;
    Eigen::MatrixXd features(horizon + 1, dim);
    for (int t = 0; t <= horizon; ++t)
        for (int j = 0; j < dim; ++j) features(t, j) = 2.0 * rng.uniform() - 1.0;
    Eigen::VectorXd rewards =
        Eigen::VectorXd::NullaryExpr(horizon, [&]() { return rng.normal(); });
    double worst_excess = -std::numeric_limits<double>::infinity();
    long samples = 0;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Eigen::VectorXd> critics(agents);
        for (auto& c : critics)
            c = Eigen::VectorXd::NullaryExpr(dim, [&]() { return 3.0 * rng.normal(); });
        const auto rep = advantage_disagreement_check(critics, features, rewards, 0.99);
        samples += rep.samples;
        worst_excess = std::max(worst_excess, rep.max_excess);
        if (!rep.holds) {
            std::ostringstream os;
            os << "bound violated by " << rep.max_excess << " at trial " << trial;
            detail = os.str();
            return false;
        }
    }
    std::ostringstream os;
    os << "holds pointwise on " << samples << " samples; worst slack "
       << -worst_excess;
    detail = os.str();
    return true;
}

// ---------------------------------------------------------------------------
// 6. Oracle equivalence: the environment's reward pipeline (lambda_int = 0)
// reproduces the brute-force objective for every enumerated allocation on 50
// random tiny instances, and the heuristics never beat the optimum.

bool criterion_oracle(std::string& detail) {
    RngStream rng(derive_seed(24, "acc"));
    double worst_gap = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        TinyInstance inst = TinyInstance::random(rng);  // N=2, K=2, M=2, L=2
        const auto graph = InterferenceGraph::path(inst.n_bs, 1);
        VirtualQueues vq{inst.queues, inst.r_min};
        CrossLinkAverages xl;
        xl.g_bar = Tensor3<double>(inst.n_bs, inst.n_bs, inst.n_subcarriers, 0.4);
        xl.eta = Eigen::MatrixXd::Ones(inst.n_bs, inst.n_bs);
        xl.lambda_int = 0.0;

        const int cells = inst.n_bs * inst.n_subcarriers;
        const int options = 1 + inst.ues_per_cell * inst.levels.count();
        std::vector<int> odo(cells, 0);
        double best = -std::numeric_limits<double>::infinity();
        bool done = false;
        while (!done) {
            std::vector<SubcarrierDecision> d(cells);
            for (int i = 0; i < cells; ++i)
                d[i] = odo[i] == 0
                           ? SubcarrierDecision{0, 0, 0}
                           : SubcarrierDecision{1, (odo[i] - 1) / inst.levels.count(),
                                                (odo[i] - 1) % inst.levels.count()};
            const Allocation alloc = decode(d, inst.n_bs, inst.n_subcarriers,
                                            inst.ues_per_cell, inst.levels);
            const auto oracle = objective_value(inst, alloc);
            const auto sinr = compute_sinr(alloc, inst.gains, inst.noise);
            const auto rates = per_ue_rates(alloc, sinr, inst.delta_f);
            const auto breakdown = reward_breakdown(rates, alloc, vq, xl, graph);
            const double env_objective = breakdown.team - oracle.constant;
            const double gap = std::abs(env_objective - oracle.surrogate);
            worst_gap = std::max(worst_gap, gap);
            if (gap > 1e-9) {
                std::ostringstream os;
                os << "pipeline mismatch " << gap << " on instance " << trial;
                detail = os.str();
                return false;
            }
            best = std::max(best, oracle.surrogate);
            int pos = cells - 1;
            while (pos >= 0) {
                if (++odo[pos] < options) break;
                odo[pos] = 0;
                --pos;
            }
            done = pos < 0;
        }
        const Allocation g = greedy_policy(inst.gains, inst.levels, inst.n_bs,
                                           inst.n_subcarriers, inst.ues_per_cell);
        const Allocation q = qos_policy(inst.gains, inst.queues, inst.levels,
                                        inst.n_bs, inst.n_subcarriers,
                                        inst.ues_per_cell);
        EXPECT(objective_value(inst, g).surrogate <= best + 1e-9);
        EXPECT(objective_value(inst, q).surrogate <= best + 1e-9);
    }
    std::ostringstream os;
    os << "worst pipeline gap " << worst_gap << " over 50 x 625 allocations";
    detail = os.str();
    return true;
}

// ---------------------------------------------------------------------------
// 7. Virtual-queue behavior: exact drain bound under over-provisioning and
// exact linear growth under the all-mute policy.

bool criterion_queues(std::string& detail) {
    // single-cell environment with strong links: round-robin scheduling
    EnvConfig cfg;
    cfg.channel.n_bs = 1;
    cfg.channel.n_subcarriers = 4;
    cfg.channel.ues_per_cell = 2;
    cfg.channel.mu_pl = 0.0;
    cfg.channel.sigma_pl = 0.2;
    cfg.r_min = 2.0;
    cfg.warmup_slots = 10;
    RngStream rng(derive_seed(25, "acc"));

    auto round_robin = [&](int /*slot*/) {
        // UEs split the four subcarriers evenly at a mid power level
        std::vector<SubcarrierDecision> d(4);
        for (int k = 0; k < 4; ++k) d[k] = {1, k < 2 ? 0 : 1, 2};
        return decode(d, 1, 4, 2, cfg.levels);
    };

    // measure the worst-case per-UE rate of this policy, then set the
    // deficit so the margin delta is known exactly
    EnvState probe = init_env(cfg, rng);
    double min_rate = std::numeric_limits<double>::infinity();
    {
        EnvState s = probe;
        for (int t = 0; t < 50; ++t) {
            auto r = step(s, round_robin(t), cfg, rng);
            min_rate = std::min({min_rate, r.rates(0, 0), r.rates(0, 1)});
            s = std::move(r.next);
        }
    }
    EXPECT(min_rate > cfg.r_min);
    const double delta = min_rate - cfg.r_min;

    RngStream rng2(derive_seed(25, "acc"));
    EnvState state = init_env(cfg, rng2);
    const double q0 = 5.0;
    state.queues.q.setConstant(q0);
    const int bound = static_cast<int>(std::ceil(q0 / delta));
    int zero_at = -1;
    for (int t = 1; t <= bound + 5; ++t) {
        auto r = step(state, round_robin(t), cfg, rng2);
        state = std::move(r.next);
        if (zero_at < 0 && state.queues.q.maxCoeff() == 0.0) zero_at = t;
        if (t > bound) EXPECT(state.queues.q.maxCoeff() == 0.0);
    }
    EXPECT(zero_at >= 1 && zero_at <= bound);

    // all-mute: queues grow exactly linearly at slope r_min
    RngStream rng3(derive_seed(26, "acc"));
    EnvState mute_state = init_env(cfg, rng3);
    Allocation mute(1, 4, 2);
    for (int t = 1; t <= 20; ++t) {
        auto r = step(mute_state, mute, cfg, rng3);
        mute_state = std::move(r.next);
        for (int m = 0; m < 2; ++m)
            EXPECT(mute_state.queues.q(0, m) == t * cfg.r_min);
    }
    std::ostringstream os;
    os << "drained in " << zero_at << " slots (bound " << bound
       << "); linear growth exact";
    detail = os.str();
    return true;
}

// ---------------------------------------------------------------------------
// 8. Trend reproduction at reduced scale: FedCritic vs B1-CTDE over three
// training seeds. Passes a sub-criterion when the seed-aggregate margin
// exceeds the wider confidence interval, or when the ordering holds on at
// least two of the three seeds.

// Reduced configuration: the pinned N=3, K=8, M=2, L=3 dimensions with the
// remaining knobs scaled from the full setup. Cross-link scale 2.8
// compensates two interferers standing in for six, frequency-selective
// shadowing restores per-subcarrier structure, r_min is scaled to the
// reduced capacity, and the rollout horizon 512 gives the 50 pinned updates
// roughly the full setup's total environment interaction.
ExperimentConfig reduced_trend_config(MethodKind m, std::uint64_t seed,
                                      const std::string& out) {
    ExperimentConfig cfg;
    cfg.seed = seed;
    cfg.method = m;
    cfg.env.channel.n_bs = 3;
    cfg.env.channel.n_subcarriers = 8;
    cfg.env.channel.ues_per_cell = 2;
    cfg.env.channel.crosslink_scale = 2.8;
    cfg.env.channel.freq_selective_shadowing = true;
    cfg.env.levels.levels = {0.05, 0.35, 1.0};
    cfg.env.r_min = 0.1;
    cfg.env.lambda_int = 0.5;
    cfg.ppo.actor_lr = 2e-3;
    cfg.ppo.critic_lr = 5e-3;
    cfg.ppo.minibatch = 256;
    cfg.ppo.horizon = 512;
    cfg.ppo.entropy_end = 0.002;
    cfg.hidden = 64;
    cfg.n_updates = 50;
    cfg.gossip_period = 1;
    cfg.eval_every = 10;
    cfg.eval_seeds = 3;
    cfg.eval_episodes = 4;
    cfg.eval_steps = 24;
    cfg.out_dir = out;
    return cfg;
}

bool criterion_trend(std::string& detail) {
    const fs::path base = fs::temp_directory_path() / "fedcritic_acc_trend";
    fs::remove_all(base);
    const std::vector<std::uint64_t> seeds{1, 2, 3};
    std::vector<MetricRecord> fc(seeds.size()), b1(seeds.size());
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        for (MethodKind m : {MethodKind::FedCritic, MethodKind::CTDE}) {
            auto cfg = reduced_trend_config(
                m, seeds[i],
                (base / (to_string(m) + "_s" + std::to_string(seeds[i]))).string());
            const auto run_start = std::chrono::steady_clock::now();
            Trainer trainer(cfg);
            const RunSummary summary = trainer.run();
            const double run_minutes =
                std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              run_start)
                    .count() /
                60.0;
            if (run_minutes > 10.0) {
                detail = "single reduced-scale run exceeded the 10-minute budget";
                return false;
            }
            (m == MethodKind::FedCritic ? fc[i] : b1[i]) = summary.final_eval;
        }
    }
    const double total_minutes =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count() /
        60.0;

    int rate_wins = 0, coll_wins = 0, sinr_wins = 0;
    double fc_rate = 0.0, b1_rate = 0.0, fc_ci = 0.0, b1_ci = 0.0;
    std::printf("     per-seed ordering report (FedCritic vs B1-CTDE):\n");
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        const bool a = fc[i].sum_rate >= b1[i].sum_rate;
        const bool b = fc[i].collision_rate < 0.8 * b1[i].collision_rate;
        const bool c = fc[i].mean_sinr > b1[i].mean_sinr;
        rate_wins += a;
        coll_wins += b;
        sinr_wins += c;
        fc_rate += fc[i].sum_rate / seeds.size();
        b1_rate += b1[i].sum_rate / seeds.size();
        fc_ci = std::max(fc_ci, fc[i].sum_rate_ci);
        b1_ci = std::max(b1_ci, b1[i].sum_rate_ci);
        std::printf(
            "       seed %llu: rate %.2f vs %.2f [%s]; collision %.3f vs %.3f "
            "[%s]; sinr %.2f vs %.2f [%s]\n",
            static_cast<unsigned long long>(seeds[i]), fc[i].sum_rate,
            b1[i].sum_rate, a ? "ok" : "x", fc[i].collision_rate,
            b1[i].collision_rate, b ? "ok" : "x", fc[i].mean_sinr, b1[i].mean_sinr,
            c ? "ok" : "x");
    }
    const bool margin_pass = fc_rate - b1_rate > std::max(fc_ci, b1_ci);
    const bool pass_a = margin_pass || rate_wins >= 2;
    const bool pass_b = coll_wins >= 2;
    const bool pass_c = sinr_wins >= 2;
    std::ostringstream os;
    os << "(a) sum-rate " << (pass_a ? "ok" : "FAIL") << " (" << rate_wins
       << "/3 seeds, aggregate " << fc_rate << " vs " << b1_rate << "); (b) collision "
       << (pass_b ? "ok" : "FAIL") << " (" << coll_wins << "/3); (c) sinr "
       << (pass_c ? "ok" : "FAIL") << " (" << sinr_wins << "/3); runtime "
       << total_minutes << " min";
    detail = os.str();
    return pass_a && pass_b && pass_c && total_minutes < 30.0;
}

// ---------------------------------------------------------------------------
// 9. Determinism: identical config and seed produce byte-identical exports.

bool criterion_determinism(std::string& detail) {
    const fs::path base = fs::temp_directory_path() / "fedcritic_acc_determinism";
    fs::remove_all(base);
    ExperimentConfig cfg;
    cfg.seed = 33;
    cfg.method = MethodKind::FedCritic;
    cfg.env.channel.n_bs = 2;
    cfg.env.channel.n_subcarriers = 2;
    cfg.env.channel.ues_per_cell = 2;
    cfg.env.warmup_slots = 5;
    cfg.env.levels.levels = {0.3, 1.0};
    cfg.ppo.horizon = 8;
    cfg.ppo.epochs = 2;
    cfg.ppo.minibatch = 8;
    cfg.hidden = 12;
    cfg.n_updates = 2;
    cfg.eval_every = 2;
    cfg.eval_seeds = 2;
    cfg.eval_episodes = 1;
    cfg.eval_steps = 4;
    cfg.out_dir = (base / "run").string();

    auto read_file = [](const fs::path& p) {
        std::ifstream is(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(is), {});
    };
    const std::vector<std::string> names = {
        "metrics_eval_argmax.tsv", "metrics_eval_stochastic.tsv",
        "metrics_train.tsv",       "cdf_sinr_db.tsv",
        "cdf_active_link_rate.tsv", "heatmap_activity.tsv",
        "summary.json",            "config.json",
        "checkpoints/bs0_actor.ckpt", "checkpoints/bs1_critic.ckpt"};
    Trainer(cfg).run();
    std::vector<std::string> first;
    for (const auto& n : names) first.push_back(read_file(base / "run" / n));
    fs::remove_all(base);
    Trainer(cfg).run();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (read_file(base / "run" / names[i]) != first[i]) {
            detail = "byte mismatch in " + names[i];
            return false;
        }
        if (first[i].empty()) {
            detail = "missing export " + names[i];
            return false;
        }
    }
    detail = "two runs, " + std::to_string(names.size()) +
             " files byte-identical";
    return true;
}

// ---------------------------------------------------------------------------
// 10. Mixing-matrix properties on the seven-node path graph.

bool criterion_mixing(std::string& detail) {
    const auto graph = InterferenceGraph::path(7, 1);
    const auto mix = metropolis_weights(graph);
    for (int i = 0; i < 7; ++i) {
        EXPECT(std::abs(mix.w.row(i).sum() - 1.0) < 1e-12);
        EXPECT(std::abs(mix.w.col(i).sum() - 1.0) < 1e-12);
        for (int j = 0; j < 7; ++j) {
            if (i != j && !graph.has_edge(i, j)) EXPECT(mix.w(i, j) == 0.0);
            EXPECT(mix.w(i, j) >= 0.0);
        }
    }
    const double sigma = contraction_factor(mix);
    EXPECT(sigma < 1.0);

    RngStream rng(derive_seed(40, "acc"));
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<ParamVector> params(7);
        for (auto& p : params) {
            p.values = Eigen::VectorXd::NullaryExpr(33, [&]() { return rng.normal(); });
            p.layout = "acc";
        }
        Eigen::VectorXd mean_before = Eigen::VectorXd::Zero(33);
        for (const auto& p : params) mean_before += p.values / 7.0;
        const auto mixed = gossip_mix(params, mix);
        Eigen::VectorXd mean_after = Eigen::VectorXd::Zero(33);
        for (const auto& p : mixed) mean_after += p.values / 7.0;
        const double rel =
            (mean_after - mean_before).norm() / std::max(1.0, mean_before.norm());
        worst = std::max(worst, rel);
        EXPECT(rel <= 1e-10);
    }
    std::ostringstream os;
    os << "sigma=" << sigma << "; worst mean drift " << worst;
    detail = os.str();
    return true;
}

}  // namespace

int main() {
    std::vector<Criterion> criteria = {
        {1, "equation unit suite", criterion_equations},
        {2, "feasibility property suite", criterion_feasibility},
        {3, "gradient correctness vs finite differences", criterion_gradients},
        {4, "consensus verification (contraction, stationarity)", criterion_consensus},
        {5, "advantage disagreement bound", criterion_advantage_bound},
        {6, "oracle equivalence and dominance", criterion_oracle},
        {7, "virtual-queue drain and growth", criterion_queues},
        {8, "trend reproduction at reduced scale", criterion_trend},
        {9, "determinism of exports", criterion_determinism},
        {10, "mixing-matrix properties", criterion_mixing},
    };

    int failures = 0;
    for (auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                .count();
        std::printf("[%2d] %s  %s (%.1fs): %s\n", c.number, ok ? "PASS" : "FAIL",
                    c.name.c_str(), secs, detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
                criteria.size());
    return failures;
}
