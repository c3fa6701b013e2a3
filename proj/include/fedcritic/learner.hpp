// SPDX-License-Identifier: Apache-2.0

#ifndef FEDCRITIC_LEARNER_HPP
#define FEDCRITIC_LEARNER_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "fedcritic/action_space.hpp"
#include "fedcritic/env.hpp"
#include "fedcritic/nn.hpp"
#include "fedcritic/rng.hpp"

namespace fedcritic {

struct PPOConfig {
    double discount = 0.99;
    double gae_lambda = 0.95;
    double clip_eps = 0.2;
    int epochs = 6;
    int minibatch = 256;
    double max_grad_norm = 0.5;
    double entropy_start = 0.010;
    double entropy_end = 0.001;
    double actor_lr = 3e-4;
    double critic_lr = 1e-3;
    int horizon = 128;

    void validate() const {
        if (!(discount > 0.0 && discount <= 1.0))
            throw std::invalid_argument("discount must be in (0,1]");
        if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0))
            throw std::invalid_argument("gae_lambda must be in [0,1]");
        if (!(clip_eps > 0.0)) throw std::invalid_argument("clip_eps must be > 0");
        if (epochs < 1 || minibatch < 1 || horizon < 1)
            throw std::invalid_argument("epochs, minibatch and horizon must be >= 1");
    }

    /// Linearly decayed entropy coefficient for update u of n_updates.
    double entropy_coef(long update, long n_updates) const {
        if (n_updates <= 1) return entropy_start;
        const double frac =
            static_cast<double>(update) / static_cast<double>(n_updates - 1);
        return entropy_start + (entropy_end - entropy_start) * std::clamp(frac, 0.0, 1.0);
    }
};

/// One BS's combined per-subcarrier decisions for a slot.
struct BSAction {
    std::vector<int> active;  // u_k
    std::vector<int> ue;      // m_k, meaningful when active
    std::vector<int> level;   // l_k, meaningful when active
};

inline std::vector<SubcarrierDecision> to_decisions(const BSAction& a) {
    std::vector<SubcarrierDecision> d(a.active.size());
    for (std::size_t k = 0; k < a.active.size(); ++k)
        d[k] = {a.active[k], a.ue[k], a.level[k]};
    return d;
}

// ---------------------------------------------------------------------------
// Policy network
//
// Trunk: two tanh layers over the full observation. Per-subcarrier heads
// (mute, UE, power level) share weights across subcarriers; subcarrier k is
// distinguished by appending its observation slice to the trunk output.

class PolicyNet {
public:
    PolicyNet() = default;
    PolicyNet(const ObsLayout& layout, int n_levels, int hidden = 128)
        : layout_(layout), n_levels_(n_levels), hidden_(hidden),
          masks_(validity_mask(layout.ues_per_cell, n_levels)) {
        const int d = layout_.dim(), h = hidden_, f = head_input_dim();
        w1_ = Eigen::MatrixXd::Zero(h, d);
        b1_ = Eigen::VectorXd::Zero(h);
        w2_ = Eigen::MatrixXd::Zero(h, h);
        b2_ = Eigen::VectorXd::Zero(h);
        wu_ = Eigen::MatrixXd::Zero(2, f);
        bu_ = Eigen::VectorXd::Zero(2);
        wm_ = Eigen::MatrixXd::Zero(layout_.ues_per_cell, f);
        bm_ = Eigen::VectorXd::Zero(layout_.ues_per_cell);
        wl_ = Eigen::MatrixXd::Zero(n_levels_, f);
        bl_ = Eigen::VectorXd::Zero(n_levels_);
    }

    void init_weights(RngStream& rng) {
        xavier_init(w1_, rng);
        xavier_init(w2_, rng);
        // small head logits keep the initial policy near uniform
        xavier_init(wu_, rng, 0.01);
        xavier_init(wm_, rng, 0.01);
        xavier_init(wl_, rng, 0.01);
    }

    int n_subcarriers() const { return layout_.n_subcarriers; }
    int ues_per_cell() const { return layout_.ues_per_cell; }
    int n_levels() const { return n_levels_; }
    int head_input_dim() const { return hidden_ + layout_.slice_dim(); }

    int param_count() const {
        return static_cast<int>(w1_.size() + b1_.size() + w2_.size() + b2_.size() +
                                wu_.size() + bu_.size() + wm_.size() + bm_.size() +
                                wl_.size() + bl_.size());
    }

    std::string layout_descriptor() const {
        std::ostringstream os;
        os << "policy:obs=" << layout_.dim() << ",K=" << layout_.n_subcarriers
           << ",M=" << layout_.ues_per_cell << ",L=" << n_levels_
           << ",H=" << hidden_ << ",params=" << param_count();
        return os.str();
    }

    ParamVector params() const {
        ParamVector p;
        p.values.resize(param_count());
        int at = 0;
        append_flat(p.values, at, w1_);
        append_flat(p.values, at, b1_);
        append_flat(p.values, at, w2_);
        append_flat(p.values, at, b2_);
        append_flat(p.values, at, wu_);
        append_flat(p.values, at, bu_);
        append_flat(p.values, at, wm_);
        append_flat(p.values, at, bm_);
        append_flat(p.values, at, wl_);
        append_flat(p.values, at, bl_);
        p.layout = layout_descriptor();
        return p;
    }

    void set_params(const ParamVector& p) {
        if (p.layout != layout_descriptor())
            throw std::invalid_argument("parameter layout mismatch: " + p.layout +
                                        " vs " + layout_descriptor());
        int at = 0;
        read_flat(p.values, at, w1_);
        read_flat(p.values, at, b1_);
        read_flat(p.values, at, w2_);
        read_flat(p.values, at, b2_);
        read_flat(p.values, at, wu_);
        read_flat(p.values, at, bu_);
        read_flat(p.values, at, wm_);
        read_flat(p.values, at, bm_);
        read_flat(p.values, at, wl_);
        read_flat(p.values, at, bl_);
    }

    struct Forward {
        Eigen::VectorXd obs, h1, h2;
        std::vector<Eigen::VectorXd> pu, pm, pl;  // per-subcarrier head probs
    };

    Forward forward(const Eigen::VectorXd& obs) const {
        if (!obs.allFinite())
            throw std::invalid_argument("observation contains non-finite entries");
        if (obs.size() != layout_.dim())
            throw std::invalid_argument("observation length mismatch");
        Forward f;
        f.obs = obs;
        f.h1 = (w1_ * obs + b1_).array().tanh();
        f.h2 = (w2_ * f.h1 + b2_).array().tanh();
        const int K = layout_.n_subcarriers;
        f.pu.resize(K);
        f.pm.resize(K);
        f.pl.resize(K);
        std::vector<int> slice;
        Eigen::VectorXd head_in(head_input_dim());
        for (int k = 0; k < K; ++k) {
            layout_.slice_indices(k, slice);
            head_in.head(hidden_) = f.h2;
            for (std::size_t i = 0; i < slice.size(); ++i)
                head_in[hidden_ + static_cast<int>(i)] = obs[slice[i]];
            f.pu[k] = softmax(wu_ * head_in + bu_);
            f.pm[k] = masked_softmax(wm_ * head_in + bm_, masks_.ue_when_active);
            f.pl[k] = masked_softmax(wl_ * head_in + bl_, masks_.level_when_active);
        }
        return f;
    }

    /// Joint log-probability contribution of subcarrier k: the mute head
    /// always contributes; UE and level heads only when active.
    static double logp_k(const Forward& f, int k, int u, int m, int l) {
        double lp = std::log(f.pu[k][u]);
        if (u == 1) lp += std::log(f.pm[k][m]) + std::log(f.pl[k][l]);
        return lp;
    }

    /// Entropy of subcarrier k's factorized heads; the conditioned UE/level
    /// heads are weighted by the activation probability.
    static double entropy_k(const Forward& f, int k) {
        return categorical_entropy(f.pu[k]) +
               f.pu[k][1] * (categorical_entropy(f.pm[k]) + categorical_entropy(f.pl[k]));
    }

    double action_logp(const Forward& f, const BSAction& a) const {
        double lp = 0.0;
        for (int k = 0; k < layout_.n_subcarriers; ++k)
            lp += logp_k(f, k, a.active[k], a.ue[k], a.level[k]);
        return lp;
    }

    struct Grad {
        Eigen::MatrixXd w1, w2, wu, wm, wl;
        Eigen::VectorXd b1, b2, bu, bm, bl;

        void zero_like(const PolicyNet& net) {
            w1 = Eigen::MatrixXd::Zero(net.w1_.rows(), net.w1_.cols());
            b1 = Eigen::VectorXd::Zero(net.b1_.size());
            w2 = Eigen::MatrixXd::Zero(net.w2_.rows(), net.w2_.cols());
            b2 = Eigen::VectorXd::Zero(net.b2_.size());
            wu = Eigen::MatrixXd::Zero(net.wu_.rows(), net.wu_.cols());
            bu = Eigen::VectorXd::Zero(net.bu_.size());
            wm = Eigen::MatrixXd::Zero(net.wm_.rows(), net.wm_.cols());
            bm = Eigen::VectorXd::Zero(net.bm_.size());
            wl = Eigen::MatrixXd::Zero(net.wl_.rows(), net.wl_.cols());
            bl = Eigen::VectorXd::Zero(net.bl_.size());
        }

        Eigen::VectorXd flatten() const {
            Eigen::VectorXd out(w1.size() + b1.size() + w2.size() + b2.size() +
                                wu.size() + bu.size() + wm.size() + bm.size() +
                                wl.size() + bl.size());
            int at = 0;
            append_flat(out, at, w1);
            append_flat(out, at, b1);
            append_flat(out, at, w2);
            append_flat(out, at, b2);
            append_flat(out, at, wu);
            append_flat(out, at, bu);
            append_flat(out, at, wm);
            append_flat(out, at, bm);
            append_flat(out, at, wl);
            append_flat(out, at, bl);
            return out;
        }
    };

    /// Reverse pass for one observation. `ks` lists the subcarriers with
    /// nonzero head-logit gradients (dzu/dzm/dzl, parallel to ks); trunk
    /// gradients accumulate over all of them.
    void backward(const Forward& f, const std::vector<int>& ks,
                  const std::vector<Eigen::VectorXd>& dzu,
                  const std::vector<Eigen::VectorXd>& dzm,
                  const std::vector<Eigen::VectorXd>& dzl, Grad& g) const {
        Eigen::VectorXd dh2 = Eigen::VectorXd::Zero(hidden_);
        std::vector<int> slice;
        Eigen::VectorXd head_in(head_input_dim());
        for (std::size_t i = 0; i < ks.size(); ++i) {
            const int k = ks[i];
            layout_.slice_indices(k, slice);
            head_in.head(hidden_) = f.h2;
            for (std::size_t s = 0; s < slice.size(); ++s)
                head_in[hidden_ + static_cast<int>(s)] = f.obs[slice[s]];
            g.wu.noalias() += dzu[i] * head_in.transpose();
            g.bu += dzu[i];
            g.wm.noalias() += dzm[i] * head_in.transpose();
            g.bm += dzm[i];
            g.wl.noalias() += dzl[i] * head_in.transpose();
            g.bl += dzl[i];
            dh2.noalias() += wu_.leftCols(hidden_).transpose() * dzu[i];
            dh2.noalias() += wm_.leftCols(hidden_).transpose() * dzm[i];
            dh2.noalias() += wl_.leftCols(hidden_).transpose() * dzl[i];
        }
        const Eigen::VectorXd da2 =
            dh2.cwiseProduct((1.0 - f.h2.array().square()).matrix());
        g.w2.noalias() += da2 * f.h1.transpose();
        g.b2 += da2;
        const Eigen::VectorXd dh1 = w2_.transpose() * da2;
        const Eigen::VectorXd da1 =
            dh1.cwiseProduct((1.0 - f.h1.array().square()).matrix());
        g.w1.noalias() += da1 * f.obs.transpose();
        g.b1 += da1;
    }

    const ActionMasks& masks() const { return masks_; }
    const ObsLayout& obs_layout() const { return layout_; }

private:
    ObsLayout layout_;
    int n_levels_ = 0;
    int hidden_ = 0;
    ActionMasks masks_;
    Eigen::MatrixXd w1_, w2_, wu_, wm_, wl_;
    Eigen::VectorXd b1_, b2_, bu_, bm_, bl_;
};

/// Samples one full BS action; per-head draws follow the factorization and
/// the returned entropy weights the conditioned heads by P(u=1).
struct SampledAction {
    BSAction action;
    Eigen::VectorXd logp_k;  // per-subcarrier log-prob contributions
    double entropy = 0.0;
};

inline SampledAction sample_action(const PolicyNet& net, const Eigen::VectorXd& obs,
                                   RngStream& rng) {
    const auto f = net.forward(obs);
    const int K = net.n_subcarriers();
    SampledAction out;
    out.action.active.resize(K);
    out.action.ue.resize(K);
    out.action.level.resize(K);
    out.logp_k.resize(K);
    for (int k = 0; k < K; ++k) {
        const int u = sample_categorical(f.pu[k], rng);
        const int m = u == 1 ? sample_categorical(f.pm[k], rng) : 0;
        const int l = u == 1 ? sample_categorical(f.pl[k], rng) : 0;
        out.action.active[k] = u;
        out.action.ue[k] = m;
        out.action.level[k] = l;
        out.logp_k[k] = PolicyNet::logp_k(f, k, u, m, l);
        out.entropy += PolicyNet::entropy_k(f, k);
    }
    return out;
}

/// Deterministic evaluation mode: argmax on every head.
inline BSAction greedy_action(const PolicyNet& net, const Eigen::VectorXd& obs) {
    const auto f = net.forward(obs);
    const int K = net.n_subcarriers();
    BSAction a;
    a.active.resize(K);
    a.ue.resize(K);
    a.level.resize(K);
    for (int k = 0; k < K; ++k) {
        a.active[k] = argmax(f.pu[k]);
        a.ue[k] = argmax(f.pm[k]);
        a.level[k] = argmax(f.pl[k]);
    }
    return a;
}

// ---------------------------------------------------------------------------
// Critic network: plain two-layer tanh MLP with a scalar value head.

class CriticNet {
public:
    CriticNet() = default;
    explicit CriticNet(int input_dim, int hidden = 128)
        : input_dim_(input_dim), hidden_(hidden) {
        w1_ = Eigen::MatrixXd::Zero(hidden, input_dim);
        b1_ = Eigen::VectorXd::Zero(hidden);
        w2_ = Eigen::MatrixXd::Zero(hidden, hidden);
        b2_ = Eigen::VectorXd::Zero(hidden);
        wv_ = Eigen::VectorXd::Zero(hidden);
        bv_ = 0.0;
    }

    void init_weights(RngStream& rng) {
        xavier_init(w1_, rng);
        xavier_init(w2_, rng);
        Eigen::MatrixXd wv(1, hidden_);
        xavier_init(wv, rng);
        wv_ = wv.row(0).transpose();
    }

    int input_dim() const { return input_dim_; }

    int param_count() const {
        return static_cast<int>(w1_.size() + b1_.size() + w2_.size() + b2_.size() +
                                wv_.size() + 1);
    }

    std::string layout_descriptor() const {
        std::ostringstream os;
        os << "critic:obs=" << input_dim_ << ",H=" << hidden_
           << ",params=" << param_count();
        return os.str();
    }

    ParamVector params() const {
        ParamVector p;
        p.values.resize(param_count());
        int at = 0;
        append_flat(p.values, at, w1_);
        append_flat(p.values, at, b1_);
        append_flat(p.values, at, w2_);
        append_flat(p.values, at, b2_);
        append_flat(p.values, at, wv_);
        p.values[at] = bv_;
        p.layout = layout_descriptor();
        return p;
    }

    void set_params(const ParamVector& p) {
        if (p.layout != layout_descriptor())
            throw std::invalid_argument("parameter layout mismatch: " + p.layout +
                                        " vs " + layout_descriptor());
        int at = 0;
        read_flat(p.values, at, w1_);
        read_flat(p.values, at, b1_);
        read_flat(p.values, at, w2_);
        read_flat(p.values, at, b2_);
        read_flat(p.values, at, wv_);
        bv_ = p.values[at];
    }

    struct Forward {
        Eigen::VectorXd obs, h1, h2;
        double value = 0.0;
    };

    Forward forward(const Eigen::VectorXd& obs) const {
        if (!obs.allFinite())
            throw std::invalid_argument("observation contains non-finite entries");
        if (obs.size() != input_dim_)
            throw std::invalid_argument("observation length mismatch");
        Forward f;
        f.obs = obs;
        f.h1 = (w1_ * obs + b1_).array().tanh();
        f.h2 = (w2_ * f.h1 + b2_).array().tanh();
        f.value = wv_.dot(f.h2) + bv_;
        return f;
    }

    double value(const Eigen::VectorXd& obs) const { return forward(obs).value; }

    struct Grad {
        Eigen::MatrixXd w1, w2;
        Eigen::VectorXd b1, b2, wv;
        double bv = 0.0;

        void zero_like(const CriticNet& net) {
            w1 = Eigen::MatrixXd::Zero(net.w1_.rows(), net.w1_.cols());
            b1 = Eigen::VectorXd::Zero(net.b1_.size());
            w2 = Eigen::MatrixXd::Zero(net.w2_.rows(), net.w2_.cols());
            b2 = Eigen::VectorXd::Zero(net.b2_.size());
            wv = Eigen::VectorXd::Zero(net.wv_.size());
            bv = 0.0;
        }

        Eigen::VectorXd flatten() const {
            Eigen::VectorXd out(w1.size() + b1.size() + w2.size() + b2.size() +
                                wv.size() + 1);
            int at = 0;
            append_flat(out, at, w1);
            append_flat(out, at, b1);
            append_flat(out, at, w2);
            append_flat(out, at, b2);
            append_flat(out, at, wv);
            out[at] = bv;
            return out;
        }
    };

    void backward(const Forward& f, double dvalue, Grad& g) const {
        g.wv += dvalue * f.h2;
        g.bv += dvalue;
        Eigen::VectorXd dh2 = dvalue * wv_;
        const Eigen::VectorXd da2 =
            dh2.cwiseProduct((1.0 - f.h2.array().square()).matrix());
        g.w2.noalias() += da2 * f.h1.transpose();
        g.b2 += da2;
        const Eigen::VectorXd dh1 = w2_.transpose() * da2;
        const Eigen::VectorXd da1 =
            dh1.cwiseProduct((1.0 - f.h1.array().square()).matrix());
        g.w1.noalias() += da1 * f.obs.transpose();
        g.b1 += da1;
    }

private:
    int input_dim_ = 0, hidden_ = 0;
    Eigen::MatrixXd w1_, w2_;
    Eigen::VectorXd b1_, b2_, wv_;
    double bv_ = 0.0;
};

// ---------------------------------------------------------------------------
// Rollout storage and GAE

struct SlotSample {
    Eigen::VectorXd obs;
    BSAction action;
    Eigen::VectorXd logp_k;  // behavior log-probs per subcarrier
    double value = 0.0;      // V(o_t) at collection time
    double reward = 0.0;     // scaled team reward
};

struct GaeResult {
    Eigen::VectorXd advantages;
    Eigen::VectorXd returns;
};

/// Generalized advantage estimation over a truncated rollout. Backward
/// recursion A_t = delta_t + discount*lambda*A_{t+1} with
/// delta_t = r_t + discount*V_{t+1} - V_t and a bootstrap value at the end.
inline GaeResult gae_advantages(const Eigen::VectorXd& rewards,
                                const Eigen::VectorXd& values, double bootstrap,
                                double discount, double lambda) {
    const int h = static_cast<int>(rewards.size());
    GaeResult out;
    out.advantages.resize(h);
    out.returns.resize(h);
    double running = 0.0;
    for (int t = h - 1; t >= 0; --t) {
        const double next_v = (t == h - 1) ? bootstrap : values[t + 1];
        const double delta = rewards[t] + discount * next_v - values[t];
        running = delta + discount * lambda * running;
        out.advantages[t] = running;
        out.returns[t] = running + values[t];
    }
    return out;
}

class RolloutBuffer {
public:
    explicit RolloutBuffer(int horizon) : horizon_(horizon) {}

    void add(SlotSample s) {
        if (full()) throw std::logic_error("rollout buffer already full");
        slots_.push_back(std::move(s));
    }

    bool full() const { return static_cast<int>(slots_.size()) == horizon_; }
    int size() const { return static_cast<int>(slots_.size()); }
    int horizon() const { return horizon_; }
    const SlotSample& slot(int t) const { return slots_[t]; }

    /// Computes advantages/returns and the per-update standardized
    /// advantages (zero mean, unit variance).
    void finish(double bootstrap_value, double discount, double lambda) {
        if (!full()) throw std::logic_error("rollout buffer not full");
        Eigen::VectorXd rewards(horizon_), values(horizon_);
        for (int t = 0; t < horizon_; ++t) {
            rewards[t] = slots_[t].reward;
            values[t] = slots_[t].value;
        }
        auto g = gae_advantages(rewards, values, bootstrap_value, discount, lambda);
        advantages_ = g.advantages;
        returns_ = g.returns;
        const double mean = advantages_.mean();
        const double var =
            (advantages_.array() - mean).square().sum() / advantages_.size();
        advantages_std_ = (advantages_.array() - mean) / (std::sqrt(var) + 1e-8);
        finished_ = true;
    }

    bool finished() const { return finished_; }
    const Eigen::VectorXd& advantages() const { return advantages_; }
    const Eigen::VectorXd& standardized_advantages() const { return advantages_std_; }
    const Eigen::VectorXd& returns() const { return returns_; }

    void clear() {
        slots_.clear();
        finished_ = false;
    }

private:
    int horizon_;
    std::vector<SlotSample> slots_;
    Eigen::VectorXd advantages_, advantages_std_, returns_;
    bool finished_ = false;
};

// ---------------------------------------------------------------------------
// PPO update
//
// A sample is one (slot, subcarrier) pair: its log-prob is that subcarrier's
// factor of the joint action probability and its advantage is the slot's GAE
// advantage. Each BS therefore contributes horizon * K samples per update.

struct SampleRef {
    int t;  // slot
    int k;  // subcarrier
};

/// Per-sample contribution to actor head-logit gradients and the loss.
/// Encapsulated so the loss and gradient paths cannot diverge.
namespace detail {

struct ActorSampleEval {
    double loss = 0.0;
    double ratio = 1.0;
    double entropy = 0.0;
    bool clipped = false;
};

inline ActorSampleEval actor_sample_eval(const PolicyNet::Forward& f, int k,
                                         const BSAction& action, double logp_old,
                                         double adv, double clip_eps,
                                         double entropy_coef,
                                         Eigen::VectorXd* dzu, Eigen::VectorXd* dzm,
                                         Eigen::VectorXd* dzl, double weight) {
    const int u = action.active[k], m = action.ue[k], l = action.level[k];
    const double logp_new = PolicyNet::logp_k(f, k, u, m, l);
    const double ratio = std::exp(logp_new - logp_old);
    const double lo = 1.0 - clip_eps, hi = 1.0 + clip_eps;
    const double unclipped = ratio * adv;
    const double clipped = std::clamp(ratio, lo, hi) * adv;
    const double surrogate = std::min(unclipped, clipped);
    // d(surrogate)/d(logp): the clipped branch has zero derivative
    double dsurr_dlogp = 0.0;
    if (adv >= 0.0 ? (ratio <= hi) : (ratio >= lo)) dsurr_dlogp = adv * ratio;

    const double h_u = categorical_entropy(f.pu[k]);
    const double h_m = categorical_entropy(f.pm[k]);
    const double h_l = categorical_entropy(f.pl[k]);
    const double pu1 = f.pu[k][1];
    const double entropy = h_u + pu1 * (h_m + h_l);

    ActorSampleEval ev;
    ev.loss = -surrogate - entropy_coef * entropy;
    ev.ratio = ratio;
    ev.entropy = entropy;
    ev.clipped = surrogate == clipped && clipped != unclipped;

    if (dzu != nullptr) {
        // surrogate part: dloss/dz = -dsurr_dlogp * dlogp/dz
        const double cs = -dsurr_dlogp * weight;
        Eigen::VectorXd du = -f.pu[k];
        du[u] += 1.0;
        *dzu += cs * du;
        if (u == 1) {
            Eigen::VectorXd dm = -f.pm[k];
            dm[m] += 1.0;
            *dzm += cs * dm;
            Eigen::VectorXd dl = -f.pl[k];
            dl[l] += 1.0;
            *dzl += cs * dl;
        }
        // entropy bonus: dloss/dz = -entropy_coef * dH/dz
        const double ce = -entropy_coef * weight;
        for (int i = 0; i < f.pu[k].size(); ++i) {
            const double pi = f.pu[k][i];
            double dH = pi > 0.0 ? -pi * (std::log(pi) + h_u) : 0.0;
            dH += (h_m + h_l) * pu1 * ((i == 1 ? 1.0 : 0.0) - pi);
            (*dzu)[i] += ce * dH;
        }
        for (int i = 0; i < f.pm[k].size(); ++i) {
            const double pi = f.pm[k][i];
            if (pi > 0.0) (*dzm)[i] += ce * (pu1 * (-pi * (std::log(pi) + h_m)));
        }
        for (int i = 0; i < f.pl[k].size(); ++i) {
            const double pi = f.pl[k][i];
            if (pi > 0.0) (*dzl)[i] += ce * (pu1 * (-pi * (std::log(pi) + h_l)));
        }
    }
    return ev;
}

}  // namespace detail

/// Mean clipped-surrogate loss (with entropy bonus) of a minibatch.
inline double actor_batch_loss(const PolicyNet& actor, const RolloutBuffer& buffer,
                               const std::vector<SampleRef>& batch, double clip_eps,
                               double entropy_coef) {
    double loss = 0.0;
    int last_t = -1;
    PolicyNet::Forward f;
    for (const auto& s : batch) {
        if (s.t != last_t) {
            f = actor.forward(buffer.slot(s.t).obs);
            last_t = s.t;
        }
        const auto& slot = buffer.slot(s.t);
        loss += detail::actor_sample_eval(f, s.k, slot.action, slot.logp_k[s.k],
                                          buffer.standardized_advantages()[s.t],
                                          clip_eps, entropy_coef, nullptr, nullptr,
                                          nullptr, 0.0)
                    .loss;
    }
    return loss / static_cast<double>(batch.size());
}

struct ActorBatchStats {
    double loss = 0.0;
    double entropy = 0.0;
    double approx_kl = 0.0;
    double clip_fraction = 0.0;
};

/// Gradient of the minibatch actor loss. The batch must be sorted by slot so
/// each observation is forwarded once.
inline ActorBatchStats actor_batch_grad(const PolicyNet& actor,
                                        const RolloutBuffer& buffer,
                                        const std::vector<SampleRef>& batch,
                                        double clip_eps, double entropy_coef,
                                        PolicyNet::Grad& grad) {
    ActorBatchStats stats;
    const double w = 1.0 / static_cast<double>(batch.size());
    const int m_len = actor.ues_per_cell(), l_len = actor.n_levels();

    std::size_t i = 0;
    PolicyNet::Forward f;
    std::vector<int> ks;
    std::vector<Eigen::VectorXd> dzu, dzm, dzl;
    while (i < batch.size()) {
        const int t = batch[i].t;
        f = actor.forward(buffer.slot(t).obs);
        ks.clear();
        dzu.clear();
        dzm.clear();
        dzl.clear();
        const auto& slot = buffer.slot(t);
        const double adv = buffer.standardized_advantages()[t];
        while (i < batch.size() && batch[i].t == t) {
            const int k = batch[i].k;
            ks.push_back(k);
            dzu.emplace_back(Eigen::VectorXd::Zero(2));
            dzm.emplace_back(Eigen::VectorXd::Zero(m_len));
            dzl.emplace_back(Eigen::VectorXd::Zero(l_len));
            const auto ev = detail::actor_sample_eval(
                f, k, slot.action, slot.logp_k[k], adv, clip_eps, entropy_coef,
                &dzu.back(), &dzm.back(), &dzl.back(), w);
            stats.loss += ev.loss * w;
            stats.entropy += ev.entropy * w;
            stats.approx_kl += (ev.ratio - 1.0 - std::log(ev.ratio)) * w;
            stats.clip_fraction += (ev.clipped ? 1.0 : 0.0) * w;
            ++i;
        }
        actor.backward(f, ks, dzu, dzm, dzl, grad);
    }
    return stats;
}

/// Mean squared error of the critic against the GAE returns on a minibatch,
/// with gradient accumulation (grad may be null for loss-only evaluation).
inline double critic_batch_loss_grad(const CriticNet& critic,
                                     const RolloutBuffer& buffer,
                                     const std::vector<SampleRef>& batch,
                                     CriticNet::Grad* grad) {
    double loss = 0.0;
    const double w = 1.0 / static_cast<double>(batch.size());
    std::size_t i = 0;
    while (i < batch.size()) {
        const int t = batch[i].t;
        const auto f = critic.forward(buffer.slot(t).obs);
        const double target = buffer.returns()[t];
        double dv = 0.0;
        while (i < batch.size() && batch[i].t == t) {
            const double err = f.value - target;
            loss += err * err * w;
            dv += 2.0 * err * w;
            ++i;
        }
        if (grad != nullptr) critic.backward(f, dv, *grad);
    }
    return loss;
}

struct PPODiagnostics {
    double actor_loss = 0.0;
    double critic_loss = 0.0;
    double entropy = 0.0;
    double approx_kl = 0.0;
    double clip_fraction = 0.0;
    double actor_grad_norm = 0.0;
    double critic_grad_norm = 0.0;
    bool aborted = false;
    std::string abort_reason;
};

/// Clipped-surrogate PPO update over the filled rollout: cfg.epochs passes
/// over shuffled (slot, subcarrier) minibatches with gradient-norm clipping
/// and Adam steps. The critic may regress on a different buffer than the
/// actor trains on (the CTDE variants feed the shared critic the joint
/// buffer) and may be skipped so a shared critic updates exactly once per
/// round. A non-finite loss aborts the update and restores all incoming
/// parameter and optimizer state.
inline PPODiagnostics ppo_update(PolicyNet& actor, CriticNet& critic,
                                 Adam& actor_opt, Adam& critic_opt,
                                 const RolloutBuffer& actor_buffer,
                                 const RolloutBuffer& critic_buffer,
                                 const PPOConfig& cfg, double entropy_coef,
                                 RngStream& rng, bool update_critic = true) {
    if (!actor_buffer.finished() || !critic_buffer.finished())
        throw std::logic_error("rollout buffer advantages not computed");
    const int h = actor_buffer.horizon();
    const int K = actor.n_subcarriers();

    const ParamVector actor_snapshot = actor.params();
    const ParamVector critic_snapshot = critic.params();
    const Adam::Snapshot actor_opt_snapshot = actor_opt.snapshot();
    const Adam::Snapshot critic_opt_snapshot = critic_opt.snapshot();

    std::vector<SampleRef> samples;
    samples.reserve(static_cast<std::size_t>(h) * K);
    for (int t = 0; t < h; ++t)
        for (int k = 0; k < K; ++k) samples.push_back({t, k});

    PPODiagnostics diag;
    int n_minibatches = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(samples.begin(), samples.end(), rng.engine());
        for (std::size_t start = 0; start < samples.size();
             start += static_cast<std::size_t>(cfg.minibatch)) {
            const std::size_t stop =
                std::min(samples.size(), start + static_cast<std::size_t>(cfg.minibatch));
            std::vector<SampleRef> batch(samples.begin() + start, samples.begin() + stop);
            std::sort(batch.begin(), batch.end(), [](const SampleRef& a, const SampleRef& b) {
                return a.t != b.t ? a.t < b.t : a.k < b.k;
            });

            PolicyNet::Grad agrad;
            agrad.zero_like(actor);
            const auto stats = actor_batch_grad(actor, actor_buffer, batch,
                                                cfg.clip_eps, entropy_coef, agrad);
            double closs = 0.0;
            CriticNet::Grad cgrad;
            if (update_critic) {
                cgrad.zero_like(critic);
                closs = critic_batch_loss_grad(critic, critic_buffer, batch, &cgrad);
            }

            if (!std::isfinite(stats.loss) || !std::isfinite(closs)) {
                actor.set_params(actor_snapshot);
                critic.set_params(critic_snapshot);
                actor_opt.restore(actor_opt_snapshot);
                critic_opt.restore(critic_opt_snapshot);
                diag.aborted = true;
                diag.abort_reason = "non-finite loss";
                return diag;
            }

            Eigen::VectorXd aflat = agrad.flatten();
            diag.actor_grad_norm += clip_grad_norm(aflat, cfg.max_grad_norm);
            ParamVector ap = actor.params();
            actor_opt.step(ap.values, aflat);
            actor.set_params(ap);

            if (update_critic) {
                Eigen::VectorXd cflat = cgrad.flatten();
                diag.critic_grad_norm += clip_grad_norm(cflat, cfg.max_grad_norm);
                ParamVector cp = critic.params();
                critic_opt.step(cp.values, cflat);
                critic.set_params(cp);
            }

            diag.actor_loss += stats.loss;
            diag.critic_loss += closs;
            diag.entropy += stats.entropy;
            diag.approx_kl += stats.approx_kl;
            diag.clip_fraction += stats.clip_fraction;
            ++n_minibatches;
        }
    }
    if (n_minibatches > 0) {
        const double inv = 1.0 / n_minibatches;
        diag.actor_loss *= inv;
        diag.critic_loss *= inv;
        diag.entropy *= inv;
        diag.approx_kl *= inv;
        diag.clip_fraction *= inv;
        diag.actor_grad_norm *= inv;
        diag.critic_grad_norm *= inv;
    }
    return diag;
}

/// Single-buffer convenience form: the local learner case.
inline PPODiagnostics ppo_update(PolicyNet& actor, CriticNet& critic,
                                 Adam& actor_opt, Adam& critic_opt,
                                 const RolloutBuffer& buffer, const PPOConfig& cfg,
                                 double entropy_coef, RngStream& rng) {
    return ppo_update(actor, critic, actor_opt, critic_opt, buffer, buffer, cfg,
                      entropy_coef, rng, true);
}

}  // namespace fedcritic

#endif
