#include "rcb/world_model.hpp"

#include <cmath>
#include <stdexcept>

namespace rcb::wm {

using diff::GaussianNodes;
using diff::GaussianParams;
using diff::Rec;
using diff::Tensor;
using diff::Value;

namespace {
constexpr const char* kPrefix = "wm";

Tensor concat_vec(const Tensor& a, double extra) {
    std::vector<double> v = a.values();
    v.push_back(extra);
    return Tensor::vector(std::move(v));
}
}  // namespace

Tensor normal_vector(Rng& rng, int dim) {
    Tensor t{{dim}};
    for (int i = 0; i < dim; ++i) t[i] = rng.normal();
    return t;
}

WorldModel::WorldModel(const WorldModelConfig& cfg, Rng& init_rng) : cfg_(cfg) {
    using namespace diff;
    const int d = cfg.latent_dim;
    const int h = cfg.hidden;
    const std::string p = kPrefix;
    enc_ = GruCell::init(params_, p + ".enc", features::kStepFeatDim, h, init_rng);
    params_.create(p + ".enc.h0", {h});
    params_.create(p + ".q0.mu", {d});
    params_.create(p + ".q0.ls", {d});
    params_.create(p + ".p0.mu", {d});
    params_.create(p + ".p0.ls", {d});
    q_head_ = GaussianHead::init(params_, p + ".q", h, d, init_rng);
    smooth_head_ = GaussianHead::init(params_, p + ".sm", 2 * h, d, init_rng);
    dyn_body_ = Mlp::init(params_, p + ".dyn", {d + 1, cfg.dyn_hidden}, init_rng);
    dyn_head_ = GaussianHead::init(params_, p + ".dynh", cfg.dyn_hidden, d, init_rng);
    obs_mlp_ = Mlp::init(params_, p + ".obs",
                         {d + h, cfg.obs_hidden, features::kObsFeatDim + 1}, init_rng);
    act_body_ = Mlp::init(params_, p + ".act", {d, cfg.act_hidden}, init_rng);
    act_head_ = GaussianHead::init(params_, p + ".acth", cfg.act_hidden, 1, init_rng);
    reward_mlp_ = Mlp::init(
        params_, p + ".rew",
        {d + h + features::kObsFeatDim + 1, cfg.reward_hidden, cfg.reward_hidden, 1},
        init_rng);
}

PreparedEpisode WorldModel::prepare(const env::Trajectory& traj, bool is_expert) const {
    PreparedEpisode ep;
    ep.ctx = features::DayContext::of(traj);
    ep.is_expert = is_expert;
    ep.length = traj.length();
    const double scale = ep.ctx.roi_target * ep.ctx.budget;
    ep.episode_reward =
        env::episode_reward(traj.outcome, traj.roi_target, traj.budget) / scale;
    ep.step_feats.reserve(ep.length);
    ep.obs_feats.reserve(ep.length);
    ep.recon_targets.reserve(ep.length);
    for (const env::StepRecord& step : traj.steps) {
        ep.step_feats.push_back(features::step_features(step, ep.ctx));
        ep.obs_feats.push_back(features::obs_features(step.obs, ep.ctx));
        // Reconstruction target: the observation features plus the step's
        // reward feature (the last step-feature coordinate).
        std::vector<double> target = ep.obs_feats.back().values();
        target.push_back(ep.step_feats.back()[features::kStepFeatDim - 1]);
        ep.recon_targets.push_back(Tensor::vector(std::move(target)));
        ep.action_targets.push_back(features::action_target(step.action, cfg_.action_floor));
        ep.action_feats.push_back(std::log1p(step.action));
    }
    return ep;
}

std::vector<Value> WorldModel::encode_forward(Rec& rec, const PreparedEpisode& ep) const {
    std::vector<Value> fwd;
    fwd.reserve(ep.length + 1);
    Value h = rec.p("wm.enc.h0");
    fwd.push_back(h);
    for (int t = 0; t < ep.length; ++t) {
        h = enc_.step(rec, diff::constant(ep.step_feats[t]), h);
        fwd.push_back(h);
    }
    return fwd;
}

std::vector<Value> WorldModel::encode_backward(Rec& rec, const PreparedEpisode& ep) const {
    std::vector<Value> bwd(ep.length);
    Value h = rec.p("wm.enc.h0");
    for (int t = ep.length - 1; t >= 0; --t) {
        h = enc_.step(rec, diff::constant(ep.step_feats[t]), h);
        bwd[t] = h;
    }
    return bwd;
}

Value WorldModel::encoder_h0(Rec& rec) const { return rec.p("wm.enc.h0"); }

Value WorldModel::encoder_advance(Rec& rec, const Tensor& step_feat, const Value& h) const {
    return enc_.step(rec, diff::constant(step_feat), h);
}

GaussianNodes WorldModel::filtering_from_hidden(Rec& rec, const Value& hidden,
                                                bool initial) const {
    if (initial) {
        return {rec.p("wm.q0.mu"),
                diff::clamp(rec.p("wm.q0.ls"), diff::kLogSigmaMin, diff::kLogSigmaMax)};
    }
    return q_head_(rec, hidden);
}

GaussianNodes WorldModel::filtering_belief(Rec& rec, const std::vector<Value>& fwd,
                                           int t) const {
    return filtering_from_hidden(rec, fwd[t], t == 0);
}

GaussianNodes WorldModel::smoothing_belief(Rec& rec, const std::vector<Value>& fwd,
                                           const std::vector<Value>& bwd, int t) const {
    return smooth_head_(rec, diff::concat({fwd[t], bwd[t]}));
}

GaussianNodes WorldModel::dynamics_prior(Rec& rec, const Value& omega_prev,
                                         double action_feat) const {
    Value input = diff::concat({omega_prev, diff::constant(Tensor::vector({action_feat}))});
    return dyn_head_(rec, diff::tanh_v(dyn_body_(rec, input)));
}

GaussianNodes WorldModel::initial_prior(Rec& rec) const {
    return {rec.p("wm.p0.mu"),
            diff::clamp(rec.p("wm.p0.ls"), diff::kLogSigmaMin, diff::kLogSigmaMax)};
}

EncodedEpisode WorldModel::encode(const PreparedEpisode& ep) const {
    EncodedEpisode out;
    Rec rec(params_);
    const std::vector<Value> fwd = encode_forward(rec, ep);
    out.fwd_hidden.reserve(fwd.size());
    out.filtering.reserve(fwd.size());
    for (std::size_t t = 0; t < fwd.size(); ++t) {
        out.fwd_hidden.push_back(fwd[t]->val);
        out.filtering.push_back(diff::values_of(filtering_belief(rec, fwd, static_cast<int>(t))));
    }
    return out;
}

std::vector<GaussianParams> WorldModel::smooth_beliefs(const PreparedEpisode& ep) const {
    Rec rec(params_);
    const std::vector<Value> fwd = encode_forward(rec, ep);
    const std::vector<Value> bwd = encode_backward(rec, ep);
    std::vector<GaussianParams> out;
    out.reserve(ep.length);
    for (int t = 0; t < ep.length; ++t)
        out.push_back(diff::values_of(smoothing_belief(rec, fwd, bwd, t)));
    return out;
}

GaussianParams WorldModel::filter_belief_at(const PreparedEpisode& ep, int t) const {
    if (t < 0 || t > ep.length) throw std::out_of_range("filtering index out of range");
    Rec rec(params_);
    // Only the prefix is consumed; this keeps causality checkable.
    PreparedEpisode prefix = ep;
    prefix.length = t;
    prefix.step_feats.resize(t);
    const std::vector<Value> fwd = encode_forward(rec, prefix);
    return diff::values_of(filtering_belief(rec, fwd, t));
}

Value WorldModel::reward_step(Rec& rec, const Tensor& obs_feat, double action_feat,
                              const Tensor& enc_hidden, const Value& omega) const {
    Value input = diff::concat({omega, diff::constant(enc_hidden),
                                diff::constant(concat_vec(obs_feat, action_feat))});
    return reward_mlp_(rec, input);
}

Value WorldModel::episode_return(Rec& rec, const PreparedEpisode& ep,
                                 const EncodedEpisode& enc, const Value& omega) const {
    std::vector<Value> rewards;
    rewards.reserve(ep.length);
    for (int t = 0; t < ep.length; ++t) {
        rewards.push_back(
            reward_step(rec, ep.obs_feats[t], ep.action_feats[t], enc.fwd_hidden[t], omega));
    }
    return diff::sum(diff::concat(rewards));
}

Value WorldModel::vib_loss(Rec& rec, std::span<const PreparedEpisode> batch, double beta,
                           Rng& noise) const {
    if (batch.empty()) throw std::invalid_argument("vib_loss: empty batch");
    std::vector<Value> recon_terms, act_terms, kl_terms;
    for (const PreparedEpisode& ep : batch) {
        const std::vector<Value> fwd = encode_forward(rec, ep);
        Value omega_prev;
        for (int t = 0; t < ep.length; ++t) {
            const GaussianNodes q = filtering_belief(rec, fwd, t);
            const Value omega = diff::reparam_sample(q, normal_vector(noise, cfg_.latent_dim));
            const GaussianNodes prior =
                t == 0 ? initial_prior(rec)
                       : dynamics_prior(rec, omega_prev, ep.action_feats[t - 1]);
            kl_terms.push_back(diff::kl_diag(q, prior));
            Value recon_mu = obs_mlp_(rec, diff::concat({omega, fwd[t]}));
            recon_terms.push_back(diff::unit_gaussian_nll(recon_mu, ep.recon_targets[t]));
            if (ep.is_expert) {
                const GaussianNodes a = act_head_(rec, diff::tanh_v(act_body_(rec, omega)));
                act_terms.push_back(
                    diff::gaussian_nll(a, Tensor::vector({ep.action_targets[t]})));
            }
            omega_prev = omega;
        }
    }
    Value loss = diff::mean(diff::concat(recon_terms));
    if (!act_terms.empty()) loss = diff::add(loss, diff::mean(diff::concat(act_terms)));
    loss = diff::add(loss, diff::scale(diff::mean(diff::concat(kl_terms)), beta));
    return loss;
}

Value WorldModel::smoothing_loss(Rec& rec, std::span<const PreparedEpisode> batch, double beta,
                                 Rng& noise) const {
    if (batch.empty()) throw std::invalid_argument("smoothing_loss: empty batch");
    std::vector<Value> recon_terms, act_terms, kl_terms;
    for (const PreparedEpisode& ep : batch) {
        const std::vector<Value> fwd = encode_forward(rec, ep);
        const std::vector<Value> bwd = encode_backward(rec, ep);
        Value omega_prev;
        for (int t = 0; t < ep.length; ++t) {
            const GaussianNodes sm = smoothing_belief(rec, fwd, bwd, t);
            const Value omega = diff::reparam_sample(sm, normal_vector(noise, cfg_.latent_dim));
            const GaussianNodes prior =
                t == 0 ? initial_prior(rec)
                       : dynamics_prior(rec, omega_prev, ep.action_feats[t - 1]);
            kl_terms.push_back(diff::kl_diag(sm, prior));
            Value recon_mu = obs_mlp_(rec, diff::concat({omega, fwd[t]}));
            recon_terms.push_back(diff::unit_gaussian_nll(recon_mu, ep.recon_targets[t]));
            if (ep.is_expert) {
                const GaussianNodes a = act_head_(rec, diff::tanh_v(act_body_(rec, omega)));
                act_terms.push_back(
                    diff::gaussian_nll(a, Tensor::vector({ep.action_targets[t]})));
            }
            omega_prev = omega;
        }
    }
    Value loss = diff::mean(diff::concat(recon_terms));
    if (!act_terms.empty()) loss = diff::add(loss, diff::mean(diff::concat(act_terms)));
    loss = diff::add(loss, diff::scale(diff::mean(diff::concat(kl_terms)), beta));
    return loss;
}

Value WorldModel::reward_surrogate_loss(Rec& rec,
                                        std::span<const PreparedEpisode> batch) const {
    if (batch.empty()) throw std::invalid_argument("reward_surrogate_loss: empty batch");
    std::vector<Value> sq_errors;
    for (const PreparedEpisode& ep : batch) {
        const EncodedEpisode enc = encode(ep);  // detached by construction
        std::vector<Value> rewards;
        rewards.reserve(ep.length);
        for (int t = 0; t < ep.length; ++t) {
            const Value omega = diff::constant(enc.filtering[t].mu);
            rewards.push_back(reward_step(rec, ep.obs_feats[t], ep.action_feats[t],
                                          enc.fwd_hidden[t], omega));
        }
        Value pred = diff::sum(diff::concat(rewards));
        Value err = diff::add_const(pred, -ep.episode_reward);
        sq_errors.push_back(diff::square(err));
    }
    return diff::mean(diff::concat(sq_errors));
}

std::vector<GaussianParams> WorldModel::latent_prior_rollout(
    const Tensor& omega0, std::span<const double> action_feats) const {
    std::vector<GaussianParams> out;
    out.reserve(action_feats.size());
    Rec rec(params_);
    Tensor mean = omega0;
    for (double a : action_feats) {
        const GaussianNodes g = dynamics_prior(rec, diff::constant(mean), a);
        out.push_back(diff::values_of(g));
        mean = out.back().mu;
    }
    return out;
}

}  // namespace rcb::wm
