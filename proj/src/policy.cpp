#include "rcb/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace rcb::policy {

using diff::GaussianNodes;
using diff::Rec;
using diff::Tensor;
using diff::Value;

CausalPolicy::CausalPolicy(const PolicyConfig& cfg, Rng& init_rng) : cfg_(cfg) {
    using namespace diff;
    enc_ = GruCell::init(params_, "pol.enc", features::kStepFeatDim, cfg.hidden, init_rng);
    params_.create("pol.enc.h0", {cfg.hidden});
    const int in = cfg.hidden + features::kObsFeatDim + (cfg.use_latent ? cfg.latent_dim : 0);
    body_ = Mlp::init(params_, "pol.body", {in, cfg.hidden}, init_rng);
    head_ = GaussianHead::init(params_, "pol.head", cfg.hidden, 1, init_rng,
                               cfg.log_sigma_init);
}

Value CausalPolicy::encoder_h0(Rec& rec) const { return rec.p("pol.enc.h0"); }

Value CausalPolicy::encoder_step(Rec& rec, const Tensor& step_feat, const Value& h) const {
    return enc_.step(rec, diff::constant(step_feat), h);
}

GaussianNodes CausalPolicy::action_dist(Rec& rec, const Value& enc_hidden,
                                        const Tensor& obs_feat,
                                        const std::optional<Value>& omega_hat) const {
    if (cfg_.use_latent != omega_hat.has_value())
        throw std::invalid_argument("latent conditioning mismatch");
    std::vector<Value> parts{enc_hidden, diff::constant(obs_feat)};
    if (omega_hat) parts.push_back(*omega_hat);
    Value x = diff::tanh_v(body_(rec, diff::concat(parts)));
    return head_(rec, x);
}

namespace {

struct LatentDraw {
    Tensor sample;
};

// One latent draw from the filtering posterior over the rolled prefix.
LatentDraw draw_latent(const wm::WorldModel& model, const env::Trajectory& prefix, int t,
                       const features::DayContext& ctx, Rng* noise) {
    env::Trajectory tmp = prefix;
    tmp.budget = ctx.budget;
    tmp.roi_target = ctx.roi_target;
    tmp.horizon = ctx.horizon;
    const wm::PreparedEpisode ep = model.prepare(tmp, false);
    const diff::GaussianParams q = model.filter_belief_at(ep, t);
    if (!noise) return {q.mu};
    return {diff::reparam_sample(q, wm::normal_vector(*noise, q.dim()))};
}

}  // namespace

PolicyRollout rollout_policy(const CausalPolicy& pol, const wm::WorldModel* model,
                             const market::EnvironmentDay& day, Rng* noise,
                             std::string tag) {
    const bool use_latent = pol.config().use_latent;
    if (use_latent && !model) throw std::invalid_argument("latent policy needs a world model");
    const features::DayContext ctx = features::DayContext::of(day);

    PolicyRollout out;
    Rec pol_rec(pol.params());
    Value pol_h = pol.encoder_h0(pol_rec);

    // Incremental world-model encoder state for the latent draws.
    std::optional<Rec> wm_rec;
    Value wm_h;
    if (use_latent) {
        wm_rec.emplace(model->params());
        wm_h = model->encoder_h0(*wm_rec);
    }

    env::Episode ep(day);
    env::Trajectory& traj = out.traj;
    traj.day_id = day.day_id;
    traj.horizon = day.num_slots();
    traj.budget = day.budget;
    traj.roi_target = day.roi_target;
    traj.policy_tag = std::move(tag);
    while (!ep.done()) {
        env::StepRecord rec;
        rec.obs = ep.observation();
        rec.slot_auctions = static_cast<int>(day.slot(ep.t()).size());
        const Tensor obs_feat = features::obs_features(rec.obs, ctx);

        std::optional<Value> omega;
        if (use_latent) {
            const diff::GaussianParams q = diff::values_of(
                model->filtering_from_hidden(*wm_rec, wm_h, ep.t() == 0));
            const Tensor sample =
                noise ? diff::reparam_sample(q, wm::normal_vector(*noise, q.dim())) : q.mu;
            out.omega_hat.push_back(sample);
            omega = diff::constant(sample);
        }
        const GaussianNodes dist = pol.action_dist(pol_rec, pol_h, obs_feat, omega);
        double x = dist.mu->val[0];
        if (noise) x += std::exp(dist.log_sigma->val[0]) * noise->normal();
        rec.action = std::exp(x);
        rec.slot = ep.step(rec.action);
        rec.reward = rec.slot.utility_sum;
        traj.steps.push_back(rec);

        const Tensor step_feat = features::step_features(traj.steps.back(), ctx);
        pol_h = pol.encoder_step(pol_rec, step_feat, pol_h);
        if (use_latent) wm_h = model->encoder_advance(*wm_rec, step_feat, wm_h);
    }
    traj.truncated = ep.outcome().truncated;
    traj.outcome = ep.outcome();
    return out;
}

double act_once(const CausalPolicy& pol, const wm::WorldModel* model,
                const env::Trajectory& prefix, const env::SlotObservation& obs,
                const features::DayContext& ctx, Rng* noise) {
    Rec rec(pol.params());
    Value h = pol.encoder_h0(rec);
    for (const env::StepRecord& step : prefix.steps)
        h = pol.encoder_step(rec, features::step_features(step, ctx), h);
    std::optional<Value> omega;
    if (pol.config().use_latent) {
        if (!model) throw std::invalid_argument("latent policy needs a world model");
        const LatentDraw draw =
            draw_latent(*model, prefix, prefix.length(), ctx, noise);
        omega = diff::constant(draw.sample);
    }
    const GaussianNodes dist =
        pol.action_dist(rec, h, features::obs_features(obs, ctx), omega);
    double x = dist.mu->val[0];
    if (noise) x += std::exp(dist.log_sigma->val[0]) * noise->normal();
    return std::exp(x);
}

diff::Value causal_bc_loss(Rec& pol_rec, Rec* wm_rec, const CausalPolicy& pol,
                           const wm::WorldModel* model,
                           std::span<const wm::PreparedEpisode> experts, double beta2,
                           Rng& noise) {
    if (experts.empty()) throw std::invalid_argument("causal_bc_loss: empty expert batch");
    const bool use_latent = pol.config().use_latent;
    if (use_latent && (!model || !wm_rec))
        throw std::invalid_argument("latent policy needs world-model access");

    std::vector<Value> nll_terms, kl_terms;
    for (const wm::PreparedEpisode& ep : experts) {
        Value pol_h = pol.encoder_h0(pol_rec);
        std::vector<Value> wm_fwd;
        std::vector<diff::GaussianParams> smooth;
        if (use_latent) {
            wm_fwd = model->encode_forward(*wm_rec, ep);
            smooth = model->smooth_beliefs(ep);  // stop-gradient targets
        }
        for (int t = 0; t < ep.length; ++t) {
            std::optional<Value> omega;
            if (use_latent) {
                const GaussianNodes q = model->filtering_belief(*wm_rec, wm_fwd, t);
                omega = diff::reparam_sample(
                    q, wm::normal_vector(noise, pol.config().latent_dim));
                if (beta2 != 0.0) kl_terms.push_back(diff::kl_from_fixed(smooth[t], q));
            }
            const GaussianNodes dist =
                pol.action_dist(pol_rec, pol_h, ep.obs_feats[t], omega);
            nll_terms.push_back(diff::gaussian_nll(
                dist, Tensor::vector({ep.action_targets[t]})));
            pol_h = pol.encoder_step(pol_rec, ep.step_feats[t], pol_h);
        }
    }
    Value loss = diff::mean(diff::concat(nll_terms));
    if (!kl_terms.empty())
        loss = diff::add(loss, diff::scale(diff::mean(diff::concat(kl_terms)), beta2));
    return loss;
}

}  // namespace rcb::policy
