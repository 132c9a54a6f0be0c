#pragma once

#include <optional>
#include <span>
#include <string>

#include "rcb/world_model.hpp"

namespace rcb::policy {

struct PolicyConfig {
    int hidden = 48;
    bool use_latent = true;  // condition the sub-policy on an inferred latent
    int latent_dim = 8;
    double log_sigma_init = -1.2;
    double action_floor = 1e-3;  // abstain floor for BC targets
};

// Factorized bidding policy: a recurrent sub-policy over (o_t, h_t) with a
// Gaussian head in log-ratio space, optionally conditioned on a latent
// inferred by the world model's filtering posterior. Emitted ratios are
// exp(log-ratio) and therefore strictly positive.
class CausalPolicy {
public:
    CausalPolicy(const PolicyConfig& cfg, Rng& init_rng);

    diff::ParamSet& params() { return params_; }
    const diff::ParamSet& params() const { return params_; }
    const PolicyConfig& config() const { return cfg_; }

    diff::Value encoder_h0(diff::Rec& rec) const;
    diff::Value encoder_step(diff::Rec& rec, const diff::Tensor& step_feat,
                             const diff::Value& h) const;
    // Action distribution in log-ratio space. `omega_hat` must be provided
    // iff the policy is latent-conditioned.
    diff::GaussianNodes action_dist(diff::Rec& rec, const diff::Value& enc_hidden,
                                    const diff::Tensor& obs_feat,
                                    const std::optional<diff::Value>& omega_hat) const;

private:
    PolicyConfig cfg_;
    diff::ParamSet params_;
    diff::GruCell enc_;
    diff::Mlp body_;
    diff::GaussianHead head_;
};

struct PolicyRollout {
    env::Trajectory traj;
    std::vector<diff::Tensor> omega_hat;  // latent sample per step (empty if unused)
};

// Rolls one episode. Stochastic mode samples the latent and the action from
// explicit noise; deterministic mode (noise == nullptr) uses both means.
PolicyRollout rollout_policy(const CausalPolicy& pol, const wm::WorldModel* model,
                             const market::EnvironmentDay& day, Rng* noise,
                             std::string tag);

// Single action for a given observable prefix (probe/evaluation entry point).
double act_once(const CausalPolicy& pol, const wm::WorldModel* model,
                const env::Trajectory& prefix, const env::SlotObservation& obs,
                const features::DayContext& ctx, Rng* noise);

// Behavioral cloning with posterior alignment: NLL of demonstrated actions
// under the latent-conditioned sub-policy plus beta2 * KL(smoothing belief ||
// filtering belief). The smoothing belief is evaluated with stopped
// gradients; latent samples are reparameterized so gradients reach the
// filtering posterior through wm_rec.
diff::Value causal_bc_loss(diff::Rec& pol_rec, diff::Rec* wm_rec, const CausalPolicy& pol,
                           const wm::WorldModel* model,
                           std::span<const wm::PreparedEpisode> experts, double beta2,
                           Rng& noise);

}  // namespace rcb::policy
