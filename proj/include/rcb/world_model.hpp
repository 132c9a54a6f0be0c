#pragma once

#include <span>
#include <vector>

#include "rcb/env.hpp"
#include "rcb/features.hpp"
#include "rcb/nn.hpp"

namespace rcb::wm {

struct WorldModelConfig {
    int latent_dim = 8;  // D
    int hidden = 48;     // encoder GRU width
    int obs_hidden = 48;
    int dyn_hidden = 32;
    int act_hidden = 32;
    int reward_hidden = 48;
    double beta = 1e-2;          // VIB compression weight
    double smooth_weight = 1.0;  // auxiliary smoothing-posterior training weight
    double action_floor = 1e-3;  // abstain floor for log-ratio targets
};

// Episode with cached feature tensors and targets; pure function of the
// trajectory and the day header.
struct PreparedEpisode {
    features::DayContext ctx;
    bool is_expert = false;
    double episode_reward = 0.0;  // r^H normalized by L*B
    int length = 0;
    std::vector<diff::Tensor> step_feats;     // per step, kStepFeatDim
    std::vector<diff::Tensor> obs_feats;      // per step, kObsFeatDim
    std::vector<diff::Tensor> recon_targets;  // per step, kObsFeatDim + 1
    std::vector<double> action_targets;       // per step, log-ratio space
    std::vector<double> action_feats;         // per step, log1p(ratio)
};

// Eager encoder pass under the current parameters.
struct EncodedEpisode {
    std::vector<diff::Tensor> fwd_hidden;          // f[0..T], f[t] covers records < t
    std::vector<diff::GaussianParams> filtering;   // q_t for t = 0..T (T = final belief)
};

// Latent world model: filtering/smoothing posteriors over the adversarial
// factor, latent dynamics, observation and expert-action likelihoods, and the
// differentiable reward surrogate.
class WorldModel {
public:
    WorldModel(const WorldModelConfig& cfg, Rng& init_rng);

    diff::ParamSet& params() { return params_; }
    const diff::ParamSet& params() const { return params_; }
    const WorldModelConfig& config() const { return cfg_; }

    PreparedEpisode prepare(const env::Trajectory& traj, bool is_expert) const;
    EncodedEpisode encode(const PreparedEpisode& ep) const;

    // Graph-mode chains. encode_forward returns f[0..T]; encode_backward
    // returns b[0..T-1] where b[t] covers records [t, T). The backward pass
    // reuses the forward cell weights; only the smoothing head is extra.
    std::vector<diff::Value> encode_forward(diff::Rec& rec, const PreparedEpisode& ep) const;
    std::vector<diff::Value> encode_backward(diff::Rec& rec, const PreparedEpisode& ep) const;
    // Incremental pieces for rollouts.
    diff::Value encoder_h0(diff::Rec& rec) const;
    diff::Value encoder_advance(diff::Rec& rec, const diff::Tensor& step_feat,
                                const diff::Value& h) const;
    diff::GaussianNodes filtering_from_hidden(diff::Rec& rec, const diff::Value& hidden,
                                              bool initial) const;
    diff::GaussianNodes filtering_belief(diff::Rec& rec, const std::vector<diff::Value>& fwd,
                                         int t) const;
    diff::GaussianNodes smoothing_belief(diff::Rec& rec, const std::vector<diff::Value>& fwd,
                                         const std::vector<diff::Value>& bwd, int t) const;
    diff::GaussianNodes dynamics_prior(diff::Rec& rec, const diff::Value& omega_prev,
                                       double action_feat) const;
    diff::GaussianNodes initial_prior(diff::Rec& rec) const;

    // Eager beliefs. filtering index t in [0, T]; smoothing index in [0, T).
    std::vector<diff::GaussianParams> smooth_beliefs(const PreparedEpisode& ep) const;
    diff::GaussianParams filter_belief_at(const PreparedEpisode& ep, int t) const;

    // Reward surrogate r(o_t, a_t, h_t, omega). The history encoding is
    // passed as data; gradients flow into the surrogate MLP and, when the
    // latent is a leaf, into omega.
    diff::Value reward_step(diff::Rec& rec, const diff::Tensor& obs_feat, double action_feat,
                            const diff::Tensor& enc_hidden, const diff::Value& omega) const;
    // Sum of reward_step over an episode at a shared latent.
    diff::Value episode_return(diff::Rec& rec, const PreparedEpisode& ep,
                               const EncodedEpisode& enc, const diff::Value& omega) const;

    // Evidence objective of the filtering posterior: reconstruction of
    // (o_t, r_t) on all steps, expert-action likelihood on expert steps, and
    // beta-weighted KL to the latent dynamics prior.
    diff::Value vib_loss(diff::Rec& rec, std::span<const PreparedEpisode> batch, double beta,
                         Rng& noise) const;
    // Same structure under the smoothing posterior; trains the bidirectional
    // head so that expert posteriors are informative targets.
    diff::Value smoothing_loss(diff::Rec& rec, std::span<const PreparedEpisode> batch,
                               double beta, Rng& noise) const;
    // Least-squares fit of summed surrogate rewards to the episode reward;
    // latents and history encodings enter as data (no encoder gradients).
    diff::Value reward_surrogate_loss(diff::Rec& rec,
                                      std::span<const PreparedEpisode> batch) const;

    // Chained application of the dynamics model through latent means.
    std::vector<diff::GaussianParams> latent_prior_rollout(
        const diff::Tensor& omega0, std::span<const double> action_feats) const;

private:
    WorldModelConfig cfg_;
    diff::ParamSet params_;
    diff::GruCell enc_;
    diff::GaussianHead q_head_;
    diff::GaussianHead smooth_head_;
    diff::Mlp dyn_body_;
    diff::GaussianHead dyn_head_;
    diff::Mlp obs_mlp_;
    diff::Mlp act_body_;
    diff::GaussianHead act_head_;
    diff::Mlp reward_mlp_;
};

diff::Tensor normal_vector(Rng& rng, int dim);

}  // namespace rcb::wm
