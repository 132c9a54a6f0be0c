#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rcb/metrics.hpp"
#include "rcb/oracle.hpp"
#include "rcb/policy.hpp"

namespace rcb::miro {

// One environment with its hindsight expert, shared by training and eval.
struct DayBundle {
    market::EnvironmentDay day;
    oracle::ExpertSolution expert;
    env::Trajectory expert_traj;
};

struct RegretEstimate {
    double expert_return = 0.0;
    double policy_return = 0.0;
    double regret = 0.0;
    diff::Tensor grad_omega;  // filled when requested
};

// Surrogate regret at a shared latent: summed reward-surrogate returns of the
// paired expert and policy trajectories from the same logged day. Episode
// length differences (budget truncation) enter as absent terms.
RegretEstimate surrogate_regret(const wm::PreparedEpisode& expert_ep,
                                const wm::EncodedEpisode& expert_enc,
                                const wm::PreparedEpisode& policy_ep,
                                const wm::EncodedEpisode& policy_enc,
                                const diff::Tensor& omega, const wm::WorldModel& model,
                                bool want_grad);

struct TeacherConfig {
    double step_size = 0.05;   // eta
    double penalty = 1.0;      // lambda, dual of the Wasserstein radius
    double epsilon = 1e-3;     // smoothing of the L2 penalty at zero
    double temperature = 0.0;  // alpha, recorded only (spread comes from the
                               // penalty and per-day sampling)
    int search_steps = 10;
    int batch = 16;
    int max_halvings = 5;
};

struct AdversarialPair {
    int day_index = -1;
    diff::Tensor omega_logged;            // omega tilde
    diff::Tensor omega_adv;               // omega prime
    std::vector<double> objective_trace;  // penalized objective per accepted point
    double regret_logged = 0.0;
    double regret_adv = 0.0;
    policy::PolicyRollout rollout;  // fresh policy rollout on the logged day
};

// Trainer-side cache of a training day under the current world model.
struct DayData {
    const DayBundle* bundle = nullptr;
    wm::PreparedEpisode expert_ep;
    wm::EncodedEpisode expert_enc;  // refresh after world-model updates
};

// Gradient ascent on Reg(pi, omega) - lambda * sqrt(|omega - omega_tilde|^2 +
// eps^2) from omega_tilde, with greedy acceptance: a step that lowers the
// penalized objective is retried at half the step size (up to max_halvings)
// and otherwise rejected, so the trace is nondecreasing by construction.
std::vector<AdversarialPair> teacher_search(std::span<const int> day_indices,
                                            std::span<const DayData> days,
                                            const policy::CausalPolicy& pol,
                                            const wm::WorldModel& model,
                                            const TeacherConfig& cfg, Rng& rollout_rng);

struct LearnerConfig {
    double lr = 3e-3;
    double value_lr = 3e-3;
    double entropy_bonus = 3e-3;
    double clip_norm = 5.0;
};

struct UpdateWeights {
    double rl = 1.0;
    double bc = 0.0;
    double beta2 = 0.1;
};

// Learned state-value baseline for the likelihood-ratio gradient.
class ValueBaseline {
public:
    ValueBaseline(int latent_dim, int hidden, Rng& init_rng);
    diff::Value predict(diff::Rec& rec, const diff::Tensor& obs_feat,
                        const diff::Tensor& omega) const;
    diff::ParamSet& params() { return params_; }

private:
    diff::ParamSet params_;
    diff::Mlp mlp_;
};

struct UpdateDiagnostics {
    double policy_objective = 0.0;  // mean surrogate return over the batch
    double bc_nll = 0.0;
    double bc_kl = 0.0;
    double entropy = 0.0;
    double value_loss = 0.0;
};

// One gradient step on the weighted sum of the likelihood-ratio value
// objective (evaluated at each pair's adversarial latent) and the
// causality-aware BC objective. With weights.bc == 0 this is the plain
// learner step and the world model is untouched.
UpdateDiagnostics update_policy(policy::CausalPolicy& pol, ValueBaseline& baseline,
                                wm::WorldModel& model,
                                std::span<const AdversarialPair> pairs,
                                std::span<const wm::PreparedEpisode> expert_batch,
                                const LearnerConfig& cfg, const UpdateWeights& weights,
                                Rng& noise);

// Spec alias: the pure value-maximization learner step.
inline UpdateDiagnostics learner_update(policy::CausalPolicy& pol, ValueBaseline& baseline,
                                        wm::WorldModel& model,
                                        std::span<const AdversarialPair> pairs,
                                        const LearnerConfig& cfg, Rng& noise) {
    return update_policy(pol, baseline, model, pairs, {}, cfg, {1.0, 0.0, 0.0}, noise);
}

struct TrainerConfig {
    std::string algo = "mirocl";  // mirocl | miro-p | miro-d | erm | bc
    wm::WorldModelConfig world_model;
    policy::PolicyConfig policy;
    TeacherConfig teacher;
    LearnerConfig learner;
    double bc_weight = 0.5;
    double beta2 = 0.1;

    int warmup_steps = 300;
    int wm_batch = 6;
    double wm_lr = 3e-3;
    int rollout_pool = 12;
    int pool_refresh_every = 60;

    int rounds = 60;
    int updates_per_round = 2;
    int wm_refresh_every = 10;
    int wm_refresh_steps = 15;
    int snapshot_every = 20;
    int bc_steps = 400;  // pure-BC algos

    std::uint64_t seed = 1;
};

struct RoundRecord {
    int round = 0;
    double teacher_regret_logged = 0.0;
    double teacher_regret_adv = 0.0;
    double policy_objective = 0.0;
    double bc_nll = 0.0;
    double entropy = 0.0;
    double value_loss = 0.0;
    double wm_loss = 0.0;
    double train_tacr = -1.0;  // snapshot rounds only
};

// Alternating minimax training: world-model warm-up, then rounds of teacher
// search and learner updates with periodic world-model refreshes. The same
// loop with teacher search disabled (omega' = omega tilde) is the ERM
// baseline; pure-BC algos skip the world model and the teacher entirely.
class Trainer {
public:
    Trainer(TrainerConfig cfg, std::span<const DayBundle> train_days);

    // Runs to completion; writes checkpoints and a metrics stream when
    // `outdir` is nonempty. Returns per-round records.
    std::vector<RoundRecord> run(const std::filesystem::path& outdir = {});

    policy::CausalPolicy& policy() { return *policy_; }
    wm::WorldModel& world_model() { return *wm_; }
    const std::vector<DayData>& day_data() const { return day_data_; }
    void refresh_encodings();
    // Exposed for tests.
    std::vector<AdversarialPair> teacher_round(std::span<const int> day_indices);
    double warmup_step(int step_index);

private:
    void refresh_rollout_pool();
    void refresh_pair_rollouts(std::vector<AdversarialPair>& pairs);
    double eval_train_tacr();

    TrainerConfig cfg_;
    std::vector<const DayBundle*> train_days_;
    std::vector<DayData> day_data_;
    std::unique_ptr<wm::WorldModel> wm_;
    std::unique_ptr<policy::CausalPolicy> policy_;
    std::unique_ptr<ValueBaseline> baseline_;
    std::vector<wm::PreparedEpisode> pool_;
    Rng batch_rng_;
    Rng rollout_rng_;
    Rng noise_rng_;
    bool is_bc_ = false;
    bool teacher_enabled_ = true;
};

}  // namespace rcb::miro
