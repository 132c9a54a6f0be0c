#include "rcb/miro.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace rcb::miro {

using diff::GaussianNodes;
using diff::Rec;
using diff::Tensor;
using diff::Value;

RegretEstimate surrogate_regret(const wm::PreparedEpisode& expert_ep,
                                const wm::EncodedEpisode& expert_enc,
                                const wm::PreparedEpisode& policy_ep,
                                const wm::EncodedEpisode& policy_enc,
                                const Tensor& omega, const wm::WorldModel& model,
                                bool want_grad) {
    Rec rec(model.params());
    Value omega_leaf = diff::leaf(omega);
    Value expert_ret = model.episode_return(rec, expert_ep, expert_enc, omega_leaf);
    Value policy_ret = model.episode_return(rec, policy_ep, policy_enc, omega_leaf);
    Value regret = diff::sub(expert_ret, policy_ret);

    RegretEstimate est;
    est.expert_return = expert_ret->val.item();
    est.policy_return = policy_ret->val.item();
    est.regret = regret->val.item();
    if (want_grad) {
        diff::backward(regret);
        est.grad_omega =
            omega_leaf->grad_ready ? omega_leaf->grad : Tensor::zeros_like(omega);
    }
    return est;
}

namespace {

double smoothed_norm(const Tensor& delta, double epsilon) {
    double sq = epsilon * epsilon;
    for (int i = 0; i < delta.size(); ++i) sq += delta[i] * delta[i];
    return std::sqrt(sq);
}

struct PenalizedEval {
    double objective = 0.0;
    double regret = 0.0;
    Tensor grad;
};

PenalizedEval eval_penalized(const wm::PreparedEpisode& expert_ep,
                             const wm::EncodedEpisode& expert_enc,
                             const wm::PreparedEpisode& policy_ep,
                             const wm::EncodedEpisode& policy_enc, const Tensor& omega,
                             const Tensor& omega_tilde, const wm::WorldModel& model,
                             const TeacherConfig& cfg, bool want_grad) {
    const RegretEstimate est = surrogate_regret(expert_ep, expert_enc, policy_ep,
                                                policy_enc, omega, model, want_grad);
    Tensor delta = omega;
    for (int i = 0; i < delta.size(); ++i) delta[i] -= omega_tilde[i];
    const double norm = smoothed_norm(delta, cfg.epsilon);
    PenalizedEval out;
    out.regret = est.regret;
    out.objective = est.regret - cfg.penalty * norm;
    if (want_grad) {
        out.grad = est.grad_omega;
        for (int i = 0; i < out.grad.size(); ++i)
            out.grad[i] -= cfg.penalty * delta[i] / norm;
    }
    return out;
}

}  // namespace

std::vector<AdversarialPair> teacher_search(std::span<const int> day_indices,
                                            std::span<const DayData> days,
                                            const policy::CausalPolicy& pol,
                                            const wm::WorldModel& model,
                                            const TeacherConfig& cfg, Rng& rollout_rng) {
    std::vector<AdversarialPair> pairs;
    pairs.reserve(day_indices.size());
    for (int idx : day_indices) {
        const DayData& data = days[idx];
        AdversarialPair pair;
        pair.day_index = idx;
        pair.rollout =
            policy::rollout_policy(pol, &model, data.bundle->day, &rollout_rng, "policy");
        const wm::PreparedEpisode policy_ep = model.prepare(pair.rollout.traj, false);
        const wm::EncodedEpisode policy_enc = model.encode(policy_ep);

        // Logged environment latent: final filtered mean on the day's expert log.
        pair.omega_logged = data.expert_enc.filtering.back().mu;

        Tensor omega = pair.omega_logged;
        PenalizedEval cur = eval_penalized(data.expert_ep, data.expert_enc, policy_ep,
                                           policy_enc, omega, pair.omega_logged, model,
                                           cfg, true);
        pair.regret_logged = cur.regret;
        pair.objective_trace.push_back(cur.objective);

        for (int step = 0; step < cfg.search_steps; ++step) {
            double eta = cfg.step_size;
            bool accepted = false;
            for (int h = 0; h <= cfg.max_halvings; ++h) {
                Tensor trial = omega;
                for (int i = 0; i < trial.size(); ++i) trial[i] += eta * cur.grad[i];
                const PenalizedEval cand =
                    eval_penalized(data.expert_ep, data.expert_enc, policy_ep, policy_enc,
                                   trial, pair.omega_logged, model, cfg, true);
                if (cand.objective >= cur.objective) {
                    omega = std::move(trial);
                    cur = cand;
                    accepted = true;
                    break;
                }
                eta *= 0.5;
            }
            if (accepted) pair.objective_trace.push_back(cur.objective);
        }
        pair.omega_adv = omega;
        pair.regret_adv = cur.regret;
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

ValueBaseline::ValueBaseline(int latent_dim, int hidden, Rng& init_rng) {
    mlp_ = diff::Mlp::init(params_, "val",
                           {features::kObsFeatDim + latent_dim, hidden, 1}, init_rng);
}

Value ValueBaseline::predict(Rec& rec, const Tensor& obs_feat, const Tensor& omega) const {
    std::vector<double> input = obs_feat.values();
    for (int i = 0; i < omega.size(); ++i) input.push_back(omega[i]);
    return mlp_(rec, diff::constant(Tensor::vector(std::move(input))));
}

UpdateDiagnostics update_policy(policy::CausalPolicy& pol, ValueBaseline& baseline,
                                wm::WorldModel& model,
                                std::span<const AdversarialPair> pairs,
                                std::span<const wm::PreparedEpisode> expert_batch,
                                const LearnerConfig& cfg, const UpdateWeights& weights,
                                Rng& noise) {
    UpdateDiagnostics diag;
    const bool use_latent = pol.config().use_latent;
    Rec pol_rec(pol.params());
    Rec wm_rec(model.params());
    Rec val_rec(baseline.params());

    std::vector<Value> pg_terms, entropy_terms, value_terms;
    double return_acc = 0.0;

    if (weights.rl != 0.0 && !pairs.empty()) {
        for (const AdversarialPair& pair : pairs) {
            const env::Trajectory& traj = pair.rollout.traj;
            const wm::PreparedEpisode ep = model.prepare(traj, false);
            const wm::EncodedEpisode enc = model.encode(ep);

            // Surrogate rewards along the rollout at the adversarial latent;
            // data for the likelihood-ratio estimator.
            std::vector<double> rewards(ep.length);
            {
                Rec scratch(model.params());
                const Value omega = diff::constant(pair.omega_adv);
                for (int t = 0; t < ep.length; ++t) {
                    rewards[t] = model
                                     .reward_step(scratch, ep.obs_feats[t],
                                                  ep.action_feats[t], enc.fwd_hidden[t],
                                                  omega)
                                     ->val.item();
                }
            }
            std::vector<double> returns(ep.length);
            double acc = 0.0;
            for (int t = ep.length - 1; t >= 0; --t) {
                acc += rewards[t];
                returns[t] = acc;
            }
            return_acc += ep.length > 0 ? returns[0] : 0.0;

            Value pol_h = pol.encoder_h0(pol_rec);
            for (int t = 0; t < ep.length; ++t) {
                // Baseline prediction (stale parameters) and its regression.
                const Value v_pred =
                    baseline.predict(val_rec, ep.obs_feats[t], pair.omega_adv);
                const double advantage = returns[t] - v_pred->val.item();
                value_terms.push_back(
                    diff::square(diff::add_const(v_pred, -returns[t])));

                std::optional<Value> omega_in;
                if (use_latent)
                    omega_in = diff::constant(pair.rollout.omega_hat[t]);
                const GaussianNodes dist =
                    pol.action_dist(pol_rec, pol_h, ep.obs_feats[t], omega_in);
                const double x = std::log(traj.steps[t].action);
                const Value logp =
                    diff::neg(diff::gaussian_nll(dist, Tensor::vector({x})));
                pg_terms.push_back(diff::scale(logp, advantage));
                entropy_terms.push_back(diff::gaussian_entropy(dist));

                pol_h = pol.encoder_step(pol_rec, ep.step_feats[t], pol_h);
            }
        }
    }

    Value loss;
    if (!pg_terms.empty()) {
        Value pg = diff::neg(diff::mean(diff::concat(pg_terms)));
        Value ent = diff::mean(diff::concat(entropy_terms));
        diag.entropy = ent->val.item();
        loss = diff::scale(diff::sub(pg, diff::scale(ent, cfg.entropy_bonus)), weights.rl);
        diag.policy_objective = return_acc / static_cast<double>(pairs.size());
    }

    if (weights.bc != 0.0 && !expert_batch.empty()) {
        Value bc = policy::causal_bc_loss(pol_rec, use_latent ? &wm_rec : nullptr, pol,
                                          use_latent ? &model : nullptr, expert_batch,
                                          weights.beta2, noise);
        diag.bc_nll = bc->val.item();
        Value weighted = diff::scale(bc, weights.bc);
        loss = loss ? diff::add(loss, weighted) : weighted;
    }

    if (loss) {
        diff::backward(loss);
        pol.params().adam_step(pol_rec.grads(),
                               {cfg.lr, 0.9, 0.999, 1e-8, cfg.clip_norm});
        if (weights.bc != 0.0 && use_latent) {
            model.params().adam_step(wm_rec.grads(),
                                     {cfg.lr, 0.9, 0.999, 1e-8, cfg.clip_norm});
        }
    }
    if (!value_terms.empty()) {
        Value vloss = diff::mean(diff::concat(value_terms));
        diag.value_loss = vloss->val.item();
        diff::backward(vloss);
        baseline.params().adam_step(val_rec.grads(),
                                    {cfg.value_lr, 0.9, 0.999, 1e-8, cfg.clip_norm});
    }
    return diag;
}

Trainer::Trainer(TrainerConfig cfg, std::span<const DayBundle> train_days)
    : cfg_(std::move(cfg)),
      batch_rng_(derive_seed(cfg_.seed, "batch")),
      rollout_rng_(derive_seed(cfg_.seed, "rollout")),
      noise_rng_(derive_seed(cfg_.seed, "noise")) {
    if (train_days.empty()) throw std::invalid_argument("no training days");
    for (const DayBundle& b : train_days) train_days_.push_back(&b);

    is_bc_ = cfg_.algo == "bc" || cfg_.algo == "miro-d";
    teacher_enabled_ = cfg_.algo == "mirocl" || cfg_.algo == "miro-p";
    const bool latent = cfg_.algo == "mirocl";

    Rng init_rng(derive_seed(cfg_.seed, "init"));
    policy::PolicyConfig pcfg = cfg_.policy;
    pcfg.use_latent = latent;
    pcfg.latent_dim = cfg_.world_model.latent_dim;
    wm_ = std::make_unique<wm::WorldModel>(cfg_.world_model, init_rng);
    policy_ = std::make_unique<policy::CausalPolicy>(pcfg, init_rng);
    baseline_ = std::make_unique<ValueBaseline>(cfg_.world_model.latent_dim,
                                                cfg_.policy.hidden, init_rng);

    day_data_.resize(train_days_.size());
    for (std::size_t i = 0; i < train_days_.size(); ++i) {
        day_data_[i].bundle = train_days_[i];
        day_data_[i].expert_ep = wm_->prepare(train_days_[i]->expert_traj, true);
    }
    refresh_encodings();
}

void Trainer::refresh_encodings() {
    for (DayData& d : day_data_) d.expert_enc = wm_->encode(d.expert_ep);
}

void Trainer::refresh_rollout_pool() {
    pool_.clear();
    for (int i = 0; i < cfg_.rollout_pool; ++i) {
        const int idx = batch_rng_.uniform_int(0, static_cast<int>(day_data_.size()) - 1);
        const policy::PolicyRollout r = policy::rollout_policy(
            *policy_, policy_->config().use_latent ? wm_.get() : nullptr,
            day_data_[idx].bundle->day, &rollout_rng_, "pool");
        pool_.push_back(wm_->prepare(r.traj, false));
    }
}

double Trainer::warmup_step(int step_index) {
    if (step_index % cfg_.pool_refresh_every == 0) refresh_rollout_pool();
    // Alternate evidence and reward-surrogate minibatches 1:1.
    std::vector<wm::PreparedEpisode> batch;
    for (int i = 0; i < cfg_.wm_batch; ++i) {
        const bool expert = i % 2 == 0;
        if (expert) {
            const int idx =
                batch_rng_.uniform_int(0, static_cast<int>(day_data_.size()) - 1);
            batch.push_back(day_data_[idx].expert_ep);
        } else {
            const int idx = batch_rng_.uniform_int(0, static_cast<int>(pool_.size()) - 1);
            batch.push_back(pool_[idx]);
        }
    }
    Rec rec(wm_->params());
    Value loss;
    if (step_index % 2 == 0) {
        loss = wm_->vib_loss(rec, batch, cfg_.world_model.beta, noise_rng_);
        if (cfg_.world_model.smooth_weight > 0.0) {
            loss = diff::add(loss, diff::scale(wm_->smoothing_loss(
                                                   rec, batch, cfg_.world_model.beta,
                                                   noise_rng_),
                                               cfg_.world_model.smooth_weight));
        }
    } else {
        loss = wm_->reward_surrogate_loss(rec, batch);
    }
    const double value = loss->val.item();
    diff::backward(loss);
    wm_->params().adam_step(rec.grads(), {cfg_.wm_lr, 0.9, 0.999, 1e-8, 10.0});
    return value;
}

std::vector<AdversarialPair> Trainer::teacher_round(std::span<const int> day_indices) {
    TeacherConfig tc = cfg_.teacher;
    if (!teacher_enabled_) tc.search_steps = 0;
    return teacher_search(day_indices, day_data_, *policy_, *wm_, tc, rollout_rng_);
}

void Trainer::refresh_pair_rollouts(std::vector<AdversarialPair>& pairs) {
    for (AdversarialPair& pair : pairs) {
        pair.rollout = policy::rollout_policy(
            *policy_, policy_->config().use_latent ? wm_.get() : nullptr,
            day_data_[pair.day_index].bundle->day, &rollout_rng_, "policy");
    }
}

double Trainer::eval_train_tacr() {
    metrics::MetricsConfig mcfg;
    std::vector<metrics::DayScore> scores;
    for (const DayData& d : day_data_) {
        const policy::PolicyRollout r = policy::rollout_policy(
            *policy_, policy_->config().use_latent ? wm_.get() : nullptr, d.bundle->day,
            nullptr, "eval");
        const auto& day = d.bundle->day;
        scores.push_back(metrics::score_day(
            day.day_id, day.split_tag, day.mech_tag, r.traj.outcome.total_utility,
            d.bundle->expert.utility, r.traj.outcome.roi, day.roi_target, mcfg));
    }
    const auto t = metrics::tacr(scores, mcfg);
    return t ? *t : -1.0;
}

std::vector<RoundRecord> Trainer::run(const std::filesystem::path& outdir) {
    namespace fs = std::filesystem;
    std::ofstream stream;
    if (!outdir.empty()) {
        fs::create_directories(outdir / "checkpoints");
        stream.open(outdir / "metrics.jsonl");
    }
    auto emit = [&](const RoundRecord& r) {
        if (!stream.is_open()) return;
        nlohmann::json j{{"round", r.round},
                         {"teacher_regret_logged", r.teacher_regret_logged},
                         {"teacher_regret_adv", r.teacher_regret_adv},
                         {"policy_objective", r.policy_objective},
                         {"bc_nll", r.bc_nll},
                         {"entropy", r.entropy},
                         {"value_loss", r.value_loss},
                         {"wm_loss", r.wm_loss}};
        if (r.train_tacr >= 0.0) j["train_tacr"] = r.train_tacr;
        stream << j.dump() << "\n";
    };
    auto save_checkpoint = [&](const std::string& name) {
        if (outdir.empty()) return;
        policy_->params().save(outdir / "checkpoints" / (name + ".pol.ckpt"));
        if (!is_bc_ || policy_->config().use_latent)
            wm_->params().save(outdir / "checkpoints" / (name + ".wm.ckpt"));
    };

    std::vector<RoundRecord> records;
    try {
        if (is_bc_) {
            // Pure behavioral cloning: no teacher, no world model, no RL term.
            for (int step = 0; step < cfg_.bc_steps; ++step) {
                std::vector<wm::PreparedEpisode> batch;
                for (int i = 0; i < cfg_.wm_batch; ++i) {
                    const int idx = batch_rng_.uniform_int(
                        0, static_cast<int>(day_data_.size()) - 1);
                    batch.push_back(day_data_[idx].expert_ep);
                }
                const UpdateDiagnostics d =
                    update_policy(*policy_, *baseline_, *wm_, {}, batch, cfg_.learner,
                                  {0.0, 1.0, 0.0}, noise_rng_);
                if (step % 20 == 0 || step + 1 == cfg_.bc_steps) {
                    RoundRecord r;
                    r.round = step;
                    r.bc_nll = d.bc_nll;
                    if (step + 1 == cfg_.bc_steps) r.train_tacr = eval_train_tacr();
                    records.push_back(r);
                    emit(r);
                }
            }
            save_checkpoint("final");
            return records;
        }

        double wm_loss = 0.0;
        for (int step = 0; step < cfg_.warmup_steps; ++step) wm_loss = warmup_step(step);
        refresh_encodings();

        for (int round = 0; round < cfg_.rounds; ++round) {
            std::vector<int> day_indices(cfg_.teacher.batch);
            for (int& idx : day_indices)
                idx = batch_rng_.uniform_int(0, static_cast<int>(day_data_.size()) - 1);
            std::vector<AdversarialPair> pairs = teacher_round(day_indices);

            RoundRecord rec;
            rec.round = round;
            rec.wm_loss = wm_loss;
            for (const AdversarialPair& p : pairs) {
                rec.teacher_regret_logged += p.regret_logged / pairs.size();
                rec.teacher_regret_adv += p.regret_adv / pairs.size();
            }

            std::vector<wm::PreparedEpisode> expert_batch;
            UpdateWeights weights{1.0, 0.0, cfg_.beta2};
            if (cfg_.algo == "mirocl") {
                weights.bc = cfg_.bc_weight;
                for (const AdversarialPair& p : pairs)
                    expert_batch.push_back(day_data_[p.day_index].expert_ep);
            }

            UpdateDiagnostics diag;
            for (int u = 0; u < cfg_.updates_per_round; ++u) {
                refresh_pair_rollouts(pairs);
                diag = update_policy(*policy_, *baseline_, *wm_, pairs, expert_batch,
                                     cfg_.learner, weights, noise_rng_);
            }
            rec.policy_objective = diag.policy_objective;
            rec.bc_nll = diag.bc_nll;
            rec.entropy = diag.entropy;
            rec.value_loss = diag.value_loss;

            if (cfg_.wm_refresh_every > 0 && (round + 1) % cfg_.wm_refresh_every == 0) {
                for (int step = 0; step < cfg_.wm_refresh_steps; ++step)
                    wm_loss = warmup_step(step);
                refresh_encodings();
            }
            if (cfg_.snapshot_every > 0 && (round + 1) % cfg_.snapshot_every == 0) {
                rec.train_tacr = eval_train_tacr();
                save_checkpoint("round_" + std::to_string(round + 1));
            }
            records.push_back(rec);
            emit(rec);
        }
        save_checkpoint("final");
    } catch (...) {
        save_checkpoint("aborted");
        throw;
    }
    return records;
}

}  // namespace rcb::miro
