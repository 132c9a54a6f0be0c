#pragma once

#include <string>
#include <vector>

#include "rcb/market.hpp"

namespace rcb::env {

// Slot-wise statistics the agent is allowed to see. Everything here is a
// function of the trajectory prefix and the day header; market prices of
// unresolved auctions never leak in.
struct SlotObservation {
    double time_frac = 0.0;              // t / H
    double win_rate = 0.0;               // wins so far / auctions seen so far
    double roi = 0.0;                    // cumulative U/C, 0 while C == 0
    double cum_utility = 0.0;
    double cum_cost = 0.0;
    double budget_remaining_frac = 1.0;  // (B - C) / B
    double prev_ratio = 0.0;
};

struct EpisodeOutcome {
    double total_utility = 0.0;
    double total_cost = 0.0;
    double roi = 0.0;  // +inf when total_cost == 0
    bool roi_feasible = false;
    bool budget_feasible = true;  // hard enforcement makes this always true
    bool truncated = false;       // budget exhausted before slot H
    int steps = 0;
};

// r^H = U_T * 1{ROI >= L}. Budget infeasibility cannot occur under the hard
// in-slot enforcement, so no budget indicator appears.
double episode_reward(const EpisodeOutcome& outcome, double roi_target, double budget);

struct StepRecord {
    SlotObservation obs;  // observation the action was taken from
    double action = 0.0;  // bid ratio
    double reward = 0.0;  // slot-level realized utility; sums to U_T
    market::SlotResult slot;
    int slot_auctions = 0;  // auctions contested in this slot
};

struct Trajectory {
    std::vector<StepRecord> steps;
    int day_id = 0;
    int horizon = 0;
    double budget = 0.0;
    double roi_target = 0.0;
    std::string policy_tag;
    bool truncated = false;
    EpisodeOutcome outcome;

    int length() const { return static_cast<int>(steps.size()); }
};

// One slot-wise episode over a day. Single-owner; distinct episodes on
// distinct days may run in parallel freely.
class Episode {
public:
    explicit Episode(const market::EnvironmentDay& day);

    const SlotObservation& observation() const { return obs_; }
    const market::EnvironmentDay& day() const { return *day_; }
    bool done() const { return done_; }
    int t() const { return t_; }

    // Replays slot t with b_i = ratio * u_i under hard budget enforcement:
    // an auction whose cost would push cumulative spend above B is not won
    // and the remainder of the day is forfeited.
    market::SlotResult step(double ratio);

    EpisodeOutcome outcome() const;

private:
    const market::EnvironmentDay* day_;
    SlotObservation obs_;
    double cum_utility_ = 0.0;
    double cum_cost_ = 0.0;
    int wins_ = 0;
    int seen_ = 0;
    int t_ = 0;
    bool done_ = false;
    bool truncated_ = false;
};

// Rolls a full episode; `act` maps (observation, prefix trajectory, t) to a
// bid ratio and is invoked once per remaining slot.
template <typename PolicyFn>
Trajectory rollout(const market::EnvironmentDay& day, PolicyFn&& act,
                   std::string policy_tag) {
    Episode ep(day);
    Trajectory traj;
    traj.day_id = day.day_id;
    traj.horizon = day.num_slots();
    traj.budget = day.budget;
    traj.roi_target = day.roi_target;
    traj.policy_tag = std::move(policy_tag);
    while (!ep.done()) {
        StepRecord rec;
        rec.obs = ep.observation();
        rec.slot_auctions = static_cast<int>(day.slot(ep.t()).size());
        rec.action = act(rec.obs, traj, ep.t());
        rec.slot = ep.step(rec.action);
        rec.reward = rec.slot.utility_sum;
        traj.steps.push_back(rec);
    }
    traj.truncated = ep.outcome().truncated;
    traj.outcome = ep.outcome();
    return traj;
}

// Recomputes the observation at step `t` from the day header and the logged
// prefix alone; used to assert observation purity.
SlotObservation observation_from_prefix(const Trajectory& traj, int t);

}  // namespace rcb::env
