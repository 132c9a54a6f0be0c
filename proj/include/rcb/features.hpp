#pragma once

#include "rcb/env.hpp"
#include "rcb/tensor.hpp"

namespace rcb::features {

inline constexpr int kObsFeatDim = 6;
inline constexpr int kStepFeatDim = 8;  // obs features + action + reward

// Day-level constants the agent legitimately knows.
struct DayContext {
    double budget = 0.0;
    double roi_target = 0.0;
    int horizon = 0;

    static DayContext of(const market::EnvironmentDay& day) {
        return {day.budget, day.roi_target, day.num_slots()};
    }
    static DayContext of(const env::Trajectory& traj) {
        return {traj.budget, traj.roi_target, traj.horizon};
    }
};

// Bounded, scale-stable featurization of an observation. Utilities are
// normalized by L*B (the utility needed to meet the ROI target at full
// spend), which is known from the day header; everything stays causal.
diff::Tensor obs_features(const env::SlotObservation& obs, const DayContext& ctx);

// [obs features, log1p(action), normalized slot reward]
diff::Tensor step_features(const env::StepRecord& step, const DayContext& ctx);

// Behavioral-cloning / action-likelihood target in log-ratio space. Abstain
// actions (ratio 0) are floored at `floor_ratio` because the policy's exp
// transform cannot emit zero.
double action_target(double ratio, double floor_ratio);

}  // namespace rcb::features
