#include "rcb/features.hpp"

#include <algorithm>
#include <cmath>

namespace rcb::features {

namespace {
double rel_cap(double value, double scale, double cap) {
    if (scale <= 0.0) return 0.0;
    return std::min(value / scale, cap) / cap;
}
}  // namespace

diff::Tensor obs_features(const env::SlotObservation& obs, const DayContext& ctx) {
    const double target_scale = ctx.roi_target * ctx.budget;
    return diff::Tensor::vector({
        obs.time_frac,
        obs.win_rate,
        rel_cap(obs.roi, ctx.roi_target, 4.0),
        rel_cap(obs.cum_utility, target_scale, 4.0),
        1.0 - obs.budget_remaining_frac,
        std::log1p(obs.prev_ratio),
    });
}

diff::Tensor step_features(const env::StepRecord& step, const DayContext& ctx) {
    diff::Tensor obs = obs_features(step.obs, ctx);
    const double target_scale = ctx.roi_target * ctx.budget;
    std::vector<double> v = obs.values();
    v.push_back(std::log1p(step.action));
    v.push_back(rel_cap(step.reward * ctx.horizon, target_scale, 4.0));
    return diff::Tensor::vector(std::move(v));
}

double action_target(double ratio, double floor_ratio) {
    return std::log(std::max(ratio, floor_ratio));
}

}  // namespace rcb::features
