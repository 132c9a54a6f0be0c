#include "rcb/env.hpp"

#include <limits>
#include <stdexcept>

namespace rcb::env {

double episode_reward(const EpisodeOutcome& outcome, double roi_target, double /*budget*/) {
    return outcome.roi >= roi_target ? outcome.total_utility : 0.0;
}

Episode::Episode(const market::EnvironmentDay& day) : day_(&day) {
    day.validate();
    obs_ = SlotObservation{};
}

market::SlotResult Episode::step(double ratio) {
    if (done_) throw std::logic_error("step on finished episode");
    if (ratio < 0.0) throw std::invalid_argument("bid ratio must be nonnegative");

    market::SlotResult result;
    const int t = t_;
    for (const market::AuctionRecord& a : day_->slot(t)) {
        ++seen_;
        const double bid = ratio * a.utility_estimate;
        const market::WinOutcome w = market::price_auction(bid, a, day_->pricing, t);
        if (!w.won) continue;
        if (cum_cost_ + w.cost > day_->budget) {
            // Bid suppressed; the rest of the day is forfeited.
            truncated_ = true;
            done_ = true;
            break;
        }
        cum_cost_ += w.cost;
        cum_utility_ += a.realized_utility;
        ++wins_;
        result.utility_sum += a.realized_utility;
        result.cost_sum += w.cost;
        ++result.win_count;
    }

    ++t_;
    if (t_ >= day_->num_slots()) done_ = true;

    obs_.time_frac = static_cast<double>(t_) / day_->num_slots();
    obs_.win_rate = seen_ > 0 ? static_cast<double>(wins_) / seen_ : 0.0;
    obs_.roi = cum_cost_ > 0.0 ? cum_utility_ / cum_cost_ : 0.0;
    obs_.cum_utility = cum_utility_;
    obs_.cum_cost = cum_cost_;
    obs_.budget_remaining_frac = (day_->budget - cum_cost_) / day_->budget;
    obs_.prev_ratio = ratio;
    return result;
}

EpisodeOutcome Episode::outcome() const {
    EpisodeOutcome out;
    out.total_utility = cum_utility_;
    out.total_cost = cum_cost_;
    out.roi = cum_cost_ > 0.0 ? cum_utility_ / cum_cost_
                              : std::numeric_limits<double>::infinity();
    out.roi_feasible = out.roi >= day_->roi_target;
    out.budget_feasible = cum_cost_ <= day_->budget;
    out.truncated = truncated_;
    out.steps = t_;
    return out;
}

SlotObservation observation_from_prefix(const Trajectory& traj, int t) {
    if (t < 0 || t > traj.length()) throw std::out_of_range("prefix index out of range");
    SlotObservation obs;
    double u = 0.0, c = 0.0;
    int wins = 0, seen = 0;
    for (int i = 0; i < t; ++i) {
        const StepRecord& s = traj.steps[i];
        u += s.slot.utility_sum;
        c += s.slot.cost_sum;
        wins += s.slot.win_count;
        seen += s.slot_auctions;
    }
    obs.time_frac = static_cast<double>(t) / traj.horizon;
    obs.win_rate = seen > 0 ? static_cast<double>(wins) / seen : 0.0;
    obs.roi = c > 0.0 ? u / c : 0.0;
    obs.cum_utility = u;
    obs.cum_cost = c;
    obs.budget_remaining_frac = (traj.budget - c) / traj.budget;
    obs.prev_ratio = t > 0 ? traj.steps[t - 1].action : 0.0;
    return obs;
}

}  // namespace rcb::env
