#include "rcb/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rcb/metrics.hpp"

namespace rcb::baselines {

double PidChannel::update(double error, const PidConfig& cfg) {
    integral = std::clamp(integral + error, -cfg.integral_clamp, cfg.integral_clamp);
    const double derivative = primed ? error - prev_error : 0.0;
    prev_error = error;
    primed = true;
    return cfg.kp * error + cfg.ki * integral + cfg.kd * derivative;
}

double pid_step(PidState& state, const env::SlotObservation& obs, double roi_target) {
    // Negative when violating the target; inactive until any cost accrues.
    const double roi_error =
        obs.cum_cost > 0.0 ? (obs.roi - roi_target) / roi_target : 0.0;
    // Positive when behind the linear spend schedule.
    const double pacing_error = obs.time_frac - (1.0 - obs.budget_remaining_frac);

    const double roi_delta = state.roi.update(roi_error, state.cfg);
    const double pacing_delta = state.pacing.update(pacing_error, state.cfg);
    state.log_ratio = std::clamp(state.log_ratio + std::min(roi_delta, pacing_delta),
                                 state.cfg.log_ratio_min, state.cfg.log_ratio_max);
    return std::exp(state.log_ratio);
}

env::Trajectory pid_rollout(const market::EnvironmentDay& day, const PidConfig& cfg) {
    PidState state(cfg);
    double ratio = std::exp(state.log_ratio);
    return env::rollout(
        day,
        [&](const env::SlotObservation& obs, const env::Trajectory&, int t) {
            if (t == 0) return std::exp(state.log_ratio);
            ratio = pid_step(state, obs, day.roi_target);
            return ratio;
        },
        "pid");
}

void cem_sample_population(CemState& state, const CemConfig& cfg, Rng& rng) {
    state.population.resize(cfg.population);
    for (double& x : state.population) x = rng.normal(state.mean, state.std);
}

void cem_iterate(CemState& state, const CemConfig& cfg, std::span<const double> scores) {
    if (scores.size() != state.population.size())
        throw std::invalid_argument("cem_iterate: score/population size mismatch");
    const int n = static_cast<int>(scores.size());
    const int elites = std::max(1, static_cast<int>(std::ceil(cfg.elite_fraction * n)));
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    double mean = 0.0;
    for (int i = 0; i < elites; ++i) mean += state.population[order[i]];
    mean /= elites;
    double var = 0.0;
    for (int i = 0; i < elites; ++i) {
        const double d = state.population[order[i]] - mean;
        var += d * d;
    }
    var /= elites;
    state.mean = mean;
    state.std = std::max(cfg.std_floor, std::sqrt(var));
    ++state.iteration;
}

namespace {
// Hindsight day score of a constant ratio: TACR-style value with infeasible
// days scored zero.
double day_score(const miro::DayBundle& bundle, double log_ratio,
                 const metrics::MetricsConfig& mcfg) {
    if (bundle.expert.utility <= 0.0) return 0.0;
    env::Episode ep(bundle.day);
    const double ratio = std::exp(log_ratio);
    while (!ep.done()) ep.step(ratio);
    const env::EpisodeOutcome out = ep.outcome();
    const metrics::DayScore s = metrics::score_day(
        bundle.day.day_id, bundle.day.split_tag, bundle.day.mech_tag, out.total_utility,
        bundle.expert.utility, out.roi, bundle.day.roi_target, mcfg);
    return s.tacr;
}
}  // namespace

std::vector<env::Trajectory> cem_run(std::span<const miro::DayBundle> days,
                                     const CemConfig& cfg, Rng& rng) {
    metrics::MetricsConfig mcfg;
    CemState state(cfg);
    std::vector<env::Trajectory> out;
    out.reserve(days.size());
    for (std::size_t d = 0; d < days.size(); ++d) {
        const std::size_t lo = d > static_cast<std::size_t>(cfg.replan_window)
                                   ? d - cfg.replan_window
                                   : 0;
        if (d > lo) {
            for (int it = 0; it < cfg.iterations_per_day; ++it) {
                cem_sample_population(state, cfg, rng);
                std::vector<double> scores(state.population.size(), 0.0);
                for (std::size_t c = 0; c < state.population.size(); ++c) {
                    for (std::size_t w = lo; w < d; ++w)
                        scores[c] += day_score(days[w], state.population[c], mcfg);
                    scores[c] /= static_cast<double>(d - lo);
                }
                cem_iterate(state, cfg, scores);
            }
        }
        const double ratio = std::exp(state.mean);
        out.push_back(env::rollout(
            days[d].day,
            [ratio](const env::SlotObservation&, const env::Trajectory&, int) {
                return ratio;
            },
            "cem"));
    }
    return out;
}

}  // namespace rcb::baselines
