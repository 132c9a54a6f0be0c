#pragma once

#include <span>
#include <vector>

#include "rcb/env.hpp"
#include "rcb/miro.hpp"
#include "rcb/rng.hpp"

namespace rcb::baselines {

// Log-ratio PID feedback controller tracking two signals: the relative ROI
// error (ROI - L)/L once any cost has accrued, and a pacing error against a
// linear spend schedule. Each signal runs its own PID recurrence on the log
// ratio and the more restrictive (lower) correction wins.
struct PidConfig {
    double kp = 0.2;
    double ki = 0.02;
    double kd = 0.0;
    double initial_log_ratio = -2.3;  // ~0.1
    double integral_clamp = 5.0;
    double log_ratio_min = -9.0;
    double log_ratio_max = 7.0;
};

struct PidChannel {
    double integral = 0.0;
    double prev_error = 0.0;
    bool primed = false;

    // kp*e + ki*int(e) + kd*de with anti-windup clamping.
    double update(double error, const PidConfig& cfg);
};

struct PidState {
    PidConfig cfg;
    double log_ratio;
    PidChannel roi;
    PidChannel pacing;

    explicit PidState(const PidConfig& config = {})
        : cfg(config), log_ratio(config.initial_log_ratio) {}
};

// One control step from the freshly observed slot statistics; returns the
// ratio to use for the next slot.
double pid_step(PidState& state, const env::SlotObservation& obs, double roi_target);

// Full-day PID rollout through the shared environment harness.
env::Trajectory pid_rollout(const market::EnvironmentDay& day, const PidConfig& cfg = {});

// Cross-entropy method over a constant log ratio.
struct CemConfig {
    double initial_mean = -2.3;
    double initial_std = 1.0;
    int population = 24;
    double elite_fraction = 0.25;
    double std_floor = 1e-3;
    int replan_window = 5;  // trailing days used for re-planning
    int iterations_per_day = 1;
};

struct CemState {
    double mean;
    double std;
    int iteration = 0;
    std::vector<double> population;  // last sampled candidates (log ratios)

    explicit CemState(const CemConfig& cfg = {})
        : mean(cfg.initial_mean), std(cfg.initial_std) {}
};

void cem_sample_population(CemState& state, const CemConfig& cfg, Rng& rng);
// Refits the Gaussian to the elite fraction of the sampled population.
void cem_iterate(CemState& state, const CemConfig& cfg, std::span<const double> scores);

// Online CEM over an ordered day sequence: before each day the state is
// re-planned against the trailing window (scored offline with the experts'
// hindsight values), then the day is played with the current mean.
std::vector<env::Trajectory> cem_run(std::span<const miro::DayBundle> days,
                                     const CemConfig& cfg, Rng& rng);

}  // namespace rcb::baselines
