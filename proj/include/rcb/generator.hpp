#pragma once

#include <cstdint>
#include <vector>

#include "rcb/market.hpp"

namespace rcb::market {

// Synthetic auction-day generator. Competition and value intensity follow
// per-day sinusoids across slots; marginals are log-normal around the
// sinusoid-modulated location. Mixed days draw a piecewise-linear k schedule
// through sampled inflection points. Output is a pure function of the config.
struct GeneratorConfig {
    int train_gsp_days = 8;
    int train_mix_days = 16;
    int test_gsp_days = 8;
    int test_mix_days = 12;
    int auctions_per_day = 20000;
    int horizon = 24;  // H

    double comp_amplitude = 0.35;
    double comp_period = 12.0;  // slots
    double value_amplitude = 0.25;
    double value_period = 8.0;

    double mp_log_loc = 0.0;
    double mp_log_scale = 0.45;
    double value_log_loc = 0.0;
    double value_log_scale = 0.35;
    double realization_prob = 0.6;  // realized = value * Bernoulli(p), mean-preserving

    int inflection_count = 3;
    double train_k_min = 0.05;
    double train_k_max = 0.6;
    double test_k_min = 0.55;
    double test_k_max = 0.95;

    // Per-day constraint calibration: B = budget_scale * total market value,
    // L at roi_quantile of the constant-ratio achievable ROI curve.
    double budget_scale = 0.5;
    double roi_quantile = 0.6;

    std::uint64_t master_seed = 1;

    int total_days() const {
        return train_gsp_days + train_mix_days + test_gsp_days + test_mix_days;
    }
    void validate() const;
};

std::vector<EnvironmentDay> generate_dataset(const GeneratorConfig& cfg, int workers = 1);

// Exposed for tests: one day, deterministic in (cfg, day_index).
EnvironmentDay generate_day(const GeneratorConfig& cfg, int day_index);

}  // namespace rcb::market
