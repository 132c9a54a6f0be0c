#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rcb::metrics {

struct MetricsConfig {
    double gamma = 0.02;  // max tolerated ROI violation
    double zeta = 0.05;   // payoff rate discounting tolerated violations
    void validate() const;
};

// U / U*; caller excludes days with U* == 0.
double competitive_ratio(double utility, double expert_utility);

// Violation in whole percentage points: ceil(100 * max(1 - ROI/L, 0)),
// 0 when feasible.
int tolerance_level(double roi, double roi_target, const MetricsConfig& cfg);

struct DayScore {
    int day_id = 0;
    std::string split;  // train | test-iid | test-ood
    std::string mech;   // GSP | MIX
    double utility = 0.0;
    double expert_utility = 0.0;
    double roi = 0.0;
    double roi_target = 0.0;
    int lambda = 0;
    bool tolerated = false;  // ROI >= L(1-gamma)
    double cr = 0.0;
    double tacr = 0.0;         // discounted, indicator applied
    double cr_at_gamma = 0.0;  // undiscounted, indicator applied
    bool included = true;      // expert_utility > 0
};

DayScore score_day(int day_id, const std::string& split, const std::string& mech,
                   double utility, double expert_utility, double roi, double roi_target,
                   const MetricsConfig& cfg);

// Mean TACR over included days; absent when no day qualifies.
std::optional<double> tacr(std::span<const DayScore> days, const MetricsConfig& cfg);
std::optional<double> cr_at_gamma(std::span<const DayScore> days, const MetricsConfig& cfg);

struct RunResult {
    std::string algo;
    std::uint64_t seed = 0;
    std::vector<DayScore> days;
};

struct SplitAggregate {
    std::vector<double> per_seed_tacr;  // one entry per run, run order
    std::vector<double> per_seed_cr;
    double median_tacr = 0.0;
    double mean_tacr = 0.0;
    double median_cr = 0.0;
    int runs = 0;
};

struct MetricsReport {
    MetricsConfig config;
    // algo -> split key -> aggregate; split keys are "all", "<split>",
    // "<split>|<mech>".
    std::map<std::string, std::map<std::string, SplitAggregate>> by_algo;
};

MetricsReport aggregate_report(std::span<const RunResult> runs, const MetricsConfig& cfg);

double median(std::vector<double> values);

}  // namespace rcb::metrics
