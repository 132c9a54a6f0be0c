#include "rcb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rcb::metrics {

void MetricsConfig::validate() const {
    if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("gamma must be in [0,1)");
    if (zeta < 0.0) throw std::invalid_argument("zeta must be nonnegative");
}

double competitive_ratio(double utility, double expert_utility) {
    if (expert_utility <= 0.0)
        throw std::invalid_argument("competitive_ratio requires positive expert value");
    return utility / expert_utility;
}

int tolerance_level(double roi, double roi_target, const MetricsConfig&) {
    if (roi_target <= 0.0) throw std::invalid_argument("roi target must be positive");
    const double violation = std::max(1.0 - roi / roi_target, 0.0);
    // De-jitter before ceil so that e.g. a violation of exactly 1% maps to 1.
    const double points = std::ceil(100.0 * violation - 1e-9);
    return std::max(0, static_cast<int>(points));
}

DayScore score_day(int day_id, const std::string& split, const std::string& mech,
                   double utility, double expert_utility, double roi, double roi_target,
                   const MetricsConfig& cfg) {
    DayScore s;
    s.day_id = day_id;
    s.split = split;
    s.mech = mech;
    s.utility = utility;
    s.expert_utility = expert_utility;
    s.roi = roi;
    s.roi_target = roi_target;
    s.included = expert_utility > 0.0;
    s.lambda = tolerance_level(roi, roi_target, cfg);
    s.tolerated = roi >= roi_target * (1.0 - cfg.gamma);
    if (!s.included) return s;
    s.cr = competitive_ratio(utility, expert_utility);
    const double discount = std::pow(1.0 + cfg.zeta, static_cast<double>(s.lambda));
    s.tacr = s.tolerated ? utility / discount / expert_utility : 0.0;
    s.cr_at_gamma = s.tolerated ? s.cr : 0.0;
    return s;
}

namespace {
std::optional<double> mean_of(std::span<const DayScore> days, double DayScore::*field) {
    double acc = 0.0;
    int n = 0;
    for (const DayScore& d : days) {
        if (!d.included) continue;
        acc += d.*field;
        ++n;
    }
    if (n == 0) return std::nullopt;
    return acc / n;
}
}  // namespace

std::optional<double> tacr(std::span<const DayScore> days, const MetricsConfig&) {
    return mean_of(days, &DayScore::tacr);
}

std::optional<double> cr_at_gamma(std::span<const DayScore> days, const MetricsConfig&) {
    return mean_of(days, &DayScore::cr_at_gamma);
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of empty set");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

MetricsReport aggregate_report(std::span<const RunResult> runs, const MetricsConfig& cfg) {
    cfg.validate();
    if (runs.empty()) throw std::invalid_argument("aggregate_report needs at least one run");
    MetricsReport report;
    report.config = cfg;
    for (const RunResult& run : runs) {
        // Collect the split keys present in this run.
        std::vector<std::string> keys = {"all"};
        for (const DayScore& d : run.days) {
            const std::string split_key = d.split;
            const std::string mech_key = d.split + "|" + d.mech;
            if (std::find(keys.begin(), keys.end(), split_key) == keys.end())
                keys.push_back(split_key);
            if (std::find(keys.begin(), keys.end(), mech_key) == keys.end())
                keys.push_back(mech_key);
        }
        for (const std::string& key : keys) {
            std::vector<DayScore> subset;
            for (const DayScore& d : run.days) {
                const bool match = key == "all" || key == d.split ||
                                   key == d.split + "|" + d.mech;
                if (match) subset.push_back(d);
            }
            const auto t = tacr(subset, cfg);
            const auto c = cr_at_gamma(subset, cfg);
            if (!t || !c) continue;  // missing splits reported as absent
            SplitAggregate& agg = report.by_algo[run.algo][key];
            agg.per_seed_tacr.push_back(*t);
            agg.per_seed_cr.push_back(*c);
        }
    }
    for (auto& [algo, splits] : report.by_algo) {
        for (auto& [key, agg] : splits) {
            agg.runs = static_cast<int>(agg.per_seed_tacr.size());
            agg.median_tacr = median(agg.per_seed_tacr);
            agg.median_cr = median(agg.per_seed_cr);
            double acc = 0.0;
            for (double v : agg.per_seed_tacr) acc += v;
            agg.mean_tacr = acc / agg.runs;
        }
    }
    return report;
}

}  // namespace rcb::metrics
