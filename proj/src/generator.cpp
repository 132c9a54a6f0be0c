#include "rcb/generator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string_view>
#include <thread>

#include "rcb/rng.hpp"

namespace rcb::market {

namespace {

struct DayPlan {
    const char* split;
    const char* mech;
    double k_min;
    double k_max;
};

DayPlan plan_for(const GeneratorConfig& cfg, int day_index) {
    int i = day_index;
    if (i < cfg.train_gsp_days) return {"train", "GSP", 0.0, 0.0};
    i -= cfg.train_gsp_days;
    if (i < cfg.train_mix_days) return {"train", "MIX", cfg.train_k_min, cfg.train_k_max};
    i -= cfg.train_mix_days;
    if (i < cfg.test_gsp_days) return {"test-iid", "GSP", 0.0, 0.0};
    return {"test-ood", "MIX", cfg.test_k_min, cfg.test_k_max};
}

// Piecewise-linear interpolation through sampled inflection points,
// evaluated at slot centers and held constant within the slot.
std::vector<double> sample_k_schedule(const GeneratorConfig& cfg, const DayPlan& plan,
                                      Rng& rng) {
    const int h = cfg.horizon;
    std::vector<double> xs = {0.0, static_cast<double>(h)};
    for (int i = 0; i < cfg.inflection_count; ++i)
        xs.push_back(rng.uniform(0.0, static_cast<double>(h)));
    std::sort(xs.begin(), xs.end());
    std::vector<double> ys(xs.size());
    for (auto& y : ys) y = rng.uniform(plan.k_min, plan.k_max);

    std::vector<double> schedule(h);
    for (int t = 0; t < h; ++t) {
        const double x = t + 0.5;
        std::size_t seg = 1;
        while (seg + 1 < xs.size() && xs[seg] < x) ++seg;
        const double x0 = xs[seg - 1], x1 = xs[seg];
        const double w = x1 > x0 ? (x - x0) / (x1 - x0) : 0.0;
        schedule[t] = std::clamp(ys[seg - 1] + w * (ys[seg] - ys[seg - 1]), 0.0, 1.0);
    }
    return schedule;
}

// Constant-ratio ROI curve without budget accounting; used only to place the
// ROI target at a configured quantile of what is achievable.
double calibrate_roi_target(const EnvironmentDay& day, double quantile) {
    double max_ratio = 0.0;
    for (const auto& a : day.auctions) {
        if (a.utility_estimate > 0.0)
            max_ratio = std::max(max_ratio, a.market_price / a.utility_estimate);
    }
    if (max_ratio <= 0.0) return 1.0;
    std::vector<double> rois;
    const int sweep = 33;
    for (int i = 0; i < sweep; ++i) {
        const double frac = static_cast<double>(i + 1) / sweep;
        const double ratio = max_ratio * 1.05 * std::pow(1e-2, 1.0 - frac);
        double u = 0.0, c = 0.0;
        for (int t = 0; t < day.num_slots(); ++t) {
            const SlotResult r = replay_slot_aggregate(day, t, ratio);
            u += r.utility_sum;
            c += r.cost_sum;
        }
        if (c > 0.0) rois.push_back(u / c);
    }
    if (rois.empty()) return 1.0;
    std::sort(rois.begin(), rois.end());
    const double pos = quantile * (rois.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, rois.size() - 1);
    return rois[lo] + (pos - lo) * (rois[hi] - rois[lo]);
}

}  // namespace

void GeneratorConfig::validate() const {
    if (total_days() <= 0) throw std::invalid_argument("no days configured");
    if (auctions_per_day <= 0) throw std::invalid_argument("auctions_per_day must be positive");
    if (horizon <= 0) throw std::invalid_argument("horizon must be positive");
    if (auctions_per_day < horizon)
        throw std::invalid_argument("need at least one auction per slot");
    if (comp_amplitude < 0 || value_amplitude < 0)
        throw std::invalid_argument("amplitudes must be nonnegative");
    if (comp_period <= 0 || value_period <= 0)
        throw std::invalid_argument("periods must be positive");
    if (mp_log_scale < 0 || value_log_scale < 0)
        throw std::invalid_argument("log scales must be nonnegative");
    if (realization_prob <= 0.0 || realization_prob > 1.0)
        throw std::invalid_argument("realization_prob must be in (0,1]");
    if (inflection_count < 0) throw std::invalid_argument("inflection_count must be >= 0");
    auto check_range = [](double lo, double hi) {
        if (lo < 0.0 || hi > 1.0 || lo > hi)
            throw std::invalid_argument("k range must be within [0,1]");
    };
    check_range(train_k_min, train_k_max);
    check_range(test_k_min, test_k_max);
    if (budget_scale <= 0.0) throw std::invalid_argument("budget_scale must be positive");
    if (roi_quantile < 0.0 || roi_quantile > 1.0)
        throw std::invalid_argument("roi_quantile must be in [0,1]");
}

EnvironmentDay generate_day(const GeneratorConfig& cfg, int day_index) {
    const DayPlan plan = plan_for(cfg, day_index);
    Rng rng(derive_seed(cfg.master_seed, "data", static_cast<std::uint64_t>(day_index)));

    EnvironmentDay day;
    day.day_id = day_index;
    day.split_tag = plan.split;
    day.mech_tag = plan.mech;

    const int h = cfg.horizon;
    const int n = cfg.auctions_per_day;
    day.slot_boundaries.resize(h + 1);
    for (int t = 0; t <= h; ++t)
        day.slot_boundaries[t] = static_cast<int>(static_cast<std::int64_t>(n) * t / h);

    const double comp_phase = rng.uniform(0.0, 2.0 * M_PI);
    const double value_phase = rng.uniform(0.0, 2.0 * M_PI);
    std::vector<double> comp_shift(h), value_shift(h);
    for (int t = 0; t < h; ++t) {
        comp_shift[t] = cfg.comp_amplitude * std::sin(2.0 * M_PI * t / cfg.comp_period + comp_phase);
        value_shift[t] = cfg.value_amplitude * std::sin(2.0 * M_PI * t / cfg.value_period + value_phase);
    }

    if (std::string_view(plan.mech) == "MIX") {
        day.pricing = PricingRule::mixed(sample_k_schedule(cfg, plan, rng));
    } else {
        day.pricing = PricingRule::second_price();
    }

    day.auctions.resize(n);
    double total_market_value = 0.0;
    int slot = 0;
    for (int i = 0; i < n; ++i) {
        while (i >= day.slot_boundaries[slot + 1]) ++slot;
        AuctionRecord& a = day.auctions[i];
        a.index = i;
        a.market_price = rng.lognormal(cfg.mp_log_loc + comp_shift[slot], cfg.mp_log_scale);
        a.utility_estimate = rng.lognormal(cfg.value_log_loc + value_shift[slot],
                                           cfg.value_log_scale);
        a.realized_utility = rng.bernoulli(cfg.realization_prob)
                                 ? a.utility_estimate / cfg.realization_prob
                                 : 0.0;
        total_market_value += a.market_price;
    }

    day.budget = cfg.budget_scale * total_market_value;
    day.roi_target = calibrate_roi_target(day, cfg.roi_quantile);
    day.validate();
    return day;
}

std::vector<EnvironmentDay> generate_dataset(const GeneratorConfig& cfg, int workers) {
    cfg.validate();
    const int days = cfg.total_days();
    std::vector<EnvironmentDay> out(days);
    if (workers <= 1) {
        for (int d = 0; d < days; ++d) out[d] = generate_day(cfg, d);
        return out;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int d = next.fetch_add(1); d < days; d = next.fetch_add(1))
                out[d] = generate_day(cfg, d);
        });
    }
    for (auto& t : pool) t.join();
    return out;
}

}  // namespace rcb::market
