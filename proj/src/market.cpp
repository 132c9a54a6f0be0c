#include "rcb/market.hpp"

#include <stdexcept>

namespace rcb::market {

PricingRule PricingRule::second_price() { return {PricingKind::kSecondPrice, {}}; }

PricingRule PricingRule::mixed(std::vector<double> schedule) {
    PricingRule r{PricingKind::kMixed, std::move(schedule)};
    for (double k : r.mix_schedule) {
        if (k < 0.0 || k > 1.0) throw std::invalid_argument("mix ratio outside [0,1]");
    }
    return r;
}

double PricingRule::k_for_slot(int slot) const {
    if (kind == PricingKind::kSecondPrice) return 0.0;
    if (slot < 0 || slot >= static_cast<int>(mix_schedule.size()))
        throw std::out_of_range("slot outside mix schedule");
    return mix_schedule[slot];
}

void PricingRule::validate(int num_slots) const {
    if (kind == PricingKind::kMixed &&
        static_cast<int>(mix_schedule.size()) != num_slots) {
        throw std::invalid_argument("mix schedule length != slot count");
    }
    for (double k : mix_schedule) {
        if (k < 0.0 || k > 1.0) throw std::invalid_argument("mix ratio outside [0,1]");
    }
}

std::span<const AuctionRecord> EnvironmentDay::slot(int t) const {
    if (t < 0 || t >= num_slots()) throw std::out_of_range("invalid slot index");
    const int lo = slot_boundaries[t];
    const int hi = slot_boundaries[t + 1];
    return {auctions.data() + lo, static_cast<std::size_t>(hi - lo)};
}

void EnvironmentDay::validate() const {
    if (budget <= 0.0) throw std::invalid_argument("budget must be positive");
    if (roi_target <= 0.0) throw std::invalid_argument("roi target must be positive");
    if (slot_boundaries.size() < 2) throw std::invalid_argument("need at least one slot");
    if (slot_boundaries.front() != 0 ||
        slot_boundaries.back() != static_cast<int>(auctions.size())) {
        throw std::invalid_argument("slot boundaries must cover all auctions");
    }
    for (std::size_t i = 1; i < slot_boundaries.size(); ++i) {
        if (slot_boundaries[i] <= slot_boundaries[i - 1])
            throw std::invalid_argument("slot boundaries must be strictly increasing");
    }
    for (const auto& a : auctions) {
        if (a.market_price <= 0.0) throw std::invalid_argument("market price must be positive");
        if (a.utility_estimate < 0.0 || a.realized_utility < 0.0)
            throw std::invalid_argument("utilities must be nonnegative");
    }
    pricing.validate(num_slots());
}

WinOutcome price_auction(double bid, const AuctionRecord& auction, const PricingRule& rule,
                         int slot) {
    if (bid <= auction.market_price) return {false, 0.0};
    if (rule.kind == PricingKind::kSecondPrice) return {true, auction.market_price};
    const double k = rule.k_for_slot(slot);
    return {true, k * bid + (1.0 - k) * auction.market_price};
}

SlotResult replay_slot_aggregate(const EnvironmentDay& day, int slot, double ratio) {
    SlotResult result;
    for (const AuctionRecord& a : day.slot(slot)) {
        const WinOutcome w = price_auction(ratio * a.utility_estimate, a, day.pricing, slot);
        if (w.won) {
            result.utility_sum += a.realized_utility;
            result.cost_sum += w.cost;
            ++result.win_count;
        }
    }
    return result;
}

}  // namespace rcb::market
