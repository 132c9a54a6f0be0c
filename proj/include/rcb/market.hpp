#pragma once

#include <span>
#include <string>
#include <vector>

namespace rcb::market {

// One sealed-bid impression opportunity.
struct AuctionRecord {
    double utility_estimate = 0.0;  // E[u|x], unitless value
    double realized_utility = 0.0;  // stochastic feedback
    double market_price = 0.0;      // highest competing bid, currency
    int index = 0;                  // ordinal position within the day
};

enum class PricingKind { kSecondPrice, kMixed };

// Second price or linear second-first mix. In the mixed rule the winner pays
// k*bid + (1-k)*market_price with a per-slot schedule k_t in [0,1]; k == 0
// reproduces second price exactly and k == 1 charges the bid.
struct PricingRule {
    PricingKind kind = PricingKind::kSecondPrice;
    std::vector<double> mix_schedule;  // per-slot k, Mixed only

    static PricingRule second_price();
    static PricingRule mixed(std::vector<double> schedule);

    double k_for_slot(int slot) const;
    void validate(int num_slots) const;
};

// A day-long ordered auction stream with its constraints and slotting.
struct EnvironmentDay {
    std::vector<AuctionRecord> auctions;
    PricingRule pricing;
    double budget = 0.0;      // B > 0
    double roi_target = 0.0;  // L > 0
    int day_id = 0;
    std::string split_tag;  // train | test-iid | test-ood
    std::string mech_tag;   // GSP | MIX
    std::vector<int> slot_boundaries;  // H+1 strictly increasing cut points

    int num_slots() const { return static_cast<int>(slot_boundaries.size()) - 1; }
    std::span<const AuctionRecord> slot(int t) const;
    void validate() const;
};

struct WinOutcome {
    bool won = false;
    double cost = 0.0;
};

// Win iff bid > market price; winner cost per the pricing rule, losers pay 0.
WinOutcome price_auction(double bid, const AuctionRecord& auction, const PricingRule& rule,
                         int slot);

struct SlotResult {
    double utility_sum = 0.0;
    double cost_sum = 0.0;
    int win_count = 0;
};

// Replays one slot with bids b_i = ratio * utility_estimate_i. Sums realized
// utility and cost over won auctions; budget accounting is the caller's job.
SlotResult replay_slot_aggregate(const EnvironmentDay& day, int slot, double ratio);

}  // namespace rcb::market
