#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rcb/env.hpp"
#include "rcb/market.hpp"

namespace rcb::oracle {

// Candidate bid-ratio grid: index 0 is the abstain sentinel (ratio 0),
// followed by strictly increasing positive ratios.
struct RatioGrid {
    std::vector<double> ratios;

    static RatioGrid log_spaced(int count, double a_min, double a_max);
    // a_max from the given quantile of market_price/utility_estimate over the
    // day, a_min = a_max / span.
    static RatioGrid from_day(const market::EnvironmentDay& day, int count = 32,
                              double quantile = 0.99, double span = 100.0);
    static RatioGrid from_points(std::vector<double> points);

    int size() const { return static_cast<int>(ratios.size()); }
};

// Per-slot utility/cost sums for every grid ratio, built by replay without
// budget truncation (global-budget approximation; final solutions are
// re-validated by budget-enforced replay).
struct SlotAggregateTable {
    int slots = 0;
    int grid = 0;
    std::vector<double> utility;  // slots x grid
    std::vector<double> cost;

    double u(int t, int k) const { return utility[static_cast<std::size_t>(t) * grid + k]; }
    double c(int t, int k) const { return cost[static_cast<std::size_t>(t) * grid + k]; }
};

SlotAggregateTable build_slot_aggregates(const market::EnvironmentDay& day,
                                         const RatioGrid& grid);

struct ExpertSolution {
    std::vector<int> ratio_index;  // grid index per slot
    std::vector<double> ratios;
    double utility = 0.0;  // U*
    double cost = 0.0;     // C*
    double roi = 0.0;      // +inf when cost == 0
    double bound = 0.0;    // objective upper bound
    double gap = 0.0;      // bound - U*
    std::string method;    // bruteforce | relaxed
    bool converged = true;
    // Budget-enforced replay cross-check of the aggregate-table solution.
    double replay_gap_frac = 0.0;
    bool flagged = false;
};

struct InstanceTooLarge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Exact maximizer of sum U s.t. sum C <= B and sum U >= L * sum C over the
// grid; requires K^H <= 10^7. Ties break toward lower total cost, then the
// lexicographically smaller ratio sequence.
ExpertSolution solve_bruteforce(const SlotAggregateTable& table, double budget,
                                double roi_target);

struct RelaxConfig {
    int max_pivots = 20000;
    int max_round_combos = 4096;
};

// LP relaxation of the slot-choice problem with the two coupling constraints,
// solved exactly by simplex; fractional slots are rounded to the best
// feasible integral choice and the LP optimum is reported as the bound.
ExpertSolution solve_relaxed(const SlotAggregateTable& table, double budget,
                             double roi_target, const RelaxConfig& cfg = {});

// Best single ratio under full budget-enforced replay; returns (ratio, value).
std::pair<double, double> best_constant_ratio(const market::EnvironmentDay& day,
                                              const RatioGrid& grid, double budget,
                                              double roi_target);

struct OracleConfig {
    int grid_size = 32;
    double grid_quantile = 0.99;
    double grid_span = 100.0;
    double bruteforce_limit = 1e7;
    RelaxConfig relax;
    double flag_threshold = 0.005;  // replay mismatch fraction that flags a day
};

// End-to-end solve for one day: brute force when the instance fits, the LP
// relaxation otherwise, then re-validation by budget-enforced replay.
ExpertSolution solve_day(const market::EnvironmentDay& day, const RatioGrid& grid,
                         const OracleConfig& cfg = {});

// Expert demonstration regenerated by replaying the solved ratio sequence.
env::Trajectory expert_trajectory(const market::EnvironmentDay& day,
                                  const ExpertSolution& solution);

}  // namespace rcb::oracle
