#include "rcb/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rcb/simplex.hpp"

namespace rcb::oracle {

namespace {

constexpr double kFeasTol = 1e-9;

bool feasible(double u, double c, double budget, double roi_target) {
    return c <= budget + kFeasTol && u >= roi_target * c - kFeasTol;
}

struct Candidate {
    std::vector<int> choice;
    double u = 0.0;
    double c = 0.0;
    bool valid = false;
};

void evaluate(const SlotAggregateTable& table, const std::vector<int>& choice, double& u,
              double& c) {
    u = 0.0;
    c = 0.0;
    for (int t = 0; t < table.slots; ++t) {
        u += table.u(t, choice[t]);
        c += table.c(t, choice[t]);
    }
}

// Keeps `best` at the feasible maximizer with ties broken toward lower cost;
// lexicographic order follows from visiting choices in ascending order and
// requiring strict improvement.
void consider(Candidate& best, const std::vector<int>& choice, double u, double c,
              double budget, double roi_target) {
    if (!feasible(u, c, budget, roi_target)) return;
    if (!best.valid || u > best.u || (u == best.u && c < best.c)) {
        best.choice = choice;
        best.u = u;
        best.c = c;
        best.valid = true;
    }
}

// Deterministic single-slot improvement passes until a fixpoint; keeps
// feasibility at every move.
void local_search(const SlotAggregateTable& table, double budget, double roi_target,
                  std::vector<int>& choice, double& u, double& c) {
    bool improved = true;
    while (improved) {
        improved = false;
        for (int t = 0; t < table.slots; ++t) {
            const int cur = choice[t];
            int best_k = cur;
            double best_u = u, best_c = c;
            for (int k = 0; k < table.grid; ++k) {
                if (k == cur) continue;
                const double nu = u - table.u(t, cur) + table.u(t, k);
                const double nc = c - table.c(t, cur) + table.c(t, k);
                if (!feasible(nu, nc, budget, roi_target)) continue;
                if (nu > best_u || (nu == best_u && nc < best_c)) {
                    best_u = nu;
                    best_c = nc;
                    best_k = k;
                }
            }
            if (best_k != cur) {
                choice[t] = best_k;
                u = best_u;
                c = best_c;
                improved = true;
            }
        }
    }
}

ExpertSolution make_solution(const SlotAggregateTable& table, const RatioGrid* grid,
                             const std::vector<int>& choice, double u, double c,
                             std::string method) {
    ExpertSolution s;
    s.ratio_index = choice;
    if (grid) {
        s.ratios.reserve(choice.size());
        for (int k : choice) s.ratios.push_back(grid->ratios[k]);
    }
    s.utility = u;
    s.cost = c;
    s.roi = c > 0.0 ? u / c : std::numeric_limits<double>::infinity();
    s.method = std::move(method);
    (void)table;
    return s;
}

}  // namespace

RatioGrid RatioGrid::log_spaced(int count, double a_min, double a_max) {
    if (count < 1 || a_min <= 0.0 || a_max < a_min)
        throw std::invalid_argument("bad ratio grid bounds");
    std::vector<double> pts;
    pts.reserve(count + 1);
    pts.push_back(0.0);
    if (count == 1) {
        pts.push_back(a_max);
    } else {
        const double step = std::log(a_max / a_min) / (count - 1);
        for (int i = 0; i < count; ++i) pts.push_back(a_min * std::exp(step * i));
    }
    return from_points(std::move(pts));
}

RatioGrid RatioGrid::from_day(const market::EnvironmentDay& day, int count, double quantile,
                              double span) {
    std::vector<double> thresholds;
    thresholds.reserve(day.auctions.size());
    for (const auto& a : day.auctions) {
        if (a.utility_estimate > 0.0)
            thresholds.push_back(a.market_price / a.utility_estimate);
    }
    if (thresholds.empty()) return log_spaced(count, 1e-2, 1.0);
    std::sort(thresholds.begin(), thresholds.end());
    const std::size_t idx = std::min(thresholds.size() - 1,
                                     static_cast<std::size_t>(quantile * thresholds.size()));
    const double a_max = std::max(1e-9, thresholds[idx] * 1.02);
    return log_spaced(count, a_max / span, a_max);
}

RatioGrid RatioGrid::from_points(std::vector<double> points) {
    if (points.size() < 2 || points.front() != 0.0)
        throw std::invalid_argument("ratio grid must start at the abstain sentinel 0");
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (points[i] <= points[i - 1])
            throw std::invalid_argument("ratio grid must be strictly increasing");
    }
    return RatioGrid{std::move(points)};
}

SlotAggregateTable build_slot_aggregates(const market::EnvironmentDay& day,
                                         const RatioGrid& grid) {
    SlotAggregateTable table;
    table.slots = day.num_slots();
    table.grid = grid.size();
    table.utility.assign(static_cast<std::size_t>(table.slots) * table.grid, 0.0);
    table.cost.assign(static_cast<std::size_t>(table.slots) * table.grid, 0.0);
    for (int t = 0; t < table.slots; ++t) {
        for (int k = 1; k < table.grid; ++k) {
            const market::SlotResult r = market::replay_slot_aggregate(day, t, grid.ratios[k]);
            table.utility[static_cast<std::size_t>(t) * table.grid + k] = r.utility_sum;
            table.cost[static_cast<std::size_t>(t) * table.grid + k] = r.cost_sum;
        }
    }
    return table;
}

ExpertSolution solve_bruteforce(const SlotAggregateTable& table, double budget,
                                double roi_target) {
    const int h = table.slots;
    const int k = table.grid;
    if (std::pow(static_cast<double>(k), h) > 1e7)
        throw InstanceTooLarge("brute-force instance exceeds 10^7 combinations");

    // Suffix bound on remaining utility for pruning.
    std::vector<double> suffix_max(h + 1, 0.0);
    for (int t = h - 1; t >= 0; --t) {
        double mx = 0.0;
        for (int j = 0; j < k; ++j) mx = std::max(mx, table.u(t, j));
        suffix_max[t] = suffix_max[t + 1] + mx;
    }

    Candidate best;
    std::vector<int> choice(h, 0);
    // DFS over grid choices in ascending order per slot.
    std::vector<double> pu(h + 1, 0.0), pc(h + 1, 0.0);
    int depth = 0;
    choice.assign(h, -1);
    while (depth >= 0) {
        if (depth == h) {
            consider(best, choice, pu[h], pc[h], budget, roi_target);
            --depth;
            continue;
        }
        int next = choice[depth] + 1;
        if (next >= k) {
            choice[depth] = -1;
            --depth;
            continue;
        }
        choice[depth] = next;
        pu[depth + 1] = pu[depth] + table.u(depth, next);
        pc[depth + 1] = pc[depth] + table.c(depth, next);
        if (pc[depth + 1] > budget + kFeasTol) continue;  // cost only grows ahead of us
        if (best.valid && pu[depth + 1] + suffix_max[depth + 1] <= best.u) continue;
        ++depth;
    }

    if (!best.valid) {
        // Abstain on every slot is always feasible.
        best.choice.assign(h, 0);
        best.u = 0.0;
        best.c = 0.0;
        best.valid = true;
    }
    ExpertSolution s = make_solution(table, nullptr, best.choice, best.u, best.c, "bruteforce");
    s.bound = s.utility;
    s.gap = 0.0;
    return s;
}

ExpertSolution solve_relaxed(const SlotAggregateTable& table, double budget,
                             double roi_target, const RelaxConfig& cfg) {
    const int h = table.slots;
    const int k = table.grid;
    const int n = h * k + 2;  // z variables plus budget/roi slacks
    const int m = h + 2;

    LpProblem lp;
    lp.rows = m;
    lp.cols = n;
    lp.a.assign(static_cast<std::size_t>(m) * n, 0.0);
    lp.b.assign(m, 0.0);
    lp.c.assign(n, 0.0);
    auto var = [k](int t, int j) { return t * k + j; };
    for (int t = 0; t < h; ++t) {
        for (int j = 0; j < k; ++j) {
            lp.at(t, var(t, j)) = 1.0;
            lp.at(h, var(t, j)) = table.c(t, j);
            lp.at(h + 1, var(t, j)) = table.u(t, j) - roi_target * table.c(t, j);
            lp.c[var(t, j)] = table.u(t, j);
        }
        lp.b[t] = 1.0;
    }
    const int s_budget = h * k;
    const int s_roi = h * k + 1;
    lp.at(h, s_budget) = 1.0;
    lp.at(h + 1, s_roi) = -1.0;
    lp.b[h] = budget;
    lp.b[h + 1] = 0.0;

    // Feasible start: abstain everywhere (z_{t,0} = 1, slack = B, ROI slack 0).
    std::vector<int> basis;
    for (int t = 0; t < h; ++t) basis.push_back(var(t, 0));
    basis.push_back(s_budget);
    basis.push_back(s_roi);

    const LpResult res = simplex_solve(lp, std::move(basis), cfg.max_pivots);

    const bool optimal = res.status == LpStatus::kOptimal;
    // Trivial per-slot bound remains valid if the iteration budget ran out.
    double bound;
    if (optimal) {
        bound = res.objective;
    } else {
        bound = 0.0;
        for (int t = 0; t < h; ++t) {
            double mx = 0.0;
            for (int j = 0; j < k; ++j) mx = std::max(mx, table.u(t, j));
            bound += mx;
        }
    }

    // Candidate integral choices per slot: the LP support, plus a dual-greedy
    // pick from the optimal multipliers.
    std::vector<std::vector<int>> support(h);
    std::vector<int> frac_slots;
    for (int t = 0; t < h; ++t) {
        int argmax = 0;
        double zmax = -1.0;
        for (int j = 0; j < k; ++j) {
            const double z = res.x[var(t, j)];
            if (z > 1e-9) support[t].push_back(j);
            if (z > zmax) {
                zmax = z;
                argmax = j;
            }
        }
        if (support[t].empty()) support[t].push_back(argmax);
        if (support[t].size() > 1) frac_slots.push_back(t);
    }

    std::vector<Candidate> candidates;
    {
        // Enumerate combinations over fractional slots, integral slots pinned.
        std::vector<int> base(h);
        for (int t = 0; t < h; ++t) base[t] = support[t][0];
        long combos = 1;
        for (int t : frac_slots) combos *= static_cast<long>(support[t].size());
        if (combos <= cfg.max_round_combos) {
            std::vector<std::size_t> idx(frac_slots.size(), 0);
            while (true) {
                std::vector<int> choice = base;
                for (std::size_t i = 0; i < frac_slots.size(); ++i)
                    choice[frac_slots[i]] = support[frac_slots[i]][idx[i]];
                Candidate cand;
                cand.choice = std::move(choice);
                evaluate(table, cand.choice, cand.u, cand.c);
                candidates.push_back(std::move(cand));
                std::size_t carry = 0;
                while (carry < idx.size()) {
                    if (++idx[carry] < support[frac_slots[carry]].size()) break;
                    idx[carry] = 0;
                    ++carry;
                }
                if (carry == idx.size()) break;
                if (idx.empty()) break;
            }
        } else {
            candidates.push_back({base, 0, 0, false});
            evaluate(table, candidates.back().choice, candidates.back().u,
                     candidates.back().c);
        }
    }
    if (optimal) {
        // Dual-greedy candidate: per-slot argmax of the Lagrangian score.
        const double mu = std::max(0.0, res.duals[h]);
        const double nu = std::max(0.0, -res.duals[h + 1]);
        std::vector<int> choice(h, 0);
        for (int t = 0; t < h; ++t) {
            double best_score = 0.0;
            int best_j = 0;
            for (int j = 0; j < k; ++j) {
                const double score = table.u(t, j) - mu * table.c(t, j) +
                                     nu * (table.u(t, j) - roi_target * table.c(t, j));
                if (score > best_score + 1e-12) {
                    best_score = score;
                    best_j = j;
                }
            }
            choice[t] = best_j;
        }
        Candidate cand;
        cand.choice = std::move(choice);
        evaluate(table, cand.choice, cand.u, cand.c);
        candidates.push_back(std::move(cand));
    }
    // Zeroed fractional slots and full abstain as safety nets.
    {
        Candidate cand;
        cand.choice.assign(h, 0);
        for (int t = 0; t < h; ++t)
            cand.choice[t] = support[t].size() == 1 ? support[t][0] : 0;
        evaluate(table, cand.choice, cand.u, cand.c);
        candidates.push_back(cand);
        Candidate abstain;
        abstain.choice.assign(h, 0);
        candidates.push_back(abstain);
    }

    Candidate best;
    for (auto& cand : candidates) {
        std::vector<int> choice = cand.choice;
        double u = cand.u, c = cand.c;
        if (!feasible(u, c, budget, roi_target)) {
            // Drop lowest-margin slots until feasible.
            std::vector<int> order(h);
            for (int t = 0; t < h; ++t) order[t] = t;
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                const double ma = table.u(a, choice[a]) - roi_target * table.c(a, choice[a]);
                const double mb = table.u(b, choice[b]) - roi_target * table.c(b, choice[b]);
                if (ma != mb) return ma < mb;
                return a < b;
            });
            for (int t : order) {
                if (feasible(u, c, budget, roi_target)) break;
                u -= table.u(t, choice[t]);
                c -= table.c(t, choice[t]);
                choice[t] = 0;
            }
        }
        if (!feasible(u, c, budget, roi_target)) continue;
        local_search(table, budget, roi_target, choice, u, c);
        consider(best, choice, u, c, budget, roi_target);
    }
    if (!best.valid) {
        best.choice.assign(h, 0);
        best.u = best.c = 0.0;
        best.valid = true;
    }

    ExpertSolution s = make_solution(table, nullptr, best.choice, best.u, best.c, "relaxed");
    s.bound = std::max(bound, s.utility);
    s.gap = s.bound - s.utility;
    s.converged = optimal;
    return s;
}

std::pair<double, double> best_constant_ratio(const market::EnvironmentDay& day,
                                              const RatioGrid& grid, double budget,
                                              double roi_target) {
    market::EnvironmentDay probe = day;
    probe.budget = budget;
    probe.roi_target = roi_target;
    double best_ratio = 0.0;
    double best_value = 0.0;
    for (double ratio : grid.ratios) {
        env::Episode ep(probe);
        while (!ep.done()) ep.step(ratio);
        const env::EpisodeOutcome out = ep.outcome();
        if (!out.roi_feasible || out.truncated) continue;
        if (out.total_utility > best_value) {
            best_value = out.total_utility;
            best_ratio = ratio;
        }
    }
    return {best_ratio, best_value};
}

ExpertSolution solve_day(const market::EnvironmentDay& day, const RatioGrid& grid,
                         const OracleConfig& cfg) {
    const SlotAggregateTable table = build_slot_aggregates(day, grid);
    ExpertSolution sol;
    if (std::pow(static_cast<double>(grid.size()), day.num_slots()) <= cfg.bruteforce_limit) {
        sol = solve_bruteforce(table, day.budget, day.roi_target);
    } else {
        sol = solve_relaxed(table, day.budget, day.roi_target, cfg.relax);
    }
    sol.ratios.clear();
    sol.ratios.reserve(sol.ratio_index.size());
    for (int k : sol.ratio_index) sol.ratios.push_back(grid.ratios[k]);

    // Re-validate against the budget-enforced environment.
    const env::Trajectory replayed = expert_trajectory(day, sol);
    const double replay_u = replayed.outcome.total_utility;
    if (sol.utility > 0.0) {
        sol.replay_gap_frac = std::fabs(replay_u - sol.utility) / sol.utility;
        sol.flagged = sol.replay_gap_frac > cfg.flag_threshold;
    }
    return sol;
}

env::Trajectory expert_trajectory(const market::EnvironmentDay& day,
                                  const ExpertSolution& solution) {
    if (static_cast<int>(solution.ratios.size()) != day.num_slots())
        throw std::invalid_argument("solution length != slot count");
    return env::rollout(
        day,
        [&](const env::SlotObservation&, const env::Trajectory&, int t) {
            return solution.ratios[t];
        },
        "expert");
}

}  // namespace rcb::oracle
