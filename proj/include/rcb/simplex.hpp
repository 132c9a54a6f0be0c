#pragma once

#include <vector>

namespace rcb::oracle {

// Small dense LP in standard equality form:
//   max c.x  s.t.  A x = b, x >= 0
// solved by revised primal simplex from a caller-supplied feasible basis.
// Dantzig pricing with a Bland fallback for anti-cycling; the basis inverse
// is refactorized periodically. Sized for problems with tens of rows.
struct LpProblem {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;  // row-major rows x cols
    std::vector<double> b;
    std::vector<double> c;

    double& at(int r, int col) { return a[static_cast<std::size_t>(r) * cols + col]; }
    double at(int r, int col) const { return a[static_cast<std::size_t>(r) * cols + col]; }
};

enum class LpStatus { kOptimal, kIterationLimit };

struct LpResult {
    LpStatus status = LpStatus::kOptimal;
    double objective = 0.0;
    std::vector<double> x;
    std::vector<double> duals;  // y = c_B B^{-1}, valid at optimality
    int pivots = 0;
};

LpResult simplex_solve(const LpProblem& lp, std::vector<int> basis, int max_pivots = 20000);

}  // namespace rcb::oracle
