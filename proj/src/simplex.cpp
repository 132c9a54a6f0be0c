#include "rcb/simplex.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace rcb::oracle {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kReducedCostTol = 1e-9;

// Gauss-Jordan inverse of the basis matrix with partial pivoting.
std::vector<double> invert_basis(const LpProblem& lp, const std::vector<int>& basis) {
    const int m = lp.rows;
    std::vector<double> work(static_cast<std::size_t>(m) * 2 * m, 0.0);
    auto w = [&](int r, int c) -> double& { return work[static_cast<std::size_t>(r) * 2 * m + c]; };
    for (int r = 0; r < m; ++r) {
        for (int i = 0; i < m; ++i) w(r, i) = lp.at(r, basis[i]);
        w(r, m + r) = 1.0;
    }
    for (int col = 0; col < m; ++col) {
        int pivot = col;
        for (int r = col + 1; r < m; ++r)
            if (std::fabs(w(r, col)) > std::fabs(w(pivot, col))) pivot = r;
        if (std::fabs(w(pivot, col)) < 1e-12)
            throw std::runtime_error("singular basis matrix in simplex");
        if (pivot != col)
            for (int i = 0; i < 2 * m; ++i) std::swap(w(pivot, i), w(col, i));
        const double d = w(col, col);
        for (int i = 0; i < 2 * m; ++i) w(col, i) /= d;
        for (int r = 0; r < m; ++r) {
            if (r == col) continue;
            const double f = w(r, col);
            if (f == 0.0) continue;
            for (int i = 0; i < 2 * m; ++i) w(r, i) -= f * w(col, i);
        }
    }
    std::vector<double> inv(static_cast<std::size_t>(m) * m);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) inv[static_cast<std::size_t>(r) * m + c] = w(r, m + c);
    return inv;
}

}  // namespace

LpResult simplex_solve(const LpProblem& lp, std::vector<int> basis, int max_pivots) {
    const int m = lp.rows;
    const int n = lp.cols;
    if (static_cast<int>(basis.size()) != m)
        throw std::invalid_argument("basis size must equal row count");

    std::vector<double> binv = invert_basis(lp, basis);
    auto bi = [&](int r, int c) -> double& { return binv[static_cast<std::size_t>(r) * m + c]; };

    std::vector<double> xb(m), y(m), d(m);
    std::vector<char> in_basis(n, 0);
    for (int i : basis) in_basis[i] = 1;

    auto compute_xb = [&] {
        for (int r = 0; r < m; ++r) {
            double acc = 0.0;
            for (int k = 0; k < m; ++k) acc += bi(r, k) * lp.b[k];
            xb[r] = acc;
        }
    };
    compute_xb();

    LpResult res;
    int pivots = 0;
    const int bland_after = 2 * (m + n);
    while (true) {
        // y = c_B B^{-1}
        for (int c = 0; c < m; ++c) {
            double acc = 0.0;
            for (int r = 0; r < m; ++r) acc += lp.c[basis[r]] * bi(r, c);
            y[c] = acc;
        }
        // entering column
        int enter = -1;
        double best = kReducedCostTol;
        const bool bland = pivots >= bland_after;
        for (int j = 0; j < n; ++j) {
            if (in_basis[j]) continue;
            double rj = lp.c[j];
            for (int r = 0; r < m; ++r) rj -= y[r] * lp.at(r, j);
            if (rj > (bland ? kReducedCostTol : best)) {
                enter = j;
                best = rj;
                if (bland) break;
            }
        }
        if (enter < 0) break;  // optimal

        if (pivots >= max_pivots) {
            res.status = LpStatus::kIterationLimit;
            break;
        }

        // d = B^{-1} A_enter
        for (int r = 0; r < m; ++r) {
            double acc = 0.0;
            for (int k = 0; k < m; ++k) acc += bi(r, k) * lp.at(k, enter);
            d[r] = acc;
        }
        int leave = -1;
        double best_ratio = 0.0;
        for (int r = 0; r < m; ++r) {
            if (d[r] <= kPivotTol) continue;
            const double ratio = xb[r] / d[r];
            if (leave < 0 || ratio < best_ratio - 1e-12 ||
                (std::fabs(ratio - best_ratio) <= 1e-12 && basis[r] < basis[leave])) {
                leave = r;
                best_ratio = ratio;
            }
        }
        if (leave < 0) throw std::runtime_error("unbounded LP in simplex");

        // pivot: update B^{-1} and the basic solution
        const double piv = d[leave];
        for (int c = 0; c < m; ++c) bi(leave, c) /= piv;
        xb[leave] /= piv;
        for (int r = 0; r < m; ++r) {
            if (r == leave) continue;
            const double f = d[r];
            if (f == 0.0) continue;
            for (int c = 0; c < m; ++c) bi(r, c) -= f * bi(leave, c);
            xb[r] -= f * xb[leave];
        }
        in_basis[basis[leave]] = 0;
        in_basis[enter] = 1;
        basis[leave] = enter;
        ++pivots;

        if (pivots % 64 == 0) {
            binv = invert_basis(lp, basis);
            compute_xb();
        }
    }

    res.pivots = pivots;
    res.x.assign(n, 0.0);
    double obj = 0.0;
    for (int r = 0; r < m; ++r) {
        res.x[basis[r]] = std::max(0.0, xb[r]);
        obj += lp.c[basis[r]] * xb[r];
    }
    res.objective = obj;
    res.duals = y;
    return res;
}

}  // namespace rcb::oracle
