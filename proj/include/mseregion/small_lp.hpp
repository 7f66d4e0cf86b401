#pragma once

// Dense tableau simplex for tiny linear programs
//     maximize c^T x  subject to  A x <= b,  x >= 0,  with b >= 0,
// so that the slack basis is feasible and no phase one is needed.

#include "mseregion/core_model.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace mseregion {

struct LpResult {
    RVector x;
    double objective = 0.0;
    bool optimal = false;
    bool unbounded = false;
};

inline LpResult solve_small_lp(const RMatrix& a, const RVector& b, const RVector& c, std::size_t max_pivots = 10000)
{
    const Eigen::Index rows = a.rows();
    const Eigen::Index vars = a.cols();
    detail::require(b.size() == rows && c.size() == vars, "LP dimensions are inconsistent");
    detail::require((b.array() >= 0.0).all(), "LP right-hand side must be nonnegative");

    // Columns: structural variables, slacks, rhs. Last row holds -c.
    RMatrix tableau = RMatrix::Zero(rows + 1, vars + rows + 1);
    tableau.topLeftCorner(rows, vars) = a;
    tableau.block(0, vars, rows, rows).setIdentity();
    tableau.col(vars + rows).head(rows) = b;
    tableau.row(rows).head(vars) = -c.transpose();

    std::vector<Eigen::Index> basis(static_cast<std::size_t>(rows));
    for (Eigen::Index r = 0; r < rows; ++r) {
        basis[static_cast<std::size_t>(r)] = vars + r;
    }

    const Eigen::Index rhs = vars + rows;
    constexpr double eps = 1e-12;
    LpResult out;
    for (std::size_t pivot = 0; pivot < max_pivots; ++pivot) {
        // Bland's rule: lowest-index column with negative reduced cost.
        Eigen::Index entering = -1;
        for (Eigen::Index j = 0; j < rhs; ++j) {
            if (tableau(rows, j) < -eps) {
                entering = j;
                break;
            }
        }
        if (entering < 0) {
            out.optimal = true;
            break;
        }
        Eigen::Index leaving = -1;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (Eigen::Index r = 0; r < rows; ++r) {
            const double coef = tableau(r, entering);
            if (coef > eps) {
                const double ratio = tableau(r, rhs) / coef;
                if (ratio < best_ratio - eps ||
                    (ratio <= best_ratio + eps && leaving >= 0 &&
                     basis[static_cast<std::size_t>(r)] < basis[static_cast<std::size_t>(leaving)])) {
                    best_ratio = std::min(best_ratio, ratio);
                    leaving = r;
                }
            }
        }
        if (leaving < 0) {
            out.unbounded = true;
            break;
        }
        tableau.row(leaving) /= tableau(leaving, entering);
        for (Eigen::Index r = 0; r <= rows; ++r) {
            if (r != leaving && tableau(r, entering) != 0.0) {
                tableau.row(r) -= tableau(r, entering) * tableau.row(leaving);
            }
        }
        basis[static_cast<std::size_t>(leaving)] = entering;
    }

    out.x = RVector::Zero(vars);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const Eigen::Index j = basis[static_cast<std::size_t>(r)];
        if (j < vars) {
            out.x[j] = std::max(0.0, tableau(r, rhs));
        }
    }
    out.objective = c.dot(out.x);
    return out;
}

} // namespace mseregion
