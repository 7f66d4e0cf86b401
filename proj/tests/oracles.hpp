#pragma once

// Test-only reference computations. Nothing here calls the code paths it is
// used to check: quadratic forms use an explicit dense inverse, derivatives
// use finite differences of MSE values, and membership margins use lattice
// search.

#include "mseregion/core_model.hpp"
#include "mseregion/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <utility>
#include <vector>

namespace mseregion::testing {

inline CVector random_channel(Eigen::Index n, std::mt19937_64& rng)
{
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    CVector h(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        h[i] = Complex(re, im);
    }
    return h;
}

inline ChannelSet random_channels(Eigen::Index n, Eigen::Index k, std::mt19937_64& rng)
{
    CMatrix h(n, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        h.col(j) = random_channel(n, rng);
    }
    return ChannelSet(std::move(h));
}

inline double uniform(double lo, double hi, std::mt19937_64& rng)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Hand-written MSE evaluation through an explicit inverse of X.
inline RVector dense_mse(const CMatrix& h, const RVector& p, double sigma2)
{
    CMatrix x = sigma2 * CMatrix::Identity(h.rows(), h.rows());
    for (Eigen::Index k = 0; k < h.cols(); ++k) {
        x += p[k] * h.col(k) * h.col(k).adjoint();
    }
    const CMatrix xi = x.inverse();
    RVector eps(h.cols());
    for (Eigen::Index k = 0; k < h.cols(); ++k) {
        eps[k] = 1.0 - p[k] * (h.col(k).adjoint() * xi * h.col(k))(0, 0).real();
    }
    return eps;
}

using Extended = long double;
using XMatrix = Eigen::Matrix<std::complex<Extended>, Eigen::Dynamic, Eigen::Dynamic>;
using XVector = Eigen::Matrix<Extended, Eigen::Dynamic, 1>;

/// The same evaluation in extended precision, for finite differences whose
/// step is too small for double round-off.
inline XVector extended_mse(const CMatrix& h, const XVector& p, Extended sigma2)
{
    const XMatrix hx = h.cast<std::complex<Extended>>();
    XMatrix x = sigma2 * XMatrix::Identity(h.rows(), h.rows());
    for (Eigen::Index k = 0; k < h.cols(); ++k) {
        x += p[k] * hx.col(k) * hx.col(k).adjoint();
    }
    const XMatrix xi = x.inverse();
    XVector eps(h.cols());
    for (Eigen::Index k = 0; k < h.cols(); ++k) {
        eps[k] = 1.0L - p[k] * (hx.col(k).adjoint() * xi * hx.col(k))(0, 0).real();
    }
    return eps;
}

/// Two-user MSE pair at powers (p, P - p) in extended precision.
inline XVector extended_pair_mse(const CVector& h1, const CVector& h2, double sigma2, double budget, Extended p)
{
    CMatrix h(h1.size(), 2);
    h << h1, h2;
    XVector powers(2);
    powers << p, static_cast<Extended>(budget) - p;
    return extended_mse(h, powers, sigma2);
}

/// Central difference of w^T eps along coordinate j with the given step.
inline double extended_gradient_component(const CMatrix& h, const RVector& p, const RVector& w, double sigma2,
                                          Eigen::Index j, double step)
{
    XVector up = p.cast<Extended>();
    XVector down = up;
    up[j] += step;
    down[j] -= step;
    const XVector wx = w.cast<Extended>();
    const Extended diff = wx.dot(extended_mse(h, up, sigma2)) - wx.dot(extended_mse(h, down, sigma2));
    return static_cast<double>(diff / (2.0L * static_cast<Extended>(step)));
}

/// Dense a_ij and b_ij for two users at powers (p, P - p).
struct DenseForms {
    CMatrix a;
    CMatrix b;
};

inline DenseForms dense_forms(const CVector& h1, const CVector& h2, double sigma2, double budget, double p)
{
    const Eigen::Index n = h1.size();
    CMatrix x = sigma2 * CMatrix::Identity(n, n) + p * h1 * h1.adjoint() + (budget - p) * h2 * h2.adjoint();
    const CMatrix xi = x.inverse();
    CMatrix h(n, 2);
    h << h1, h2;
    return {h.adjoint() * xi * h, h.adjoint() * xi * xi * h};
}

/// Central first difference with Richardson extrapolation.
inline double derivative(const std::function<Extended(Extended)>& f, double x, double h)
{
    auto central = [&](Extended step) { return (f(x + step) - f(x - step)) / (2.0L * step); };
    return static_cast<double>((4.0L * central(h / 2.0L) - central(h)) / 3.0L);
}

/// Central second difference with Richardson extrapolation.
inline double second_derivative(const std::function<Extended(Extended)>& f, double x, double h)
{
    const Extended fx = f(x);
    auto central = [&](Extended step) { return (f(x + step) - 2.0L * fx + f(x - step)) / (step * step); };
    return static_cast<double>((4.0L * central(h / 2.0L) - central(h)) / 3.0L);
}

inline double relative_error(double approx, double exact)
{
    return std::abs(approx - exact) / std::max(std::abs(exact), 1e-300);
}

/// Golden-section minimization of a unimodal function on [lo, hi].
inline double golden_section(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-12)
{
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo;
    double b = hi;
    double c = b - ratio * (b - a);
    double d = a + ratio * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > tol * std::max(1.0, std::abs(hi - lo))) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    const double mid = 0.5 * (a + b);
    // endpoints are candidates when the minimum sits on the boundary
    double best = mid;
    for (double cand : {lo, hi}) {
        if (f(cand) < f(best)) {
            best = cand;
        }
    }
    return best;
}

/// MSE tuples of every lattice point of resolution `resolution`.
struct LatticeTable {
    std::vector<RVector> powers;
    std::vector<RVector> mse;
};

inline LatticeTable lattice_table(const ChannelSet& channels, const SystemConfig& cfg, Eigen::Index resolution)
{
    LatticeTable table;
    const std::uint64_t count = lattice_point_count(channels.users(), resolution);
    table.powers.reserve(count);
    table.mse.reserve(count);
    for_each_lattice_point(channels.users(), resolution, cfg.power_budget(), [&](const RVector& p) {
        table.powers.push_back(p);
        table.mse.push_back(dense_mse(channels.matrix(), p, cfg.noise_variance()));
    });
    return table;
}

/// Brute-force margin min_p max_k (eps_k(p) - t_k): lattice search over the
/// power set followed by zoomed lattices (box grids clipped to the power set)
/// around the best lattice points.
inline double lattice_margin(const ChannelSet& channels, const SystemConfig& cfg, const LatticeTable& table,
                             const RVector& target, Eigen::Index resolution, std::size_t seeds = 6,
                             std::size_t zoom_levels = 8, int half_cells = 10)
{
    const Eigen::Index users = channels.users();
    const double budget = cfg.power_budget();
    auto excess = [&](const RVector& eps) { return (eps - target).maxCoeff(); };

    std::vector<std::pair<double, std::size_t>> ranked;
    ranked.reserve(table.mse.size());
    for (std::size_t i = 0; i < table.mse.size(); ++i) {
        ranked.emplace_back(excess(table.mse[i]), i);
    }
    const std::size_t keep = std::min(seeds, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end());

    double best = ranked.front().first;
    for (std::size_t s = 0; s < keep; ++s) {
        RVector center = table.powers[ranked[s].second];
        double center_value = ranked[s].first;
        double width = 2.0 * budget / static_cast<double>(resolution);
        for (std::size_t level = 0; level < zoom_levels; ++level) {
            const double cell = width / half_cells;
            std::vector<int> offset(static_cast<std::size_t>(users), -half_cells);
            RVector level_best = center;
            while (true) {
                RVector q(users);
                for (Eigen::Index k = 0; k < users; ++k) {
                    q[k] = center[k] + cell * offset[static_cast<std::size_t>(k)];
                }
                if ((q.array() >= 0.0).all() && q.sum() <= budget) {
                    const double v = excess(dense_mse(channels.matrix(), q, cfg.noise_variance()));
                    if (v < center_value) {
                        center_value = v;
                        level_best = q;
                    }
                }
                Eigen::Index k = users - 1;
                while (k >= 0 && ++offset[static_cast<std::size_t>(k)] > half_cells) {
                    offset[static_cast<std::size_t>(k)] = -half_cells;
                    --k;
                }
                if (k < 0) {
                    break;
                }
            }
            center = level_best;
            width /= 4.0;
        }
        best = std::min(best, center_value);
    }
    return best;
}

} // namespace mseregion::testing
