#pragma once

// Lower-left boundary of the two-user MSE region. The boundary is traced by
// the power p of user one with user two transmitting P - p, so that
// eps1 = f1(p), eps2 = f2(p) and eps2 = g(eps1). Convexity of g is decided by
// the sign of  eps2'' eps1' - eps1'' eps2'  (derivatives in p), which is
// evaluated here from the quadratic forms a_ij = h_i^H X^-1 h_j and
// b_ij = h_i^H X^-2 h_j.

#include "mseregion/core_model.hpp"
#include "mseregion/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mseregion {

enum class BoundaryShape { StrictlyConvex, Affine };

inline const char* to_string(BoundaryShape shape)
{
    return shape == BoundaryShape::Affine ? "Affine" : "StrictlyConvex";
}

/// Quadratic forms and the auxiliary nonnegative quantities used to bound
/// the curvature of the boundary at one power split.
struct CouplingBundle {
    double p = 0.0;
    double a11 = 0.0;
    double a22 = 0.0;
    Complex a12;
    double b11 = 0.0;
    double b22 = 0.0;
    Complex b12;
    /// ||h1||^2 ||h2||^2 - |h1^H h2|^2
    double d = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
    double norm1_sq = 0.0;
    double norm2_sq = 0.0;
    /// h1^H h2
    Complex inner;

    /// Re{a12 b21} = Re{a12 conj(b12)}
    [[nodiscard]] double re_a12_b21() const { return std::real(a12 * std::conj(b12)); }
};

/// Outcome of the Cauchy-Schwarz checks on a bundle.
struct BundleChecks {
    bool cauchy_schwarz_a = false;
    bool cauchy_schwarz_b = false;
    /// 4Re^2{a21 b12} <= 4|a21 b12|^2 <= 4 a22 a11 b11 b22 <= (a22 b11 + a11 b22)^2
    bool bound_chain = false;
    bool nonnegative_terms = false;

    [[nodiscard]] bool all() const { return cauchy_schwarz_a && cauchy_schwarz_b && bound_chain && nonnegative_terms; }
};

struct FirstDerivatives {
    double deps1 = 0.0;
    double deps2 = 0.0;
};

struct SecondDerivatives {
    double ddeps1 = 0.0;
    double ddeps2 = 0.0;
};

struct Discriminant {
    double value = 0.0;
    std::array<double, 3> summands{};
    /// |eps2'' eps1'| + |eps1'' eps2'|, the reference for relative tolerances.
    double scale = 0.0;
};

struct GDerivatives {
    double g_prime = 0.0;
    double g_double_prime = 0.0;
};

struct BoundaryDerivatives {
    FirstDerivatives first;
    SecondDerivatives second;
    Discriminant discriminant;
    GDerivatives g;
};

struct BoundarySample {
    double p = 0.0;
    double eps1 = 0.0;
    double eps2 = 0.0;
    /// Present on the open interval (0, P) only.
    std::optional<BoundaryDerivatives> derivatives;
};

struct ClosedFormRatios {
    /// a12 / a11 from the matrix inversion lemma.
    Complex ratio_a;
    /// b21 / b22 from the matrix inversion lemma.
    Complex ratio_b;
    Complex direct_ratio_a;
    Complex direct_ratio_b;
    /// Re{ratio_a * ratio_b}; bounded by 1.
    double product_check = 0.0;
    double product_imag = 0.0;
};

struct AffineBoundary {
    double slope = 0.0;
    double intercept = 0.0;
    double eps_min1 = 0.0;

    [[nodiscard]] double operator()(double eps1) const { return slope * eps1 + intercept; }
};

struct ConvexityReport {
    bool certified = false;
    /// Discriminant at the grid point with the largest discriminant / scale.
    double worst_discriminant = 0.0;
    double worst_relative = 0.0;
    double worst_p = 0.0;
    /// Every interior discriminant strictly negative.
    bool strict = false;
    bool cauchy_schwarz_held = false;
    bool monotone = false;
    BoundaryShape classification = BoundaryShape::StrictlyConvex;
    std::size_t grid = 0;
};

namespace boundary_tolerance {
inline constexpr double discriminant_rel = 1e-9;
inline constexpr double cauchy_schwarz_rel = 1e-10;
inline constexpr double colinear_rel = 1e-12;
inline constexpr double nonnegative_abs = 1e-12;
} // namespace boundary_tolerance

namespace detail {

inline void require_pair(const CVector& h1, const CVector& h2)
{
    require(h1.size() >= 1 && h1.size() == h2.size(), "channel vectors must have equal nonzero length");
    require(h1.allFinite() && h2.allFinite(), "channel vectors must be finite");
    require(h1.squaredNorm() > 0.0 && h2.squaredNorm() > 0.0, "channel vectors must be nonzero");
}

inline void require_split(double p, const SystemConfig& cfg)
{
    require(std::isfinite(p) && p >= 0.0 && p <= cfg.power_budget(), "power p must lie in [0, P_Tx]");
}

inline ChannelSet pair_channels(const CVector& h1, const CVector& h2)
{
    CMatrix h(h1.size(), 2);
    h.col(0) = h1;
    h.col(1) = h2;
    return ChannelSet(std::move(h));
}

inline PowerAllocation split_powers(double p, const SystemConfig& cfg)
{
    RVector powers(2);
    powers << p, std::max(0.0, cfg.power_budget() - p);
    return PowerAllocation(std::move(powers));
}

} // namespace detail

/// (eps1, eps2) at powers (p, P - p).
inline std::pair<double, double> mse_pair_at_power(const CVector& h1, const CVector& h2, const SystemConfig& cfg,
                                                   double p)
{
    detail::require_pair(h1, h2);
    detail::require_split(p, cfg);
    const MseTuple eps = mse_tuple(detail::pair_channels(h1, h2), detail::split_powers(p, cfg), cfg);
    return {eps[0], eps[1]};
}

inline CouplingBundle coupling_bundle(const CVector& h1, const CVector& h2, const SystemConfig& cfg, double p)
{
    detail::require_pair(h1, h2);
    detail::require_split(p, cfg);
    const CouplingMatrix coupling(detail::pair_channels(h1, h2), detail::split_powers(p, cfg), cfg);
    const CMatrix b = coupling.b();

    CouplingBundle out;
    out.p = p;
    out.a11 = coupling.a()(0, 0).real();
    out.a22 = coupling.a()(1, 1).real();
    out.a12 = coupling.a()(0, 1);
    out.b11 = b(0, 0).real();
    out.b22 = b(1, 1).real();
    out.b12 = b(0, 1);

    out.norm1_sq = h1.squaredNorm();
    out.norm2_sq = h2.squaredNorm();
    out.inner = h1.dot(h2); // Eigen's dot conjugates the first argument
    const double norms = out.norm1_sq * out.norm2_sq;
    double d = norms - std::norm(out.inner);
    if (d < 0.0) {
        if (d < -boundary_tolerance::nonnegative_abs * std::max(1.0, norms)) {
            throw NumericalError("negative Gram determinant for the channel pair");
        }
        d = 0.0;
    }
    out.d = d;

    const double s2 = cfg.noise_variance();
    const double s4 = s2 * s2;
    const double q = cfg.power_budget() - p;
    out.c1 = s2 * std::norm(out.inner) * p * d * q;
    out.c2 = (s2 * out.norm1_sq + d * q) * d * p * (2.0 * s2 + p * out.norm1_sq) + s4 * out.norm2_sq * d * q;
    out.d1 = out.c1;
    out.d2 = (s2 * out.norm2_sq + d * p) * d * q * (2.0 * s2 + q * out.norm2_sq) + s4 * out.norm1_sq * d * p;
    return out;
}

inline BundleChecks check_bundle(const CouplingBundle& bundle)
{
    namespace tol = boundary_tolerance;
    BundleChecks checks;
    const double aa = bundle.a11 * bundle.a22;
    const double bb = bundle.b11 * bundle.b22;
    checks.cauchy_schwarz_a = std::norm(bundle.a12) <= aa * (1.0 + tol::cauchy_schwarz_rel);
    checks.cauchy_schwarz_b = std::norm(bundle.b12) <= bb * (1.0 + tol::cauchy_schwarz_rel);

    // a21 b12 = conj(a12) b12
    const Complex cross = std::conj(bundle.a12) * bundle.b12;
    const double re2 = 4.0 * cross.real() * cross.real();
    const double abs2 = 4.0 * std::norm(cross);
    const double product = 4.0 * aa * bb;
    const double sum = bundle.a22 * bundle.b11 + bundle.a11 * bundle.b22;
    const double slack = 1.0 + tol::cauchy_schwarz_rel;
    checks.bound_chain = re2 <= abs2 * slack && abs2 <= product * slack && product <= sum * sum * slack;

    const double floor = -tol::nonnegative_abs;
    checks.nonnegative_terms = bundle.a11 > 0.0 && bundle.a22 > 0.0 && bundle.b11 > 0.0 && bundle.b22 > 0.0 &&
                               bundle.d >= floor && bundle.c1 >= floor && bundle.c2 >= floor &&
                               bundle.d1 >= floor && bundle.d2 >= floor;
    return checks;
}

inline FirstDerivatives mse_first_derivatives(const CouplingBundle& bundle, const SystemConfig& cfg)
{
    const double s2 = cfg.noise_variance();
    const double coupling = cfg.power_budget() * std::norm(bundle.a12);
    return {-s2 * bundle.b11 - coupling, s2 * bundle.b22 + coupling};
}

inline SecondDerivatives mse_second_derivatives(const CouplingBundle& bundle, const SystemConfig& cfg)
{
    const double s2 = cfg.noise_variance();
    const double cross = bundle.re_a12_b21();
    const double coupling = 2.0 * cfg.power_budget() * std::norm(bundle.a12);
    return {2.0 * s2 * (bundle.a11 * bundle.b11 - cross) + coupling * (bundle.a11 - bundle.a22),
            2.0 * s2 * (bundle.a22 * bundle.b22 - cross) + coupling * (bundle.a22 - bundle.a11)};
}

/// eps2'' eps1' - eps1'' eps2' together with its three nonpositive summands.
inline Discriminant convexity_discriminant(const CouplingBundle& bundle, const SystemConfig& cfg)
{
    const auto first = mse_first_derivatives(bundle, cfg);
    const auto second = mse_second_derivatives(bundle, cfg);
    const double s2 = cfg.noise_variance();
    const double s4 = s2 * s2;
    const double cross = bundle.re_a12_b21();

    Discriminant out;
    out.value = second.ddeps2 * first.deps1 - second.ddeps1 * first.deps2;
    out.summands[0] = 2.0 * s2 * cfg.power_budget() * std::norm(bundle.a12) *
                      (2.0 * cross - bundle.a22 * bundle.b11 - bundle.a11 * bundle.b22);
    out.summands[1] = 2.0 * s4 * bundle.b11 * (cross - bundle.a11 * bundle.b22);
    out.summands[2] = 2.0 * s4 * bundle.b22 * (cross - bundle.a22 * bundle.b11);
    out.scale = std::abs(second.ddeps2 * first.deps1) + std::abs(second.ddeps1 * first.deps2);
    return out;
}

inline BoundaryDerivatives boundary_derivatives(const CouplingBundle& bundle, const SystemConfig& cfg)
{
    BoundaryDerivatives out;
    out.first = mse_first_derivatives(bundle, cfg);
    out.second = mse_second_derivatives(bundle, cfg);
    out.discriminant = convexity_discriminant(bundle, cfg);
    const double deps1 = out.first.deps1;
    out.g.g_prime = out.first.deps2 / deps1;
    out.g.g_double_prime = out.discriminant.value / (deps1 * deps1 * deps1);
    return out;
}

/// g'(eps1) = eps2'/eps1' and g''(eps1) = (eps2'' eps1' - eps1'' eps2') / eps1'^3
/// at the boundary point parametrized by p in the open interval (0, P).
inline GDerivatives g_derivatives(const CVector& h1, const CVector& h2, const SystemConfig& cfg, double p)
{
    detail::require(p > 0.0 && p < cfg.power_budget(),
                    "g derivatives are defined for p strictly inside (0, P_Tx)");
    return boundary_derivatives(coupling_bundle(h1, h2, cfg, p), cfg).g;
}

inline ClosedFormRatios closed_form_ratios(const CVector& h1, const CVector& h2, const SystemConfig& cfg, double p)
{
    const CouplingBundle bundle = coupling_bundle(h1, h2, cfg, p);
    const double s2 = cfg.noise_variance();
    const double s4 = s2 * s2;
    const double q = cfg.power_budget() - p;
    const double d = bundle.d;

    ClosedFormRatios out;
    out.ratio_a = s2 * bundle.inner / (s2 * bundle.norm1_sq + d * q);
    out.ratio_b = std::conj(bundle.inner) * (s4 - p * q * d) /
                  (s4 * bundle.norm2_sq + d * p * (2.0 * s2 + p * bundle.norm1_sq));
    out.direct_ratio_a = bundle.a12 / bundle.a11;
    out.direct_ratio_b = std::conj(bundle.b12) / bundle.b22;
    const Complex product = out.ratio_a * out.ratio_b;
    out.product_check = product.real();
    out.product_imag = product.imag();
    return out;
}

/// a12 b21 / (a11 b22) and a12 b21 / (a22 b11) from the substitutions c1, c2
/// and d1, d2; both are real and at most one.
inline std::pair<double, double> bounded_products(const CouplingBundle& bundle, const SystemConfig& cfg)
{
    const double s2 = cfg.noise_variance();
    const double s6 = s2 * s2 * s2;
    const double numerator = s6 * std::norm(bundle.inner);
    const double norms = s6 * bundle.norm1_sq * bundle.norm2_sq;
    return {(numerator - bundle.c1) / (norms + bundle.c2), (numerator - bundle.d1) / (norms + bundle.d2)};
}

inline BoundaryShape colinearity_classify(const CVector& h1, const CVector& h2)
{
    detail::require_pair(h1, h2);
    const double norms = h1.squaredNorm() * h2.squaredNorm();
    const double d = norms - std::norm(h1.dot(h2));
    return d <= boundary_tolerance::colinear_rel * norms ? BoundaryShape::Affine : BoundaryShape::StrictlyConvex;
}

/// Boundary line for h2 = alpha h1:
/// g(eps1) = -eps1 |a|^2 (1 + gamma ||h1||^2) / (1 + |a|^2 gamma ||h1||^2) + 1 + |a|^2 / (1 + |a|^2 gamma ||h1||^2).
inline AffineBoundary affine_boundary(const CVector& h1, Complex alpha, const SystemConfig& cfg)
{
    detail::require(h1.size() >= 1 && h1.allFinite() && h1.squaredNorm() > 0.0, "h1 must be a nonzero finite vector");
    detail::require(std::isfinite(alpha.real()) && std::isfinite(alpha.imag()) && std::norm(alpha) > 0.0,
                    "alpha must be nonzero");
    const double gamma = cfg.snr();
    const double n1 = h1.squaredNorm();
    const double alpha2 = std::norm(alpha);
    const double denom = 1.0 + alpha2 * gamma * n1;
    AffineBoundary out;
    out.slope = -(alpha2 + alpha2 * gamma * n1) / denom;
    out.intercept = 1.0 + alpha2 / denom;
    out.eps_min1 = 1.0 / (1.0 + gamma * n1);
    return out;
}

inline BoundarySample boundary_sample(const CVector& h1, const CVector& h2, const SystemConfig& cfg, double p)
{
    const auto [eps1, eps2] = mse_pair_at_power(h1, h2, cfg, p);
    BoundarySample sample{p, eps1, eps2, std::nullopt};
    if (p > 0.0 && p < cfg.power_budget()) {
        sample.derivatives = boundary_derivatives(coupling_bundle(h1, h2, cfg, p), cfg);
    }
    return sample;
}

/// Grid point i of a closed uniform grid with `samples` points over [0, P].
inline double sweep_power(std::size_t i, std::size_t samples, double budget)
{
    if (i + 1 == samples) {
        return budget;
    }
    return budget * static_cast<double>(i) / static_cast<double>(samples - 1);
}

/// Samples the boundary on a closed uniform grid in p. Each sample depends on
/// its own p only, so the result is identical for any thread count.
inline std::vector<BoundarySample> boundary_sweep(const CVector& h1, const CVector& h2, const SystemConfig& cfg,
                                                  std::size_t samples, unsigned threads = 1)
{
    detail::require_pair(h1, h2);
    detail::require(samples >= 3, "a boundary sweep needs at least 3 samples");
    return parallel_map<BoundarySample>(samples, threads, [&](std::size_t i) {
        return boundary_sample(h1, h2, cfg, sweep_power(i, samples, cfg.power_budget()));
    });
}

inline ConvexityReport convexity_certificate(const CVector& h1, const CVector& h2, const SystemConfig& cfg,
                                             std::size_t grid)
{
    detail::require_pair(h1, h2);
    detail::require(grid >= 11, "convexity certificate needs a grid of at least 11 points");

    ConvexityReport report;
    report.grid = grid;
    report.classification = colinearity_classify(h1, h2);
    report.strict = true;
    report.cauchy_schwarz_held = true;
    report.monotone = true;
    report.worst_relative = -std::numeric_limits<double>::infinity();
    bool discriminant_ok = true;

    for (std::size_t i = 1; i + 1 < grid; ++i) {
        const double p = sweep_power(i, grid, cfg.power_budget());
        const CouplingBundle bundle = coupling_bundle(h1, h2, cfg, p);
        const BoundaryDerivatives derivs = boundary_derivatives(bundle, cfg);
        const Discriminant& disc = derivs.discriminant;
        const double relative = disc.scale > 0.0 ? disc.value / disc.scale : disc.value;

        report.cauchy_schwarz_held = report.cauchy_schwarz_held && check_bundle(bundle).all();
        report.monotone = report.monotone && derivs.first.deps1 < 0.0 && derivs.first.deps2 > 0.0;
        report.strict = report.strict && disc.value < 0.0;
        discriminant_ok = discriminant_ok && disc.value <= boundary_tolerance::discriminant_rel * disc.scale;
        for (double summand : disc.summands) {
            discriminant_ok = discriminant_ok && summand <= boundary_tolerance::discriminant_rel * disc.scale;
        }
        if (relative > report.worst_relative) {
            report.worst_relative = relative;
            report.worst_discriminant = disc.value;
            report.worst_p = p;
        }
    }
    report.certified = discriminant_ok && report.cauchy_schwarz_held;
    return report;
}

} // namespace mseregion
