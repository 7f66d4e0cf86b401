#pragma once

// Geometry of the power set {p >= 0, sum p <= P}: projection, uniform
// sampling and lattice enumeration.

#include "mseregion/core_model.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace mseregion {

/// Euclidean projection onto {p >= 0, sum p <= budget}. Clipping at zero is
/// exact whenever the clipped vector is inside the budget; otherwise the
/// point is projected onto the face sum p = budget by the sort-based rule.
inline RVector project_onto_power_set(const RVector& v, double budget)
{
    RVector clipped = v.cwiseMax(0.0);
    if (clipped.sum() <= budget) {
        return clipped;
    }
    std::vector<double> sorted(v.data(), v.data() + v.size());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumulative = 0.0;
    double threshold = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        cumulative += sorted[i];
        const double candidate = (cumulative - budget) / static_cast<double>(i + 1);
        if (sorted[i] - candidate > 0.0) {
            threshold = candidate;
        }
    }
    return (v.array() - threshold).cwiseMax(0.0).matrix();
}

/// Uniform draw from {p >= 0, sum p <= budget}: exponential spacings with one
/// extra slack coordinate give a uniform point of the (K+1)-simplex.
template <class Rng>
RVector sample_power_set(Eigen::Index users, double budget, Rng& rng)
{
    std::exponential_distribution<double> spacing(1.0);
    RVector draws(users + 1);
    for (Eigen::Index i = 0; i <= users; ++i) {
        draws[i] = spacing(rng);
    }
    const double total = draws.sum();
    return draws.head(users) * (budget / total);
}

/// Number of lattice points {i in N^K : sum i <= resolution}, i.e.
/// C(resolution + K, K). Saturates at UINT64_MAX.
inline std::uint64_t lattice_point_count(Eigen::Index users, Eigen::Index resolution)
{
    // C(r + K, K) computed incrementally; each partial product is an integer.
    unsigned __int128 count = 1;
    for (Eigen::Index j = 1; j <= users; ++j) {
        count = count * static_cast<unsigned __int128>(resolution + j) / static_cast<unsigned __int128>(j);
        if (count > static_cast<unsigned __int128>(UINT64_MAX)) {
            return UINT64_MAX;
        }
    }
    return static_cast<std::uint64_t>(count);
}

/// Visits every lattice point p = i * budget / resolution with sum i <=
/// resolution, in lexicographic order of i.
template <class Visitor>
void for_each_lattice_point(Eigen::Index users, Eigen::Index resolution, double budget, Visitor&& visit)
{
    std::vector<Eigen::Index> index(static_cast<std::size_t>(users), 0);
    const double step = budget / static_cast<double>(resolution);
    RVector point = RVector::Zero(users);
    Eigen::Index used = 0;
    while (true) {
        for (Eigen::Index k = 0; k < users; ++k) {
            point[k] = static_cast<double>(index[static_cast<std::size_t>(k)]) * step;
        }
        visit(static_cast<const RVector&>(point));
        // odometer increment with the last coordinate varying fastest
        Eigen::Index k = users - 1;
        while (k >= 0) {
            auto& slot = index[static_cast<std::size_t>(k)];
            if (used < resolution) {
                ++slot;
                ++used;
                break;
            }
            used -= slot;
            slot = 0;
            --k;
        }
        if (k < 0) {
            return;
        }
    }
}

/// Vertices of the power set (origin and budget * e_k) followed by its centroid.
inline std::vector<RVector> power_set_landmarks(Eigen::Index users, double budget)
{
    std::vector<RVector> points;
    points.emplace_back(RVector::Zero(users));
    for (Eigen::Index k = 0; k < users; ++k) {
        RVector vertex = RVector::Zero(users);
        vertex[k] = budget;
        points.push_back(vertex);
    }
    points.emplace_back(RVector::Constant(users, budget / static_cast<double>(users + 1)));
    return points;
}

} // namespace mseregion
