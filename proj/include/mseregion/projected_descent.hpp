#pragma once

// Projected gradient descent with Armijo backtracking over the power set.

#include "mseregion/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

namespace mseregion {

struct DescentOptions {
    double initial_step = 1.0;
    double shrink = 0.5;
    double slope_factor = 1e-4;
    /// Each iteration starts its backtracking from growth * (last accepted
    /// step); 1.0 restarts from the previous step.
    double growth = 2.0;
    double max_step = 1e8;
    /// Stop when ||proj(p - grad) - p|| <= tolerance * (1 + |f(p)|).
    double tolerance = 1e-8;
    std::size_t max_iterations = 5000;
    std::size_t max_backtracks = 80;
    bool record_trace = false;
};

struct DescentResult {
    RVector point;
    double value = 0.0;
    RVector gradient;
    double projected_gradient_norm = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    /// True if every accepted step lowered the objective (never violated).
    bool monotone = true;
    /// Objective after every accepted step (starting point first), if requested.
    std::vector<double> trace;
};

/// Minimizes a smooth function over {p >= 0, sum p <= budget}. `evaluate`
/// maps a point to std::pair<double, RVector> (value, gradient).
template <class Evaluate>
DescentResult projected_descent(Evaluate&& evaluate, RVector start, double budget, const DescentOptions& opts)
{
    DescentResult out;
    out.point = project_onto_power_set(start, budget);
    auto [value, gradient] = evaluate(out.point);
    out.value = value;
    out.gradient = std::move(gradient);
    if (opts.record_trace) {
        out.trace.push_back(out.value);
    }

    double step = opts.initial_step;
    for (out.iterations = 0; out.iterations < opts.max_iterations; ++out.iterations) {
        const RVector unit_move = project_onto_power_set(out.point - out.gradient, budget) - out.point;
        out.projected_gradient_norm = unit_move.norm();
        if (out.projected_gradient_norm <= opts.tolerance * (1.0 + std::abs(out.value))) {
            out.converged = true;
            return out;
        }

        bool accepted = false;
        for (std::size_t b = 0; b < opts.max_backtracks; ++b) {
            RVector trial = project_onto_power_set(out.point - step * out.gradient, budget);
            const double predicted = out.gradient.dot(trial - out.point);
            auto [trial_value, trial_gradient] = evaluate(trial);
            if (trial_value <= out.value + opts.slope_factor * predicted) {
                if (trial_value > out.value) {
                    out.monotone = false;
                }
                out.point = std::move(trial);
                out.value = trial_value;
                out.gradient = std::move(trial_gradient);
                accepted = true;
                if (opts.record_trace) {
                    out.trace.push_back(out.value);
                }
                break;
            }
            step *= opts.shrink;
        }
        if (!accepted) {
            // No decrease at machine precision: the point is stationary up to round-off.
            break;
        }
        step = std::min(step * opts.growth, opts.max_step);
    }
    const RVector unit_move = project_onto_power_set(out.point - out.gradient, budget) - out.point;
    out.projected_gradient_norm = unit_move.norm();
    out.converged = out.projected_gradient_norm <= opts.tolerance * (1.0 + std::abs(out.value));
    return out;
}

} // namespace mseregion
