#pragma once

#include <cstddef>
#include <vector>

namespace survcobra {

// Right-continuous piecewise-constant function of time. values[i] holds f(t)
// for knots[i] <= t < knots[i+1]; t below the first knot evaluates to
// value_before_first. Survival-type functions start at 1 and are
// non-increasing; cumulative-hazard-type functions start at 0 and are
// non-decreasing.
struct StepFunction {
    std::vector<double> knots;   // strictly increasing
    std::vector<double> values;  // one per knot
    double value_before_first = 1.0;

    // Right-continuous evaluation: value at the largest knot <= t.
    double operator()(double t) const;

    // Left limit f(t-): value at the largest knot strictly below t.
    double value_before(double t) const;

    std::size_t size() const { return knots.size(); }
};

}  // namespace survcobra
