#pragma once

#include <memory>
#include <span>
#include <vector>

#include "survcobra/dataset.hpp"
#include "survcobra/estimators.hpp"

namespace survcobra {

using TimeGridPtr = std::shared_ptr<const TimeGrid>;

// Survival probabilities evaluated on a shared grid; values are in [0,1] and
// non-increasing.
struct SurvivalCurve {
    TimeGridPtr grid;
    std::vector<double> values;  // one per grid time
};

// Step-style curve lookup: previous-grid-point value, 1 below the grid.
double curve_value_at(const SurvivalCurve& curve, double t);

// Inverse-probability-of-censoring-weighted Brier score at time t:
//   BS_c(t) = (1/N) sum_i [ 1(y_i <= t, event_i) * S_i(t)^2 / G^(y_i-)
//                         + 1(y_i > t) * (1 - S_i(t))^2 / G^(t) ]
// Subjects censored at or before t contribute 0. G^ is evaluated with the
// left limit at observed event times and floored at kCensoringFloor.
double brier_score_censored(std::span<const SurvivalCurve> curves,
                            std::span<const Outcome> subjects,
                            const StepFunction& g_hat, double t);

// Trapezoidal time average of BS_c over the grid, divided by the grid span.
double integrated_brier_score(std::span<const SurvivalCurve> curves,
                              std::span<const Outcome> subjects,
                              const StepFunction& g_hat, const TimeGrid& grid);

// Trapezoidal mean of sampled values: integral / (t_last - t_first).
// Exact on affine profiles.
double trapezoid_mean(std::span<const double> values, std::span<const double> times);

namespace detail {

// Core used by both the public metric and the tuning hot loop: curve values
// are already aligned with the grid (curve_values is N x T, row-major), so
// evaluation at grid point j is a direct index.
double ibs_on_grid(std::span<const double> curve_values, std::span<const Outcome> subjects,
                   const StepFunction& g_hat, const TimeGrid& grid);

}  // namespace detail

}  // namespace survcobra
