#pragma once

#include <span>
#include <vector>

#include "survcobra/dataset.hpp"
#include "survcobra/step_function.hpp"

namespace survcobra {

// Floor applied to the censoring survival function so IPCW weights 1/G stay
// finite when the last observation is censored.
inline constexpr double kCensoringFloor = 1e-8;

// Cumulative hazard H(t) = sum over distinct event times t_i < t of d_i/n_i,
// where d_i counts events at t_i and n_i counts subjects still under
// follow-up at t_i (censored and uncensored). The inequality is strict: the
// returned step function places its knots one ulp above each event time so
// that right-continuous evaluation at t_i itself excludes that jump.
StepFunction nelson_aalen(std::span<const double> times, const std::vector<bool>& events);

// Product-limit survival S(t) = prod over distinct event times t_i <= t of
// (1 - d_i/n_i). Standard right-continuous convention: the drop happens at
// the event time.
StepFunction kaplan_meier(std::span<const double> times, const std::vector<bool>& events);

// Censoring-distribution survival G^: Kaplan-Meier with flipped indicators
// (censorings become the events), values clamped to >= kCensoringFloor.
StepFunction censoring_survival(std::span<const double> times, const std::vector<bool>& events);

// Convenience overloads over dataset outcomes.
StepFunction nelson_aalen(std::span<const Outcome> outcomes);
StepFunction kaplan_meier(std::span<const Outcome> outcomes);
StepFunction censoring_survival(std::span<const Outcome> outcomes);

// Right-continuous evaluation, spelled as a free function to match the rest
// of the operation set.
double eval_step(const StepFunction& f, double t);

}  // namespace survcobra
