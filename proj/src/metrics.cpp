#include "survcobra/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "survcobra/errors.hpp"

namespace survcobra {

namespace {

double floored(double g) { return std::max(g, kCensoringFloor); }

void check_curves(std::span<const SurvivalCurve> curves, std::span<const Outcome> subjects) {
    if (curves.empty()) throw MetricError("no survival curves to score");
    if (curves.size() != subjects.size())
        throw MetricError("curve count (" + std::to_string(curves.size()) +
                          ") does not match subject count (" + std::to_string(subjects.size()) +
                          ")");
}

}  // namespace

double curve_value_at(const SurvivalCurve& curve, double t) {
    const auto& times = curve.grid->times;
    auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 1.0;
    std::size_t j = static_cast<std::size_t>(it - times.begin()) - 1;
    return curve.values[j];
}

double brier_score_censored(std::span<const SurvivalCurve> curves,
                            std::span<const Outcome> subjects, const StepFunction& g_hat,
                            double t) {
    check_curves(curves, subjects);
    const double inv_g_t = 1.0 / floored(g_hat(t));
    double sum = 0.0;
    for (std::size_t i = 0; i < subjects.size(); ++i) {
        const Outcome& s = subjects[i];
        const double surv = curve_value_at(curves[i], t);
        if (s.time <= t) {
            if (s.event) sum += surv * surv / floored(g_hat.value_before(s.time));
        } else {
            sum += (1.0 - surv) * (1.0 - surv) * inv_g_t;
        }
    }
    return sum / static_cast<double>(subjects.size());
}

double trapezoid_mean(std::span<const double> values, std::span<const double> times) {
    if (values.size() != times.size())
        throw MetricError("trapezoid input lengths differ");
    if (times.size() < 2) throw MetricError("trapezoid needs at least 2 points");
    double integral = 0.0;
    for (std::size_t j = 1; j < times.size(); ++j) {
        const double dt = times[j] - times[j - 1];
        if (!(dt > 0.0)) throw MetricError("trapezoid times must be strictly increasing");
        integral += 0.5 * (values[j] + values[j - 1]) * dt;
    }
    return integral / (times.back() - times.front());
}

namespace detail {

double ibs_on_grid(std::span<const double> curve_values, std::span<const Outcome> subjects,
                   const StepFunction& g_hat, const TimeGrid& grid) {
    const std::size_t n = subjects.size();
    const std::size_t t_count = grid.size();
    if (n == 0) throw MetricError("no subjects to score");
    if (t_count < 2) throw MetricError("integration grid needs at least 2 points");
    if (curve_values.size() != n * t_count)
        throw MetricError("curve value matrix does not match subjects x grid");

    std::vector<double> inv_g_t(t_count);
    for (std::size_t j = 0; j < t_count; ++j) inv_g_t[j] = 1.0 / floored(g_hat(grid.times[j]));

    std::vector<double> bs(t_count, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const Outcome& s = subjects[i];
        const double* row = curve_values.data() + i * t_count;
        // First grid index with grid time >= y_i: before it the subject is
        // still at risk, from it on only observed events contribute.
        const std::size_t cross = static_cast<std::size_t>(
            std::lower_bound(grid.times.begin(), grid.times.end(), s.time) -
            grid.times.begin());
        for (std::size_t j = 0; j < cross; ++j) {
            const double q = 1.0 - row[j];
            bs[j] += q * q * inv_g_t[j];
        }
        if (s.event) {
            const double w = 1.0 / floored(g_hat.value_before(s.time));
            for (std::size_t j = cross; j < t_count; ++j) bs[j] += row[j] * row[j] * w;
        }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (double& v : bs) v *= inv_n;
    return trapezoid_mean(bs, grid.times);
}

}  // namespace detail

double integrated_brier_score(std::span<const SurvivalCurve> curves,
                              std::span<const Outcome> subjects, const StepFunction& g_hat,
                              const TimeGrid& grid) {
    check_curves(curves, subjects);
    const std::size_t t_count = grid.size();
    std::vector<double> flat;
    flat.reserve(curves.size() * t_count);
    for (const auto& c : curves) {
        if (!c.grid || c.grid->times != grid.times)
            throw MetricError("curve grid does not match the integration grid");
        if (c.values.size() != t_count)
            throw MetricError("curve has " + std::to_string(c.values.size()) +
                              " values, expected " + std::to_string(t_count));
        flat.insert(flat.end(), c.values.begin(), c.values.end());
    }
    return detail::ibs_on_grid(flat, subjects, g_hat, grid);
}

}  // namespace survcobra
