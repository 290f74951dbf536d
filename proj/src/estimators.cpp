#include "survcobra/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "survcobra/errors.hpp"

namespace survcobra {

namespace {

struct RiskRow {
    double time;
    std::size_t at_risk;
    std::size_t events;
};

// Distinct observed times with at-risk and event counts, ascending.
std::vector<RiskRow> risk_table(std::span<const Outcome> outcomes) {
    if (outcomes.empty()) throw EstimationError("estimator needs at least one observation");
    for (const auto& o : outcomes)
        if (!(o.time >= 0.0) || !std::isfinite(o.time))
            throw EstimationError("observation times must be finite and non-negative");

    std::vector<Outcome> sorted(outcomes.begin(), outcomes.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const Outcome& a, const Outcome& b) { return a.time < b.time; });

    std::vector<RiskRow> rows;
    std::size_t i = 0;
    const std::size_t n = sorted.size();
    while (i < n) {
        const double t = sorted[i].time;
        std::size_t d = 0;
        std::size_t j = i;
        while (j < n && sorted[j].time == t) {
            if (sorted[j].event) ++d;
            ++j;
        }
        rows.push_back({t, n - i, d});
        i = j;
    }
    return rows;
}

std::vector<Outcome> zip_outcomes(std::span<const double> times, const std::vector<bool>& events) {
    if (times.size() != events.size())
        throw EstimationError("time and event arrays differ in length");
    std::vector<Outcome> out(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) out[i] = {times[i], events[i]};
    return out;
}

}  // namespace

StepFunction nelson_aalen(std::span<const Outcome> outcomes) {
    const auto rows = risk_table(outcomes);
    StepFunction f;
    f.value_before_first = 0.0;
    double h = 0.0;
    for (const auto& row : rows) {
        if (row.events == 0) continue;
        h += static_cast<double>(row.events) / static_cast<double>(row.at_risk);
        // Knot one ulp above the event time: evaluation at t sums over
        // event times strictly below t, while staying right-continuous.
        f.knots.push_back(std::nextafter(row.time, std::numeric_limits<double>::infinity()));
        f.values.push_back(h);
    }
    return f;
}

StepFunction kaplan_meier(std::span<const Outcome> outcomes) {
    const auto rows = risk_table(outcomes);
    StepFunction f;
    f.value_before_first = 1.0;
    double s = 1.0;
    for (const auto& row : rows) {
        if (row.events == 0) continue;
        s *= 1.0 - static_cast<double>(row.events) / static_cast<double>(row.at_risk);
        f.knots.push_back(row.time);
        f.values.push_back(s);
    }
    return f;
}

StepFunction censoring_survival(std::span<const Outcome> outcomes) {
    std::vector<Outcome> flipped(outcomes.begin(), outcomes.end());
    for (auto& o : flipped) o.event = !o.event;
    StepFunction f = kaplan_meier(flipped);
    for (double& v : f.values) v = std::max(v, kCensoringFloor);
    return f;
}

StepFunction nelson_aalen(std::span<const double> times, const std::vector<bool>& events) {
    const auto outcomes = zip_outcomes(times, events);
    return nelson_aalen(std::span<const Outcome>(outcomes));
}

StepFunction kaplan_meier(std::span<const double> times, const std::vector<bool>& events) {
    const auto outcomes = zip_outcomes(times, events);
    return kaplan_meier(std::span<const Outcome>(outcomes));
}

StepFunction censoring_survival(std::span<const double> times, const std::vector<bool>& events) {
    const auto outcomes = zip_outcomes(times, events);
    return censoring_survival(std::span<const Outcome>(outcomes));
}

double eval_step(const StepFunction& f, double t) { return f(t); }

}  // namespace survcobra
