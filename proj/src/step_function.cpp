#include "survcobra/step_function.hpp"

#include <algorithm>

namespace survcobra {

double StepFunction::operator()(double t) const {
    auto it = std::upper_bound(knots.begin(), knots.end(), t);
    if (it == knots.begin()) return value_before_first;
    return values[static_cast<std::size_t>(it - knots.begin()) - 1];
}

double StepFunction::value_before(double t) const {
    auto it = std::lower_bound(knots.begin(), knots.end(), t);
    if (it == knots.begin()) return value_before_first;
    return values[static_cast<std::size_t>(it - knots.begin()) - 1];
}

}  // namespace survcobra
