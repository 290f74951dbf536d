#include "survcobra/cobra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "survcobra/errors.hpp"
#include "survcobra/estimators.hpp"

namespace survcobra {

namespace detail {

std::size_t required_machine_count(double alpha, std::size_t machines) {
    const double scaled = alpha * static_cast<double>(machines);
    const double rounded = std::round(scaled);
    if (std::abs(scaled - rounded) > 1e-9)
        throw ValidationError("alpha * machines must be an integer, got alpha=" +
                              std::to_string(alpha) + " with " + std::to_string(machines) +
                              " machines");
    if (rounded < 1.0 || rounded > static_cast<double>(machines))
        throw ValidationError("alpha must select between 1 and all machines");
    return static_cast<std::size_t>(rounded);
}

}  // namespace detail

void validate_params(const CobraParams& params, std::size_t machines) {
    if (machines == 0) throw ValidationError("no machines in the pool");
    if (!(params.epsilon >= 0.0) || !std::isfinite(params.epsilon))
        throw ValidationError("epsilon must be finite and non-negative");
    detail::required_machine_count(params.alpha, machines);
}

PredictionTable build_prediction_table(std::span<const SurvivalTree> pool,
                                       const SurvivalDataset& points, const TimeGridPtr& grid) {
    if (pool.empty()) throw ValidationError("prediction table needs at least one machine");
    if (points.n() == 0) throw ValidationError("prediction table needs at least one point");
    if (!grid || grid->size() < 2) throw GridError("prediction table needs a grid of >= 2 times");

    PredictionTable table;
    table.machines = pool.size();
    table.points = points.n();
    table.grid = grid;
    table.dl_outcomes = points.outcomes();
    const std::size_t t_count = grid->size();
    table.values.resize(table.machines * table.points * t_count);
    for (std::size_t m = 0; m < table.machines; ++m) {
        for (std::size_t i = 0; i < table.points; ++i) {
            const StepFunction& leaf = pool[m].leaf_function(points.records[i].covariates);
            double* row = table.values.data() + (m * table.points + i) * t_count;
            for (std::size_t j = 0; j < t_count; ++j) row[j] = leaf(grid->times[j]);
        }
    }
    return table;
}

double machine_distance(const SurvivalCurve& a, const SurvivalCurve& b, NormKind norm) {
    if (!a.grid || !b.grid) throw DistanceError("curves must carry a grid");
    if (a.grid != b.grid && a.grid->times != b.grid->times)
        throw DistanceError("curves live on different grids");
    if (a.values.size() != b.values.size())
        throw DistanceError("curves have different lengths");
    if (norm == NormKind::Frobenius) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.values.size(); ++j) {
            const double diff = a.values[j] - b.values[j];
            s += diff * diff;
        }
        return std::sqrt(s);
    }
    double mx = 0.0;
    for (std::size_t j = 0; j < a.values.size(); ++j)
        mx = std::max(mx, std::abs(a.values[j] - b.values[j]));
    return mx;
}

namespace detail {

DistanceMatrix query_distances(std::span<const double> query_values, const PredictionTable& table,
                               NormKind norm) {
    const std::size_t t_count = table.grid->size();
    if (query_values.size() != table.machines * t_count)
        throw DistanceError("query prediction block does not match machines x grid");

    DistanceMatrix dist;
    dist.machines = table.machines;
    dist.points = table.points;
    dist.d.resize(table.machines * table.points);
    for (std::size_t m = 0; m < table.machines; ++m) {
        const double* q = query_values.data() + m * t_count;
        for (std::size_t i = 0; i < table.points; ++i) {
            const double* row = table.values.data() + (m * table.points + i) * t_count;
            double acc = 0.0;
            if (norm == NormKind::Frobenius) {
                for (std::size_t j = 0; j < t_count; ++j) {
                    const double diff = q[j] - row[j];
                    acc += diff * diff;
                }
                acc = std::sqrt(acc);
            } else {
                for (std::size_t j = 0; j < t_count; ++j)
                    acc = std::max(acc, std::abs(q[j] - row[j]));
            }
            dist.d[m * table.points + i] = acc;
        }
    }
    return dist;
}

std::vector<std::size_t> proximity_from_distances(const DistanceMatrix& dist, double epsilon,
                                                  std::size_t required_machines) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < dist.points; ++i) {
        std::size_t agree = 0;
        for (std::size_t m = 0; m < dist.machines; ++m)
            if (dist.at(m, i) <= epsilon) ++agree;
        if (agree >= required_machines) members.push_back(i);
    }
    return members;
}

std::vector<std::size_t> proximity_with_widening(const DistanceMatrix& dist,
                                                 const CobraParams& params,
                                                 const PredictOptions& options,
                                                 PredictInfo* info) {
    const std::size_t required = required_machine_count(params.alpha, dist.machines);
    double epsilon = params.epsilon;
    int widenings = 0;
    for (;;) {
        auto members = proximity_from_distances(dist, epsilon, required);
        if (!members.empty() || widenings >= options.max_widenings) {
            if (info) {
                info->widenings = widenings;
                info->epsilon_used = epsilon;
                info->proximity_size = members.size();
            }
            return members;
        }
        epsilon *= options.widen_factor;
        ++widenings;
    }
}

std::vector<double> straight_values(std::span<const Outcome> dl_outcomes,
                                    std::span<const std::size_t> members, const TimeGrid& grid) {
    std::vector<Outcome> selected;
    selected.reserve(members.size());
    for (std::size_t i : members) selected.push_back(dl_outcomes[i]);
    const StepFunction hazard = nelson_aalen(selected);
    std::vector<double> values(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) values[j] = std::exp(-hazard(grid.times[j]));
    return values;
}

std::vector<double> weighted_values(const PredictionTable& table,
                                    std::span<const double> machine_weights,
                                    std::span<const std::size_t> members) {
    if (machine_weights.size() != table.machines)
        throw PredictionError("machine weight count does not match the pool");
    if (members.empty()) throw PredictionError("weighted combination needs a non-empty set");
    const std::size_t t_count = table.grid->size();
    std::vector<double> values(t_count, 0.0);
    const double inv_members = 1.0 / static_cast<double>(members.size());
    std::vector<double> machine_mean(t_count);
    for (std::size_t m = 0; m < table.machines; ++m) {
        std::fill(machine_mean.begin(), machine_mean.end(), 0.0);
        for (std::size_t i : members) {
            const double* row = table.values.data() + (m * table.points + i) * t_count;
            for (std::size_t j = 0; j < t_count; ++j) machine_mean[j] += row[j];
        }
        const double w = machine_weights[m] * inv_members;
        for (std::size_t j = 0; j < t_count; ++j) values[j] += w * machine_mean[j];
    }
    finalize_weighted_values(values);
    return values;
}

void finalize_weighted_values(std::vector<double>& values) {
    double running = 1.0;
    for (double& v : values) {
        v = std::min(std::max(v, 0.0), 1.0);
        v = std::min(v, running);
        running = v;
    }
}

}  // namespace detail

std::vector<std::size_t> proximity_set(std::span<const SurvivalCurve> query_preds,
                                       const PredictionTable& table, const CobraParams& params) {
    if (query_preds.size() != table.machines)
        throw ValidationError("one query prediction per machine is required");
    validate_params(params, table.machines);
    const std::size_t t_count = table.grid->size();
    std::vector<double> flat;
    flat.reserve(table.machines * t_count);
    for (const auto& c : query_preds) {
        if (!c.grid || (c.grid != table.grid && c.grid->times != table.grid->times))
            throw DistanceError("query prediction grid does not match the table grid");
        flat.insert(flat.end(), c.values.begin(), c.values.end());
    }
    const auto dist = detail::query_distances(flat, table, params.norm);
    return detail::proximity_from_distances(
        dist, params.epsilon, detail::required_machine_count(params.alpha, table.machines));
}

std::vector<double> per_machine_ibs(const PredictionTable& table,
                                    std::span<const Outcome> subjects, const StepFunction& g_hat,
                                    const TimeGrid& grid) {
    if (subjects.size() != table.points)
        throw MetricError("subject count does not match the prediction table");
    if (!table.grid || table.grid->times != grid.times)
        throw MetricError("prediction table grid does not match the integration grid");
    const std::size_t t_count = table.grid->size();
    std::vector<double> out(table.machines);
    for (std::size_t m = 0; m < table.machines; ++m) {
        std::span<const double> block(table.values.data() + m * table.points * t_count,
                                      table.points * t_count);
        out[m] = detail::ibs_on_grid(block, subjects, g_hat, grid);
    }
    return out;
}

std::vector<double> machine_ibs_weights(std::span<const double> ibs) {
    if (ibs.empty()) throw ValidationError("no machine scores");
    for (double v : ibs)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ValidationError("machine scores must be finite and non-negative");
    const std::size_t m = ibs.size();
    if (m == 1) return {1.0};
    double total = 0.0;
    for (double v : ibs) total += v;
    std::vector<double> w(m);
    if (total <= 0.0) {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(m));
        return w;
    }
    for (std::size_t k = 0; k < m; ++k)
        w[k] = (1.0 - ibs[k] / total) / static_cast<double>(m - 1);
    return w;
}

std::vector<double> literal_machine_weights(std::span<const double> ibs) {
    if (ibs.empty()) throw ValidationError("no machine scores");
    for (double v : ibs)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ValidationError("machine scores must be finite and non-negative");
    const std::size_t m = ibs.size();
    double total = 0.0;
    for (double v : ibs) total += v;
    std::vector<double> w(m);
    if (total <= 0.0) {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(m * m));
        return w;
    }
    for (std::size_t k = 0; k < m; ++k) w[k] = (ibs[k] / total) / static_cast<double>(m);
    return w;
}

CobraModel fit_cobra(std::vector<SurvivalTree> pool, const SurvivalDataset& d_l,
                     const TimeGridPtr& grid, const CobraParams& params, WeightScheme scheme) {
    validate_params(params, pool.size());
    CobraModel model;
    model.params = params;
    model.weight_scheme = scheme;
    model.table = build_prediction_table(pool, d_l, grid);
    model.pool = std::move(pool);
    if (params.variant == Variant::Weighted) {
        const StepFunction g_hat = censoring_survival(d_l.outcomes());
        const auto ibs = per_machine_ibs(model.table, model.table.dl_outcomes, g_hat, *grid);
        model.machine_weights = scheme == WeightScheme::Complement
                                    ? machine_ibs_weights(ibs)
                                    : literal_machine_weights(ibs);
    }
    return model;
}

namespace {

// Shared front half of both predict paths: machine predictions for the query,
// distances, widening. Throws NoNeighborsError on exhaustion.
std::vector<std::size_t> members_for_query(std::span<const double> covariates,
                                           const CobraModel& model, const PredictOptions& options,
                                           PredictInfo* info) {
    const std::size_t t_count = model.table.grid->size();
    std::vector<double> query_values(model.pool.size() * t_count);
    for (std::size_t m = 0; m < model.pool.size(); ++m) {
        const StepFunction& leaf = model.pool[m].leaf_function(covariates);
        for (std::size_t j = 0; j < t_count; ++j)
            query_values[m * t_count + j] = leaf(model.table.grid->times[j]);
    }
    const auto dist = detail::query_distances(query_values, model.table, model.params.norm);
    auto members = detail::proximity_with_widening(dist, model.params, options, info);
    if (members.empty()) {
        std::vector<double> min_dist(dist.machines,
                                     std::numeric_limits<double>::infinity());
        for (std::size_t m = 0; m < dist.machines; ++m)
            for (std::size_t i = 0; i < dist.points; ++i)
                min_dist[m] = std::min(min_dist[m], dist.at(m, i));
        throw NoNeighborsError("proximity set still empty after " +
                                   std::to_string(options.max_widenings) + " widenings",
                               std::move(min_dist));
    }
    return members;
}

}  // namespace

SurvivalCurve straight_predict(std::span<const double> covariates, const CobraModel& model,
                               const PredictOptions& options, PredictInfo* info) {
    const auto members = members_for_query(covariates, model, options, info);
    SurvivalCurve curve;
    curve.grid = model.table.grid;
    curve.values = detail::straight_values(model.table.dl_outcomes, members, *model.table.grid);
    return curve;
}

SurvivalCurve weighted_predict(std::span<const double> covariates, const CobraModel& model,
                               const PredictOptions& options, PredictInfo* info) {
    if (model.machine_weights.size() != model.pool.size())
        throw PredictionError("model has no machine weights; fit with the Weighted variant");
    const auto members = members_for_query(covariates, model, options, info);
    SurvivalCurve curve;
    curve.grid = model.table.grid;
    curve.values = detail::weighted_values(model.table, model.machine_weights, members);
    return curve;
}

SurvivalCurve cobra_predict(std::span<const double> covariates, const CobraModel& model,
                            const PredictOptions& options, PredictInfo* info) {
    return model.params.variant == Variant::Straight
               ? straight_predict(covariates, model, options, info)
               : weighted_predict(covariates, model, options, info);
}

}  // namespace survcobra
