#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "survcobra/dataset.hpp"
#include "survcobra/metrics.hpp"
#include "survcobra/survival_tree.hpp"

namespace survcobra {

enum class NormKind { Frobenius, Sup };
enum class Variant { Straight, Weighted };

// How the Weighted variant turns per-machine IBS scores into weights.
// Complement is the corrected scheme (lower IBS => larger weight, weights sum
// to 1); Literal reproduces the uncorrected published combination
// (1/M) * sum_k (IBS_k / sum_j IBS_j) * r'_k for comparison runs.
enum class WeightScheme { Complement, Literal };

struct CobraParams {
    double epsilon = 0.0;
    double alpha = 1.0;  // fraction of machines that must agree; alpha*M integral
    NormKind norm = NormKind::Frobenius;
    Variant variant = Variant::Weighted;
};

// Throws ValidationError unless epsilon >= 0 and alpha*machines is an integer
// in [1, machines].
void validate_params(const CobraParams& params, std::size_t machines);

// M x l x T survival values: every machine's prediction for every
// prediction-set (D_l) point, plus the D_l outcomes those points carry.
struct PredictionTable {
    std::size_t machines = 0;
    std::size_t points = 0;
    TimeGridPtr grid;
    std::vector<double> values;  // (m * points + i) * T + j
    std::vector<Outcome> dl_outcomes;

    std::span<const double> row(std::size_t machine, std::size_t point) const {
        const std::size_t t = grid->size();
        return {values.data() + (machine * points + point) * t, t};
    }
};

PredictionTable build_prediction_table(std::span<const SurvivalTree> pool,
                                       const SurvivalDataset& points, const TimeGridPtr& grid);

// Distance between two curves on the same grid: Frobenius = Euclidean norm of
// the pointwise difference, Sup = max absolute difference.
double machine_distance(const SurvivalCurve& a, const SurvivalCurve& b, NormKind norm);

// Indices i of table points whose machine predictions agree with the query's
// on at least alpha*M machines: #{m : dist(query[m], table[m][i]) <= eps}.
std::vector<std::size_t> proximity_set(std::span<const SurvivalCurve> query_preds,
                                       const PredictionTable& table, const CobraParams& params);

// One integrated Brier score per machine: machine k's table rows scored
// against the subjects (one per table point) under the censoring survival
// g_hat, integrated over the grid.
std::vector<double> per_machine_ibs(const PredictionTable& table,
                                    std::span<const Outcome> subjects, const StepFunction& g_hat,
                                    const TimeGrid& grid);

// Complement-normalized machine weights: W_k = (1 - IBS_k / sum_j IBS_j) / (M-1),
// nonnegative, summing to 1, so lower IBS means higher weight. All-zero IBS
// yields uniform weights; M = 1 yields {1}.
std::vector<double> machine_ibs_weights(std::span<const double> ibs);

// Weights for WeightScheme::Literal: w_k = (IBS_k / sum_j IBS_j) / M, exactly
// the published combination (these sum to 1/M, not 1).
std::vector<double> literal_machine_weights(std::span<const double> ibs);

struct PredictOptions {
    int max_widenings = 10;
    double widen_factor = 1.5;
};

struct PredictInfo {
    int widenings = 0;
    double epsilon_used = 0.0;
    std::size_t proximity_size = 0;
};

struct CobraModel {
    std::vector<SurvivalTree> pool;
    PredictionTable table;
    CobraParams params;
    std::vector<double> machine_weights;  // Weighted variant only
    WeightScheme weight_scheme = WeightScheme::Complement;
};

// Builds the prediction table on d_l and, for the Weighted variant, the
// machine weights from each machine's integrated Brier score on d_l.
CobraModel fit_cobra(std::vector<SurvivalTree> pool, const SurvivalDataset& d_l,
                     const TimeGridPtr& grid, const CobraParams& params,
                     WeightScheme scheme = WeightScheme::Complement);

// Straight variant: Nelson-Aalen over the proximity members' outcomes,
// returned as S(t) = exp(-H(t)) on the model grid. When the proximity set is
// empty, epsilon is widened by widen_factor up to max_widenings times;
// exhaustion raises NoNeighborsError carrying per-machine minimum distances.
SurvivalCurve straight_predict(std::span<const double> covariates, const CobraModel& model,
                               const PredictOptions& options = {}, PredictInfo* info = nullptr);

// Weighted variant: per-machine componentwise mean over the proximity
// members' table rows, combined with the machine weights, clipped into [0,1]
// and made non-increasing.
SurvivalCurve weighted_predict(std::span<const double> covariates, const CobraModel& model,
                               const PredictOptions& options = {}, PredictInfo* info = nullptr);

// Dispatches on model.params.variant.
SurvivalCurve cobra_predict(std::span<const double> covariates, const CobraModel& model,
                            const PredictOptions& options = {}, PredictInfo* info = nullptr);

namespace detail {

// Query-to-table distances for one norm, laid out machine-major:
// d[m * points + i].
struct DistanceMatrix {
    std::size_t machines = 0;
    std::size_t points = 0;
    std::vector<double> d;

    double at(std::size_t m, std::size_t i) const { return d[m * points + i]; }
};

// query_values is the M x T block of one query's machine predictions.
DistanceMatrix query_distances(std::span<const double> query_values, const PredictionTable& table,
                               NormKind norm);

std::vector<std::size_t> proximity_from_distances(const DistanceMatrix& dist, double epsilon,
                                                  std::size_t required_machines);

// Shared widening loop. Returns the member indices; empty means exhausted
// (info, when given, records the widenings and final epsilon either way).
std::vector<std::size_t> proximity_with_widening(const DistanceMatrix& dist,
                                                 const CobraParams& params,
                                                 const PredictOptions& options, PredictInfo* info);

// exp(-H) of the Nelson-Aalen fit over the selected outcomes, on the grid.
std::vector<double> straight_values(std::span<const Outcome> dl_outcomes,
                                    std::span<const std::size_t> members, const TimeGrid& grid);

// Weighted combination of per-machine proximity means; clipped to [0,1] and
// enforced non-increasing.
std::vector<double> weighted_values(const PredictionTable& table,
                                    std::span<const double> machine_weights,
                                    std::span<const std::size_t> members);

void finalize_weighted_values(std::vector<double>& values);

std::size_t required_machine_count(double alpha, std::size_t machines);

}  // namespace detail

}  // namespace survcobra
