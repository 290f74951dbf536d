#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "survcobra/cobra.hpp"
#include "survcobra/dataset.hpp"

namespace survcobra {

// WholeDataset tunes on all rows (then the experiment re-splits for final
// evaluation); TrainOnly tunes on the train split alone. The experiment
// layer selects the cohort; cv_tune itself tunes whatever it receives.
enum class TuneScheme { WholeDataset, TrainOnly };

struct TuneConfig {
    int k_folds = 5;
    int epsilon_grid_size = 20;
    std::vector<double> alpha_grid;   // empty = {1/M, 2/M, ..., 1}
    Variant variant = Variant::Weighted;
    std::optional<NormKind> norm;     // nullopt = search both norms
    std::uint64_t seed = 0;
    TuneScheme scheme = TuneScheme::WholeDataset;
    std::size_t grid_resolution = 100;
    double dl_fraction = 0.5;         // D_l share of each fold remainder
    WeightScheme weight_scheme = WeightScheme::Complement;
    int workers = 0;                  // 0 = hardware concurrency
};

struct CvRow {
    double epsilon = 0.0;
    double alpha = 1.0;
    NormKind norm = NormKind::Frobenius;
    double mean_ibs = 0.0;
    double sd_ibs = 0.0;
};

struct TuneResult {
    CobraParams best;
    std::vector<CvRow> cv_scores;
};

// Epsilon candidates: `size` equally spaced quantiles (5th to 100th
// percentile) of the per-machine pairwise distances among table points,
// deduplicated ascending. All-zero distances collapse to {0}.
std::vector<double> epsilon_grid(const PredictionTable& table, std::size_t size, NormKind norm);

struct TuneCandidate {
    double epsilon = 0.0;
    double alpha = 1.0;
    NormKind norm = NormKind::Frobenius;
};

// Seeded k-fold search: each fold holds its subjects out for scoring, splits
// the remainder into D_k/D_l, fits the machine pool on D_k, builds the
// prediction table on D_l, and scores every candidate by the integrated
// Brier score of the COBRA predictions for the held-out subjects. Queries
// whose widening fallback exhausts are scored against the pooled-D_l
// Kaplan-Meier curve so every candidate sees the same cohort. Best = lowest
// fold-mean IBS; ties prefer larger epsilon, then larger alpha, then the
// Frobenius norm.
TuneResult cv_tune(const SurvivalDataset& dataset, const TuneConfig& config);

// Same search over an explicit candidate list (the standard entry point
// builds its candidates from epsilon_grid on a preliminary 50/50 split).
TuneResult cv_tune_with_candidates(const SurvivalDataset& dataset, const TuneConfig& config,
                                   std::span<const TuneCandidate> candidates);

}  // namespace survcobra
