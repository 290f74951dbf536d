#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "survcobra/cobra.hpp"
#include "survcobra/dataset.hpp"
#include "survcobra/tuning.hpp"

namespace survcobra {

// One dataset's experiment setup: where the data lives, how to split it, how
// to tune, and how many repeated train/test evaluations feed the reported
// mean and standard deviation.
struct ExperimentConfig {
    std::string name = "experiment";
    std::string dataset_path;
    DatasetSchema schema;
    MissingPolicy missing = MissingPolicy::Reject;
    double train_fraction = 0.8;
    double dl_fraction = 0.5;
    TuneConfig tune;
    std::size_t grid_resolution = 100;
    Variant variant = Variant::Weighted;
    std::optional<NormKind> norm = NormKind::Frobenius;  // nullopt = both (tune only)
    WeightScheme weight_scheme = WeightScheme::Complement;
    std::size_t repetitions = 20;
    std::string out_dir = "out";
    std::uint64_t master_seed = 42;
    int workers = 0;
};

// Reads the JSON config; a relative dataset path resolves against the config
// file's directory.
ExperimentConfig load_experiment_config(const std::string& path);

ExperimentConfig experiment_config_from_json(const nlohmann::json& j,
                                             const std::string& base_dir);

SurvivalDataset load_dataset(const ExperimentConfig& config);

// Cohort selection per the tuning scheme, then cv_tune.
TuneResult run_tune(const ExperimentConfig& config, const SurvivalDataset& dataset);

// Writes <name>_tune_scores.csv and <name>_best_params.json; returns the
// written paths.
std::vector<std::string> write_tune_outputs(const ExperimentConfig& config,
                                            const TuneResult& result);

CobraParams params_from_json_file(const std::string& path);
nlohmann::json params_to_json(const CobraParams& params);

// One aggregation method evaluated over the shared repetitions.
struct EvalCell {
    std::string label;
    CobraParams params;
    WeightScheme scheme = WeightScheme::Complement;
};

struct CellResult {
    EvalCell cell;
    std::vector<double> rep_ibs;
    std::vector<std::size_t> rep_fallback_exhausted;
    double mean = 0.0;
    double sd = 0.0;
};

struct EvaluateResult {
    std::vector<CellResult> cells;
    std::vector<std::vector<double>> machine_rep_ibs;  // [rep][machine]
    std::vector<double> machine_mean;                  // per machine
    std::vector<double> machine_sd;
    std::size_t repetitions = 0;
};

// For r = 0..repetitions-1: reseeded 80/20 split and 50/50 D_k/D_l
// subdivision, one pool fit, then every cell's COBRA predictions on the test
// set plus each individual machine's IBS. Repetition seeds derive from the
// master seed and r alone, so different cells (and different calls with the
// same master seed) share splits and pools.
EvaluateResult evaluate_cells(const SurvivalDataset& dataset, std::span<const EvalCell> cells,
                              const ExperimentConfig& config);

// Single-cell evaluation + report files (<name>_evaluate.json/.csv).
EvaluateResult run_evaluate(const ExperimentConfig& config, const SurvivalDataset& dataset,
                            const CobraParams& params, std::vector<std::string>* written = nullptr);

// Predict one curve per query row (repetition-0 model) and write the curve
// CSV: first column `time`, one column per query.
std::string run_curves(const ExperimentConfig& config, const SurvivalDataset& dataset,
                       const CobraParams& params, const std::string& query_csv_path);

struct ReproduceOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> repetitions;
    std::optional<std::string> out_dir;
    std::optional<int> workers;
    std::optional<WeightScheme> weight_scheme;
};

// Tunes and evaluates the four method rows (Weighted/Straight x
// Frobenius/Sup) for every dataset config in the directory, then writes
// reproduce_table.md, reproduce_table.csv, and reproduce_report.json.
// Returns the report document.
nlohmann::json run_reproduce(const std::string& config_dir, const ReproduceOverrides& overrides);

}  // namespace survcobra
