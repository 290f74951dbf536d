#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace survcobra {

// One subject: encoded covariates plus right-censored follow-up. event=true
// means the endpoint was observed at `time`; false means censored at `time`.
struct SurvivalRecord {
    std::vector<double> covariates;
    double time = 0.0;
    bool event = false;
};

struct Outcome {
    double time = 0.0;
    bool event = false;
};

struct SurvivalDataset {
    std::vector<SurvivalRecord> records;
    std::vector<std::string> feature_names;

    std::size_t n() const { return records.size(); }
    std::size_t d() const { return feature_names.size(); }
    std::size_t event_count() const;
    std::vector<Outcome> outcomes() const;

    // Throws ValidationError unless n >= 2, every record matches d, every
    // time is finite and >= 0, and at least one event was observed.
    void validate() const;
};

// How a CSV file maps onto a SurvivalDataset. Categorical columns are
// one-hot encoded with category order = first appearance; every other
// non-outcome column must parse as a real number. A cell of the event column
// is an observed event iff its token appears in event_true_values.
struct DatasetSchema {
    std::string time_column;
    std::string event_column;
    std::vector<std::string> categorical_columns;
    std::vector<std::string> event_true_values;
};

enum class MissingPolicy {
    Reject,  // any missing cell is a ValidationError
    Impute,  // numeric -> median, categorical -> mode (outcome columns never imputed)
};

SurvivalDataset load_csv(const std::string& path, const DatasetSchema& schema,
                         MissingPolicy missing = MissingPolicy::Reject);

// Writes the encoded dataset back out: feature columns, then time, then
// event (1/0). Reals are printed in shortest round-trip form, so a reload
// through load_csv reproduces the records bit for bit.
void save_csv(const SurvivalDataset& dataset, const std::string& path,
              const std::string& time_column = "time",
              const std::string& event_column = "event");

// Encodes query covariate rows (feature columns only, no outcome columns)
// against the feature layout of an already-loaded dataset. One-hot features
// are recognized by their "column=category" names; a query value with no
// matching category is a SchemaError.
std::vector<std::vector<double>> encode_query_csv(const std::string& path,
                                                  const std::vector<std::string>& feature_names);

// Strictly increasing evaluation times spanning the observed event times of
// the dataset that produced the grid.
struct TimeGrid {
    std::vector<double> times;

    std::size_t size() const { return times.size(); }
    double t_min() const { return times.front(); }
    double t_max() const { return times.back(); }
    double span() const { return times.back() - times.front(); }
};

// T equally spaced points from the smallest to the largest observed event
// time, endpoints exact. Throws GridError when fewer than two distinct event
// times exist or resolution < 2.
TimeGrid make_time_grid(const SurvivalDataset& dataset, std::size_t resolution = 100);

struct SplitSpec {
    double train_fraction = 0.8;
    double dl_fraction = 0.5;  // share of train forming D_l
    std::uint64_t seed = 0;
};

struct SplitResult {
    SurvivalDataset train;  // d_k and d_l together, in shuffled order
    SurvivalDataset test;
    SurvivalDataset d_k;
    SurvivalDataset d_l;
};

// Seeded partition: test takes the first ceil((1-train_fraction)*n) rows of
// the shuffled order, the remainder is train; d_l takes ceil(dl_fraction *
// |train|) of train, d_k the rest. Ceiling remainders always go to the
// test/D_l side. Every returned part must have >= 2 records and >= 1 event,
// otherwise SplitError.
SplitResult split(const SurvivalDataset& dataset, const SplitSpec& spec);

// Two-way seeded partition used inside cross-validation folds; `first` gets
// ceil(fraction * n) rows.
std::pair<SurvivalDataset, SurvivalDataset> split_two_way(const SurvivalDataset& dataset,
                                                          double fraction, std::uint64_t seed);

// Balanced seeded k-fold assignment; returns k disjoint index lists.
std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, std::size_t k,
                                                    std::uint64_t seed);

SurvivalDataset subset(const SurvivalDataset& dataset, const std::vector<std::size_t>& indices);

}  // namespace survcobra
