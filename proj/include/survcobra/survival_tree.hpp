#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "survcobra/dataset.hpp"
#include "survcobra/metrics.hpp"
#include "survcobra/step_function.hpp"

namespace survcobra {

struct TreeConfig {
    int max_depth = 5;
    int min_leaf_size = 10;
    bool bootstrap = true;
    std::uint64_t seed = 0;
    std::size_t max_features = 0;  // 0 = consider all features at every node
};

// Two-sample log-rank chi-square statistic: observed-minus-expected events in
// the left group over pooled risk sets, squared, over the hypergeometric
// variance. Returns 0 when the variance vanishes (uninformative split).
double logrank_statistic(std::span<const Outcome> left, std::span<const Outcome> right);

// Binary survival tree with log-rank splits and per-leaf Kaplan-Meier curves.
class SurvivalTree {
public:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        StepFunction leaf_curve;       // Kaplan-Meier of the leaf's members
        std::size_t member_count = 0;  // leaves only

        bool is_leaf() const { return feature < 0; }
    };

    const std::vector<Node>& nodes() const { return nodes_; }
    std::size_t dimension() const { return dimension_; }
    const TreeConfig& config() const { return config_; }

    // Routes by threshold comparisons (value <= threshold goes left) and
    // returns the leaf Kaplan-Meier evaluated on the grid.
    SurvivalCurve predict(std::span<const double> covariates, const TimeGridPtr& grid) const;

    // Leaf step function for a covariate vector (grid-free form).
    const StepFunction& leaf_function(std::span<const double> covariates) const;

    // Nested-object JSON document for reproducibility audits.
    std::string to_json() const;

    friend SurvivalTree fit_tree(const SurvivalDataset& data, const TreeConfig& config);

private:
    std::vector<Node> nodes_;
    std::size_t dimension_ = 0;
    TreeConfig config_;
};

// Greedy top-down fit: candidate thresholds at midpoints between consecutive
// sorted unique feature values, best log-rank statistic wins subject to both
// children holding >= min_leaf_size subjects; growth stops on max_depth,
// insufficient size, or no positive-statistic split. With bootstrap=true the
// tree is fit on a seeded with-replacement resample of size n.
SurvivalTree fit_tree(const SurvivalDataset& data, const TreeConfig& config);

SurvivalCurve predict_tree(const SurvivalTree& tree, std::span<const double> covariates,
                           const TimeGridPtr& grid);

inline constexpr std::size_t kPoolSize = 8;

// The eight weak learners: max_depth in {3,4,5,6} x min_leaf_size in {10,20},
// all bootstrapped, seeds = seed + machine index, max_features = ceil(sqrt(d)).
std::vector<SurvivalTree> build_machine_pool(const SurvivalDataset& d_k, std::uint64_t seed);

}  // namespace survcobra
