#include "survcobra/survival_tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <json.hpp>

#include "survcobra/errors.hpp"
#include "survcobra/estimators.hpp"

namespace survcobra {

namespace {

struct GroupedOutcome {
    double time;
    bool event;
    bool left;
};

}  // namespace

double logrank_statistic(std::span<const Outcome> left, std::span<const Outcome> right) {
    if (left.empty() || right.empty())
        throw FitError("log-rank statistic needs two non-empty groups");

    std::vector<GroupedOutcome> all;
    all.reserve(left.size() + right.size());
    for (const auto& o : left) all.push_back({o.time, o.event, true});
    for (const auto& o : right) all.push_back({o.time, o.event, false});
    std::sort(all.begin(), all.end(),
              [](const GroupedOutcome& a, const GroupedOutcome& b) { return a.time < b.time; });

    double observed = 0.0;
    double expected = 0.0;
    double variance = 0.0;
    std::size_t at_risk = all.size();
    std::size_t at_risk_left = left.size();
    std::size_t i = 0;
    while (i < all.size()) {
        const double t = all[i].time;
        std::size_t d = 0;
        std::size_t d_left = 0;
        std::size_t consumed = 0;
        std::size_t consumed_left = 0;
        std::size_t j = i;
        while (j < all.size() && all[j].time == t) {
            if (all[j].event) {
                ++d;
                if (all[j].left) ++d_left;
            }
            ++consumed;
            if (all[j].left) ++consumed_left;
            ++j;
        }
        if (d > 0) {
            const double nj = static_cast<double>(at_risk);
            const double n1j = static_cast<double>(at_risk_left);
            const double dj = static_cast<double>(d);
            observed += static_cast<double>(d_left);
            expected += dj * n1j / nj;
            if (at_risk > 1)
                variance += dj * (n1j / nj) * (1.0 - n1j / nj) * (nj - dj) / (nj - 1.0);
        }
        at_risk -= consumed;
        at_risk_left -= consumed_left;
        i = j;
    }
    if (!(variance > 0.0)) return 0.0;
    const double diff = observed - expected;
    return diff * diff / variance;
}

namespace {

// Split search workspace for one node: members bucketed by distinct observed
// time so a candidate split's log-rank statistic costs one pass over bins.
struct NodeBins {
    std::vector<double> bin_time;            // distinct member times, ascending
    std::vector<std::size_t> bin_of_member;  // member position -> bin
    std::vector<double> at_risk_all;         // pooled at-risk per bin
    std::vector<std::size_t> events_all;     // pooled events per bin
};

NodeBins make_bins(const std::vector<Outcome>& members) {
    NodeBins b;
    b.bin_time.reserve(members.size());
    for (const auto& o : members) b.bin_time.push_back(o.time);
    std::sort(b.bin_time.begin(), b.bin_time.end());
    b.bin_time.erase(std::unique(b.bin_time.begin(), b.bin_time.end()), b.bin_time.end());

    const std::size_t n_bins = b.bin_time.size();
    b.bin_of_member.resize(members.size());
    std::vector<std::size_t> total(n_bins, 0);
    b.events_all.assign(n_bins, 0);
    for (std::size_t i = 0; i < members.size(); ++i) {
        const std::size_t bin = static_cast<std::size_t>(
            std::lower_bound(b.bin_time.begin(), b.bin_time.end(), members[i].time) -
            b.bin_time.begin());
        b.bin_of_member[i] = bin;
        ++total[bin];
        if (members[i].event) ++b.events_all[bin];
    }
    b.at_risk_all.resize(n_bins);
    std::size_t risk = members.size();
    for (std::size_t bin = 0; bin < n_bins; ++bin) {
        b.at_risk_all[bin] = static_cast<double>(risk);
        risk -= total[bin];
    }
    return b;
}

double sweep_statistic(const NodeBins& bins, const std::vector<std::size_t>& left_total,
                       const std::vector<std::size_t>& left_events, std::size_t n_left) {
    double observed = 0.0;
    double expected = 0.0;
    double variance = 0.0;
    double run_left = static_cast<double>(n_left);
    for (std::size_t bin = 0; bin < bins.bin_time.size(); ++bin) {
        if (bins.events_all[bin] > 0) {
            const double nj = bins.at_risk_all[bin];
            const double dj = static_cast<double>(bins.events_all[bin]);
            observed += static_cast<double>(left_events[bin]);
            expected += dj * run_left / nj;
            if (nj > 1.0)
                variance += dj * (run_left / nj) * (1.0 - run_left / nj) * (nj - dj) / (nj - 1.0);
        }
        run_left -= static_cast<double>(left_total[bin]);
    }
    if (!(variance > 0.0)) return 0.0;
    const double diff = observed - expected;
    return diff * diff / variance;
}

struct TreeBuilder {
    const SurvivalDataset& data;
    const TreeConfig& config;
    std::mt19937_64 gen;
    std::vector<SurvivalTree::Node>* nodes;
    std::vector<std::size_t> feature_scratch;

    std::vector<int> sample_features() {
        const std::size_t d = data.d();
        std::vector<int> feats;
        if (config.max_features == 0 || config.max_features >= d) {
            feats.resize(d);
            std::iota(feats.begin(), feats.end(), 0);
            return feats;
        }
        if (feature_scratch.size() != d) {
            feature_scratch.resize(d);
            std::iota(feature_scratch.begin(), feature_scratch.end(), std::size_t{0});
        } else {
            std::iota(feature_scratch.begin(), feature_scratch.end(), std::size_t{0});
        }
        for (std::size_t i = 0; i < config.max_features; ++i) {
            const std::size_t j = i + gen() % (d - i);
            std::swap(feature_scratch[i], feature_scratch[j]);
        }
        feats.assign(feature_scratch.begin(),
                     feature_scratch.begin() + static_cast<long>(config.max_features));
        std::sort(feats.begin(), feats.end());
        return feats;
    }

    int make_leaf(const std::vector<std::size_t>& members) {
        SurvivalTree::Node node;
        std::vector<Outcome> outcomes;
        outcomes.reserve(members.size());
        for (std::size_t i : members) {
            const auto& r = data.records[i];
            outcomes.push_back({r.time, r.event});
        }
        node.leaf_curve = kaplan_meier(outcomes);
        node.member_count = members.size();
        nodes->push_back(std::move(node));
        return static_cast<int>(nodes->size() - 1);
    }

    // Preorder build; the node's feature subset is drawn when the node is
    // processed, so the random stream is fixed by (seed, structure).
    int build(const std::vector<std::size_t>& members, int depth) {
        const std::size_t min_leaf = static_cast<std::size_t>(config.min_leaf_size);
        if (depth >= config.max_depth || members.size() < 2 * min_leaf)
            return make_leaf(members);

        std::vector<Outcome> outcomes;
        outcomes.reserve(members.size());
        for (std::size_t i : members) {
            const auto& r = data.records[i];
            outcomes.push_back({r.time, r.event});
        }
        const NodeBins bins = make_bins(outcomes);
        const std::size_t n_bins = bins.bin_time.size();

        const std::vector<int> feats = sample_features();

        double best_stat = 0.0;
        int best_feature = -1;
        double best_threshold = 0.0;

        std::vector<std::pair<double, std::size_t>> by_value(members.size());
        std::vector<std::size_t> left_total(n_bins);
        std::vector<std::size_t> left_events(n_bins);

        for (int f : feats) {
            for (std::size_t i = 0; i < members.size(); ++i)
                by_value[i] = {data.records[members[i]].covariates[static_cast<std::size_t>(f)],
                               i};
            std::sort(by_value.begin(), by_value.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });

            std::fill(left_total.begin(), left_total.end(), std::size_t{0});
            std::fill(left_events.begin(), left_events.end(), std::size_t{0});
            std::size_t n_left = 0;

            std::size_t i = 0;
            while (i < members.size()) {
                const double value = by_value[i].first;
                while (i < members.size() && by_value[i].first == value) {
                    const std::size_t m = by_value[i].second;
                    ++left_total[bins.bin_of_member[m]];
                    if (outcomes[m].event) ++left_events[bins.bin_of_member[m]];
                    ++n_left;
                    ++i;
                }
                if (i == members.size()) break;
                const double next_value = by_value[i].first;
                const double threshold = 0.5 * (value + next_value);
                if (!(threshold < next_value)) continue;  // degenerate midpoint
                if (n_left < min_leaf || members.size() - n_left < min_leaf) continue;
                const double stat = sweep_statistic(bins, left_total, left_events, n_left);
                if (stat > best_stat) {
                    best_stat = stat;
                    best_feature = f;
                    best_threshold = threshold;
                }
            }
        }

        if (best_feature < 0) return make_leaf(members);

        std::vector<std::size_t> left_members;
        std::vector<std::size_t> right_members;
        for (std::size_t i : members) {
            if (data.records[i].covariates[static_cast<std::size_t>(best_feature)] <=
                best_threshold)
                left_members.push_back(i);
            else
                right_members.push_back(i);
        }

        const int self = static_cast<int>(nodes->size());
        nodes->push_back({});
        (*nodes)[static_cast<std::size_t>(self)].feature = best_feature;
        (*nodes)[static_cast<std::size_t>(self)].threshold = best_threshold;
        const int left = build(left_members, depth + 1);
        const int right = build(right_members, depth + 1);
        (*nodes)[static_cast<std::size_t>(self)].left = left;
        (*nodes)[static_cast<std::size_t>(self)].right = right;
        return self;
    }
};

}  // namespace

SurvivalTree fit_tree(const SurvivalDataset& data, const TreeConfig& config) {
    if (config.max_depth < 1) throw FitError("max_depth must be at least 1");
    if (config.min_leaf_size < 2) throw FitError("min_leaf_size must be at least 2");
    if (data.d() == 0) throw FitError("dataset has no covariates");
    if (data.n() < 2) throw FitError("dataset has fewer than 2 records");

    SurvivalTree tree;
    tree.config_ = config;
    tree.dimension_ = data.d();

    TreeBuilder builder{data, config, std::mt19937_64(config.seed), &tree.nodes_, {}};

    std::vector<std::size_t> members(data.n());
    if (config.bootstrap) {
        for (std::size_t i = 0; i < data.n(); ++i)
            members[i] = static_cast<std::size_t>(builder.gen() % data.n());
    } else {
        std::iota(members.begin(), members.end(), std::size_t{0});
    }

    builder.build(members, 0);
    return tree;
}

const StepFunction& SurvivalTree::leaf_function(std::span<const double> covariates) const {
    if (nodes_.empty()) throw PredictionError("tree is not fitted");
    if (covariates.size() != dimension_)
        throw PredictionError("query has " + std::to_string(covariates.size()) +
                              " covariates, tree expects " + std::to_string(dimension_));
    std::size_t at = 0;
    while (!nodes_[at].is_leaf()) {
        const auto& node = nodes_[at];
        const double v = covariates[static_cast<std::size_t>(node.feature)];
        at = static_cast<std::size_t>(v <= node.threshold ? node.left : node.right);
    }
    return nodes_[at].leaf_curve;
}

SurvivalCurve SurvivalTree::predict(std::span<const double> covariates,
                                    const TimeGridPtr& grid) const {
    const StepFunction& leaf = leaf_function(covariates);
    SurvivalCurve curve;
    curve.grid = grid;
    curve.values.resize(grid->size());
    for (std::size_t j = 0; j < grid->size(); ++j) curve.values[j] = leaf(grid->times[j]);
    return curve;
}

SurvivalCurve predict_tree(const SurvivalTree& tree, std::span<const double> covariates,
                           const TimeGridPtr& grid) {
    return tree.predict(covariates, grid);
}

namespace {

nlohmann::ordered_json node_to_json(const std::vector<SurvivalTree::Node>& nodes, int at) {
    const auto& node = nodes[static_cast<std::size_t>(at)];
    nlohmann::ordered_json j;
    if (node.is_leaf()) {
        j["leaf"] = true;
        j["members"] = node.member_count;
        j["times"] = node.leaf_curve.knots;
        j["survival"] = node.leaf_curve.values;
    } else {
        j["leaf"] = false;
        j["feature"] = node.feature;
        j["threshold"] = node.threshold;
        j["left"] = node_to_json(nodes, node.left);
        j["right"] = node_to_json(nodes, node.right);
    }
    return j;
}

}  // namespace

std::string SurvivalTree::to_json() const {
    nlohmann::ordered_json j;
    j["max_depth"] = config_.max_depth;
    j["min_leaf_size"] = config_.min_leaf_size;
    j["bootstrap"] = config_.bootstrap;
    j["seed"] = config_.seed;
    j["max_features"] = config_.max_features;
    j["dimension"] = dimension_;
    j["root"] = nodes_.empty() ? nlohmann::ordered_json(nullptr) : node_to_json(nodes_, 0);
    return j.dump(2);
}

std::vector<SurvivalTree> build_machine_pool(const SurvivalDataset& d_k, std::uint64_t seed) {
    const std::size_t max_features =
        static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d_k.d()))));
    std::vector<SurvivalTree> pool;
    pool.reserve(kPoolSize);
    std::uint64_t machine = 0;
    for (int depth : {3, 4, 5, 6}) {
        for (int min_leaf : {10, 20}) {
            TreeConfig cfg;
            cfg.max_depth = depth;
            cfg.min_leaf_size = min_leaf;
            cfg.bootstrap = true;
            cfg.seed = seed + machine;
            cfg.max_features = max_features;
            pool.push_back(fit_tree(d_k, cfg));
            ++machine;
        }
    }
    return pool;
}

}  // namespace survcobra
