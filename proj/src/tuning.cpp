#include "survcobra/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numeric>

#include "survcobra/errors.hpp"
#include "survcobra/estimators.hpp"
#include "survcobra/parallel.hpp"
#include "survcobra/rng.hpp"

namespace survcobra {

namespace {

constexpr double kEpsilonLowQuantile = 0.05;

// Type-7 (linear interpolation) quantile of a sorted sample.
double quantile_sorted(const std::vector<double>& sorted, double q) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double h = q * static_cast<double>(n - 1);
    const std::size_t lo = std::min(static_cast<std::size_t>(h), n - 2);
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double pair_distance(const double* a, const double* b, std::size_t t_count, NormKind norm) {
    double acc = 0.0;
    if (norm == NormKind::Frobenius) {
        for (std::size_t j = 0; j < t_count; ++j) {
            const double diff = a[j] - b[j];
            acc += diff * diff;
        }
        return std::sqrt(acc);
    }
    for (std::size_t j = 0; j < t_count; ++j) acc = std::max(acc, std::abs(a[j] - b[j]));
    return acc;
}

}  // namespace

std::vector<double> epsilon_grid(const PredictionTable& table, std::size_t size, NormKind norm) {
    if (size == 0) throw ValidationError("epsilon grid size must be positive");
    if (table.points < 2)
        throw ValidationError("epsilon grid needs at least 2 prediction-table points");
    const std::size_t t_count = table.grid->size();

    std::vector<double> distances;
    distances.reserve(table.machines * table.points * (table.points - 1) / 2);
    for (std::size_t m = 0; m < table.machines; ++m) {
        const double* block = table.values.data() + m * table.points * t_count;
        for (std::size_t i = 0; i < table.points; ++i)
            for (std::size_t j = i + 1; j < table.points; ++j)
                distances.push_back(
                    pair_distance(block + i * t_count, block + j * t_count, t_count, norm));
    }
    std::sort(distances.begin(), distances.end());

    std::vector<double> grid;
    grid.reserve(size);
    for (std::size_t s = 0; s < size; ++s) {
        const double q = size == 1 ? 1.0
                                   : kEpsilonLowQuantile +
                                         (1.0 - kEpsilonLowQuantile) * static_cast<double>(s) /
                                             static_cast<double>(size - 1);
        const double value = quantile_sorted(distances, q);
        if (grid.empty() || value != grid.back()) grid.push_back(value);
    }
    return grid;
}

namespace {

struct GroupEntry {
    double epsilon;
    std::size_t candidate;  // index into the original candidate list
};

// Per-fold scoring state shared by every candidate.
struct FoldContext {
    SurvivalDataset held;
    std::vector<Outcome> held_outcomes;
    StepFunction g_fold;
    TimeGridPtr grid;
    PredictionTable table;              // machines x D_l points
    PredictionTable query_table;        // machines x held points
    std::vector<double> combined;       // D_l point x T, machine-weighted (Weighted variant)
    std::vector<std::size_t> time_order;  // D_l indices sorted by outcome time
    std::vector<double> penalty;        // pooled-D_l Kaplan-Meier on the grid
    // Sorted machine distances per norm: [query][point][rank], query-major.
    std::map<int, std::vector<double>> order_stats;
};

std::vector<double> query_block(const PredictionTable& query_table, std::size_t q) {
    const std::size_t t_count = query_table.grid->size();
    std::vector<double> block(query_table.machines * t_count);
    for (std::size_t m = 0; m < query_table.machines; ++m) {
        const auto row = query_table.row(m, q);
        std::copy(row.begin(), row.end(), block.begin() + static_cast<long>(m * t_count));
    }
    return block;
}

FoldContext build_fold_context(const SurvivalDataset& dataset,
                               const std::vector<std::vector<std::size_t>>& folds, std::size_t f,
                               const TuneConfig& config, const std::vector<NormKind>& norms) {
    FoldContext ctx;
    ctx.held = subset(dataset, folds[f]);

    std::vector<std::size_t> remainder_idx;
    for (std::size_t g = 0; g < folds.size(); ++g) {
        if (g == f) continue;
        remainder_idx.insert(remainder_idx.end(), folds[g].begin(), folds[g].end());
    }
    const SurvivalDataset remainder = subset(dataset, remainder_idx);

    auto [d_l, d_k] =
        split_two_way(remainder, config.dl_fraction, derive_seed(config.seed, "fold-split", f));
    const auto pool = build_machine_pool(d_k, derive_seed(config.seed, "fold-pool", f));
    ctx.grid = std::make_shared<const TimeGrid>(make_time_grid(remainder, config.grid_resolution));
    ctx.table = build_prediction_table(pool, d_l, ctx.grid);
    ctx.query_table = build_prediction_table(pool, ctx.held, ctx.grid);

    ctx.held_outcomes = ctx.held.outcomes();
    ctx.g_fold = censoring_survival(ctx.held_outcomes);

    const std::size_t t_count = ctx.grid->size();
    const std::size_t l = ctx.table.points;
    const std::size_t machines = ctx.table.machines;

    if (config.variant == Variant::Weighted) {
        const auto ibs_dl = per_machine_ibs(ctx.table, ctx.table.dl_outcomes,
                                            censoring_survival(ctx.table.dl_outcomes), *ctx.grid);
        const auto weights = config.weight_scheme == WeightScheme::Complement
                                 ? machine_ibs_weights(ibs_dl)
                                 : literal_machine_weights(ibs_dl);
        ctx.combined.assign(l * t_count, 0.0);
        for (std::size_t m = 0; m < machines; ++m) {
            const double w = weights[m];
            const double* block = ctx.table.values.data() + m * l * t_count;
            for (std::size_t i = 0; i < l; ++i)
                for (std::size_t j = 0; j < t_count; ++j)
                    ctx.combined[i * t_count + j] += w * block[i * t_count + j];
        }
    } else {
        ctx.time_order.resize(l);
        std::iota(ctx.time_order.begin(), ctx.time_order.end(), std::size_t{0});
        std::sort(ctx.time_order.begin(), ctx.time_order.end(), [&](std::size_t a, std::size_t b) {
            if (ctx.table.dl_outcomes[a].time != ctx.table.dl_outcomes[b].time)
                return ctx.table.dl_outcomes[a].time < ctx.table.dl_outcomes[b].time;
            return a < b;
        });
    }

    const StepFunction pooled_km = kaplan_meier(ctx.table.dl_outcomes);
    ctx.penalty.resize(t_count);
    for (std::size_t j = 0; j < t_count; ++j) ctx.penalty[j] = pooled_km(ctx.grid->times[j]);

    const std::size_t n_queries = ctx.held.n();
    std::vector<double> ranks(machines);
    for (NormKind norm : norms) {
        auto& stats = ctx.order_stats[static_cast<int>(norm)];
        stats.resize(n_queries * l * machines);
        for (std::size_t q = 0; q < n_queries; ++q) {
            const auto block = query_block(ctx.query_table, q);
            const auto dist = detail::query_distances(block, ctx.table, norm);
            for (std::size_t i = 0; i < l; ++i) {
                for (std::size_t m = 0; m < machines; ++m) ranks[m] = dist.at(m, i);
                std::sort(ranks.begin(), ranks.end());
                std::copy(ranks.begin(), ranks.end(),
                          stats.begin() + static_cast<long>((q * l + i) * machines));
            }
        }
    }
    return ctx;
}

// Smallest widened epsilon (factor 1.5, up to 10 steps past the base) that
// reaches the nearest threshold; NaN when even the widest misses.
double effective_epsilon(double epsilon, double nearest) {
    const PredictOptions defaults;
    double e = epsilon;
    if (nearest <= e) return e;
    for (int w = 0; w < defaults.max_widenings; ++w) {
        e *= defaults.widen_factor;
        if (nearest <= e) return e;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

void clip_monotone(double* values, std::size_t t_count) {
    double running = 1.0;
    for (std::size_t j = 0; j < t_count; ++j) {
        double v = std::min(std::max(values[j], 0.0), 1.0);
        v = std::min(v, running);
        values[j] = v;
        running = v;
    }
}

// Scores one (norm, alpha) group of epsilon-ascending candidates for the
// Weighted variant, writing per-candidate IBS into `scores`.
void score_weighted_group(const FoldContext& ctx, const std::vector<double>& stats,
                          std::size_t required, const std::vector<GroupEntry>& group,
                          std::vector<double>& scores) {
    const std::size_t n_queries = ctx.held.n();
    const std::size_t l = ctx.table.points;
    const std::size_t machines = ctx.table.machines;
    const std::size_t t_count = ctx.grid->size();

    // Per query: thresholds sorted ascending, running member prefix sum.
    std::vector<std::vector<double>> th_sorted(n_queries);
    std::vector<std::vector<std::size_t>> point_order(n_queries);
    std::vector<std::size_t> pos(n_queries, 0);
    std::vector<double> run_sum(n_queries * t_count, 0.0);
    for (std::size_t q = 0; q < n_queries; ++q) {
        auto& order = point_order[q];
        order.resize(l);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::vector<double> th(l);
        for (std::size_t i = 0; i < l; ++i)
            th[i] = stats[(q * l + i) * machines + (required - 1)];
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (th[a] != th[b]) return th[a] < th[b];
            return a < b;
        });
        auto& sorted = th_sorted[q];
        sorted.resize(l);
        for (std::size_t p = 0; p < l; ++p) sorted[p] = th[order[p]];
    }

    std::vector<double> curves(n_queries * t_count);
    std::vector<double> scratch(t_count);
    for (const auto& entry : group) {
        for (std::size_t q = 0; q < n_queries; ++q) {
            double* sum = run_sum.data() + q * t_count;
            const auto& sorted = th_sorted[q];
            while (pos[q] < l && sorted[pos[q]] <= entry.epsilon) {
                const double* row = ctx.combined.data() + point_order[q][pos[q]] * t_count;
                for (std::size_t j = 0; j < t_count; ++j) sum[j] += row[j];
                ++pos[q];
            }
            double* out = curves.data() + q * t_count;
            if (pos[q] > 0) {
                const double inv = 1.0 / static_cast<double>(pos[q]);
                for (std::size_t j = 0; j < t_count; ++j) out[j] = sum[j] * inv;
                clip_monotone(out, t_count);
            } else {
                const double eff = effective_epsilon(entry.epsilon, sorted[0]);
                if (std::isnan(eff)) {
                    std::copy(ctx.penalty.begin(), ctx.penalty.end(), out);
                } else {
                    const std::size_t count = static_cast<std::size_t>(
                        std::upper_bound(sorted.begin(), sorted.end(), eff) - sorted.begin());
                    std::fill(scratch.begin(), scratch.end(), 0.0);
                    for (std::size_t p = 0; p < count; ++p) {
                        const double* row = ctx.combined.data() + point_order[q][p] * t_count;
                        for (std::size_t j = 0; j < t_count; ++j) scratch[j] += row[j];
                    }
                    const double inv = 1.0 / static_cast<double>(count);
                    for (std::size_t j = 0; j < t_count; ++j) out[j] = scratch[j] * inv;
                    clip_monotone(out, t_count);
                }
            }
        }
        scores[entry.candidate] =
            detail::ibs_on_grid(curves, ctx.held_outcomes, ctx.g_fold, *ctx.grid);
    }
}

// Straight-variant counterpart: exp(-Nelson-Aalen) over the members, computed
// by one pass over D_l in time order per (candidate, query).
void score_straight_group(const FoldContext& ctx, const std::vector<double>& stats,
                          std::size_t required, const std::vector<GroupEntry>& group,
                          std::vector<double>& scores) {
    const std::size_t n_queries = ctx.held.n();
    const std::size_t l = ctx.table.points;
    const std::size_t machines = ctx.table.machines;
    const std::size_t t_count = ctx.grid->size();
    const auto& grid_times = ctx.grid->times;

    // Thresholds in D_l time order, plus each query's nearest threshold.
    std::vector<double> th_time(n_queries * l);
    std::vector<double> nearest(n_queries, std::numeric_limits<double>::infinity());
    for (std::size_t q = 0; q < n_queries; ++q) {
        for (std::size_t p = 0; p < l; ++p) {
            const std::size_t i = ctx.time_order[p];
            const double th = stats[(q * l + i) * machines + (required - 1)];
            th_time[q * l + p] = th;
            nearest[q] = std::min(nearest[q], th);
        }
    }

    std::vector<double> curves(n_queries * t_count);
    for (const auto& entry : group) {
        for (std::size_t q = 0; q < n_queries; ++q) {
            double* out = curves.data() + q * t_count;
            const double eff = effective_epsilon(entry.epsilon, nearest[q]);
            if (std::isnan(eff)) {
                std::copy(ctx.penalty.begin(), ctx.penalty.end(), out);
                continue;
            }
            const double* th = th_time.data() + q * l;
            std::size_t member_count = 0;
            for (std::size_t p = 0; p < l; ++p)
                if (th[p] <= eff) ++member_count;

            double hazard = 0.0;
            std::size_t remaining = member_count;
            std::size_t j = 0;
            std::size_t p = 0;
            while (p < l) {
                const double t = ctx.table.dl_outcomes[ctx.time_order[p]].time;
                std::size_t events = 0;
                std::size_t count = 0;
                while (p < l && ctx.table.dl_outcomes[ctx.time_order[p]].time == t) {
                    if (th[p] <= eff) {
                        ++count;
                        if (ctx.table.dl_outcomes[ctx.time_order[p]].event) ++events;
                    }
                    ++p;
                }
                if (count == 0) continue;
                while (j < t_count && grid_times[j] <= t) {
                    out[j] = std::exp(-hazard);
                    ++j;
                }
                if (events > 0)
                    hazard += static_cast<double>(events) / static_cast<double>(remaining);
                remaining -= count;
            }
            while (j < t_count) {
                out[j] = std::exp(-hazard);
                ++j;
            }
        }
        scores[entry.candidate] =
            detail::ibs_on_grid(curves, ctx.held_outcomes, ctx.g_fold, *ctx.grid);
    }
}

std::vector<double> score_fold(const SurvivalDataset& dataset,
                               const std::vector<std::vector<std::size_t>>& folds, std::size_t f,
                               const TuneConfig& config,
                               const std::vector<TuneCandidate>& candidates,
                               const std::vector<NormKind>& norms) {
    const FoldContext ctx = build_fold_context(dataset, folds, f, config, norms);

    // Candidates sharing (norm, required-agreement) form one epsilon-sorted
    // sweep; map iteration order is deterministic.
    std::map<std::pair<int, std::size_t>, std::vector<GroupEntry>> groups;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        const auto required =
            detail::required_machine_count(candidates[c].alpha, ctx.table.machines);
        groups[{static_cast<int>(candidates[c].norm), required}].push_back(
            {candidates[c].epsilon, c});
    }

    std::vector<double> scores(candidates.size());
    for (auto& [key, group] : groups) {
        std::sort(group.begin(), group.end(), [](const GroupEntry& a, const GroupEntry& b) {
            if (a.epsilon != b.epsilon) return a.epsilon < b.epsilon;
            return a.candidate < b.candidate;
        });
        const auto& stats = ctx.order_stats.at(key.first);
        if (config.variant == Variant::Weighted)
            score_weighted_group(ctx, stats, key.second, group, scores);
        else
            score_straight_group(ctx, stats, key.second, group, scores);
    }
    return scores;
}

bool candidate_preferred(const CvRow& a, const CvRow& b) {
    if (a.mean_ibs != b.mean_ibs) return a.mean_ibs < b.mean_ibs;
    if (a.epsilon != b.epsilon) return a.epsilon > b.epsilon;
    if (a.alpha != b.alpha) return a.alpha > b.alpha;
    return a.norm == NormKind::Frobenius && b.norm == NormKind::Sup;
}

}  // namespace

TuneResult cv_tune_with_candidates(const SurvivalDataset& dataset, const TuneConfig& config,
                                   std::span<const TuneCandidate> candidates) {
    if (config.k_folds < 2) throw ValidationError("cross-validation needs at least 2 folds");
    if (candidates.empty()) throw ValidationError("no tuning candidates");
    for (const auto& c : candidates) {
        if (!(c.epsilon >= 0.0) || !std::isfinite(c.epsilon))
            throw ValidationError("candidate epsilon must be finite and non-negative");
        detail::required_machine_count(c.alpha, kPoolSize);
    }

    std::vector<NormKind> norms;
    for (const auto& c : candidates)
        if (std::find(norms.begin(), norms.end(), c.norm) == norms.end()) norms.push_back(c.norm);

    const std::vector<TuneCandidate> cands(candidates.begin(), candidates.end());
    const auto folds = kfold_indices(dataset.n(), static_cast<std::size_t>(config.k_folds),
                                     derive_seed(config.seed, "folds"));

    std::vector<std::vector<double>> fold_scores(folds.size());
    parallel_for(folds.size(), resolve_workers(config.workers), [&](std::size_t f) {
        try {
            fold_scores[f] = score_fold(dataset, folds, f, config, cands, norms);
        } catch (const TuneError&) {
            throw;
        } catch (const std::exception& e) {
            throw TuneError("fold " + std::to_string(f) + ": " + e.what());
        }
    });

    const double k = static_cast<double>(folds.size());
    std::vector<CvRow> rows(cands.size());
    for (std::size_t c = 0; c < cands.size(); ++c) {
        CvRow row;
        row.epsilon = cands[c].epsilon;
        row.alpha = cands[c].alpha;
        row.norm = cands[c].norm;
        double mean = 0.0;
        for (const auto& fs : fold_scores) mean += fs[c];
        mean /= k;
        double ss = 0.0;
        for (const auto& fs : fold_scores) ss += (fs[c] - mean) * (fs[c] - mean);
        row.mean_ibs = mean;
        row.sd_ibs = std::sqrt(ss / (k - 1.0));
        rows[c] = row;
    }

    std::size_t best = 0;
    for (std::size_t c = 1; c < rows.size(); ++c)
        if (candidate_preferred(rows[c], rows[best])) best = c;

    TuneResult result;
    result.best.epsilon = rows[best].epsilon;
    result.best.alpha = rows[best].alpha;
    result.best.norm = rows[best].norm;
    result.best.variant = config.variant;
    result.cv_scores = std::move(rows);
    return result;
}

TuneResult cv_tune(const SurvivalDataset& dataset, const TuneConfig& config) {
    if (config.epsilon_grid_size < 2)
        throw ValidationError("epsilon grid size must be at least 2");

    auto [d_l_pre, d_k_pre] = split_two_way(dataset, 0.5, derive_seed(config.seed, "prelim"));
    const auto pool = build_machine_pool(d_k_pre, derive_seed(config.seed, "prelim-pool"));
    const auto grid =
        std::make_shared<const TimeGrid>(make_time_grid(dataset, config.grid_resolution));
    const auto table = build_prediction_table(pool, d_l_pre, grid);

    std::vector<NormKind> norms;
    if (config.norm)
        norms.push_back(*config.norm);
    else
        norms = {NormKind::Frobenius, NormKind::Sup};

    std::vector<double> alphas = config.alpha_grid;
    if (alphas.empty()) {
        const double m = static_cast<double>(kPoolSize);
        for (std::size_t a = 1; a <= kPoolSize; ++a) alphas.push_back(static_cast<double>(a) / m);
    }

    std::vector<TuneCandidate> candidates;
    for (NormKind norm : norms) {
        const auto eps_list =
            epsilon_grid(table, static_cast<std::size_t>(config.epsilon_grid_size), norm);
        for (double eps : eps_list)
            for (double alpha : alphas) candidates.push_back({eps, alpha, norm});
    }
    return cv_tune_with_candidates(dataset, config, candidates);
}

}  // namespace survcobra
