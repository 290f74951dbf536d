#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "survcobra/cobra.hpp"
#include "survcobra/errors.hpp"
#include "survcobra/estimators.hpp"
#include "survcobra/metrics.hpp"
#include "synth.hpp"
#include "toy_data.hpp"

using namespace survcobra;

namespace {

StepFunction flat_one() {
    StepFunction g;
    g.value_before_first = 1.0;
    return g;
}

// Non-increasing values in [0,1]: sorted uniform draws, descending.
std::vector<double> random_curve_values(std::mt19937_64& gen, std::size_t t) {
    std::vector<double> v(t);
    for (auto& x : v) x = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    std::sort(v.begin(), v.end(), std::greater<>());
    return v;
}

double value_at(const SurvivalCurve& c, double t) {
    // Direct scan, independent of the library's lookup.
    double v = 1.0;
    for (std::size_t j = 0; j < c.grid->times.size(); ++j) {
        if (c.grid->times[j] <= t) v = c.values[j];
    }
    return v;
}

}  // namespace

TEST_CASE("brier score matches the single-subject hand values") {
    auto grid = toy::grid_of({1, 3});
    std::vector<SurvivalCurve> curves = {toy::curve(grid, {0.8, 0.3})};
    auto subjects = toy::outcomes({2}, {true});
    auto g = flat_one();
    CHECK(brier_score_censored(curves, subjects, g, 1.0) == doctest::Approx(0.04).epsilon(1e-12));
    CHECK(brier_score_censored(curves, subjects, g, 3.0) == doctest::Approx(0.09).epsilon(1e-12));
}

TEST_CASE("brier score matches the two-subject hand value with estimated censoring") {
    auto grid = toy::grid_of({2, 4});
    std::vector<SurvivalCurve> curves = {toy::curve(grid, {0.2, 0.1}),
                                         toy::curve(grid, {0.7, 0.6})};
    auto subjects = toy::outcomes({2, 4}, {true, false});
    auto g = censoring_survival(subjects);
    CHECK(eval_step(g, 3.0) == 1.0);
    CHECK(g.value_before(2.0) == 1.0);
    CHECK(brier_score_censored(curves, subjects, g, 3.0) ==
          doctest::Approx(0.065).epsilon(1e-12));
}

TEST_CASE("perfect predictions score zero everywhere") {
    auto grid = toy::grid_of({1, 2, 3, 4});
    auto subjects = toy::outcomes({2, 4, 3, 1}, {true, true, true, true});
    std::vector<SurvivalCurve> curves;
    for (const auto& s : subjects) {
        std::vector<double> v(grid->size());
        for (std::size_t j = 0; j < grid->size(); ++j)
            v[j] = grid->times[j] < s.time ? 1.0 : 0.0;
        curves.push_back(toy::curve(grid, v));
    }
    auto g = flat_one();
    for (double t : grid->times) CHECK(brier_score_censored(curves, subjects, g, t) == 0.0);
    CHECK(integrated_brier_score(curves, subjects, g, *grid) == 0.0);
}

TEST_CASE("subjects censored at or before t contribute nothing") {
    auto grid = toy::grid_of({1, 5});
    std::vector<SurvivalCurve> curves = {toy::curve(grid, {0.9, 0.4}),
                                         toy::curve(grid, {0.8, 0.7})};
    auto subjects = toy::outcomes({2, 5}, {false, true});
    auto g = flat_one();
    // Subject 1 is censored before t=3: only subject 2's survivor term counts.
    CHECK(brier_score_censored(curves, subjects, g, 3.0) ==
          doctest::Approx(0.5 * (1.0 - 0.8) * (1.0 - 0.8)).epsilon(1e-12));
}

TEST_CASE("censored brier score reduces to plain squared error without censoring") {
    std::mt19937_64 gen(404);
    for (std::size_t n = 1; n <= 6; ++n) {
        std::vector<std::vector<double>> time_sets;
        std::vector<double> distinct(n), tied(n);
        for (std::size_t i = 0; i < n; ++i) {
            distinct[i] = static_cast<double>(i + 1);
            tied[i] = static_cast<double>(i / 2 + 1);
        }
        time_sets = {distinct, tied};
        for (const auto& times : time_sets) {
            auto subjects = toy::outcomes(times, std::vector<bool>(n, true));
            auto grid = toy::grid_of([&] {
                std::vector<double> g;
                for (std::size_t j = 0; j <= 2 * n; ++j)
                    g.push_back(0.5 + static_cast<double>(j) * 0.5);
                return g;
            }());
            std::vector<SurvivalCurve> curves;
            for (std::size_t i = 0; i < n; ++i)
                curves.push_back(toy::curve(grid, random_curve_values(gen, grid->size())));

            auto g_hat = censoring_survival(subjects);  // no censoring: identically 1
            std::vector<double> probes = grid->times;
            for (double t : times) probes.push_back(t + 0.1);
            for (double t : probes) {
                std::vector<double> at_t;
                for (const auto& c : curves) at_t.push_back(value_at(c, t));
                CHECK(brier_score_censored(curves, subjects, g_hat, t) ==
                      doctest::Approx(oracle::mse_brier(at_t, subjects, t)).epsilon(1e-10));
            }
        }
    }
}

TEST_CASE("trapezoid mean is exact on affine profiles") {
    // Linear 0 -> 0.2 averages to 0.1 on any grid.
    for (std::size_t t_count : {2u, 3u, 7u, 100u}) {
        std::vector<double> times(t_count), values(t_count);
        for (std::size_t j = 0; j < t_count; ++j) {
            times[j] = 1.0 + 4.0 * static_cast<double>(j) / static_cast<double>(t_count - 1);
            values[j] = 0.2 * (times[j] - 1.0) / 4.0;
        }
        CHECK(trapezoid_mean(values, times) == doctest::Approx(0.1).epsilon(1e-12));
    }

    // Same on a deliberately non-uniform grid, and for a general affine map.
    std::vector<double> times = {2.0, 2.1, 3.7, 5.0, 11.0};
    std::vector<double> constant(times.size(), 0.37);
    CHECK(trapezoid_mean(constant, times) == doctest::Approx(0.37).epsilon(1e-12));
    const double a = 0.05, b = 0.013;
    std::vector<double> affine;
    for (double t : times) affine.push_back(a + b * t);
    CHECK(trapezoid_mean(affine, times) ==
          doctest::Approx(a + b * (times.front() + times.back()) / 2.0).epsilon(1e-12));

    // And it agrees with the long-hand quadrature on arbitrary values.
    std::vector<double> bumpy = {0.9, 0.1, 0.5, 0.5, 0.2};
    CHECK(trapezoid_mean(bumpy, times) ==
          doctest::Approx(oracle::trapezoid_mean(bumpy, times)).epsilon(1e-12));
}

TEST_CASE("constant brier profile integrates to itself") {
    auto grid = toy::grid_of({1, 2, 3, 4, 5});
    std::vector<SurvivalCurve> curves = {toy::flat_curve(grid, 0.8)};
    auto subjects = toy::outcomes({100}, {true});  // survives the whole grid
    auto g = flat_one();
    for (double t : grid->times)
        CHECK(brier_score_censored(curves, subjects, g, t) ==
              doctest::Approx(0.04).epsilon(1e-12));
    CHECK(integrated_brier_score(curves, subjects, g, *grid) ==
          doctest::Approx(0.04).epsilon(1e-12));
}

TEST_CASE("integrated brier score is invariant to time rescaling") {
    auto data = synth::numeric_cohort(25, 3, 777, 0.6);
    auto subjects = data.outcomes();
    auto grid = std::make_shared<const TimeGrid>(make_time_grid(data, 40));

    std::mt19937_64 gen(505);
    std::vector<SurvivalCurve> curves;
    for (std::size_t i = 0; i < subjects.size(); ++i)
        curves.push_back(toy::curve(grid, random_curve_values(gen, grid->size())));
    auto g_hat = censoring_survival(subjects);
    const double base = integrated_brier_score(curves, subjects, g_hat, *grid);
    CHECK(std::isfinite(base));

    for (double c : {2.0, 2.5, 1024.0, 0.001}) {
        std::vector<Outcome> scaled_subjects = subjects;
        for (auto& s : scaled_subjects) s.time *= c;
        auto scaled_grid = std::make_shared<const TimeGrid>([&] {
            TimeGrid g2;
            for (double t : grid->times) g2.times.push_back(t * c);
            return g2;
        }());
        std::vector<SurvivalCurve> scaled_curves;
        for (const auto& cv : curves) scaled_curves.push_back(toy::curve(scaled_grid, cv.values));
        auto scaled_g = censoring_survival(scaled_subjects);
        CHECK(integrated_brier_score(scaled_curves, scaled_subjects, scaled_g, *scaled_grid) ==
              doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("duplicating the cohort changes nothing") {
    auto data = synth::numeric_cohort(20, 3, 888, 0.6);
    auto subjects = data.outcomes();
    auto grid = std::make_shared<const TimeGrid>(make_time_grid(data, 25));
    std::mt19937_64 gen(606);
    std::vector<SurvivalCurve> curves;
    for (std::size_t i = 0; i < subjects.size(); ++i)
        curves.push_back(toy::curve(grid, random_curve_values(gen, grid->size())));

    std::vector<Outcome> doubled_subjects = subjects;
    doubled_subjects.insert(doubled_subjects.end(), subjects.begin(), subjects.end());
    std::vector<SurvivalCurve> doubled_curves = curves;
    doubled_curves.insert(doubled_curves.end(), curves.begin(), curves.end());

    auto g1 = censoring_survival(subjects);
    auto g2 = censoring_survival(doubled_subjects);
    for (double t : grid->times) {
        CHECK(brier_score_censored(doubled_curves, doubled_subjects, g2, t) ==
              doctest::Approx(brier_score_censored(curves, subjects, g1, t)).epsilon(1e-12));
    }
    CHECK(integrated_brier_score(doubled_curves, doubled_subjects, g2, *grid) ==
          doctest::Approx(integrated_brier_score(curves, subjects, g1, *grid)).epsilon(1e-12));
}

TEST_CASE("per-machine scores decompose into independent metric calls") {
    auto grid = toy::grid_of({1, 2, 3});
    auto subjects = toy::outcomes({1.5, 2.5, 4.0}, {true, false, true});

    PredictionTable table;
    table.machines = 2;
    table.points = 3;
    table.grid = grid;
    table.dl_outcomes = subjects;
    std::vector<std::vector<double>> rows = {
        {0.9, 0.7, 0.5}, {0.8, 0.6, 0.1}, {1.0, 0.9, 0.8},   // machine 0
        {0.5, 0.3, 0.2}, {0.6, 0.5, 0.4}, {0.9, 0.5, 0.3}};  // machine 1
    for (const auto& r : rows) table.values.insert(table.values.end(), r.begin(), r.end());

    auto g_hat = censoring_survival(subjects);
    auto scores = per_machine_ibs(table, subjects, g_hat, *grid);
    REQUIRE(scores.size() == 2);
    for (std::size_t m = 0; m < 2; ++m) {
        std::vector<SurvivalCurve> curves;
        for (std::size_t i = 0; i < 3; ++i)
            curves.push_back(toy::curve(grid, rows[m * 3 + i]));
        CHECK(scores[m] ==
              doctest::Approx(integrated_brier_score(curves, subjects, g_hat, *grid))
                  .epsilon(1e-12));
    }

    // Identical machines earn identical scores.
    PredictionTable twin = table;
    std::copy(table.values.begin(), table.values.begin() + 9, twin.values.begin() + 9);
    auto equal_scores = per_machine_ibs(twin, subjects, g_hat, *grid);
    CHECK(equal_scores[0] == equal_scores[1]);

    // A perfect machine on uncensored data scores zero.
    auto no_censor = toy::outcomes({1.5, 2.5, 4.0}, {true, true, true});
    PredictionTable oracle_table;
    oracle_table.machines = 1;
    oracle_table.points = 3;
    oracle_table.grid = grid;
    oracle_table.dl_outcomes = no_censor;
    for (const auto& s : no_censor)
        for (double t : grid->times) oracle_table.values.push_back(t < s.time ? 1.0 : 0.0);
    CHECK(per_machine_ibs(oracle_table, no_censor, flat_one(), *grid)[0] == 0.0);
}

TEST_CASE("metric error paths reject malformed input") {
    auto grid = toy::grid_of({1, 3});
    auto other_grid = toy::grid_of({1, 4});
    std::vector<SurvivalCurve> curves = {toy::flat_curve(grid, 0.5)};
    auto subjects = toy::outcomes({2}, {true});
    auto g = flat_one();

    std::vector<SurvivalCurve> none;
    CHECK_THROWS_AS(brier_score_censored(none, {}, g, 1.0), MetricError);
    std::vector<SurvivalCurve> mismatched = {toy::flat_curve(grid, 0.5),
                                             toy::flat_curve(grid, 0.5)};
    CHECK_THROWS_AS(brier_score_censored(mismatched, subjects, g, 1.0), MetricError);
    std::vector<SurvivalCurve> wrong_grid = {toy::flat_curve(other_grid, 0.5)};
    CHECK_THROWS_AS(integrated_brier_score(wrong_grid, subjects, g, *grid), MetricError);

    std::vector<double> v = {0.1, 0.2};
    std::vector<double> bad_times = {2.0, 2.0};
    CHECK_THROWS_AS(trapezoid_mean(v, bad_times), MetricError);
    std::vector<double> one_point = {0.1};
    std::vector<double> one_time = {2.0};
    CHECK_THROWS_AS(trapezoid_mean(one_point, one_time), MetricError);

    PredictionTable table;
    table.machines = 1;
    table.points = 1;
    table.grid = grid;
    table.values = {0.5, 0.4};
    table.dl_outcomes = subjects;
    CHECK_THROWS_AS(per_machine_ibs(table, toy::outcomes({1, 2}, {true, true}), g, *grid),
                    MetricError);
    CHECK_THROWS_AS(per_machine_ibs(table, subjects, g, *other_grid), MetricError);
}

TEST_CASE("halving the grid step moves the integrated score only slightly") {
    // Grid-refinement stability on the three full-shape synthetic cohorts:
    // score the pooled training survival curve for every test subject at
    // T=100 and T=200 and compare.
    for (const auto& table : {synth::whas_like(), synth::gbsg_like(), synth::veteran_like()}) {
        auto data = synth::load(table, "synth_tmp");
        auto parts = split(data, SplitSpec{0.8, 0.5, 11});
        auto train_outcomes = parts.train.outcomes();
        auto test_outcomes = parts.test.outcomes();
        auto g_hat = censoring_survival(test_outcomes);

        double ibs[2];
        std::size_t which = 0;
        for (std::size_t resolution : {100u, 200u}) {
            auto grid = std::make_shared<const TimeGrid>(make_time_grid(parts.train, resolution));
            auto km = kaplan_meier(train_outcomes);
            std::vector<double> values;
            for (double t : grid->times) values.push_back(eval_step(km, t));
            std::vector<SurvivalCurve> curves(test_outcomes.size(), toy::curve(grid, values));
            ibs[which++] = integrated_brier_score(curves, test_outcomes, g_hat, *grid);
        }
        CHECK(std::abs(ibs[1] - ibs[0]) <= 0.005);
    }
}
