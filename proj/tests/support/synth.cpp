#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "survcobra/io.hpp"

namespace synth {

namespace {

using survcobra::SurvivalDataset;
using survcobra::SurvivalRecord;

// Hand-rolled draws over the raw 64-bit stream: std::normal_distribution and
// friends vary across standard libraries, and these tables must not.
double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

double normal(std::mt19937_64& gen) {
    const double u1 = uniform01(gen);
    const double u2 = uniform01(gen);
    return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(6.283185307179586476925287 * u2);
}

double exponential(std::mt19937_64& gen, double rate) {
    return -std::log(1.0 - uniform01(gen)) / rate;
}

bool bernoulli(std::mt19937_64& gen, double p) { return uniform01(gen) < p; }

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

std::string cell(double v) { return survcobra::format_double(v); }

std::string flag(bool b) { return b ? "1" : "0"; }

double round_days(double t) { return std::max(1.0, std::round(t)); }

}  // namespace

RawTable whas_like(std::size_t n, std::uint64_t seed) {
    RawTable t;
    t.name = "whas500";
    t.columns = {"afb", "age",  "av3",   "bmi", "chf", "cvd",    "diasbp", "gender",
                 "hr",  "los",  "miord", "mitype", "sho", "sysbp", "lenfol", "fstat"};
    t.schema.time_column = "lenfol";
    t.schema.event_column = "fstat";
    t.schema.event_true_values = {"1"};

    std::mt19937_64 gen(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const double age = std::round(clamp(69.8 + 14.5 * normal(gen), 30, 104));
        const double bmi = clamp(26.6 + 5.4 * normal(gen), 13, 45);
        const double hr = std::round(clamp(87 + 23 * normal(gen), 35, 190));
        const double sysbp = std::round(clamp(144 + 32 * normal(gen), 57, 250));
        const double diasbp = std::round(clamp(78 + 21 * normal(gen), 20, 200));
        const double los = std::round(clamp(exponential(gen, 1.0 / 6.0), 0, 47));
        const bool gender = bernoulli(gen, 0.40);
        const bool afb = bernoulli(gen, 0.12);
        const bool av3 = bernoulli(gen, 0.11);
        const bool chf = bernoulli(gen, 0.31);
        const bool cvd = bernoulli(gen, 0.75);
        const bool miord = bernoulli(gen, 0.41);
        const bool mitype = bernoulli(gen, 0.70);
        const bool sho = bernoulli(gen, 0.05);

        const double lp = 0.045 * (age - 70) - 0.05 * (bmi - 26.6) + 0.9 * chf + 1.4 * sho +
                          0.008 * (hr - 87) - 0.004 * (sysbp - 144) + 0.3 * miord -
                          0.4 * mitype + 0.2 * gender;
        const double event_time = exponential(gen, std::exp(lp) / 3600.0);
        const double censor_time =
            std::min(1000.0 + 1400.0 * uniform01(gen), exponential(gen, 1.0 / 9000.0));
        const double y = round_days(std::min(event_time, censor_time));
        const bool event = event_time <= censor_time;

        t.rows.push_back({flag(afb), cell(age), flag(av3), cell(std::round(bmi * 1000) / 1000),
                          flag(chf), flag(cvd), cell(diasbp), flag(gender), cell(hr), cell(los),
                          flag(miord), flag(mitype), flag(sho), cell(sysbp), cell(y),
                          flag(event)});
    }
    return t;
}

RawTable gbsg_like(std::size_t n, std::uint64_t seed) {
    RawTable t;
    t.name = "gbsg2";
    t.columns = {"age", "estrec", "horTh", "menostat", "pnodes",
                 "progrec", "tgrade", "tsize", "time", "cens"};
    t.schema.time_column = "time";
    t.schema.event_column = "cens";
    t.schema.categorical_columns = {"horTh", "menostat", "tgrade"};
    t.schema.event_true_values = {"1"};

    std::mt19937_64 gen(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const double age = std::round(clamp(53 + 10 * normal(gen), 21, 80));
        const bool post = age + 4 * normal(gen) >= 51;
        const bool horth = bernoulli(gen, 0.36);
        const double grade_draw = uniform01(gen);
        const std::string tgrade = grade_draw < 0.12 ? "I" : (grade_draw < 0.76 ? "II" : "III");
        const double tsize = std::round(clamp(std::exp(3.3 + 0.45 * normal(gen)), 3, 120));
        const double pnodes = std::round(clamp(1 + exponential(gen, 1.0 / 4.0), 1, 51));
        const double progrec = std::round(clamp(std::exp(3.0 + 1.6 * normal(gen)), 0, 2380));
        const double estrec = std::round(clamp(std::exp(3.2 + 1.5 * normal(gen)), 0, 1144));

        const double lp = 0.055 * pnodes - 0.25 * horth + (tgrade == "III" ? 0.5 : 0.0) +
                          (tgrade == "II" ? 0.25 : 0.0) - 0.0008 * progrec +
                          0.008 * (tsize - 27) - 0.012 * (age - 53);
        const double event_time = exponential(gen, std::exp(lp) / 3500.0);
        const double censor_time =
            std::min(600.0 + 2100.0 * uniform01(gen), exponential(gen, 1.0 / 8000.0));
        const double y = round_days(std::min(event_time, censor_time));
        const bool event = event_time <= censor_time;

        t.rows.push_back({cell(age), cell(estrec), horth ? "yes" : "no", post ? "Post" : "Pre",
                          cell(pnodes), cell(progrec), tgrade, cell(tsize), cell(y),
                          flag(event)});
    }
    return t;
}

RawTable veteran_like(std::size_t n, std::uint64_t seed) {
    RawTable t;
    t.name = "veteran";
    t.columns = {"age", "celltype", "diagtime", "karno", "prior", "trt", "time", "status"};
    t.schema.time_column = "time";
    t.schema.event_column = "status";
    t.schema.categorical_columns = {"celltype", "prior", "trt"};
    t.schema.event_true_values = {"1"};

    std::mt19937_64 gen(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const double karno = std::round(clamp(58 + 20 * normal(gen), 10, 99));
        const double diagtime = std::round(clamp(1 + exponential(gen, 1.0 / 8.0), 1, 87));
        const double age = std::round(clamp(58 + 10 * normal(gen), 34, 81));
        const double cell_draw = uniform01(gen);
        const std::string celltype = cell_draw < 0.25   ? "squamous"
                                     : cell_draw < 0.60 ? "smallcell"
                                     : cell_draw < 0.80 ? "adeno"
                                                        : "large";
        const bool prior = bernoulli(gen, 0.30);
        const bool test_arm = bernoulli(gen, 0.50);

        const double lp = -0.033 * (karno - 60) + (celltype == "smallcell" ? 0.75 : 0.0) +
                          (celltype == "adeno" ? 0.9 : 0.0) + 0.1 * test_arm +
                          0.003 * (age - 58);
        const double event_time = exponential(gen, std::exp(lp) / 95.0);
        const double censor_time =
            std::min(60.0 + 940.0 * uniform01(gen), exponential(gen, 1.0 / 1500.0));
        const double y = round_days(std::min(event_time, censor_time));
        const bool event = event_time <= censor_time;

        t.rows.push_back({cell(age), celltype, cell(diagtime), cell(karno),
                          prior ? "yes" : "no", test_arm ? "test" : "standard", cell(y),
                          flag(event)});
    }
    return t;
}

void write_csv(const RawTable& table, const std::string& path) {
    std::string out;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (c) out += ',';
        out += table.columns[c];
    }
    out += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += ',';
            out += row[c];
        }
        out += '\n';
    }
    survcobra::atomic_write_file(path, out);
}

SurvivalDataset load(const RawTable& table, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::string path = dir + "/" + table.name + ".csv";
    write_csv(table, path);
    return survcobra::load_csv(path, table.schema);
}

SurvivalDataset numeric_cohort(std::size_t n, std::size_t d, std::uint64_t seed,
                               double event_share) {
    std::mt19937_64 gen(seed);
    SurvivalDataset data;
    for (std::size_t j = 0; j < d; ++j) data.feature_names.push_back("f" + std::to_string(j));
    for (std::size_t i = 0; i < n; ++i) {
        SurvivalRecord rec;
        rec.covariates.resize(d);
        for (std::size_t j = 0; j < d; ++j) {
            if (j == 0) {
                rec.covariates[j] = bernoulli(gen, 0.5) ? 1.0 : 0.0;
            } else if (j == 1) {
                rec.covariates[j] = std::round(uniform01(gen) * 1000) / 1000;
            } else {
                rec.covariates[j] = std::round(normal(gen) * 1000) / 1000;
            }
        }
        double lp = 1.2 * rec.covariates[0];
        if (d > 1) lp += 0.9 * rec.covariates[1];
        if (d > 2) lp += 0.5 * rec.covariates[2];
        const double event_rate = 0.1 * std::exp(lp);
        const double censor_rate = event_rate * (1.0 - event_share) / event_share;
        const double event_time = exponential(gen, event_rate);
        const double censor_time = exponential(gen, censor_rate);
        rec.time = std::max(0.001, std::round(std::min(event_time, censor_time) * 1000) / 1000);
        rec.event = event_time <= censor_time;
        data.records.push_back(std::move(rec));
    }
    data.validate();
    return data;
}

}  // namespace synth
