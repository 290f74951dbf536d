#include "survcobra/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "survcobra/errors.hpp"
#include "survcobra/io.hpp"
#include "survcobra/rng.hpp"

namespace survcobra {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

bool is_missing(const std::string& token) { return token.empty() || token == "NA"; }

bool parse_real(const std::string& token, double& out) {
    const char* b = token.data();
    const char* e = b + token.size();
    auto res = std::from_chars(b, e, out);
    return res.ec == std::errc() && res.ptr == e;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Ceiling with a guard against FP wobble just above an integer.
std::size_t ceil_count(double fraction, std::size_t n) {
    double raw = fraction * static_cast<double>(n);
    double c = std::ceil(raw - 1e-9);
    return c <= 0 ? 0 : static_cast<std::size_t>(c);
}

void require_part(const SurvivalDataset& part, const char* name) {
    if (part.n() < 2)
        throw SplitError(std::string("split part '") + name + "' has fewer than 2 records");
    if (part.event_count() == 0)
        throw SplitError(std::string("split part '") + name + "' has zero observed events");
}

}  // namespace

std::size_t SurvivalDataset::event_count() const {
    std::size_t c = 0;
    for (const auto& r : records)
        if (r.event) ++c;
    return c;
}

std::vector<Outcome> SurvivalDataset::outcomes() const {
    std::vector<Outcome> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back({r.time, r.event});
    return out;
}

void SurvivalDataset::validate() const {
    if (n() < 2) throw ValidationError("dataset needs at least 2 records");
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.covariates.size() != d())
            throw ValidationError("record " + std::to_string(i) + " has " +
                                  std::to_string(r.covariates.size()) + " covariates, expected " +
                                  std::to_string(d()));
        if (!(r.time >= 0.0) || !std::isfinite(r.time))
            throw ValidationError("record " + std::to_string(i) + " has invalid time");
    }
    if (event_count() == 0) throw ValidationError("dataset has no observed events");
}

SurvivalDataset load_csv(const std::string& path, const DatasetSchema& schema,
                         MissingPolicy missing) {
    if (schema.time_column.empty() || schema.event_column.empty())
        throw SchemaError("schema must name both time and event columns");
    if (schema.time_column == schema.event_column)
        throw SchemaError("time and event columns must be distinct");
    for (const auto& c : schema.categorical_columns)
        if (c == schema.time_column || c == schema.event_column)
            throw SchemaError("categorical column '" + c + "' clashes with an outcome column");

    std::ifstream in(path);
    if (!in) throw InputError("cannot open dataset file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty file: " + path);
    std::vector<std::string> header = split_line(line);

    auto column_index = [&](const std::string& name) -> std::size_t {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw SchemaError("column '" + name + "' not found in header of " + path);
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t time_idx = column_index(schema.time_column);
    const std::size_t event_idx = column_index(schema.event_column);

    std::set<std::string> categorical(schema.categorical_columns.begin(),
                                      schema.categorical_columns.end());
    for (const auto& c : schema.categorical_columns) column_index(c);

    std::vector<std::vector<std::string>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != header.size())
            throw ParseError("row " + std::to_string(rows.size() + 1) + " has " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(header.size()));
        rows.push_back(std::move(cells));
    }

    // Category order = first appearance down the file.
    std::map<std::size_t, std::vector<std::string>> categories;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (categorical.count(header[c])) categories[c] = {};
    for (const auto& row : rows) {
        for (auto& [c, cats] : categories) {
            const std::string& tok = row[c];
            if (is_missing(tok)) continue;
            if (std::find(cats.begin(), cats.end(), tok) == cats.end()) cats.push_back(tok);
        }
    }

    // Imputation values, when enabled. Outcome columns are never imputed.
    std::unordered_map<std::size_t, double> numeric_fill;
    std::unordered_map<std::size_t, std::string> categorical_fill;
    if (missing == MissingPolicy::Impute) {
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (c == time_idx || c == event_idx) continue;
            if (categories.count(c)) {
                std::map<std::string, std::size_t> freq;
                for (const auto& row : rows)
                    if (!is_missing(row[c])) ++freq[row[c]];
                std::size_t best = 0;
                for (const auto& cat : categories[c]) {
                    if (freq[cat] > best) {
                        best = freq[cat];
                        categorical_fill[c] = cat;
                    }
                }
            } else {
                std::vector<double> vals;
                for (const auto& row : rows) {
                    double v;
                    if (!is_missing(row[c]) && parse_real(row[c], v)) vals.push_back(v);
                }
                if (!vals.empty()) numeric_fill[c] = median_of(vals);
            }
        }
    }

    SurvivalDataset ds;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c == time_idx || c == event_idx) continue;
        if (categories.count(c)) {
            for (const auto& cat : categories[c]) ds.feature_names.push_back(header[c] + "=" + cat);
        } else {
            ds.feature_names.push_back(header[c]);
        }
    }

    std::set<std::string> true_tokens(schema.event_true_values.begin(),
                                      schema.event_true_values.end());

    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        SurvivalRecord rec;
        rec.covariates.reserve(ds.feature_names.size());
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (c == time_idx || c == event_idx) continue;
            std::string tok = row[c];
            if (is_missing(tok)) {
                if (missing == MissingPolicy::Reject)
                    throw ValidationError("missing value at row " + std::to_string(r + 1) +
                                          ", column '" + header[c] + "'");
                if (categories.count(c)) {
                    auto it = categorical_fill.find(c);
                    if (it == categorical_fill.end())
                        throw ValidationError("column '" + header[c] + "' is entirely missing");
                    tok = it->second;
                } else {
                    auto it = numeric_fill.find(c);
                    if (it == numeric_fill.end())
                        throw ValidationError("column '" + header[c] + "' is entirely missing");
                    rec.covariates.push_back(it->second);
                    continue;
                }
            }
            if (categories.count(c)) {
                const auto& cats = categories[c];
                for (const auto& cat : cats) rec.covariates.push_back(cat == tok ? 1.0 : 0.0);
            } else {
                double v;
                if (!parse_real(tok, v))
                    throw ParseError("cannot parse numeric cell at row " + std::to_string(r + 1) +
                                     ", column '" + header[c] + "': '" + tok + "'");
                rec.covariates.push_back(v);
            }
        }

        const std::string& ttok = row[time_idx];
        if (is_missing(ttok))
            throw ValidationError("missing time at row " + std::to_string(r + 1));
        if (!parse_real(ttok, rec.time))
            throw ParseError("cannot parse time at row " + std::to_string(r + 1) + ": '" + ttok +
                             "'");
        if (!(rec.time >= 0.0) || !std::isfinite(rec.time))
            throw ValidationError("negative or non-finite time at row " + std::to_string(r + 1));

        const std::string& etok = row[event_idx];
        if (is_missing(etok))
            throw ValidationError("missing event indicator at row " + std::to_string(r + 1));
        rec.event = true_tokens.count(etok) > 0;

        ds.records.push_back(std::move(rec));
    }

    ds.validate();
    return ds;
}

void save_csv(const SurvivalDataset& dataset, const std::string& path,
              const std::string& time_column, const std::string& event_column) {
    std::string content;
    auto check_name = [](const std::string& name) {
        if (name.find(',') != std::string::npos || name.find('"') != std::string::npos ||
            name.find('\n') != std::string::npos)
            throw Error("column name not writable as plain CSV: " + name);
    };
    for (const auto& f : dataset.feature_names) {
        check_name(f);
        content += f;
        content += ',';
    }
    check_name(time_column);
    check_name(event_column);
    content += time_column;
    content += ',';
    content += event_column;
    content += '\n';
    for (const auto& r : dataset.records) {
        for (double v : r.covariates) {
            content += format_double(v);
            content += ',';
        }
        content += format_double(r.time);
        content += ',';
        content += r.event ? '1' : '0';
        content += '\n';
    }
    atomic_write_file(path, content);
}

std::vector<std::vector<double>> encode_query_csv(const std::string& path,
                                                  const std::vector<std::string>& feature_names) {
    // Recover the raw column layout from the encoded feature names:
    // "col=cat" runs are one-hot blocks, everything else is numeric.
    struct RawColumn {
        std::string name;
        bool categorical = false;
        std::vector<std::string> cats;       // categorical only
        std::vector<std::size_t> feat_index; // encoded positions
    };
    std::vector<RawColumn> layout;
    for (std::size_t f = 0; f < feature_names.size(); ++f) {
        const std::string& name = feature_names[f];
        auto eq = name.find('=');
        if (eq != std::string::npos) {
            std::string col = name.substr(0, eq);
            std::string cat = name.substr(eq + 1);
            if (!layout.empty() && layout.back().categorical && layout.back().name == col) {
                layout.back().cats.push_back(cat);
                layout.back().feat_index.push_back(f);
            } else {
                layout.push_back({col, true, {cat}, {f}});
            }
        } else {
            layout.push_back({name, false, {}, {f}});
        }
    }

    std::ifstream in(path);
    if (!in) throw InputError("cannot open query file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty query file: " + path);
    auto header = split_line(line);

    std::vector<std::size_t> col_of(layout.size());
    std::set<std::string> expected;
    for (std::size_t k = 0; k < layout.size(); ++k) {
        expected.insert(layout[k].name);
        auto it = std::find(header.begin(), header.end(), layout[k].name);
        if (it == header.end())
            throw SchemaError("query file is missing column '" + layout[k].name + "'");
        col_of[k] = static_cast<std::size_t>(it - header.begin());
    }
    for (const auto& h : header)
        if (!expected.count(h)) throw SchemaError("query file has unknown column '" + h + "'");

    std::vector<std::vector<double>> out;
    std::size_t row_no = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row_no;
        auto cells = split_line(line);
        if (cells.size() != header.size())
            throw ParseError("query row " + std::to_string(row_no) + " has " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(header.size()));
        std::vector<double> enc(feature_names.size(), 0.0);
        for (std::size_t k = 0; k < layout.size(); ++k) {
            const std::string& tok = cells[col_of[k]];
            if (layout[k].categorical) {
                auto it = std::find(layout[k].cats.begin(), layout[k].cats.end(), tok);
                if (it == layout[k].cats.end())
                    throw SchemaError("query row " + std::to_string(row_no) + ": category '" +
                                      tok + "' was never observed for column '" + layout[k].name +
                                      "'");
                enc[layout[k].feat_index[static_cast<std::size_t>(it - layout[k].cats.begin())]] =
                    1.0;
            } else {
                double v;
                if (!parse_real(tok, v))
                    throw ParseError("query row " + std::to_string(row_no) +
                                     ": cannot parse numeric cell '" + tok + "'");
                enc[layout[k].feat_index[0]] = v;
            }
        }
        out.push_back(std::move(enc));
    }
    return out;
}

TimeGrid make_time_grid(const SurvivalDataset& dataset, std::size_t resolution) {
    if (resolution < 2) throw GridError("time grid needs at least 2 points");
    std::vector<double> event_times;
    for (const auto& r : dataset.records)
        if (r.event) event_times.push_back(r.time);
    std::sort(event_times.begin(), event_times.end());
    event_times.erase(std::unique(event_times.begin(), event_times.end()), event_times.end());
    if (event_times.size() < 2)
        throw GridError("time grid needs at least 2 distinct event times, found " +
                        std::to_string(event_times.size()));

    const double t1 = event_times.front();
    const double tmax = event_times.back();
    TimeGrid grid;
    grid.times.resize(resolution);
    for (std::size_t i = 0; i < resolution; ++i)
        grid.times[i] =
            t1 + (tmax - t1) * static_cast<double>(i) / static_cast<double>(resolution - 1);
    grid.times.front() = t1;
    grid.times.back() = tmax;
    for (std::size_t i = 1; i < resolution; ++i)
        if (!(grid.times[i] > grid.times[i - 1]))
            throw GridError("grid resolution too fine for the event-time span");
    return grid;
}

SurvivalDataset subset(const SurvivalDataset& dataset, const std::vector<std::size_t>& indices) {
    SurvivalDataset out;
    out.feature_names = dataset.feature_names;
    out.records.reserve(indices.size());
    for (std::size_t i : indices) out.records.push_back(dataset.records[i]);
    return out;
}

SplitResult split(const SurvivalDataset& dataset, const SplitSpec& spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
        throw SplitError("train_fraction must lie in (0,1)");
    if (!(spec.dl_fraction > 0.0 && spec.dl_fraction < 1.0))
        throw SplitError("dl_fraction must lie in (0,1)");

    const std::size_t n = dataset.n();
    auto idx = shuffled_indices(n, spec.seed);

    const std::size_t test_count = ceil_count(1.0 - spec.train_fraction, n);
    std::vector<std::size_t> test_idx(idx.begin(), idx.begin() + static_cast<long>(test_count));
    std::vector<std::size_t> train_idx(idx.begin() + static_cast<long>(test_count), idx.end());

    const std::size_t dl_count = ceil_count(spec.dl_fraction, train_idx.size());
    std::vector<std::size_t> dl_idx(train_idx.begin(),
                                    train_idx.begin() + static_cast<long>(dl_count));
    std::vector<std::size_t> dk_idx(train_idx.begin() + static_cast<long>(dl_count),
                                    train_idx.end());

    SplitResult res;
    res.train = subset(dataset, train_idx);
    res.test = subset(dataset, test_idx);
    res.d_k = subset(dataset, dk_idx);
    res.d_l = subset(dataset, dl_idx);
    require_part(res.train, "train");
    require_part(res.test, "test");
    require_part(res.d_k, "d_k");
    require_part(res.d_l, "d_l");
    return res;
}

std::pair<SurvivalDataset, SurvivalDataset> split_two_way(const SurvivalDataset& dataset,
                                                          double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw SplitError("fraction must lie in (0,1)");
    auto idx = shuffled_indices(dataset.n(), seed);
    const std::size_t first_count = ceil_count(fraction, dataset.n());
    std::vector<std::size_t> a(idx.begin(), idx.begin() + static_cast<long>(first_count));
    std::vector<std::size_t> b(idx.begin() + static_cast<long>(first_count), idx.end());
    return {subset(dataset, a), subset(dataset, b)};
}

std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, std::size_t k,
                                                    std::uint64_t seed) {
    if (k < 2) throw SplitError("k-fold partition needs k >= 2");
    if (n < k) throw SplitError("k-fold partition needs n >= k");
    auto idx = shuffled_indices(n, seed);
    std::vector<std::vector<std::size_t>> folds(k);
    const std::size_t base = n / k;
    const std::size_t extra = n % k;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        std::size_t len = base + (f < extra ? 1 : 0);
        folds[f].assign(idx.begin() + static_cast<long>(pos),
                        idx.begin() + static_cast<long>(pos + len));
        pos += len;
    }
    return folds;
}

}  // namespace survcobra
