#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "survcobra/errors.hpp"
#include "survcobra/experiment.hpp"
#include "survcobra/io.hpp"

namespace {

using namespace survcobra;

Variant parse_variant_flag(const std::string& s) {
    if (s == "straight") return Variant::Straight;
    if (s == "weighted") return Variant::Weighted;
    throw InputError("unknown variant '" + s + "' (expected straight|weighted)");
}

std::optional<NormKind> parse_norm_flag(const std::string& s) {
    if (s == "frobenius") return NormKind::Frobenius;
    if (s == "sup") return NormKind::Sup;
    if (s == "both") return std::nullopt;
    throw InputError("unknown norm '" + s + "' (expected frobenius|sup|both)");
}

WeightScheme parse_weights_flag(const std::string& s) {
    if (s == "complement") return WeightScheme::Complement;
    if (s == "literal") return WeightScheme::Literal;
    throw InputError("unknown weight scheme '" + s + "' (expected complement|literal)");
}

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string variant;
    std::string norm;
    std::string weights;
    std::optional<std::size_t> reps;
    std::string out;
    std::optional<int> workers;
};

void apply_common(ExperimentConfig& cfg, const CommonFlags& f) {
    if (f.seed) {
        cfg.master_seed = *f.seed;
        cfg.tune.seed = *f.seed;
    }
    if (!f.variant.empty()) {
        cfg.variant = parse_variant_flag(f.variant);
        cfg.tune.variant = cfg.variant;
    }
    if (!f.norm.empty()) {
        cfg.norm = parse_norm_flag(f.norm);
        cfg.tune.norm = cfg.norm;
    }
    if (!f.weights.empty()) {
        cfg.weight_scheme = parse_weights_flag(f.weights);
        cfg.tune.weight_scheme = cfg.weight_scheme;
    }
    if (f.reps) cfg.repetitions = *f.reps;
    if (!f.out.empty()) cfg.out_dir = f.out;
    if (f.workers) {
        cfg.workers = *f.workers;
        cfg.tune.workers = *f.workers;
    }
}

const char* norm_label(NormKind n) { return n == NormKind::Frobenius ? "frobenius" : "sup"; }

CobraParams resolve_params(const ExperimentConfig& cfg, const SurvivalDataset& dataset,
                           const std::string& params_path, const CommonFlags& flags) {
    CobraParams params;
    if (!params_path.empty()) {
        params = params_from_json_file(params_path);
    } else {
        std::cout << "no --params given, tuning first...\n";
        const TuneResult tuned = run_tune(cfg, dataset);
        params = tuned.best;
    }
    if (!flags.variant.empty()) params.variant = parse_variant_flag(flags.variant);
    if (!flags.norm.empty()) {
        const auto n = parse_norm_flag(flags.norm);
        if (!n) throw InputError("evaluate/curves need a single norm, not 'both'");
        params.norm = *n;
    }
    validate_params(params, kPoolSize);
    return params;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IBS-based survival COBRA: tuning, evaluation, and table reproduction"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string params_path;
    std::string queries_path;
    std::string configs_dir;

    auto add_common = [&](CLI::App* cmd, bool with_config) {
        if (with_config)
            cmd->add_option("--config", flags.config, "experiment config JSON")
                ->required()
                ->check(CLI::ExistingFile);
        cmd->add_option("--seed", flags.seed, "master seed override");
        cmd->add_option("--variant", flags.variant, "straight|weighted");
        cmd->add_option("--norm", flags.norm, "frobenius|sup|both");
        cmd->add_option("--weights", flags.weights, "complement|literal");
        cmd->add_option("--reps", flags.reps, "repetition count override");
        cmd->add_option("--out", flags.out, "output directory override");
        cmd->add_option("--workers", flags.workers, "worker thread count (0 = auto)");
    };

    CLI::App* tune_cmd = app.add_subcommand("tune", "cross-validate epsilon/alpha/norm");
    add_common(tune_cmd, true);

    CLI::App* eval_cmd =
        app.add_subcommand("evaluate", "repeated train/test evaluation of one method");
    add_common(eval_cmd, true);
    eval_cmd->add_option("--params", params_path, "tuned parameter JSON (from tune)")
        ->check(CLI::ExistingFile);

    CLI::App* curves_cmd = app.add_subcommand("curves", "predict survival curves for query rows");
    add_common(curves_cmd, true);
    curves_cmd->add_option("--params", params_path, "tuned parameter JSON (from tune)")
        ->check(CLI::ExistingFile);
    curves_cmd->add_option("--queries", queries_path, "query covariate CSV")
        ->required()
        ->check(CLI::ExistingFile);

    CLI::App* repro_cmd =
        app.add_subcommand("reproduce", "tune + evaluate all four methods on every dataset");
    repro_cmd->add_option("--configs", configs_dir, "directory of dataset config JSONs")
        ->required()
        ->check(CLI::ExistingDirectory);
    repro_cmd->add_option("--seed", flags.seed, "master seed override");
    repro_cmd->add_option("--weights", flags.weights, "complement|literal");
    repro_cmd->add_option("--reps", flags.reps, "repetition count override");
    repro_cmd->add_option("--out", flags.out, "output directory (default: out)");
    repro_cmd->add_option("--workers", flags.workers, "worker thread count (0 = auto)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(tune_cmd)) {
            ExperimentConfig cfg = load_experiment_config(flags.config);
            apply_common(cfg, flags);
            const SurvivalDataset dataset = load_dataset(cfg);
            const TuneResult result = run_tune(cfg, dataset);
            const auto written = write_tune_outputs(cfg, result);
            std::cout << "best: epsilon=" << format_double(result.best.epsilon)
                      << " alpha=" << format_double(result.best.alpha) << " norm="
                      << norm_label(result.best.norm) << "\n";
            for (const auto& p : written) std::cout << "wrote " << p << "\n";
        } else if (app.got_subcommand(eval_cmd)) {
            ExperimentConfig cfg = load_experiment_config(flags.config);
            apply_common(cfg, flags);
            const SurvivalDataset dataset = load_dataset(cfg);
            const CobraParams params = resolve_params(cfg, dataset, params_path, flags);
            std::vector<std::string> written;
            const EvaluateResult result = run_evaluate(cfg, dataset, params, &written);
            std::cout << "mean IBS " << format_fixed(result.cells[0].mean, 3) << " (sd "
                      << format_fixed(result.cells[0].sd, 2) << ") over " << result.repetitions
                      << " repetitions\n";
            for (const auto& p : written) std::cout << "wrote " << p << "\n";
        } else if (app.got_subcommand(curves_cmd)) {
            ExperimentConfig cfg = load_experiment_config(flags.config);
            apply_common(cfg, flags);
            const SurvivalDataset dataset = load_dataset(cfg);
            const CobraParams params = resolve_params(cfg, dataset, params_path, flags);
            const std::string path = run_curves(cfg, dataset, params, queries_path);
            std::cout << "wrote " << path << "\n";
        } else if (app.got_subcommand(repro_cmd)) {
            ReproduceOverrides overrides;
            overrides.seed = flags.seed;
            overrides.repetitions = flags.reps;
            if (!flags.out.empty()) overrides.out_dir = flags.out;
            overrides.workers = flags.workers;
            if (!flags.weights.empty())
                overrides.weight_scheme = parse_weights_flag(flags.weights);
            run_reproduce(configs_dir, overrides);
            const std::string dir = overrides.out_dir.value_or("out");
            std::cout << read_file(dir + "/reproduce_table.md");
            std::cout << "wrote " << dir << "/reproduce_table.md\n";
            std::cout << "wrote " << dir << "/reproduce_table.csv\n";
            std::cout << "wrote " << dir << "/reproduce_report.json\n";
        }
    } catch (const survcobra::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
