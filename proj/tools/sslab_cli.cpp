// sslab: command-line front end for the state-space filtering lab.
//
//   sslab simulate -T 50 --seed 1 [--obs-var ..] [--out series.csv]
//   sslab filter   --config bench.json
//   sslab gibbs    --config bench.json
//   sslab compare  a.csv b.csv
//   sslab doob     --series series.csv --predictor kalman
//
// Exit codes: 0 success, 1 validation or engine error, 2 usage error.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sslab/config.hpp"
#include "sslab/csv.hpp"
#include "sslab/diagnostics.hpp"
#include "sslab/errors.hpp"
#include "sslab/experiment.hpp"
#include "sslab/model.hpp"

namespace {

using namespace sslab;

struct ModelFlags {
    LocalLevelParams local_level;
    Ar1Params ar1;
    std::string kind = "local-level";
};

void add_local_level_flags(CLI::App& cmd, LocalLevelParams& p) {
    cmd.add_option("--obs-var", p.obs_var, "observation noise variance")->capture_default_str();
    cmd.add_option("--state-var", p.state_var, "state noise variance")->capture_default_str();
    cmd.add_option("--prior-mean", p.prior_mean, "prior mean of theta_0")->capture_default_str();
    cmd.add_option("--prior-var", p.prior_var, "prior variance of theta_0")->capture_default_str();
}

void write_output(const std::string& path, const std::string& contents) {
    if (path.empty() || path == "-") {
        std::cout << contents;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << contents;
}

int run_simulate(const ModelFlags& flags, std::size_t horizon, std::uint64_t seed,
                 const std::string& out_path) {
    ObservationSeries series;
    if (flags.kind == "ar1") {
        series = simulate_ar1(flags.ar1, horizon, seed);
    } else {
        series = simulate_local_level(flags.local_level, horizon, seed);
    }
    std::ostringstream out;
    csv::write_series(out, series);
    write_output(out_path, out.str());
    return 0;
}

int run_config(const std::string& config_path, std::optional<std::uint64_t> seed,
               const std::string& out_dir, bool gibbs_only) {
    auto config = harness::load_config(config_path, seed);
    if (!out_dir.empty()) config.output_dir = out_dir;

    harness::RunOptions options;
    options.select = [gibbs_only](harness::EngineKind kind) {
        if (kind == harness::EngineKind::kalman) return true;
        return gibbs_only ? kind == harness::EngineKind::gibbs
                          : kind == harness::EngineKind::particle;
    };
    if (gibbs_only && std::none_of(config.engines.begin(), config.engines.end(), [](const auto& e) {
            return e.kind() == harness::EngineKind::gibbs;
        })) {
        throw ParseError("config has no gibbs engine");
    }

    const auto result = harness::run_experiment(config, options);
    std::cout << "label,engine,status,reference,rmse,max_abs\n";
    for (const auto& e : result.engines) {
        std::cout << e.label << ',' << harness::to_string(e.kind) << ',' << (e.ok ? "ok" : "error")
                  << ',' << e.reference << ',' << (e.rmse ? csv::format_double(*e.rmse) : "")
                  << ',' << (e.max_abs ? csv::format_double(*e.max_abs) : "") << '\n';
        if (!e.ok) std::cerr << "engine '" << e.label << "' failed: " << e.error << '\n';
    }
    std::cout << "output_dir=" << config.output_dir.string() << '\n';
    return result.exit_status;
}

std::map<double, double> mean_column(const std::string& path) {
    const auto table = csv::read_table_file(path);
    std::string column;
    for (const char* name : {"post_mean", "mean"}) {
        if (table.has_column(name)) {
            column = name;
            break;
        }
    }
    if (column.empty()) {
        throw ParseError(path + ": no 'post_mean' or 'mean' column");
    }
    const auto t = table.values("t");
    const auto m = table.values(column);
    std::map<double, double> out;
    for (std::size_t i = 0; i < t.size(); ++i) out[t[i]] = m[i];
    return out;
}

int run_compare(const std::string& a_path, const std::string& b_path) {
    const auto a = mean_column(a_path);
    const auto b = mean_column(b_path);
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& [t, value] : a) {
        // Initial particle records (t = 0) have no Kalman counterpart.
        if (t < 1.0) continue;
        if (auto it = b.find(t); it != b.end()) {
            xs.push_back(value);
            ys.push_back(it->second);
        }
    }
    if (xs.empty()) throw ParseError("compare: the traces share no time index t >= 1");
    const auto cmp = diagnostics::compare_to_oracle(xs, ys);
    std::cout << "n=" << xs.size() << '\n'
              << "rmse=" << csv::format_double(cmp.rmse) << '\n'
              << "max_abs=" << csv::format_double(cmp.max_abs) << '\n';
    return 0;
}

int run_doob(const std::string& series_path, const std::string& predictor_name,
             const LocalLevelParams& params, double bias, double baseline, bool compensated,
             const std::string& out_path) {
    const auto series = csv::read_series_file(series_path);
    diagnostics::Predictor predictor;
    if (predictor_name == "last") {
        predictor = diagnostics::last_value_predictor(baseline);
    } else {
        predictor = diagnostics::kalman_predictor(params, bias);
    }
    const auto decomp = diagnostics::doob_decompose(series, predictor, {baseline, compensated});
    std::ostringstream out;
    csv::write_doob(out, decomp);
    write_output(out_path, out.str());

    std::ostream& report = (out_path.empty() || out_path == "-") ? std::cerr : std::cout;
    if (decomp.size() >= 3) {
        const auto check = diagnostics::martingale_orthogonality_check(decomp);
        report << "mean_increment=" << csv::format_double(check.mean_increment) << '\n'
               << "mean_se=" << csv::format_double(check.mean_se) << '\n'
               << "lag1_cov=" << csv::format_double(check.lag1_cov) << '\n'
               << "lag1_se=" << csv::format_double(check.lag1_se) << '\n'
               << "mean_within_3se=" << (check.mean_within() ? 1 : 0) << '\n'
               << "lag1_within_3se=" << (check.lag1_within() ? 1 : 0) << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sslab: local-level state-space filtering lab"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(sslab::harness::kVersion));

    // simulate
    ModelFlags sim_flags;
    std::size_t horizon = 0;
    std::uint64_t sim_seed = 0;
    std::string sim_out;
    auto* simulate = app.add_subcommand("simulate", "simulate a series to CSV (t,y[,theta])");
    simulate->add_option("--model", sim_flags.kind, "local-level or ar1")
        ->check(CLI::IsMember({"local-level", "ar1"}))
        ->capture_default_str();
    add_local_level_flags(*simulate, sim_flags.local_level);
    simulate->add_option("--alpha", sim_flags.ar1.alpha, "AR(1): y_t = (1+alpha) y_{t-1} + e_t")
        ->capture_default_str();
    simulate->add_option("--start", sim_flags.ar1.start_value, "AR(1) y_0")->capture_default_str();
    simulate->add_option("--noise-var", sim_flags.ar1.noise_var, "AR(1) noise variance")
        ->capture_default_str();
    simulate->add_option("-T,--horizon", horizon, "number of time steps")->required();
    simulate->add_option("--seed", sim_seed, "RNG seed")->required();
    simulate->add_option("--out", sim_out, "output CSV (default stdout)");

    // filter / gibbs
    std::string config_path;
    std::optional<std::uint64_t> run_seed;
    std::string run_out;
    auto* filter = app.add_subcommand("filter", "run Kalman and particle engines from a config");
    filter->add_option("--config", config_path, "JSON experiment config")->required();
    filter->add_option("--seed", run_seed, "seed for engines and data lacking one");
    filter->add_option("--out", run_out, "override output_dir");
    auto* gibbs = app.add_subcommand("gibbs", "run Kalman and Gibbs engines from a config");
    gibbs->add_option("--config", config_path, "JSON experiment config")->required();
    gibbs->add_option("--seed", run_seed, "seed for engines and data lacking one");
    gibbs->add_option("--out", run_out, "override output_dir");

    // compare
    std::string trace_a;
    std::string trace_b;
    std::optional<std::uint64_t> unused_seed;
    auto* compare = app.add_subcommand("compare", "rmse and max |diff| between two trace CSVs");
    compare->add_option("first", trace_a, "trace CSV")->required()->check(CLI::ExistingFile);
    compare->add_option("second", trace_b, "trace CSV")->required()->check(CLI::ExistingFile);
    compare->add_option("--seed", unused_seed, "accepted for uniformity; compare is deterministic");

    // doob
    std::string series_path;
    std::string predictor = "kalman";
    LocalLevelParams doob_params;
    double bias = 0.0;
    double baseline = 0.0;
    bool compensated = false;
    std::string doob_out;
    auto* doob = app.add_subcommand("doob", "Doob decomposition of a series CSV");
    doob->add_option("--series", series_path, "series CSV (t,y[,theta])")
        ->required()
        ->check(CLI::ExistingFile);
    doob->add_option("--predictor", predictor, "last or kalman")
        ->check(CLI::IsMember({"last", "kalman"}))
        ->capture_default_str();
    add_local_level_flags(*doob, doob_params);
    doob->add_option("--bias", bias, "constant added to the Kalman predictor");
    doob->add_option("--baseline", baseline, "y_0 anchoring the decomposition");
    doob->add_flag("--compensated", compensated, "double-double running sums");
    doob->add_option("--out", doob_out, "output CSV (default stdout)");
    doob->add_option("--seed", unused_seed, "accepted for uniformity; doob is deterministic");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (*simulate) return run_simulate(sim_flags, horizon, sim_seed, sim_out);
        if (*filter) return run_config(config_path, run_seed, run_out, false);
        if (*gibbs) return run_config(config_path, run_seed, run_out, true);
        if (*compare) return run_compare(trace_a, trace_b);
        if (*doob) {
            return run_doob(series_path, predictor, doob_params, bias, baseline, compensated,
                            doob_out);
        }
    } catch (const sslab::harness::ConfigError& e) {
        std::cerr << "invalid configuration:\n";
        for (const auto& v : e.violations()) std::cerr << "  " << v << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
