#include "sslab/experiment.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>

#include "sslab/csv.hpp"
#include "sslab/errors.hpp"
#include "sslab/gibbs.hpp"
#include "sslab/kalman.hpp"
#include "sslab/particle.hpp"

namespace sslab::harness {

namespace {

namespace fs = std::filesystem;

struct FileOut {
    std::string name;
    std::string contents;
};

// Engine results are built in memory and written by the coordinator.
struct EngineRun {
    EngineOutcome outcome;
    std::vector<FileOut> files;
    std::vector<double> means;  // filtered (kalman, particle) or posterior (gibbs) means
    std::vector<double> smoothed_means;
};

template <class Writer>
std::string render(Writer&& write) {
    std::ostringstream out;
    write(out);
    return out.str();
}

EngineRun run_engine(const EngineSpec& spec, const ExperimentConfig& config,
                     const ObservationSeries& data) {
    EngineRun run;
    run.outcome.label = spec.label;
    run.outcome.kind = spec.kind();
    try {
        switch (spec.kind()) {
            case EngineKind::kalman: {
                const auto trace = kalman::filter_series(config.model, data);
                const auto smoothed = kalman::smooth_trace(config.model, trace);
                run.means = trace.posterior_means();
                for (const auto& b : smoothed) run.smoothed_means.push_back(b.mean);
                run.files.push_back({spec.label + ".csv",
                                     render([&](auto& o) { csv::write_filter_trace(o, trace); })});
                run.files.push_back({spec.label + ".smoothed.csv",
                                     render([&](auto& o) { csv::write_beliefs(o, smoothed); })});
                break;
            }
            case EngineKind::particle: {
                const auto& pf = std::get<particle::PfConfig>(spec.settings);
                run.outcome.seed = pf.seed;
                const auto trace = particle::run_filter(data, config.model, pf);
                run.means = trace.filtered_means();
                run.files.push_back({spec.label + ".csv",
                                     render([&](auto& o) { csv::write_particle_trace(o, trace); })});
                if (pf.record_ensembles) {
                    run.files.push_back({spec.label + ".ensemble.csv",
                                         render([&](auto& o) { csv::write_ensembles(o, trace); })});
                }
                break;
            }
            case EngineKind::gibbs: {
                const auto& g = std::get<gibbs::GibbsConfig>(spec.settings);
                run.outcome.seed = g.seed;
                const auto samples = gibbs::gibbs_chain(data, config.model, g);
                std::vector<GaussianBelief> posterior;
                for (std::size_t j = 0; j < samples.dims(); ++j) {
                    const auto s = gibbs::summarize(samples.column(j));
                    posterior.push_back({s.mean, s.variance});
                    run.means.push_back(s.mean);
                }
                run.files.push_back({spec.label + ".csv", render([&](auto& o) {
                                         csv::write_gibbs_samples(o, samples);
                                     })});
                run.files.push_back({spec.label + ".posterior.csv",
                                     render([&](auto& o) { csv::write_beliefs(o, posterior); })});
                break;
            }
        }
        run.outcome.ok = true;
    } catch (const std::exception& e) {
        run.outcome.ok = false;
        run.outcome.error = e.what();
        run.files.clear();
    }
    return run;
}

void write_file(const fs::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << contents;
}

std::string plot_script(const std::vector<EngineOutcome>& engines) {
    std::ostringstream s;
    s << "# Plots every engine's filtered or posterior means against the data.\n"
         "# Usage: python3 plot.py  (run inside the output directory)\n"
         "import csv\n"
         "import matplotlib\n"
         "matplotlib.use('Agg')\n"
         "import matplotlib.pyplot as plt\n\n"
         "def column(path, name):\n"
         "    with open(path) as f:\n"
         "        return [float(r[name]) for r in csv.DictReader(f)]\n\n"
         "fig, ax = plt.subplots(figsize=(10, 5))\n"
         "ax.plot(column('data.csv', 't'), column('data.csv', 'y'), 'k.', label='y')\n";
    for (const auto& e : engines) {
        if (!e.ok) continue;
        switch (e.kind) {
            case EngineKind::kalman:
                s << "ax.plot(column('" << e.label << ".csv', 't'), column('" << e.label
                  << ".csv', 'post_mean'), label='" << e.label << "')\n";
                break;
            case EngineKind::particle:
                s << "ax.plot(column('" << e.label << ".csv', 't')[1:], column('" << e.label
                  << ".csv', 'mean')[1:], label='" << e.label << "')\n";
                break;
            case EngineKind::gibbs:
                s << "ax.plot(column('" << e.label << ".posterior.csv', 't'), column('" << e.label
                  << ".posterior.csv', 'mean'), '--', label='" << e.label << "')\n";
                break;
        }
    }
    s << "ax.set_xlabel('t')\n"
         "ax.legend()\n"
         "fig.savefig('means.png', dpi=120)\n";
    return s.str();
}

std::string optional_number(const std::optional<double>& x) {
    return x ? csv::format_double(*x) : std::string{};
}

std::string one_line(std::string s) {
    for (auto& c : s) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    return s;
}

}  // namespace

std::string content_hash(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

ObservationSeries load_data(const ExperimentConfig& config) {
    if (const auto* sim = std::get_if<SimulateSource>(&config.data)) {
        return simulate_local_level(config.model, sim->horizon, sim->seed);
    }
    return csv::read_series_file(std::get<FileSource>(config.data).path.string());
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
    const ObservationSeries data = load_data(config);

    std::vector<const EngineSpec*> selected;
    for (const auto& spec : config.engines) {
        if (!options.select || options.select(spec.kind())) selected.push_back(&spec);
    }

    std::vector<EngineRun> runs;
    if (options.parallel_engines && selected.size() > 1) {
        std::vector<std::future<EngineRun>> futures;
        for (const auto* spec : selected) {
            futures.push_back(std::async(std::launch::async, [spec, &config, &data] {
                return run_engine(*spec, config, data);
            }));
        }
        for (auto& f : futures) runs.push_back(f.get());
    } else {
        for (const auto* spec : selected) runs.push_back(run_engine(*spec, config, data));
    }

    // Deviations against the first successful Kalman engine.
    const EngineRun* oracle = nullptr;
    for (const auto& run : runs) {
        if (run.outcome.kind == EngineKind::kalman && run.outcome.ok) {
            oracle = &run;
            break;
        }
    }
    for (auto& run : runs) {
        if (!oracle || !run.outcome.ok) continue;
        const bool smoothed = run.outcome.kind == EngineKind::gibbs;
        const auto& reference = smoothed ? oracle->smoothed_means : oracle->means;
        const auto cmp = diagnostics::compare_to_oracle(run.means, reference);
        run.outcome.reference = smoothed ? "smoothed" : "filtered";
        run.outcome.rmse = cmp.rmse;
        run.outcome.max_abs = cmp.max_abs;
    }

    fs::create_directories(config.output_dir);
    ExperimentResult result;
    std::vector<FileOut> written;
    auto emit = [&](FileOut file) {
        write_file(config.output_dir / file.name, file.contents);
        result.files.push_back(config.output_dir / file.name);
        written.push_back(std::move(file));
    };

    emit({"data.csv", render([&](auto& o) { csv::write_series(o, data); })});
    for (auto& run : runs) {
        for (auto& f : run.files) {
            run.outcome.files.push_back(config.output_dir / f.name);
            emit(std::move(f));
        }
        if (!run.outcome.ok) result.exit_status = 1;
        result.engines.push_back(run.outcome);
    }

    std::ostringstream summary;
    summary << "label,engine,status,reference,rmse,max_abs\n";
    for (const auto& e : result.engines) {
        summary << e.label << ',' << to_string(e.kind) << ',' << (e.ok ? "ok" : "error") << ','
                << e.reference << ',' << optional_number(e.rmse) << ','
                << optional_number(e.max_abs) << '\n';
    }
    emit({"summary.csv", summary.str()});
    if (config.emit_plots) emit({"plot.py", plot_script(result.engines)});

    std::ostringstream manifest;
    manifest << "tool=sslab\n"
             << "version=" << kVersion << '\n'
             << "config_hash=" << content_hash(config.source_text) << '\n';
    if (const auto* sim = std::get_if<SimulateSource>(&config.data)) {
        manifest << "data.source=simulate\n"
                 << "data.horizon=" << sim->horizon << '\n'
                 << "data.seed=" << sim->seed << '\n';
    } else {
        manifest << "data.source=file\n"
                 << "data.path=" << std::get<FileSource>(config.data).path.string() << '\n';
    }
    manifest << "data.length=" << data.size() << '\n';
    for (const auto& e : result.engines) {
        const std::string key = "engine." + e.label;
        manifest << key << ".type=" << to_string(e.kind) << '\n';
        if (e.seed) manifest << key << ".seed=" << *e.seed << '\n';
        manifest << key << ".status=" << (e.ok ? "ok" : "error") << '\n';
        if (!e.ok) manifest << key << ".error=" << one_line(e.error) << '\n';
    }
    for (const auto& f : written) {
        manifest << "file." << f.name << "=fnv1a64:" << content_hash(f.contents) << '\n';
    }
    manifest << "exit_status=" << result.exit_status << '\n';
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    manifest << "created_utc=" << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ") << '\n';
    write_file(config.output_dir / "manifest.txt", manifest.str());
    result.files.push_back(config.output_dir / "manifest.txt");
    return result;
}

}  // namespace sslab::harness
