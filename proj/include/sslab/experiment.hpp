#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sslab/config.hpp"
#include "sslab/model.hpp"

namespace sslab::harness {

inline constexpr const char* kVersion = "0.1.0";

struct EngineOutcome {
    std::string label;
    EngineKind kind = EngineKind::kalman;
    bool ok = false;
    std::string error;
    std::optional<std::uint64_t> seed;
    std::string reference;  // "filtered" or "smoothed" Kalman means; empty without a Kalman engine
    std::optional<double> rmse;
    std::optional<double> max_abs;
    std::vector<std::filesystem::path> files;
};

struct ExperimentResult {
    int exit_status = 0;
    std::vector<EngineOutcome> engines;
    std::vector<std::filesystem::path> files;  // every file written, manifest last
};

struct RunOptions {
    /// Engines for which this returns false are skipped. Empty selects all.
    std::function<bool(EngineKind)> select;
    bool parallel_engines = true;
};

/// Loads or simulates the data series described by the config.
ObservationSeries load_data(const ExperimentConfig& config);

/**
 * Runs every selected engine on one data series and writes into
 * config.output_dir:
 *
 *   data.csv                 the series
 *   <label>.csv              per-engine trace (Kalman filter trace, particle
 *                            trace, or Gibbs draws)
 *   <label>.smoothed.csv     Kalman engines: smoothed marginals
 *   <label>.posterior.csv    Gibbs engines: per-state sample mean and variance
 *   <label>.ensemble.csv     particle engines with dump_ensemble
 *   summary.csv              per-engine deviation from the first Kalman engine
 *   plot.py                  when emit_plots is set
 *   manifest.txt             seeds, version, config hash and file hashes
 *
 * An engine failure is recorded and makes exit_status 1; other engines
 * still run. Data load errors propagate as exceptions.
 */
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string content_hash(const std::string& bytes);

}  // namespace sslab::harness
