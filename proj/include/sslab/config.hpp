#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sslab/errors.hpp"
#include "sslab/gibbs.hpp"
#include "sslab/model.hpp"
#include "sslab/particle.hpp"

namespace sslab::harness {

struct SimulateSource {
    std::size_t horizon = 0;
    std::uint64_t seed = 0;
};

struct FileSource {
    std::filesystem::path path;
};

struct KalmanSettings {};

enum class EngineKind { kalman, gibbs, particle };

struct EngineSpec {
    std::string label;
    std::variant<KalmanSettings, gibbs::GibbsConfig, particle::PfConfig> settings;

    [[nodiscard]] EngineKind kind() const noexcept {
        return static_cast<EngineKind>(settings.index());
    }
};

struct ExperimentConfig {
    LocalLevelParams model;
    std::variant<SimulateSource, FileSource> data;
    std::vector<EngineSpec> engines;
    std::filesystem::path output_dir = "out";
    bool emit_plots = false;
    std::string source_text;  // the document the config was parsed from
};

/// Every problem found in a configuration document, one message per entry.
class ConfigError : public ParseError {
public:
    explicit ConfigError(std::vector<std::string> violations);

    [[nodiscard]] const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    std::vector<std::string> violations_;
};

struct ParseOptions {
    std::filesystem::path base_dir = ".";       // relative data/output paths resolve here
    std::optional<std::uint64_t> default_seed;  // used by stochastic parts lacking a seed
};

/**
 * Parses a JSON configuration document.
 *
 * Syntax errors report line and column. Schema and invariant problems are
 * collected and raised together as a ConfigError. Stochastic parts
 * (simulated data, gibbs and particle engines) must carry a seed unless
 * options.default_seed supplies one.
 */
ExperimentConfig parse_config(const std::string& text, const ParseOptions& options = {});

/// Reads and parses a file; relative paths inside resolve against its directory.
ExperimentConfig load_config(const std::filesystem::path& path,
                             std::optional<std::uint64_t> default_seed = std::nullopt);

const char* to_string(EngineKind kind) noexcept;
const char* to_string(particle::Protocol protocol) noexcept;
const char* to_string(particle::ResamplingScheme scheme) noexcept;

}  // namespace sslab::harness
