#include "sslab/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace sslab::harness {

namespace {

using nlohmann::json;

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) out += "; ";
        out += p;
    }
    return out;
}

std::pair<std::size_t, std::size_t> line_and_column(const std::string& text, std::size_t offset) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

// Collects violations instead of throwing on the first one.
class Reader {
public:
    explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

    void fail(const std::string& where, const std::string& what) {
        errors_.push_back(where + ": " + what);
    }

    bool object(const json& j, const std::string& where) {
        if (!j.is_object()) {
            fail(where, "expected an object");
            return false;
        }
        return true;
    }

    void only_keys(const json& j, const std::string& where, std::set<std::string> allowed) {
        for (const auto& [key, _] : j.items()) {
            if (!allowed.count(key)) fail(where, "unknown key '" + key + "'");
        }
    }

    std::optional<double> number(const json& j, const std::string& key, const std::string& where,
                                 std::optional<double> fallback = std::nullopt) {
        if (!j.contains(key)) {
            if (!fallback) fail(where, "missing '" + key + "'");
            return fallback;
        }
        if (!j[key].is_number()) {
            fail(where + "." + key, "expected a number");
            return std::nullopt;
        }
        return j[key].get<double>();
    }

    std::optional<std::uint64_t> count(const json& j, const std::string& key,
                                       const std::string& where,
                                       std::optional<std::uint64_t> fallback = std::nullopt) {
        if (!j.contains(key)) {
            if (!fallback) fail(where, "missing '" + key + "'");
            return fallback;
        }
        if (!j[key].is_number_unsigned()) {
            fail(where + "." + key, "expected a non-negative integer");
            return std::nullopt;
        }
        return j[key].get<std::uint64_t>();
    }

    std::optional<std::string> string(const json& j, const std::string& key,
                                      const std::string& where,
                                      std::optional<std::string> fallback = std::nullopt) {
        if (!j.contains(key)) {
            if (!fallback) fail(where, "missing '" + key + "'");
            return fallback;
        }
        if (!j[key].is_string()) {
            fail(where + "." + key, "expected a string");
            return std::nullopt;
        }
        return j[key].get<std::string>();
    }

    std::optional<bool> boolean(const json& j, const std::string& key, const std::string& where,
                                bool fallback) {
        if (!j.contains(key)) return fallback;
        if (!j[key].is_boolean()) {
            fail(where + "." + key, "expected true or false");
            return std::nullopt;
        }
        return j[key].get<bool>();
    }

private:
    std::vector<std::string>& errors_;
};

std::optional<std::uint64_t> seed_of(Reader& r, const json& j, const std::string& where,
                                     const ParseOptions& options) {
    if (!j.contains("seed")) {
        if (options.default_seed) return options.default_seed;
        r.fail(where, "missing 'seed' (stochastic runs require an explicit seed)");
        return std::nullopt;
    }
    return r.count(j, "seed", where);
}

LocalLevelParams read_model(Reader& r, const json& j, std::vector<std::string>& errors) {
    LocalLevelParams p;
    if (!r.object(j, "model")) return p;
    r.only_keys(j, "model", {"obs_var", "state_var", "prior_mean", "prior_var"});
    const auto obs = r.number(j, "obs_var", "model");
    const auto state = r.number(j, "state_var", "model");
    const auto mean = r.number(j, "prior_mean", "model");
    const auto var = r.number(j, "prior_var", "model");
    if (!obs || !state || !mean || !var) return p;
    p = {*obs, *state, *mean, *var};
    try {
        p.validate();
    } catch (const ParameterError& e) {
        errors.push_back(std::string("model: invariant violation: ") + e.what());
    }
    return p;
}

std::variant<SimulateSource, FileSource> read_data(Reader& r, const json& j,
                                                   const ParseOptions& options) {
    if (!r.object(j, "data")) return SimulateSource{};
    const bool simulate = j.contains("simulate");
    const bool file = j.contains("file");
    r.only_keys(j, "data", {"simulate", "file"});
    if (simulate == file) {
        r.fail("data", "exactly one of 'simulate' or 'file' is required");
        return SimulateSource{};
    }
    if (simulate) {
        const json& s = j["simulate"];
        SimulateSource src;
        if (!r.object(s, "data.simulate")) return src;
        r.only_keys(s, "data.simulate", {"horizon", "seed"});
        if (auto h = r.count(s, "horizon", "data.simulate")) src.horizon = *h;
        if (auto seed = seed_of(r, s, "data.simulate", options)) src.seed = *seed;
        return src;
    }
    FileSource src;
    if (auto path = r.string(j, "file", "data")) {
        src.path = *path;
        if (src.path.is_relative()) src.path = options.base_dir / src.path;
        if (!std::filesystem::exists(src.path)) {
            r.fail("data.file", "file '" + src.path.string() + "' does not exist");
        }
    }
    return src;
}

particle::ResamplingPolicy read_resampling(Reader& r, const json& j, const std::string& where) {
    particle::ResamplingPolicy policy;
    if (!r.object(j, where)) return policy;
    r.only_keys(j, where, {"scheme", "trigger", "ess_fraction"});
    if (auto scheme = r.string(j, "scheme", where, "systematic")) {
        if (*scheme == "multinomial") policy.scheme = particle::ResamplingScheme::multinomial;
        else if (*scheme == "systematic") policy.scheme = particle::ResamplingScheme::systematic;
        else if (*scheme == "stratified") policy.scheme = particle::ResamplingScheme::stratified;
        else if (*scheme == "residual") policy.scheme = particle::ResamplingScheme::residual;
        else r.fail(where + ".scheme", "unknown scheme '" + *scheme + "'");
    }
    if (auto trigger = r.string(j, "trigger", where, "ess_below")) {
        using Trigger = particle::ResamplingPolicy::Trigger;
        if (*trigger == "always") policy.trigger = Trigger::always;
        else if (*trigger == "ess_below") policy.trigger = Trigger::ess_below;
        else if (*trigger == "never") policy.trigger = Trigger::never;
        else r.fail(where + ".trigger", "unknown trigger '" + *trigger + "'");
    }
    if (auto f = r.number(j, "ess_fraction", where, 0.5)) {
        policy.ess_fraction = *f;
        if (!(*f > 0.0 && *f <= 1.0)) {
            r.fail(where + ".ess_fraction", "must lie in (0, 1]");
        }
    }
    return policy;
}

std::optional<EngineSpec> read_engine(Reader& r, const json& j, const std::string& where,
                                      const ParseOptions& options) {
    if (!r.object(j, where)) return std::nullopt;
    const auto label = r.string(j, "label", where);
    const auto type = r.string(j, "type", where);
    if (!label || !type) return std::nullopt;
    const std::string at = where + " '" + *label + "'";

    EngineSpec spec;
    spec.label = *label;
    if (*type == "kalman") {
        r.only_keys(j, at, {"label", "type"});
        spec.settings = KalmanSettings{};
        return spec;
    }
    if (*type == "gibbs") {
        r.only_keys(j, at, {"label", "type", "iterations", "burn_in", "seed", "mode", "init_states"});
        gibbs::GibbsConfig g;
        if (auto k = r.count(j, "iterations", at)) g.iterations = *k;
        g.burn_in = g.iterations / 10;
        if (auto b = r.count(j, "burn_in", at, g.burn_in)) g.burn_in = *b;
        if (auto seed = seed_of(r, j, at, options)) g.seed = *seed;
        if (auto mode = r.string(j, "mode", at, "single_site")) {
            if (*mode == "single_site") g.mode = gibbs::SamplerMode::single_site;
            else if (*mode == "ffbs") g.mode = gibbs::SamplerMode::ffbs;
            else r.fail(at + ".mode", "unknown mode '" + *mode + "'");
        }
        if (j.contains("init_states")) {
            const json& init = j["init_states"];
            if (!init.is_array() ||
                !std::all_of(init.begin(), init.end(), [](const json& x) { return x.is_number(); })) {
                r.fail(at + ".init_states", "expected an array of numbers");
            } else {
                g.init_states = init.get<std::vector<double>>();
            }
        }
        if (g.iterations <= g.burn_in) {
            r.fail(at, "invariant violation: GibbsConfig requires iterations > burn_in");
        }
        spec.settings = g;
        return spec;
    }
    if (*type == "particle") {
        r.only_keys(j, at, {"label", "type", "n_particles", "protocol", "resampling", "seed",
                            "threads", "dump_ensemble"});
        particle::PfConfig pf;
        if (auto n = r.count(j, "n_particles", at)) {
            pf.n_particles = *n;
            if (*n < 1) r.fail(at + ".n_particles", "invariant violation: PfConfig requires N >= 1");
        }
        if (auto protocol = r.string(j, "protocol", at, "propagate_first")) {
            if (*protocol == "propagate_first") pf.protocol = particle::Protocol::propagate_first;
            else if (*protocol == "update_first") pf.protocol = particle::Protocol::update_first;
            else if (*protocol == "sis") pf.protocol = particle::Protocol::sis;
            else if (*protocol == "apf") pf.protocol = particle::Protocol::apf;
            else r.fail(at + ".protocol", "unknown protocol '" + *protocol + "'");
        }
        if (j.contains("resampling")) {
            pf.resampling = read_resampling(r, j["resampling"], at + ".resampling");
        }
        if (auto seed = seed_of(r, j, at, options)) pf.seed = *seed;
        if (auto threads = r.count(j, "threads", at, 1)) pf.threads = *threads;
        if (auto dump = r.boolean(j, "dump_ensemble", at, false)) pf.record_ensembles = *dump;
        spec.settings = pf;
        return spec;
    }
    r.fail(at + ".type", "unknown engine type '" + *type + "' (kalman, gibbs, particle)");
    return std::nullopt;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : ParseError("invalid configuration: " + join(violations)), violations_(std::move(violations)) {}

ExperimentConfig parse_config(const std::string& text, const ParseOptions& options) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_and_column(text, e.byte == 0 ? 0 : e.byte - 1);
        throw ConfigError({"syntax error at line " + std::to_string(line) + ", column " +
                           std::to_string(col) + ": " + e.what()});
    }

    std::vector<std::string> errors;
    Reader r(errors);
    ExperimentConfig config;
    config.source_text = text;
    if (!r.object(doc, "config")) throw ConfigError(errors);
    r.only_keys(doc, "config", {"model", "data", "engines", "output_dir", "emit_plots"});

    if (doc.contains("model")) config.model = read_model(r, doc["model"], errors);
    else r.fail("config", "missing 'model'");

    if (doc.contains("data")) config.data = read_data(r, doc["data"], options);
    else r.fail("config", "missing 'data'");

    if (!doc.contains("engines") || !doc["engines"].is_array() || doc["engines"].empty()) {
        r.fail("engines", "at least one engine is required");
    } else {
        std::set<std::string> labels;
        for (std::size_t i = 0; i < doc["engines"].size(); ++i) {
            auto spec = read_engine(r, doc["engines"][i], "engines[" + std::to_string(i) + "]", options);
            if (!spec) continue;
            if (!labels.insert(spec->label).second) {
                r.fail("engines", "duplicate label '" + spec->label + "'");
            }
            config.engines.push_back(std::move(*spec));
        }
    }

    if (auto dir = r.string(doc, "output_dir", "config", "out")) {
        config.output_dir = *dir;
        if (config.output_dir.is_relative()) config.output_dir = options.base_dir / config.output_dir;
    }
    if (auto plots = r.boolean(doc, "emit_plots", "config", false)) config.emit_plots = *plots;

    if (!errors.empty()) throw ConfigError(std::move(errors));
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             std::optional<std::uint64_t> default_seed) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    ParseOptions options;
    options.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    options.default_seed = default_seed;
    return parse_config(buf.str(), options);
}

const char* to_string(EngineKind kind) noexcept {
    switch (kind) {
        case EngineKind::kalman: return "kalman";
        case EngineKind::gibbs: return "gibbs";
        case EngineKind::particle: return "particle";
    }
    return "?";
}

const char* to_string(particle::Protocol protocol) noexcept {
    switch (protocol) {
        case particle::Protocol::propagate_first: return "propagate_first";
        case particle::Protocol::update_first: return "update_first";
        case particle::Protocol::sis: return "sis";
        case particle::Protocol::apf: return "apf";
    }
    return "?";
}

const char* to_string(particle::ResamplingScheme scheme) noexcept {
    switch (scheme) {
        case particle::ResamplingScheme::multinomial: return "multinomial";
        case particle::ResamplingScheme::systematic: return "systematic";
        case particle::ResamplingScheme::stratified: return "stratified";
        case particle::ResamplingScheme::residual: return "residual";
    }
    return "?";
}

}  // namespace sslab::harness
