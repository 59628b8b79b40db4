#include "sslab/model.hpp"

#include <cmath>
#include <string>

#include "sslab/errors.hpp"
#include "sslab/rng.hpp"

namespace sslab {

namespace {

void require_variance(double value, const char* name, const char* owner) {
    if (!std::isfinite(value) || value < 0.0) {
        throw ParameterError(std::string(owner) + ": " + name +
                             " must be a finite non-negative variance, got " +
                             std::to_string(value));
    }
}

}  // namespace

void LocalLevelParams::validate_variances() const {
    require_variance(obs_var, "obs_var", "LocalLevelParams");
    require_variance(state_var, "state_var", "LocalLevelParams");
    require_variance(prior_var, "prior_var", "LocalLevelParams");
    if (!std::isfinite(prior_mean)) {
        throw ParameterError("LocalLevelParams: prior_mean must be finite");
    }
}

void LocalLevelParams::validate() const {
    validate_variances();
    if (obs_var + state_var + prior_var <= 0.0) {
        throw ParameterError("LocalLevelParams: obs_var, state_var and prior_var are all zero");
    }
}

void ObservationSeries::validate() const {
    if (latent_states && latent_states->size() != observations.size()) {
        throw UsageError("ObservationSeries: latent_states has length " +
                         std::to_string(latent_states->size()) + ", expected " +
                         std::to_string(observations.size()));
    }
}

void Ar1Params::validate() const {
    require_variance(noise_var, "noise_var", "Ar1Params");
    if (!std::isfinite(alpha) || !std::isfinite(start_value)) {
        throw ParameterError("Ar1Params: alpha and start_value must be finite");
    }
}

ObservationSeries simulate_local_level(const LocalLevelParams& params, std::size_t horizon,
                                       std::uint64_t seed) {
    params.validate_variances();
    Rng rng(seed);

    ObservationSeries out;
    out.seed = seed;
    out.observations.reserve(horizon);
    std::vector<double> states;
    states.reserve(horizon);

    double theta = rng.normal(params.prior_mean, params.prior_var);
    for (std::size_t t = 0; t < horizon; ++t) {
        theta = rng.normal(theta, params.state_var);
        states.push_back(theta);
        out.observations.push_back(rng.normal(theta, params.obs_var));
    }
    out.latent_states = std::move(states);
    return out;
}

ObservationSeries simulate_ar1(const Ar1Params& params, std::size_t horizon, std::uint64_t seed) {
    params.validate();
    Rng rng(seed);

    ObservationSeries out;
    out.seed = seed;
    out.observations.reserve(horizon);
    const double phi = 1.0 + params.alpha;
    double y = params.start_value;
    for (std::size_t t = 0; t < horizon; ++t) {
        y = phi * y + rng.normal(0.0, params.noise_var);
        out.observations.push_back(y);
    }
    return out;
}

}  // namespace sslab
