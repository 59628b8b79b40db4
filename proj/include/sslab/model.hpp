#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace sslab {

/**
 * @brief Constants of the scalar local-level model
 *
 *   y_t     = theta_t + v_t,        v_t ~ N(0, obs_var)
 *   theta_t = theta_{t-1} + w_t,    w_t ~ N(0, state_var)
 *   theta_0 ~ N(prior_mean, prior_var)
 */
struct LocalLevelParams {
    double obs_var = 1.0;
    double state_var = 1.0;
    double prior_mean = 0.0;
    double prior_var = 1.0;

    /// Throws ParameterError on negative or non-finite variances.
    void validate_variances() const;
    /// validate_variances(), and rejects the model whose three variances are all zero.
    void validate() const;
};

/// Observations y_1..y_T, with the latent path when the series was simulated.
struct ObservationSeries {
    std::vector<double> observations;
    std::optional<std::vector<double>> latent_states;
    std::optional<std::uint64_t> seed;

    [[nodiscard]] std::size_t size() const noexcept { return observations.size(); }
    [[nodiscard]] bool empty() const noexcept { return observations.empty(); }

    /// Throws UsageError when latent_states is present with the wrong length.
    void validate() const;
};

/// y_t = (1 + alpha) y_{t-1} + e_t, e_t ~ N(0, noise_var), y_0 = start_value.
struct Ar1Params {
    double alpha = -0.5;
    double start_value = 0.0;
    double noise_var = 1.0;

    void validate() const;
};

/// Draws theta_0 from the prior, then T steps of the state and observation
/// equations. Deterministic in (params, horizon, seed).
ObservationSeries simulate_local_level(const LocalLevelParams& params, std::size_t horizon,
                                       std::uint64_t seed);

/// Simulates y_1..y_T; the series has no latent states.
ObservationSeries simulate_ar1(const Ar1Params& params, std::size_t horizon, std::uint64_t seed);

/// True iff -2 < alpha < 0, the range where (1 + alpha) lies strictly inside (-1, 1).
constexpr bool is_ar1_stationary(double alpha) noexcept {
    return alpha > -2.0 && alpha < 0.0;
}

}  // namespace sslab
