#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sslab/model.hpp"

namespace sslab {

/// Univariate normal N(mean, variance); variance 0 is a point mass.
struct GaussianBelief {
    double mean = 0.0;
    double variance = 0.0;

    void validate() const;
    friend bool operator==(const GaussianBelief&, const GaussianBelief&) = default;
};

namespace kalman {

/// One filtering step. t is 1-based.
struct FilterRecord {
    std::size_t t = 0;
    GaussianBelief predicted;       // theta_t | y_1..y_{t-1}
    GaussianBelief predictive_obs;  // y_t | y_1..y_{t-1}
    GaussianBelief posterior;       // theta_t | y_1..y_t
};

struct FilterTrace {
    std::vector<FilterRecord> records;

    [[nodiscard]] std::size_t size() const noexcept { return records.size(); }
    [[nodiscard]] std::vector<double> posterior_means() const;
    [[nodiscard]] std::vector<double> posterior_variances() const;
};

/// N(m, C) -> N(m, C + state_var).
GaussianBelief predict_state(const GaussianBelief& belief, double state_var);

/// N(m, C) -> N(m, C + state_var + obs_var), the law of the next observation.
GaussianBelief predict_observation(const GaussianBelief& belief, double state_var, double obs_var);

/**
 * Conjugate update of a predicted state belief with observation y.
 *
 * With R = predicted.variance and K = R / (R + obs_var) the posterior is
 * N(m + K (y - m), (1 - K) R). When R + obs_var == 0 the belief passes
 * through unchanged if y == m and DegenerateUpdateError is thrown otherwise.
 */
GaussianBelief update(const GaussianBelief& predicted, double y, double obs_var);

/// Forward recursion over the series starting from N(prior_mean, prior_var).
FilterTrace filter_series(const LocalLevelParams& params, std::span<const double> ys);
FilterTrace filter_series(const LocalLevelParams& params, const ObservationSeries& ys);

/// Fixed-interval smoothed marginals theta_j | y_1..y_T, j = 1..T, from the
/// backward-gain recursion over the forward trace.
std::vector<GaussianBelief> smooth_series(const LocalLevelParams& params,
                                          std::span<const double> ys);
std::vector<GaussianBelief> smooth_series(const LocalLevelParams& params,
                                          const ObservationSeries& ys);

/// Backward pass alone, for callers that already hold the forward trace.
std::vector<GaussianBelief> smooth_trace(const LocalLevelParams& params, const FilterTrace& trace);

/**
 * One-step predictive mean E[y_t | y_1..y_{t-1}] as a function of the history.
 *
 * Keeps the filter state of the last prefix it saw, so calling it on
 * successive prefixes of one series costs O(1) per call. Any other call
 * pattern refilters from scratch.
 */
class OneStepPredictor {
public:
    explicit OneStepPredictor(LocalLevelParams params);

    double operator()(std::span<const double> history);

private:
    LocalLevelParams params_;
    std::vector<double> seen_;
    GaussianBelief belief_;
};

}  // namespace kalman
}  // namespace sslab
