#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sslab/kalman.hpp"
#include "sslab/model.hpp"

namespace sslab::gibbs {

enum class SamplerMode {
    single_site,  // sweep theta_T, ..., theta_1 through their full conditionals
    ffbs,         // forward filtering backward sampling, one joint draw per iteration
};

struct GibbsConfig {
    std::size_t iterations = 0;
    std::size_t burn_in = 0;
    std::uint64_t seed = 0;
    std::optional<std::vector<double>> init_states;  // theta^(0); defaults to the observations
    SamplerMode mode = SamplerMode::single_site;

    /// Config with burn_in = iterations / 10.
    static GibbsConfig with_default_burn_in(std::size_t iterations, std::uint64_t seed);

    void validate() const;
};

/// Retained draws, one row of T states per iteration after burn-in.
class GibbsSamples {
public:
    GibbsSamples() = default;
    explicit GibbsSamples(std::size_t dims) : dims_(dims) {}

    [[nodiscard]] std::size_t dims() const noexcept { return dims_; }
    [[nodiscard]] std::size_t rows() const noexcept { return dims_ == 0 ? 0 : values_.size() / dims_; }
    [[nodiscard]] std::span<const double> row(std::size_t i) const {
        return std::span<const double>(values_).subspan(i * dims_, dims_);
    }
    [[nodiscard]] std::vector<double> column(std::size_t j) const;

    void append(std::span<const double> draw);

    friend bool operator==(const GibbsSamples&, const GibbsSamples&) = default;

private:
    std::size_t dims_ = 0;
    std::vector<double> values_;
};

/**
 * Full conditional of theta_{index+1} given the other states and the data,
 * as a product of the Gaussian factors that mention it: the transition from
 * the previous state (the prior N(m_0, C_0 + state_var) for the first
 * state), the transition into the next state, and the observation
 * likelihood. Zero-variance factors are point masses and dominate.
 */
GaussianBelief full_conditional(const LocalLevelParams& params, std::span<const double> ys,
                                std::span<const double> states, std::size_t index);

/// Two-observation sampler: each iteration draws theta_2 | theta_1, y_2 and
/// then theta_1 | theta_2, y_1. config.mode is ignored.
GibbsSamples gibbs_two_step(double y1, double y2, const LocalLevelParams& params,
                            const GibbsConfig& config);

/// Sampler over theta_1..theta_T in the configured mode.
GibbsSamples gibbs_chain(const ObservationSeries& ys, const LocalLevelParams& params,
                         const GibbsConfig& config);

/// Moments of one coordinate with batch-means Monte Carlo standard errors.
struct ChainSummary {
    double mean = 0.0;
    double variance = 0.0;
    double mean_se = 0.0;
    double variance_se = 0.0;
    double lag1_autocorrelation = 0.0;
};

ChainSummary summarize(std::span<const double> draws, std::size_t batches = 50);

}  // namespace sslab::gibbs
