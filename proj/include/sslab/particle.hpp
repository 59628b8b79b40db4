#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sslab/model.hpp"
#include "sslab/rng.hpp"

namespace sslab::particle {

/// Weighted particle approximation of a scalar posterior. Log-weights are the
/// canonical storage and are kept normalized (log-sum-exp equal to zero).
class ParticleEnsemble {
public:
    /// N equally weighted particles. Throws UsageError when empty.
    static ParticleEnsemble uniform(std::vector<double> values);

    /// Normalizes arbitrary log-weights; throws TotalDegeneracyError when all
    /// are -inf.
    static ParticleEnsemble from_log_weights(std::vector<double> values,
                                             std::vector<double> log_weights);

    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::span<const double> weights() const noexcept { return weights_; }
    [[nodiscard]] std::span<const double> log_weights() const noexcept { return log_weights_; }

    [[nodiscard]] double mean() const;
    [[nodiscard]] double variance() const;

    friend bool operator==(const ParticleEnsemble&, const ParticleEnsemble&) = default;

private:
    ParticleEnsemble() = default;

    std::vector<double> values_;
    std::vector<double> log_weights_;
    std::vector<double> weights_;
};

enum class ResamplingScheme { multinomial, systematic, stratified, residual };

struct ResamplingPolicy {
    enum class Trigger { always, ess_below, never };

    ResamplingScheme scheme = ResamplingScheme::systematic;
    Trigger trigger = Trigger::ess_below;
    double ess_fraction = 0.5;  // used by ess_below; must lie in (0, 1]

    static ResamplingPolicy always(ResamplingScheme scheme = ResamplingScheme::systematic);
    static ResamplingPolicy never();

    void validate() const;
    [[nodiscard]] bool fires(double ess, std::size_t n) const;
};

enum class Protocol {
    propagate_first,  // bootstrap/SIR: propagate, weight by the filtering likelihood
    update_first,     // weight by the smoothing likelihood, then propagate given y
    sis,              // propagate_first without resampling
    apf,              // auxiliary particle filter
};

struct PfConfig {
    std::size_t n_particles = 1000;
    Protocol protocol = Protocol::propagate_first;
    ResamplingPolicy resampling{};
    std::uint64_t seed = 0;
    std::size_t threads = 1;        // per-particle work; results do not depend on it
    bool record_ensembles = false;  // keep every post-step ensemble in the trace

    void validate() const;
};

/// Exp-normalized weights using max subtraction. Throws TotalDegeneracyError
/// when every entry is -inf and UsageError on NaN, +inf or empty input.
std::vector<double> normalized_weights(std::span<const double> log_likelihoods);

/// log(sum(exp(x))) with max subtraction; -inf when all entries are -inf.
double log_sum_exp(std::span<const double> xs);

/// sum_i f_i w_i with Neumaier compensated summation.
double importance_estimate(std::span<const double> integrand_values,
                           std::span<const double> weights);

/// 1 / sum_i w_i^2.
double effective_sample_size(std::span<const double> weights);

/// log N(y; mean, variance); a zero variance is a point mass.
double normal_log_density(double y, double mean, double variance);

/// Ancestor indices, one per output particle.
std::vector<std::size_t> resample_indices(std::span<const double> weights,
                                          ResamplingScheme scheme, Rng& rng);

/// Systematic resampling driven by a single uniform u in [0, 1).
std::vector<std::size_t> systematic_indices(std::span<const double> weights, double u);

/// Stratified resampling driven by one uniform per stratum.
std::vector<std::size_t> stratified_indices(std::span<const double> weights,
                                            std::span<const double> uniforms);

/// Resampled ensemble with uniform weights.
ParticleEnsemble resample(const ParticleEnsemble& ensemble, ResamplingScheme scheme, Rng& rng);

/// Output of one filter step. ess is measured before any resampling;
/// mean and variance summarize the filtering posterior at the new time.
struct StepResult {
    ParticleEnsemble ensemble;
    double ess;
    bool resampled;
    double mean;
    double variance;
};

/**
 * All step functions take a step-level generator. Particle i draws from
 * step_rng.split(i); resampling draws from a dedicated split, so the result
 * does not depend on `threads`.
 */
StepResult pf_step_propagate_first(const ParticleEnsemble& ensemble, double y_next,
                                   const LocalLevelParams& params, const ResamplingPolicy& policy,
                                   const Rng& step_rng, std::size_t threads = 1);

StepResult pf_step_update_first(const ParticleEnsemble& ensemble, double y_next,
                                const LocalLevelParams& params, const ResamplingPolicy& policy,
                                const Rng& step_rng, std::size_t threads = 1);

StepResult sis_step(const ParticleEnsemble& ensemble, double y_next,
                    const LocalLevelParams& params, const Rng& step_rng, std::size_t threads = 1);

StepResult apf_step(const ParticleEnsemble& ensemble, double y_next,
                    const LocalLevelParams& params, const Rng& step_rng,
                    ResamplingScheme scheme = ResamplingScheme::systematic,
                    std::size_t threads = 1);

/// Law of theta_{t+1} given theta_t and y_{t+1}: the update-first proposal.
struct ConditionalTransition {
    double mean;
    double variance;
};
ConditionalTransition conditional_transition(double theta, double y_next,
                                             const LocalLevelParams& params);

struct TraceRecord {
    std::size_t t;  // 0 is the initial ensemble
    double mean;
    double variance;
    double ess;
    bool resampled;
};

struct ParticleTrace {
    std::vector<TraceRecord> records;
    std::vector<ParticleEnsemble> ensembles;  // filled when record_ensembles is set

    /// Filtered means for t = 1..T (the initial record excluded).
    [[nodiscard]] std::vector<double> filtered_means() const;
};

/// Draws N particles from N(prior_mean, prior_var) and folds the configured
/// step over the series.
ParticleTrace run_filter(const ObservationSeries& ys, const LocalLevelParams& params,
                         const PfConfig& config);

}  // namespace sslab::particle
