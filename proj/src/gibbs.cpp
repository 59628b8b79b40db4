#include "sslab/gibbs.hpp"

#include <cmath>
#include <string>

#include "sslab/errors.hpp"
#include "sslab/rng.hpp"

namespace sslab::gibbs {

namespace {

struct Factor {
    double mean;
    double variance;
};

GaussianBelief gaussian_product(std::span<const Factor> factors) {
    double point_sum = 0.0;
    std::size_t point_count = 0;
    double precision = 0.0;
    double weighted = 0.0;
    for (const auto& f : factors) {
        if (f.variance == 0.0) {
            point_sum += f.mean;
            ++point_count;
        } else {
            precision += 1.0 / f.variance;
            weighted += f.mean / f.variance;
        }
    }
    if (point_count > 0) {
        return {point_sum / static_cast<double>(point_count), 0.0};
    }
    if (precision == 0.0) {
        throw ParameterError("gibbs: full conditional is improper");
    }
    return {weighted / precision, 1.0 / precision};
}

void require_proper(const LocalLevelParams& params) {
    params.validate();
    if (params.obs_var == 0.0 && params.state_var == 0.0) {
        throw ParameterError("gibbs: obs_var and state_var are both zero, full conditionals are improper");
    }
}

std::vector<double> initial_states(const GibbsConfig& config, std::span<const double> ys) {
    if (!config.init_states) {
        return {ys.begin(), ys.end()};
    }
    if (config.init_states->size() != ys.size()) {
        throw UsageError("gibbs: init_states has length " +
                         std::to_string(config.init_states->size()) + ", expected " +
                         std::to_string(ys.size()));
    }
    return *config.init_states;
}

void ffbs_draw(const LocalLevelParams& params, const kalman::FilterTrace& trace, Rng& rng,
               std::vector<double>& states) {
    const std::size_t n = trace.size();
    const GaussianBelief& last = trace.records[n - 1].posterior;
    states[n - 1] = rng.normal(last.mean, last.variance);
    for (std::size_t i = n - 1; i-- > 0;) {
        const GaussianBelief& filtered = trace.records[i].posterior;
        const double next_pred_var = filtered.variance + params.state_var;
        if (next_pred_var <= 0.0) {
            states[i] = filtered.mean;
            continue;
        }
        if (params.state_var == 0.0) {
            states[i] = states[i + 1];
            continue;
        }
        const double gain = filtered.variance / next_pred_var;
        const double mean = filtered.mean + gain * (states[i + 1] - filtered.mean);
        const double var = filtered.variance * params.state_var / next_pred_var;
        states[i] = rng.normal(mean, var);
    }
}

}  // namespace

GibbsConfig GibbsConfig::with_default_burn_in(std::size_t iterations, std::uint64_t seed) {
    GibbsConfig config;
    config.iterations = iterations;
    config.burn_in = iterations / 10;
    config.seed = seed;
    return config;
}

void GibbsConfig::validate() const {
    if (iterations <= burn_in) {
        throw ParameterError("GibbsConfig: iterations (" + std::to_string(iterations) +
                             ") must exceed burn_in (" + std::to_string(burn_in) + ")");
    }
}

std::vector<double> GibbsSamples::column(std::size_t j) const {
    std::vector<double> out;
    out.reserve(rows());
    for (std::size_t i = j; i < values_.size(); i += dims_) out.push_back(values_[i]);
    return out;
}

void GibbsSamples::append(std::span<const double> draw) {
    if (draw.size() != dims_) {
        throw UsageError("GibbsSamples: draw has wrong dimension");
    }
    values_.insert(values_.end(), draw.begin(), draw.end());
}

GaussianBelief full_conditional(const LocalLevelParams& params, std::span<const double> ys,
                                std::span<const double> states, std::size_t index) {
    const std::size_t n = ys.size();
    if (states.size() != n || index >= n) {
        throw UsageError("gibbs::full_conditional: index or state vector out of range");
    }
    Factor factors[3];
    std::size_t count = 0;
    if (index == 0) {
        factors[count++] = {params.prior_mean, params.prior_var + params.state_var};
    } else {
        factors[count++] = {states[index - 1], params.state_var};
    }
    if (index + 1 < n) {
        factors[count++] = {states[index + 1], params.state_var};
    }
    factors[count++] = {ys[index], params.obs_var};
    return gaussian_product(std::span<const Factor>(factors, count));
}

GibbsSamples gibbs_two_step(double y1, double y2, const LocalLevelParams& params,
                            const GibbsConfig& config) {
    require_proper(params);
    config.validate();
    const double ys[2] = {y1, y2};
    std::vector<double> theta = initial_states(config, ys);
    Rng rng(config.seed);
    GibbsSamples samples(2);

    for (std::size_t k = 1; k <= config.iterations; ++k) {
        // theta_2 | theta_1, y_2  ∝  P(y_2 | theta_2) P(theta_2 | theta_1)
        const Factor second[2] = {{theta[0], params.state_var}, {y2, params.obs_var}};
        const GaussianBelief c2 = gaussian_product(second);
        theta[1] = rng.normal(c2.mean, c2.variance);

        // theta_1 | theta_2, y_1  ∝  P(theta_2 | theta_1) L(theta_1; y_1) P(theta_1)
        const Factor first[3] = {{params.prior_mean, params.prior_var + params.state_var},
                                 {theta[1], params.state_var},
                                 {y1, params.obs_var}};
        const GaussianBelief c1 = gaussian_product(first);
        theta[0] = rng.normal(c1.mean, c1.variance);

        if (k > config.burn_in) samples.append(theta);
    }
    return samples;
}

GibbsSamples gibbs_chain(const ObservationSeries& ys, const LocalLevelParams& params,
                         const GibbsConfig& config) {
    require_proper(params);
    config.validate();
    ys.validate();
    const std::span<const double> obs(ys.observations);
    if (obs.empty()) {
        throw UsageError("gibbs_chain: series must contain at least one observation");
    }
    std::vector<double> theta = initial_states(config, obs);
    Rng rng(config.seed);
    GibbsSamples samples(obs.size());

    kalman::FilterTrace trace;
    if (config.mode == SamplerMode::ffbs) {
        trace = kalman::filter_series(params, obs);
    }

    for (std::size_t k = 1; k <= config.iterations; ++k) {
        if (config.mode == SamplerMode::ffbs) {
            ffbs_draw(params, trace, rng, theta);
        } else {
            for (std::size_t i = obs.size(); i-- > 0;) {
                const GaussianBelief c = full_conditional(params, obs, theta, i);
                theta[i] = rng.normal(c.mean, c.variance);
            }
        }
        if (k > config.burn_in) samples.append(theta);
    }
    return samples;
}

ChainSummary summarize(std::span<const double> draws, std::size_t batches) {
    ChainSummary s;
    const std::size_t n = draws.size();
    if (n == 0) return s;

    double sum = 0.0;
    for (double x : draws) sum += x;
    s.mean = sum / static_cast<double>(n);

    double ss = 0.0;
    double lag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = draws[i] - s.mean;
        ss += d * d;
        if (i > 0) lag += d * (draws[i - 1] - s.mean);
    }
    s.variance = n > 1 ? ss / static_cast<double>(n - 1) : 0.0;
    s.lag1_autocorrelation = ss > 0.0 ? lag / ss : 0.0;

    if (batches < 2 || n < 2 * batches) {
        s.mean_se = std::sqrt(s.variance / static_cast<double>(n));
        s.variance_se = 0.0;
        return s;
    }
    // Batch means over `batches` contiguous blocks; leftovers are dropped.
    const std::size_t width = n / batches;
    std::vector<double> batch_mean(batches, 0.0);
    std::vector<double> batch_sq(batches, 0.0);
    for (std::size_t b = 0; b < batches; ++b) {
        for (std::size_t i = b * width; i < (b + 1) * width; ++i) {
            const double d = draws[i] - s.mean;
            batch_mean[b] += draws[i];
            batch_sq[b] += d * d;
        }
        batch_mean[b] /= static_cast<double>(width);
        batch_sq[b] /= static_cast<double>(width);
    }
    auto se_of = [batches](const std::vector<double>& xs) {
        double m = 0.0;
        for (double x : xs) m += x;
        m /= static_cast<double>(batches);
        double v = 0.0;
        for (double x : xs) v += (x - m) * (x - m);
        v /= static_cast<double>(batches - 1);
        return std::sqrt(v / static_cast<double>(batches));
    };
    s.mean_se = se_of(batch_mean);
    s.variance_se = se_of(batch_sq);
    return s;
}

}  // namespace sslab::gibbs
