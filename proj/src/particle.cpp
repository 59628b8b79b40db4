#include "sslab/particle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <thread>

#include "sslab/errors.hpp"

namespace sslab::particle {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::uint64_t kResampleStream = std::uint64_t{1} << 63;

template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& body) {
    if (threads <= 1 || n < 2 * threads) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    const std::size_t chunk = (n + threads - 1) / threads;
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t begin = 0; begin < n; begin += chunk) {
        const std::size_t end = std::min(n, begin + chunk);
        pool.emplace_back([&body, begin, end] {
            for (std::size_t i = begin; i < end; ++i) body(i);
        });
    }
}

class NeumaierSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

std::vector<double> cumulative(std::span<const double> weights) {
    std::vector<double> cum(weights.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        cum[i] = acc;
    }
    return cum;
}

// Maps sorted positions in [0, 1) to ancestor indices along the cumulative
// weights. Positions beyond the rounded total land on the last particle with
// positive weight.
std::vector<std::size_t> walk_sorted(std::span<const double> weights,
                                     std::span<const double> positions) {
    const std::vector<double> cum = cumulative(weights);
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] > 0.0) last_positive = i;
    }
    std::vector<std::size_t> out;
    out.reserve(positions.size());
    std::size_t j = 0;
    for (double p : positions) {
        while (j < last_positive && p >= cum[j]) ++j;
        out.push_back(j);
    }
    return out;
}

std::vector<std::size_t> multinomial_indices(std::span<const double> weights, std::size_t count,
                                             Rng& rng) {
    std::vector<double> positions(count);
    for (auto& p : positions) p = rng.uniform();
    std::sort(positions.begin(), positions.end());
    return walk_sorted(weights, positions);
}

void require_weights(std::span<const double> weights) {
    if (weights.empty()) {
        throw UsageError("particle: weight vector is empty");
    }
}

void require_model(const LocalLevelParams& params) {
    params.validate();
    if (params.obs_var == 0.0 && params.state_var == 0.0) {
        throw ParameterError(
            "particle: obs_var and state_var are both zero, the model is deterministic");
    }
}

StepResult finish(std::vector<double> values, std::vector<double> log_weights,
                  double ess, bool resampled) {
    auto ensemble = ParticleEnsemble::from_log_weights(std::move(values), std::move(log_weights));
    const double mean = ensemble.mean();
    const double var = ensemble.variance();
    return {std::move(ensemble), ess, resampled, mean, var};
}

}  // namespace

// --- ParticleEnsemble -------------------------------------------------------

ParticleEnsemble ParticleEnsemble::uniform(std::vector<double> values) {
    if (values.empty()) {
        throw UsageError("ParticleEnsemble: need at least one particle");
    }
    ParticleEnsemble e;
    const auto n = static_cast<double>(values.size());
    e.log_weights_.assign(values.size(), -std::log(n));
    e.weights_.assign(values.size(), 1.0 / n);
    e.values_ = std::move(values);
    return e;
}

ParticleEnsemble ParticleEnsemble::from_log_weights(std::vector<double> values,
                                                    std::vector<double> log_weights) {
    if (values.empty() || values.size() != log_weights.size()) {
        throw UsageError("ParticleEnsemble: values and log_weights must be non-empty and equal length");
    }
    const double lse = log_sum_exp(log_weights);
    if (!std::isfinite(lse)) {
        throw TotalDegeneracyError("ParticleEnsemble: every particle has zero weight");
    }
    ParticleEnsemble e;
    e.weights_ = normalized_weights(log_weights);
    for (auto& lw : log_weights) lw -= lse;
    e.values_ = std::move(values);
    e.log_weights_ = std::move(log_weights);
    return e;
}

double ParticleEnsemble::mean() const { return importance_estimate(values_, weights_); }

double ParticleEnsemble::variance() const {
    const double m = mean();
    NeumaierSum acc;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        const double d = values_[i] - m;
        acc.add(weights_[i] * d * d);
    }
    return acc.value();
}

// --- policy and config ------------------------------------------------------

ResamplingPolicy ResamplingPolicy::always(ResamplingScheme scheme) {
    return {scheme, Trigger::always, 1.0};
}

ResamplingPolicy ResamplingPolicy::never() {
    return {ResamplingScheme::systematic, Trigger::never, 1.0};
}

void ResamplingPolicy::validate() const {
    if (trigger == Trigger::ess_below && !(ess_fraction > 0.0 && ess_fraction <= 1.0)) {
        throw ParameterError("ResamplingPolicy: ess fraction must lie in (0, 1], got " +
                             std::to_string(ess_fraction));
    }
}

bool ResamplingPolicy::fires(double ess, std::size_t n) const {
    switch (trigger) {
        case Trigger::always:
            return true;
        case Trigger::never:
            return false;
        case Trigger::ess_below:
            return ess < ess_fraction * static_cast<double>(n);
    }
    return false;
}

void PfConfig::validate() const {
    if (n_particles < 1) {
        throw ParameterError("PfConfig: n_particles must be at least 1");
    }
    resampling.validate();
}

// --- weights ----------------------------------------------------------------

double log_sum_exp(std::span<const double> xs) {
    double hi = kNegInf;
    for (double x : xs) hi = std::max(hi, x);
    if (hi == kNegInf) return kNegInf;
    double acc = 0.0;
    for (double x : xs) acc += std::exp(x - hi);
    return hi + std::log(acc);
}

std::vector<double> normalized_weights(std::span<const double> log_likelihoods) {
    if (log_likelihoods.empty()) {
        throw UsageError("normalized_weights: empty input");
    }
    double hi = kNegInf;
    for (double x : log_likelihoods) {
        if (std::isnan(x) || x == std::numeric_limits<double>::infinity()) {
            throw UsageError("normalized_weights: log-likelihoods must be finite or -inf");
        }
        hi = std::max(hi, x);
    }
    if (hi == kNegInf) {
        throw TotalDegeneracyError("normalized_weights: no particle explains the observation");
    }
    std::vector<double> w(log_likelihoods.size());
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = std::exp(log_likelihoods[i] - hi);
        total += w[i];
    }
    for (auto& x : w) x /= total;
    return w;
}

double importance_estimate(std::span<const double> integrand_values,
                           std::span<const double> weights) {
    if (integrand_values.size() != weights.size()) {
        throw UsageError("importance_estimate: " + std::to_string(integrand_values.size()) +
                         " integrand values but " + std::to_string(weights.size()) + " weights");
    }
    NeumaierSum acc;
    for (std::size_t i = 0; i < weights.size(); ++i) acc.add(integrand_values[i] * weights[i]);
    return acc.value();
}

double effective_sample_size(std::span<const double> weights) {
    require_weights(weights);
    double ss = 0.0;
    for (double w : weights) ss += w * w;
    return 1.0 / ss;
}

double normal_log_density(double y, double mean, double variance) {
    if (variance <= 0.0) {
        return y == mean ? 0.0 : kNegInf;
    }
    const double d = y - mean;
    return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + d * d / variance);
}

// --- resampling -------------------------------------------------------------

std::vector<std::size_t> systematic_indices(std::span<const double> weights, double u) {
    require_weights(weights);
    const std::size_t n = weights.size();
    std::vector<double> positions(n);
    for (std::size_t k = 0; k < n; ++k) {
        positions[k] = (static_cast<double>(k) + u) / static_cast<double>(n);
    }
    return walk_sorted(weights, positions);
}

std::vector<std::size_t> stratified_indices(std::span<const double> weights,
                                            std::span<const double> uniforms) {
    require_weights(weights);
    const std::size_t n = weights.size();
    if (uniforms.size() != n) {
        throw UsageError("stratified_indices: need one uniform per stratum");
    }
    std::vector<double> positions(n);
    for (std::size_t k = 0; k < n; ++k) {
        positions[k] = (static_cast<double>(k) + uniforms[k]) / static_cast<double>(n);
    }
    return walk_sorted(weights, positions);
}

std::vector<std::size_t> resample_indices(std::span<const double> weights,
                                          ResamplingScheme scheme, Rng& rng) {
    require_weights(weights);
    const std::size_t n = weights.size();
    switch (scheme) {
        case ResamplingScheme::multinomial:
            return multinomial_indices(weights, n, rng);
        case ResamplingScheme::systematic:
            return systematic_indices(weights, rng.uniform());
        case ResamplingScheme::stratified: {
            std::vector<double> u(n);
            for (auto& x : u) x = rng.uniform();
            return stratified_indices(weights, u);
        }
        case ResamplingScheme::residual: {
            const auto nd = static_cast<double>(n);
            std::vector<std::size_t> out;
            out.reserve(n);
            std::vector<double> residual(n);
            double residual_total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double scaled = nd * weights[i];
                const auto copies = static_cast<std::size_t>(std::floor(scaled));
                out.insert(out.end(), copies, i);
                residual[i] = scaled - static_cast<double>(copies);
                residual_total += residual[i];
            }
            // Rounding in floor can overshoot by one copy; trim from the back.
            if (out.size() > n) out.resize(n);
            const std::size_t remaining = n - out.size();
            if (remaining > 0) {
                if (residual_total <= 0.0) {
                    residual.assign(weights.begin(), weights.end());
                    residual_total = 1.0;
                }
                for (auto& r : residual) r /= residual_total;
                const auto extra = multinomial_indices(residual, remaining, rng);
                out.insert(out.end(), extra.begin(), extra.end());
            }
            return out;
        }
    }
    throw UsageError("resample_indices: unknown scheme");
}

ParticleEnsemble resample(const ParticleEnsemble& ensemble, ResamplingScheme scheme, Rng& rng) {
    const auto idx = resample_indices(ensemble.weights(), scheme, rng);
    std::vector<double> values(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) values[i] = ensemble.values()[idx[i]];
    return ParticleEnsemble::uniform(std::move(values));
}

// --- steps ------------------------------------------------------------------

ConditionalTransition conditional_transition(double theta, double y_next,
                                             const LocalLevelParams& params) {
    if (params.state_var == 0.0) return {theta, 0.0};
    if (params.obs_var == 0.0) return {y_next, 0.0};
    const double precision = 1.0 / params.state_var + 1.0 / params.obs_var;
    return {(theta / params.state_var + y_next / params.obs_var) / precision, 1.0 / precision};
}

StepResult pf_step_propagate_first(const ParticleEnsemble& ensemble, double y_next,
                                   const LocalLevelParams& params, const ResamplingPolicy& policy,
                                   const Rng& step_rng, std::size_t threads) {
    require_model(params);
    policy.validate();
    const std::size_t n = ensemble.size();
    const auto prev = ensemble.values();
    const auto prev_lw = ensemble.log_weights();

    std::vector<double> values(n);
    std::vector<double> log_w(n);
    parallel_for(n, threads, [&](std::size_t i) {
        Rng rng = step_rng.split(i);
        values[i] = rng.normal(prev[i], params.state_var);
        log_w[i] = prev_lw[i] + normal_log_density(y_next, values[i], params.obs_var);
    });

    auto weighted = ParticleEnsemble::from_log_weights(std::move(values), std::move(log_w));
    const double ess = effective_sample_size(weighted.weights());
    const double mean = weighted.mean();
    const double var = weighted.variance();
    if (!policy.fires(ess, n)) {
        return {std::move(weighted), ess, false, mean, var};
    }
    Rng resample_rng = step_rng.split(kResampleStream);
    return {resample(weighted, policy.scheme, resample_rng), ess, true, mean, var};
}

StepResult pf_step_update_first(const ParticleEnsemble& ensemble, double y_next,
                                const LocalLevelParams& params, const ResamplingPolicy& policy,
                                const Rng& step_rng, std::size_t threads) {
    require_model(params);
    policy.validate();
    const std::size_t n = ensemble.size();
    const auto prev = ensemble.values();
    const auto prev_lw = ensemble.log_weights();
    const double predictive_var = params.obs_var + params.state_var;

    std::vector<double> log_w(n);
    parallel_for(n, threads, [&](std::size_t i) {
        log_w[i] = prev_lw[i] + normal_log_density(y_next, prev[i], predictive_var);
    });
    auto weighted = ParticleEnsemble::from_log_weights({prev.begin(), prev.end()}, std::move(log_w));
    const double ess = effective_sample_size(weighted.weights());

    bool resampled = false;
    std::vector<double> parents;
    std::vector<double> parent_lw;
    if (policy.fires(ess, n)) {
        Rng resample_rng = step_rng.split(kResampleStream);
        const auto idx = resample_indices(weighted.weights(), policy.scheme, resample_rng);
        parents.resize(n);
        for (std::size_t i = 0; i < n; ++i) parents[i] = prev[idx[i]];
        parent_lw.assign(n, -std::log(static_cast<double>(n)));
        resampled = true;
    } else {
        parents.assign(weighted.values().begin(), weighted.values().end());
        parent_lw.assign(weighted.log_weights().begin(), weighted.log_weights().end());
    }

    std::vector<double> values(n);
    parallel_for(n, threads, [&](std::size_t i) {
        Rng rng = step_rng.split(i);
        const auto c = conditional_transition(parents[i], y_next, params);
        values[i] = rng.normal(c.mean, c.variance);
    });
    return finish(std::move(values), std::move(parent_lw), ess, resampled);
}

StepResult sis_step(const ParticleEnsemble& ensemble, double y_next,
                    const LocalLevelParams& params, const Rng& step_rng, std::size_t threads) {
    return pf_step_propagate_first(ensemble, y_next, params, ResamplingPolicy::never(), step_rng,
                                   threads);
}

StepResult apf_step(const ParticleEnsemble& ensemble, double y_next,
                    const LocalLevelParams& params, const Rng& step_rng,
                    ResamplingScheme scheme, std::size_t threads) {
    require_model(params);
    const std::size_t n = ensemble.size();
    const auto prev = ensemble.values();
    const auto prev_lw = ensemble.log_weights();
    const double predictive_var = params.obs_var + params.state_var;

    // First stage: current weight times the exact predictive likelihood.
    std::vector<double> first_stage(n);
    parallel_for(n, threads, [&](std::size_t i) {
        first_stage[i] = normal_log_density(y_next, prev[i], predictive_var);
    });
    std::vector<double> aux_lw(n);
    for (std::size_t i = 0; i < n; ++i) aux_lw[i] = prev_lw[i] + first_stage[i];
    const auto aux_w = normalized_weights(aux_lw);

    Rng resample_rng = step_rng.split(kResampleStream);
    const auto idx = resample_indices(aux_w, scheme, resample_rng);

    // Second stage: filtering likelihood over the ancestor's predictive likelihood.
    std::vector<double> values(n);
    std::vector<double> log_w(n);
    parallel_for(n, threads, [&](std::size_t i) {
        Rng rng = step_rng.split(i);
        const std::size_t a = idx[i];
        values[i] = rng.normal(prev[a], params.state_var);
        log_w[i] = normal_log_density(y_next, values[i], params.obs_var) - first_stage[a];
    });
    auto result = finish(std::move(values), std::move(log_w), 0.0, true);
    result.ess = effective_sample_size(result.ensemble.weights());
    return result;
}

// --- driver -----------------------------------------------------------------

std::vector<double> ParticleTrace::filtered_means() const {
    std::vector<double> out;
    for (const auto& r : records) {
        if (r.t > 0) out.push_back(r.mean);
    }
    return out;
}

ParticleTrace run_filter(const ObservationSeries& ys, const LocalLevelParams& params,
                         const PfConfig& config) {
    config.validate();
    require_model(params);
    ys.validate();

    const std::size_t n = config.n_particles;
    const std::size_t threads =
        config.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.threads;
    const Rng root(config.seed);

    std::vector<double> init(n);
    const Rng init_rng = root.split(0);
    parallel_for(n, threads, [&](std::size_t i) {
        Rng rng = init_rng.split(i);
        init[i] = rng.normal(params.prior_mean, params.prior_var);
    });
    ParticleEnsemble ensemble = ParticleEnsemble::uniform(std::move(init));

    ParticleTrace trace;
    trace.records.reserve(ys.size() + 1);
    trace.records.push_back(
        {0, ensemble.mean(), ensemble.variance(), static_cast<double>(n), false});
    if (config.record_ensembles) trace.ensembles.push_back(ensemble);

    for (std::size_t t = 1; t <= ys.size(); ++t) {
        const double y = ys.observations[t - 1];
        const Rng step_rng = root.split(t);
        StepResult step = [&] {
            switch (config.protocol) {
                case Protocol::propagate_first:
                    return pf_step_propagate_first(ensemble, y, params, config.resampling, step_rng,
                                                   threads);
                case Protocol::update_first:
                    return pf_step_update_first(ensemble, y, params, config.resampling, step_rng,
                                                threads);
                case Protocol::sis:
                    return sis_step(ensemble, y, params, step_rng, threads);
                case Protocol::apf:
                    return apf_step(ensemble, y, params, step_rng, config.resampling.scheme,
                                    threads);
            }
            throw UsageError("run_filter: unknown protocol");
        }();
        trace.records.push_back({t, step.mean, step.variance, step.ess, step.resampled});
        ensemble = std::move(step.ensemble);
        if (config.record_ensembles) trace.ensembles.push_back(ensemble);
    }
    return trace;
}

}  // namespace sslab::particle
