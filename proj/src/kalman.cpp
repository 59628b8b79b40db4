#include "sslab/kalman.hpp"

#include <cmath>
#include <string>

#include "sslab/errors.hpp"

namespace sslab {

void GaussianBelief::validate() const {
    if (!std::isfinite(mean) || !std::isfinite(variance) || variance < 0.0) {
        throw ParameterError("GaussianBelief: need finite mean and finite non-negative variance");
    }
}

namespace kalman {

std::vector<double> FilterTrace::posterior_means() const {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.posterior.mean);
    return out;
}

std::vector<double> FilterTrace::posterior_variances() const {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.posterior.variance);
    return out;
}

GaussianBelief predict_state(const GaussianBelief& belief, double state_var) {
    return {belief.mean, belief.variance + state_var};
}

GaussianBelief predict_observation(const GaussianBelief& belief, double state_var,
                                   double obs_var) {
    return {belief.mean, belief.variance + state_var + obs_var};
}

GaussianBelief update(const GaussianBelief& predicted, double y, double obs_var) {
    const double r = predicted.variance;
    const double s = r + obs_var;
    if (s <= 0.0) {
        if (y == predicted.mean) {
            return predicted;
        }
        throw DegenerateUpdateError("kalman::update: zero predictive variance but observation " +
                                    std::to_string(y) + " differs from predicted mean " +
                                    std::to_string(predicted.mean));
    }
    if (obs_var == 0.0) {
        return {y, 0.0};
    }
    const double gain = r / s;
    // r * obs_var / s is (1 - K) R without the cancellation in 1 - K.
    return {predicted.mean + gain * (y - predicted.mean), r * obs_var / s};
}

FilterTrace filter_series(const LocalLevelParams& params, std::span<const double> ys) {
    params.validate();
    FilterTrace trace;
    trace.records.reserve(ys.size());
    GaussianBelief belief{params.prior_mean, params.prior_var};
    for (std::size_t i = 0; i < ys.size(); ++i) {
        FilterRecord rec;
        rec.t = i + 1;
        rec.predicted = predict_state(belief, params.state_var);
        rec.predictive_obs = predict_observation(belief, params.state_var, params.obs_var);
        rec.posterior = update(rec.predicted, ys[i], params.obs_var);
        belief = rec.posterior;
        trace.records.push_back(rec);
    }
    return trace;
}

FilterTrace filter_series(const LocalLevelParams& params, const ObservationSeries& ys) {
    return filter_series(params, std::span<const double>(ys.observations));
}

std::vector<GaussianBelief> smooth_trace(const LocalLevelParams& params, const FilterTrace& trace) {
    const std::size_t n = trace.size();
    std::vector<GaussianBelief> smoothed(n);
    if (n == 0) return smoothed;

    smoothed[n - 1] = trace.records[n - 1].posterior;
    for (std::size_t i = n - 1; i-- > 0;) {
        const GaussianBelief& filtered = trace.records[i].posterior;
        const double next_pred_var = filtered.variance + params.state_var;
        // Zero predicted variance means the filtered belief is already a point mass.
        const double gain = next_pred_var > 0.0 ? filtered.variance / next_pred_var : 0.0;
        const GaussianBelief& next = smoothed[i + 1];
        double var = filtered.variance + gain * gain * (next.variance - next_pred_var);
        if (var < 0.0) var = 0.0;
        smoothed[i] = {filtered.mean + gain * (next.mean - filtered.mean), var};
    }
    return smoothed;
}

std::vector<GaussianBelief> smooth_series(const LocalLevelParams& params,
                                          std::span<const double> ys) {
    return smooth_trace(params, filter_series(params, ys));
}

std::vector<GaussianBelief> smooth_series(const LocalLevelParams& params,
                                          const ObservationSeries& ys) {
    return smooth_series(params, std::span<const double>(ys.observations));
}

OneStepPredictor::OneStepPredictor(LocalLevelParams params)
    : params_(params), belief_{params.prior_mean, params.prior_var} {
    params_.validate();
}

double OneStepPredictor::operator()(std::span<const double> history) {
    bool extends = history.size() >= seen_.size();
    for (std::size_t i = 0; extends && i < seen_.size(); ++i) {
        extends = history[i] == seen_[i];
    }
    if (!extends) {
        seen_.clear();
        belief_ = {params_.prior_mean, params_.prior_var};
    }
    for (std::size_t i = seen_.size(); i < history.size(); ++i) {
        belief_ = update(predict_state(belief_, params_.state_var), history[i], params_.obs_var);
        seen_.push_back(history[i]);
    }
    return belief_.mean;
}

}  // namespace kalman
}  // namespace sslab
