#include "sslab/diagnostics.hpp"

#include <cmath>
#include <memory>
#include <string>

#include "sslab/errors.hpp"

namespace sslab::diagnostics {

namespace {

// Error-free transformation: a + b == s + e exactly.
struct TwoSum {
    double s;
    double e;
};

TwoSum two_sum(double a, double b) noexcept {
    const double s = a + b;
    const double bb = s - a;
    const double e = (a - (s - bb)) + (b - bb);
    return {s, e};
}

struct DoubleDouble {
    double hi = 0.0;
    double lo = 0.0;

    void add(double x_hi, double x_lo) noexcept {
        TwoSum s = two_sum(hi, x_hi);
        s.e += lo + x_lo;
        const TwoSum r = two_sum(s.s, s.e);
        hi = r.s;
        lo = r.e;
    }
};

}  // namespace

Predictor last_value_predictor(double baseline) {
    return [baseline](std::span<const double> history) {
        return history.empty() ? baseline : history.back();
    };
}

Predictor kalman_predictor(const LocalLevelParams& params, double bias) {
    auto state = std::make_shared<kalman::OneStepPredictor>(params);
    return [state, bias](std::span<const double> history) { return (*state)(history) + bias; };
}

double DoobDecomposition::reconstruct(std::size_t i) const {
    DoubleDouble acc;
    acc.add(u[i], u_low.empty() ? 0.0 : u_low[i]);
    acc.add(m[i], m_low.empty() ? 0.0 : m_low[i]);
    acc.add(baseline, 0.0);
    return acc.hi + acc.lo;
}

DoobDecomposition doob_decompose(std::span<const double> ys, const Predictor& predictor,
                                 const DoobOptions& options) {
    if (ys.empty()) {
        throw UsageError("doob_decompose: series must contain at least one observation");
    }
    const std::size_t n = ys.size();
    DoobDecomposition d;
    d.baseline = options.baseline;
    d.y.assign(ys.begin(), ys.end());
    d.v.resize(n);
    d.u.resize(n);
    d.m_increment.resize(n);
    d.m.resize(n);
    if (options.compensated) {
        d.u_low.resize(n);
        d.m_low.resize(n);
    }

    DoubleDouble u_acc;
    DoubleDouble m_acc;
    double u_plain = 0.0;
    double m_plain = 0.0;
    double previous = options.baseline;
    for (std::size_t i = 0; i < n; ++i) {
        const double forecast = predictor(ys.first(i));
        if (!std::isfinite(forecast)) {
            throw PredictorError("doob_decompose: predictor returned a non-finite value at t=" +
                                 std::to_string(i + 1));
        }
        const TwoSum change = two_sum(forecast, -previous);
        const TwoSum error = two_sum(ys[i], -forecast);
        d.v[i] = change.s;
        d.m_increment[i] = error.s;
        if (options.compensated) {
            u_acc.add(change.s, change.e);
            m_acc.add(error.s, error.e);
            d.u[i] = u_acc.hi;
            d.u_low[i] = u_acc.lo;
            d.m[i] = m_acc.hi;
            d.m_low[i] = m_acc.lo;
        } else {
            u_plain += change.s;
            m_plain += error.s;
            d.u[i] = u_plain;
            d.m[i] = m_plain;
        }
        previous = ys[i];
    }
    return d;
}

DoobDecomposition doob_decompose(const ObservationSeries& ys, const Predictor& predictor,
                                 const DoobOptions& options) {
    return doob_decompose(std::span<const double>(ys.observations), predictor, options);
}

bool OrthogonalityCheck::mean_within(double k) const {
    return std::abs(mean_increment) <= k * mean_se;
}

bool OrthogonalityCheck::lag1_within(double k) const { return std::abs(lag1_cov) <= k * lag1_se; }

OrthogonalityCheck martingale_orthogonality_check(const DoobDecomposition& decomp) {
    const auto& d = decomp.m_increment;
    const std::size_t n = d.size();
    if (n < 3) {
        throw UsageError("martingale_orthogonality_check: need at least 3 increments");
    }
    auto mean_and_se = [](std::span<const double> xs) {
        const auto count = static_cast<double>(xs.size());
        double sum = 0.0;
        for (double x : xs) sum += x;
        const double mean = sum / count;
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        const double sd = std::sqrt(ss / (count - 1.0));
        return std::pair{mean, sd / std::sqrt(count)};
    };

    std::vector<double> products(n - 1);
    for (std::size_t i = 1; i < n; ++i) products[i - 1] = d[i] * d[i - 1];

    OrthogonalityCheck check;
    std::tie(check.mean_increment, check.mean_se) = mean_and_se(d);
    std::tie(check.lag1_cov, check.lag1_se) = mean_and_se(products);
    return check;
}

OracleComparison compare_to_oracle(std::span<const double> engine_means,
                                   std::span<const double> oracle_means) {
    if (engine_means.size() != oracle_means.size()) {
        throw UsageError("compare_to_oracle: engine has " + std::to_string(engine_means.size()) +
                         " means, oracle has " + std::to_string(oracle_means.size()));
    }
    OracleComparison out;
    out.per_t.resize(engine_means.size());
    double ss = 0.0;
    for (std::size_t i = 0; i < engine_means.size(); ++i) {
        const double dev = engine_means[i] - oracle_means[i];
        out.per_t[i] = dev;
        ss += dev * dev;
        out.max_abs = std::max(out.max_abs, std::abs(dev));
    }
    if (!engine_means.empty()) {
        out.rmse = std::sqrt(ss / static_cast<double>(engine_means.size()));
    }
    return out;
}

OracleComparison compare_to_oracle(std::span<const double> engine_means,
                                   const kalman::FilterTrace& oracle_trace) {
    const auto oracle = oracle_trace.posterior_means();
    return compare_to_oracle(engine_means, std::span<const double>(oracle));
}

}  // namespace sslab::diagnostics
