#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "sslab/kalman.hpp"
#include "sslab/model.hpp"

namespace sslab::diagnostics {

/// Predictive mean of y_t given y_1..y_{t-1}; called with every prefix in order.
using Predictor = std::function<double(std::span<const double> history)>;

/// Predicts the last observation, or `baseline` for the empty history.
Predictor last_value_predictor(double baseline = 0.0);

/// Kalman one-step predictive mean under `params`, shifted by `bias`.
Predictor kalman_predictor(const LocalLevelParams& params, double bias = 0.0);

struct DoobOptions {
    double baseline = 0.0;     // y_0
    bool compensated = false;  // carry running sums in double-double
};

/**
 * Split of an observed series into cumulative predicted changes U and a
 * martingale of cumulative prediction errors M, with M(0) = U(0) = 0:
 *
 *   v(t)           = predictor(y_1..y_{t-1}) - y_{t-1}
 *   m_increment(t) = y_t - predictor(y_1..y_{t-1})
 *   y_t            = U(t) + M(t) + baseline
 */
struct DoobDecomposition {
    std::vector<double> y;
    std::vector<double> v;
    std::vector<double> u;
    std::vector<double> m_increment;
    std::vector<double> m;
    double baseline = 0.0;

    // Low-order parts of u and m in compensated mode, zero otherwise.
    std::vector<double> u_low;
    std::vector<double> m_low;

    [[nodiscard]] std::size_t size() const noexcept { return y.size(); }

    /// U(t) + M(t) + baseline for 0-based index i, using the low-order parts.
    [[nodiscard]] double reconstruct(std::size_t i) const;
};

DoobDecomposition doob_decompose(std::span<const double> ys, const Predictor& predictor,
                                 const DoobOptions& options = {});
DoobDecomposition doob_decompose(const ObservationSeries& ys, const Predictor& predictor,
                                 const DoobOptions& options = {});

/// Sample moments of the martingale increments against their zero-mean and
/// zero lag-1 product-moment hypotheses.
struct OrthogonalityCheck {
    double mean_increment = 0.0;
    double lag1_cov = 0.0;  // mean of d_t * d_{t-1}
    double mean_se = 0.0;
    double lag1_se = 0.0;

    [[nodiscard]] bool mean_within(double k = 3.0) const;
    [[nodiscard]] bool lag1_within(double k = 3.0) const;
};

/// Requires at least three increments.
OrthogonalityCheck martingale_orthogonality_check(const DoobDecomposition& decomp);

struct OracleComparison {
    double rmse = 0.0;
    double max_abs = 0.0;
    std::vector<double> per_t;  // engine - oracle
};

OracleComparison compare_to_oracle(std::span<const double> engine_means,
                                   std::span<const double> oracle_means);
OracleComparison compare_to_oracle(std::span<const double> engine_means,
                                   const kalman::FilterTrace& oracle_trace);

}  // namespace sslab::diagnostics
