#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "benchmark.hpp"
#include "grid_oracle.hpp"
#include "sslab/errors.hpp"
#include "sslab/kalman.hpp"
#include "sslab/particle.hpp"

using namespace sslab;
using namespace sslab::particle;

namespace {

const LocalLevelParams kUnit{1.0, 1.0, 0.0, 1.0};

std::vector<std::size_t> copy_counts(const std::vector<std::size_t>& idx, std::size_t n) {
    std::vector<std::size_t> counts(n, 0);
    for (auto i : idx) counts[i]++;
    return counts;
}

double sum(std::span<const double> xs) { return std::accumulate(xs.begin(), xs.end(), 0.0); }

std::vector<double> random_weights(Rng& rng, std::size_t n) {
    std::vector<double> w(n);
    for (auto& x : w) x = rng.uniform() + 0.01;
    const double s = sum(w);
    for (auto& x : w) x /= s;
    return w;
}

PfConfig pf_config(std::size_t n, Protocol protocol, std::uint64_t seed) {
    PfConfig c;
    c.n_particles = n;
    c.protocol = protocol;
    c.seed = seed;
    return c;
}

// Steps whose filtered mean lies within 3 posterior sd / sqrt(ESS) of the Kalman mean.
std::size_t steps_within_3se(const ParticleTrace& trace, const kalman::FilterTrace& kf) {
    std::size_t ok = 0;
    for (std::size_t t = 1; t < trace.records.size(); ++t) {
        const auto& rec = trace.records[t];
        const double bound = 3.0 * std::sqrt(kf.records[t - 1].posterior.variance / rec.ess);
        if (std::abs(rec.mean - kf.records[t - 1].posterior.mean) <= bound) ++ok;
    }
    return ok;
}

double median(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

}  // namespace

TEST_SUITE("weights") {
    TEST_CASE("equal log-likelihoods give uniform weights") {
        const auto w = normalized_weights(std::vector<double>{-3.2, -3.2, -3.2, -3.2});
        for (double x : w) CHECK(x == 0.25);
    }

    TEST_CASE("direct normalization") {
        const auto w = normalized_weights(std::vector<double>{0.0, std::log(2.0)});
        CHECK(w[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
        CHECK(w[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    }

    TEST_CASE("log-sum-exp keeps extreme values finite") {
        const auto w = normalized_weights(std::vector<double>{0.0, -1000.0});
        CHECK(w[0] == 1.0);
        CHECK(w[1] >= 0.0);
        CHECK(w[1] < 1e-300);
        const auto big = normalized_weights(std::vector<double>{1000.0, 999.0});
        CHECK(big[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
    }

    TEST_CASE("total degeneracy and invalid input") {
        const double inf = std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS(normalized_weights(std::vector<double>{-inf, -inf}), TotalDegeneracyError);
        CHECK_THROWS_AS(normalized_weights(std::vector<double>{0.0, std::nan("")}), UsageError);
        CHECK_THROWS_AS(normalized_weights(std::vector<double>{}), UsageError);
        const auto w = normalized_weights(std::vector<double>{-inf, 0.0});
        CHECK(w == std::vector<double>{0.0, 1.0});
    }

    TEST_CASE("importance_estimate") {
        CHECK(importance_estimate(std::vector<double>{1, 1, 1}, std::vector<double>{0.2, 0.3, 0.5}) ==
              doctest::Approx(1.0));
        CHECK(importance_estimate(std::vector<double>{1, 3}, std::vector<double>{0.5, 0.5}) == 2.0);
        CHECK(importance_estimate(std::vector<double>{1, 8, 27},
                                  std::vector<double>{1.0 / 6, 2.0 / 6, 3.0 / 6}) ==
              doctest::Approx(98.0 / 6.0).epsilon(1e-15));
        CHECK_THROWS_AS(importance_estimate(std::vector<double>{1}, std::vector<double>{0.5, 0.5}),
                        UsageError);
    }

    TEST_CASE("effective sample size") {
        CHECK(effective_sample_size(std::vector<double>(100, 0.01)) == doctest::Approx(100.0));
        CHECK(effective_sample_size(std::vector<double>{1, 0, 0}) == 1.0);
        CHECK(effective_sample_size(std::vector<double>{0.5, 0.25, 0.25}) ==
              doctest::Approx(8.0 / 3.0).epsilon(1e-15));
    }

    TEST_CASE("ensemble keeps normalized weights and log-weights in step") {
        Rng rng(3);
        std::vector<double> values(50);
        std::vector<double> lw(50);
        for (std::size_t i = 0; i < 50; ++i) {
            values[i] = rng.normal();
            lw[i] = 30.0 * rng.normal();
        }
        const auto e = ParticleEnsemble::from_log_weights(values, lw);
        CHECK(std::abs(sum(e.weights()) - 1.0) < 1e-12);
        for (std::size_t i = 0; i < 50; ++i) {
            CHECK(e.weights()[i] == doctest::Approx(std::exp(e.log_weights()[i])));
        }
        CHECK_THROWS_AS(ParticleEnsemble::uniform({}), UsageError);
    }
}

TEST_SUITE("resampling") {
    TEST_CASE("single particle is returned unchanged") {
        Rng rng(1);
        for (auto scheme : {ResamplingScheme::multinomial, ResamplingScheme::systematic,
                            ResamplingScheme::stratified, ResamplingScheme::residual}) {
            const auto out = resample(ParticleEnsemble::uniform({4.2}), scheme, rng);
            CHECK(out.values()[0] == 4.2);
            CHECK(out.weights()[0] == 1.0);
        }
    }

    TEST_CASE("point mass is copied N times by every scheme") {
        Rng rng(2);
        const double inf = std::numeric_limits<double>::infinity();
        const auto e = ParticleEnsemble::from_log_weights({1.0, 2.0, 3.0}, {0.0, -inf, -inf});
        for (auto scheme : {ResamplingScheme::multinomial, ResamplingScheme::systematic,
                            ResamplingScheme::stratified, ResamplingScheme::residual}) {
            for (int rep = 0; rep < 100; ++rep) {
                const auto out = resample(e, scheme, rng);
                CHECK(std::vector<double>(out.values().begin(), out.values().end()) ==
                      std::vector<double>{1.0, 1.0, 1.0});
            }
        }
    }

    TEST_CASE("systematic with equal halves copies each particle once, for every u") {
        for (int k = 0; k < 10000; ++k) {
            const double u = k / 10000.0;
            CHECK(copy_counts(systematic_indices(std::vector<double>{0.5, 0.5}, u), 2) ==
                  std::vector<std::size_t>{1, 1});
        }
    }

    TEST_CASE("systematic copy counts stay within floor and ceil over a grid of u") {
        Rng rng(5);
        for (int trial = 0; trial < 20; ++trial) {
            const std::size_t n = 2 + rng.below(5);
            const auto w = random_weights(rng, n);
            for (int k = 0; k < 20000; ++k) {
                const auto counts = copy_counts(systematic_indices(w, k / 20000.0), n);
                for (std::size_t i = 0; i < n; ++i) {
                    const double target = static_cast<double>(n) * w[i];
                    CHECK(counts[i] >= std::floor(target));
                    CHECK(counts[i] <= std::ceil(target));
                }
            }
        }
    }

    TEST_CASE("stratified copy counts differ from N w by less than two") {
        // Each particle's weight interval overlaps at most two partial strata.
        Rng rng(6);
        for (int trial = 0; trial < 2000; ++trial) {
            const std::size_t n = 2 + rng.below(5);
            const auto w = random_weights(rng, n);
            std::vector<double> u(n);
            for (auto& x : u) x = rng.uniform();
            const auto counts = copy_counts(stratified_indices(w, u), n);
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(std::abs(static_cast<double>(counts[i]) - n * w[i]) < 2.0);
            }
        }
    }

    TEST_CASE("every scheme is unbiased") {
        Rng rng(7);
        const std::vector<double> w{0.05, 0.4, 0.15, 0.3, 0.1};
        const std::size_t reps = 40000;
        for (auto scheme : {ResamplingScheme::multinomial, ResamplingScheme::systematic,
                            ResamplingScheme::stratified, ResamplingScheme::residual}) {
            std::vector<double> total(w.size(), 0.0);
            for (std::size_t r = 0; r < reps; ++r) {
                const auto c = copy_counts(resample_indices(w, scheme, rng), w.size());
                for (std::size_t i = 0; i < w.size(); ++i) total[i] += static_cast<double>(c[i]);
            }
            for (std::size_t i = 0; i < w.size(); ++i) {
                const double n = static_cast<double>(w.size());
                const double se = std::sqrt(n * w[i] * (1 - w[i]) / static_cast<double>(reps));
                CHECK(std::abs(total[i] / static_cast<double>(reps) - n * w[i]) <= 3.0 * se);
            }
        }
    }
}

TEST_SUITE("propagate-first step") {
    TEST_CASE("no state noise and a matching observation leave particles in place") {
        const LocalLevelParams p{1.0, 0.0, 0.0, 1.0};
        const auto e = ParticleEnsemble::uniform(std::vector<double>(10, 2.5));
        const auto r = pf_step_propagate_first(e, 2.5, p, ResamplingPolicy::always(), Rng(1));
        for (std::size_t i = 0; i < 10; ++i) {
            CHECK(r.ensemble.values()[i] == 2.5);
            CHECK(r.ensemble.weights()[i] == doctest::Approx(0.1));
        }
    }

    TEST_CASE("single particle moves by one state-noise draw and keeps weight 1") {
        const auto e = ParticleEnsemble::uniform({0.7});
        const Rng step(3);
        const auto r = pf_step_propagate_first(e, 100.0, kUnit, ResamplingPolicy::never(), step);
        Rng expect = step.split(0);
        CHECK(r.ensemble.values()[0] == 0.7 + expect.normal());
        CHECK(r.ensemble.weights()[0] == 1.0);
        CHECK(r.ess == 1.0);
    }

    TEST_CASE("per-step means track the Kalman filter") {
        const auto ys = bench::standard_series();
        const auto kf = kalman::filter_series(kUnit, ys);
        const auto trace = run_filter(ys, kUnit, pf_config(20000, Protocol::propagate_first, 1));
        CHECK(steps_within_3se(trace, kf) >= 48);
    }
}

TEST_SUITE("update-first step") {
    TEST_CASE("conditional transition is the Gaussian product") {
        const auto c = conditional_transition(0.0, 2.0, kUnit);
        CHECK(c.mean == 1.0);
        CHECK(c.variance == 0.5);
        const auto grid = oracle::trapezoid_moments(
            [](double x) { return -0.5 * x * x - 0.5 * (2.0 - x) * (2.0 - x); }, -12.0, 12.0, 24000);
        CHECK(std::abs(grid.mean - c.mean) < 1e-6);
        CHECK(std::abs(grid.variance - c.variance) < 1e-6);
    }

    TEST_CASE("zero state noise leaves locations unchanged") {
        const LocalLevelParams p{1.0, 0.0, 0.0, 1.0};
        const auto e = ParticleEnsemble::uniform({-1.0, 0.5, 2.0});
        const auto r = pf_step_update_first(e, 0.3, p, ResamplingPolicy::never(), Rng(2));
        CHECK(std::vector<double>(r.ensemble.values().begin(), r.ensemble.values().end()) ==
              std::vector<double>{-1.0, 0.5, 2.0});
    }

    TEST_CASE("exact observations collapse particles onto y") {
        const LocalLevelParams p{0.0, 1.0, 0.0, 1.0};
        const auto e = ParticleEnsemble::uniform({-1.0, 0.5, 2.0});
        const auto r = pf_step_update_first(e, 0.3, p, ResamplingPolicy::always(), Rng(2));
        for (double v : r.ensemble.values()) CHECK(v == 0.3);
    }

    TEST_CASE("per-step means track the Kalman filter") {
        const auto ys = bench::standard_series();
        const auto kf = kalman::filter_series(kUnit, ys);
        const auto trace = run_filter(ys, kUnit, pf_config(20000, Protocol::update_first, 1));
        CHECK(steps_within_3se(trace, kf) >= 48);
    }

    TEST_CASE("recovers from an outlier faster than propagate-first") {
        // Error at t+1 against the exact filter on the contaminated series.
        auto ys = bench::standard_series();
        const std::size_t outlier = 25;
        ys.observations[outlier - 1] += 8.0 * std::sqrt(kUnit.obs_var);
        const auto kf = kalman::filter_series(kUnit, ys);
        const double exact = kf.records[outlier].posterior.mean;
        std::vector<double> err_update;
        std::vector<double> err_propagate;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            const auto uf = run_filter(ys, kUnit, pf_config(200, Protocol::update_first, 500 + seed));
            const auto pf = run_filter(ys, kUnit, pf_config(200, Protocol::propagate_first, 500 + seed));
            err_update.push_back(std::abs(uf.records[outlier + 1].mean - exact));
            err_propagate.push_back(std::abs(pf.records[outlier + 1].mean - exact));
        }
        CHECK(median(err_update) < median(err_propagate));
    }
}

TEST_SUITE("sis and apf") {
    TEST_CASE("one SIS step equals propagate-first that never resamples") {
        const auto e = ParticleEnsemble::uniform({0.1, -0.4, 1.3, 0.8});
        const Rng step(5);
        const auto a = sis_step(e, 0.9, kUnit, step);
        const auto b = pf_step_propagate_first(e, 0.9, kUnit, ResamplingPolicy::never(), step);
        CHECK(a.ensemble == b.ensemble);
        CHECK(a.ess == b.ess);
    }

    TEST_CASE("SIS and SIR share weights until the first resample") {
        const auto ys = bench::standard_series();
        auto sis_cfg = pf_config(300, Protocol::sis, 9);
        auto sir_cfg = pf_config(300, Protocol::propagate_first, 9);
        sis_cfg.record_ensembles = sir_cfg.record_ensembles = true;
        const auto sis = run_filter(ys, kUnit, sis_cfg);
        const auto sir = run_filter(ys, kUnit, sir_cfg);
        std::size_t t = 1;
        for (; t <= ys.size(); ++t) {
            CHECK(sis.records[t].ess == sir.records[t].ess);
            if (sir.records[t].resampled) break;
            CHECK(sis.ensembles[t] == sir.ensembles[t]);
        }
        CHECK(t <= ys.size());
    }

    TEST_CASE("SIS degenerates slower on uninformative data") {
        ObservationSeries flat;
        flat.observations.assign(100, 0.0);
        const LocalLevelParams vague{100.0, 1.0, 0.0, 1.0};
        const auto informative = simulate_local_level(kUnit, 100, 4);
        const auto a = run_filter(flat, vague, pf_config(1000, Protocol::sis, 3));
        const auto b = run_filter(informative, kUnit, pf_config(1000, Protocol::sis, 3));
        CHECK(a.records.back().ess > 10.0 * b.records.back().ess);
        CHECK(b.records.back().ess < 100.0);
    }

    TEST_CASE("APF second-stage weights are uniform without state noise") {
        const LocalLevelParams p{1.0, 0.0, 0.0, 1.0};
        const auto e = ParticleEnsemble::from_log_weights({-1.0, 0.0, 1.0, 2.0}, {0.0, -1.0, -0.5, -2.0});
        const auto r = apf_step(e, 0.4, p, Rng(6));
        for (double w : r.ensemble.weights()) CHECK(w == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(r.resampled);
    }

    TEST_CASE("APF with one particle keeps weight 1") {
        const auto r = apf_step(ParticleEnsemble::uniform({3.0}), -5.0, kUnit, Rng(7));
        CHECK(r.ensemble.weights()[0] == 1.0);
        CHECK(r.ess == 1.0);
    }

    TEST_CASE("APF tracks the Kalman filter") {
        const auto ys = bench::standard_series();
        const auto kf = kalman::filter_series(kUnit, ys);
        const auto trace = run_filter(ys, kUnit, pf_config(20000, Protocol::apf, 2));
        CHECK(steps_within_3se(trace, kf) >= 48);
    }

    TEST_CASE("APF keeps more effective particles than SIR on outlier data") {
        auto ys = bench::standard_series();
        for (std::size_t t : {10u, 20u, 30u, 40u}) ys.observations[t - 1] += 8.0;
        std::vector<double> apf_ess;
        std::vector<double> sir_ess;
        auto mean_ess = [](const ParticleTrace& tr) {
            double s = 0.0;
            for (std::size_t t = 1; t < tr.records.size(); ++t) s += tr.records[t].ess;
            return s / static_cast<double>(tr.records.size() - 1);
        };
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            apf_ess.push_back(mean_ess(run_filter(ys, kUnit, pf_config(500, Protocol::apf, seed))));
            sir_ess.push_back(
                mean_ess(run_filter(ys, kUnit, pf_config(500, Protocol::propagate_first, seed))));
        }
        CHECK(median(apf_ess) >= median(sir_ess));
    }
}

TEST_SUITE("run_filter") {
    TEST_CASE("empty series keeps only the initial record") {
        const auto trace = run_filter(ObservationSeries{}, kUnit, pf_config(100, Protocol::propagate_first, 1));
        REQUIRE(trace.records.size() == 1);
        CHECK(trace.records[0].t == 0);
        CHECK(trace.records[0].ess == 100.0);
    }

    TEST_CASE("deterministic model is rejected") {
        const auto ys = bench::standard_series();
        for (auto protocol : {Protocol::propagate_first, Protocol::update_first, Protocol::sis,
                              Protocol::apf}) {
            CHECK_THROWS_AS(run_filter(ys, {0.0, 0.0, 0.0, 1.0}, pf_config(1, protocol, 1)),
                            ParameterError);
        }
        CHECK_THROWS_AS(run_filter(ys, kUnit, pf_config(0, Protocol::sis, 1)), ParameterError);
    }

    TEST_CASE("fixed seed gives a bit-identical trace, threaded or not") {
        const auto ys = simulate_local_level(kUnit, 20, 70);
        for (auto protocol : {Protocol::propagate_first, Protocol::update_first, Protocol::sis,
                              Protocol::apf}) {
            auto cfg = pf_config(500, protocol, 7);
            cfg.record_ensembles = true;
            const auto a = run_filter(ys, kUnit, cfg);
            const auto b = run_filter(ys, kUnit, cfg);
            cfg.threads = 4;
            const auto c = run_filter(ys, kUnit, cfg);
            for (std::size_t t = 0; t < a.records.size(); ++t) {
                CHECK(a.records[t].mean == b.records[t].mean);
                CHECK(a.records[t].mean == c.records[t].mean);
                CHECK(a.records[t].variance == c.records[t].variance);
                CHECK(a.records[t].ess == c.records[t].ess);
                CHECK(a.ensembles[t] == c.ensembles[t]);
            }
        }
    }

    TEST_CASE("weights stay on the simplex and ESS in [1, N]") {
        const auto ys = simulate_local_level({0.3, 2.0, 0.0, 5.0}, 40, 8);
        for (auto protocol : {Protocol::propagate_first, Protocol::update_first, Protocol::sis,
                              Protocol::apf}) {
            auto cfg = pf_config(200, protocol, 3);
            cfg.record_ensembles = true;
            const auto trace = run_filter(ys, {0.3, 2.0, 0.0, 5.0}, cfg);
            for (std::size_t t = 0; t < trace.records.size(); ++t) {
                const auto w = trace.ensembles[t].weights();
                CHECK(std::abs(sum(w) - 1.0) <= 1e-12);
                CHECK(std::all_of(w.begin(), w.end(), [](double x) { return x >= 0.0; }));
                CHECK(trace.records[t].ess >= 1.0 - 1e-12);
                CHECK(trace.records[t].ess <= 200.0 + 1e-9);
            }
        }
    }

    TEST_CASE("error shrinks with N: quadrupling N halves the median error within a factor of 2") {
        const auto ys = bench::standard_series();
        const auto kf = kalman::filter_series(kUnit, ys);
        const std::size_t t = 30;
        auto median_error = [&](std::size_t n) {
            std::vector<double> errs;
            for (std::uint64_t seed = 0; seed < 40; ++seed) {
                const auto tr = run_filter(ys, kUnit, pf_config(n, Protocol::propagate_first, 1000 + seed));
                errs.push_back(std::abs(tr.records[t].mean - kf.records[t - 1].posterior.mean));
            }
            return median(errs);
        };
        const double ratio = median_error(500) / median_error(2000);
        CHECK(ratio >= 1.0);
        CHECK(ratio <= 4.0);
    }

    TEST_CASE("the two protocols agree within their combined Monte Carlo bounds") {
        const auto ys = bench::standard_series();
        const auto pf = run_filter(ys, kUnit, pf_config(20000, Protocol::propagate_first, 31));
        const auto uf = run_filter(ys, kUnit, pf_config(20000, Protocol::update_first, 32));
        const auto kf = kalman::filter_series(kUnit, ys);
        std::size_t agree = 0;
        for (std::size_t t = 1; t <= ys.size(); ++t) {
            const double sd = std::sqrt(kf.records[t - 1].posterior.variance);
            const double bound = 3.0 * sd * (1.0 / std::sqrt(pf.records[t].ess) +
                                             1.0 / std::sqrt(uf.records[t].ess));
            if (std::abs(pf.records[t].mean - uf.records[t].mean) <= bound) ++agree;
        }
        CHECK(agree >= 48);
    }
}
