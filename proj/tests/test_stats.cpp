#include <cmath>
#include <initializer_list>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "ladderflux/measurement.hpp"
#include "ladderflux/rng.hpp"
#include "ladderflux/stats.hpp"

using namespace ladderflux;

namespace {

// Synthetic record x[k][r] = signal_k + sigma * N(0,1), one independent
// stream per cell so the table is reproducible cell by cell.
MeasurementRecord gaussian_record(int K, int R, const std::vector<double>& signal, double sigma,
                                  std::uint64_t seed) {
  MeasurementRecord rec;
  rec.repetitions = R;
  rec.t_ns.resize(K);
  rec.x.resize(static_cast<std::size_t>(K) * R);
  for (int k = 0; k < K; ++k) {
    rec.t_ns[k] = 100.0 + 5.0 * k;
    for (int r = 0; r < R; ++r) {
      SplitStream rng(seed, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(r));
      rec.x[static_cast<std::size_t>(k) * R + r] = signal[k] + sigma * rng.next_normal();
    }
  }
  return rec;
}

MeasurementRecord constant_record(int K, int R, double value) {
  MeasurementRecord rec;
  rec.repetitions = R;
  rec.t_ns.resize(K);
  rec.x.assign(static_cast<std::size_t>(K) * R, value);
  for (int k = 0; k < K; ++k) rec.t_ns[k] = 5.0 * k;
  return rec;
}

double pop_variance(const std::vector<double>& x) {
  double mean = 0;
  for (double v : x) mean += v;
  mean /= x.size();
  double ss = 0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return ss / x.size();
}

std::vector<double> random_series(int K, std::uint64_t seed) {
  SplitStream rng(seed);
  std::vector<double> x(K);
  for (double& v : x) v = 0.4 + 0.15 * rng.next_normal();
  return x;
}

}  // namespace

TEST_SUITE("stats") {
  TEST_CASE("temporal fluctuation is the (K-1)-normalized spread") {
    const std::vector<double> x{0.3, -0.1, 0.7, 0.2, 0.05};
    double mean = 0;
    for (double v : x) mean += v;
    mean /= x.size();
    double ss = 0;
    for (double v : x) ss += (v - mean) * (v - mean);
    CHECK(temporal_fluctuation(x) == doctest::Approx(ss / 4.0).epsilon(1e-15));
    CHECK(temporal_fluctuation(std::vector<double>{1.7, 1.7, 1.7}) == 0.0);
    CHECK_THROWS_WITH_AS(temporal_fluctuation(std::vector<double>{1.0}),
                         "fluctuation needs at least two samples", std::invalid_argument);
  }

  TEST_CASE("the estimator report recomputes from first principles") {
    std::vector<double> signal(12);
    for (int k = 0; k < 12; ++k) signal[k] = 0.4 + 0.05 * std::sin(0.7 * k);
    const MeasurementRecord rec = gaussian_record(12, 5, signal, 0.08, 31);
    const EstimatorReport rep = estimator_report(rec);
    REQUIRE(rep.K == 12);
    REQUIRE(rep.R == 5);

    const std::vector<double> means = rec.rep_means();
    CHECK(rep.sigma_t2_naive == doctest::Approx(temporal_fluctuation(means)).epsilon(1e-14));

    double sum_s = 0, sum_s2 = 0;
    for (int k = 0; k < 12; ++k) {
      double ss = 0;
      for (int r = 0; r < 5; ++r) {
        const double d = rec.at(k, r) - means[k];
        ss += d * d;
      }
      const double skk = ss / 4.0;
      CHECK(rep.sampling_variances[k] == doctest::Approx(skk).epsilon(1e-14));
      sum_s += skk;
      sum_s2 += skk * skk;
    }
    CHECK(rep.mean_sampling_variance == doctest::Approx(sum_s / 12).epsilon(1e-14));
    CHECK(rep.sigma_t2_mitigated ==
          doctest::Approx(rep.sigma_t2_naive - rep.mean_sampling_variance / 5).epsilon(1e-14));

    // Propagated standard error, written out literally.
    double grand = 0;
    for (double m : means) grand += m;
    grand /= 12;
    double weighted = 0;
    for (int k = 0; k < 12; ++k) {
      weighted += rep.sampling_variances[k] * (means[k] - grand) * (means[k] - grand);
    }
    const double K = 12, R = 5;
    const double inside = (2.0 / R) * weighted + (sum_s * sum_s) / ((K * R) * (K * R)) +
                          ((K - 2) / (K * R * R)) * sum_s2;
    CHECK(rep.standard_error ==
          doctest::Approx(std::sqrt(2.0) / (K - 1) * std::sqrt(inside)).epsilon(1e-14));

    CHECK_THROWS_WITH_AS(estimator_report(constant_record(1, 5, 0.0)),
                         "record needs at least two time points", std::invalid_argument);
    CHECK_THROWS_WITH_AS(estimator_report(constant_record(5, 1, 0.0)),
                         "record needs at least two repetitions", std::invalid_argument);
  }

  TEST_CASE("noise-free records have zero bias estimate and zero standard error") {
    std::vector<double> signal(20);
    for (int k = 0; k < 20; ++k) signal[k] = 0.1 * k;
    const MeasurementRecord rec = gaussian_record(20, 4, signal, 0.0, 1);
    const EstimatorReport rep = estimator_report(rec);
    CHECK(rep.mean_sampling_variance == 0.0);
    CHECK(rep.sigma_t2_mitigated == rep.sigma_t2_naive);
    CHECK(rep.standard_error == 0.0);
    CHECK(rep.sigma_t2_naive == doctest::Approx(temporal_fluctuation(signal)).epsilon(1e-14));
  }

  TEST_CASE("the mitigated estimator removes the finite-shot bias") {
    // Flat truth: any nonzero naive fluctuation is pure sampling bias, with
    // expectation sigma^2 / R.
    const int K = 181, R = 10, trials = 200;
    const double sigma2 = 5.9e-3;
    const std::vector<double> signal(K, 0.25);
    double sum_naive = 0, sum_mit = 0, sum_se = 0, ss_naive = 0;
    std::vector<double> naives(trials);
    for (int t = 0; t < trials; ++t) {
      const MeasurementRecord rec =
          gaussian_record(K, R, signal, std::sqrt(sigma2), 1000 + t);
      const EstimatorReport rep = estimator_report(rec);
      naives[t] = rep.sigma_t2_naive;
      sum_naive += rep.sigma_t2_naive;
      sum_mit += rep.sigma_t2_mitigated;
      sum_se += rep.standard_error;
    }
    const double mean_naive = sum_naive / trials;
    const double mean_mit = sum_mit / trials;
    for (double v : naives) ss_naive += (v - mean_naive) * (v - mean_naive);
    const double sd_naive = std::sqrt(ss_naive / (trials - 1));

    const double bias = sigma2 / R;  // 5.9e-4
    CHECK(std::abs(mean_naive - bias) < 2e-5);
    CHECK(std::abs(mean_mit) < 1.5e-5);
    // The propagated standard error predicts the actual trial-to-trial spread.
    CHECK(sum_se / trials == doctest::Approx(sd_naive).epsilon(0.15));
  }

  TEST_CASE("a single cosine lights up exactly one spectral bin") {
    for (int K : {32, 31}) {
      const int m = 5;
      const double a = 0.7, dt = 5.0;
      std::vector<double> x(K);
      for (int k = 0; k < K; ++k) x[k] = a * std::cos(2.0 * std::numbers::pi * m * k / K);
      const SpectrumReport sp = power_spectrum(x, dt);
      REQUIRE(static_cast<int>(sp.psd.size()) == (K + 1) / 2 + 1);
      CHECK(sp.K == K);
      for (std::size_t n = 0; n < sp.psd.size(); ++n) {
        if (static_cast<int>(n) == m) {
          CHECK(sp.psd[n] == doctest::Approx(a * a * K / 4.0).epsilon(1e-12));
        } else {
          CHECK(sp.psd[n] < 1e-24);
        }
      }
      CHECK(sp.frequency_mhz[m] == doctest::Approx(1e3 * m / (K * dt)).epsilon(1e-15));
    }
  }

  TEST_CASE("a constant series is all direct current") {
    const SpectrumReport sp = power_spectrum(std::vector<double>(24, 1.3), 5.0);
    CHECK(sp.psd[0] == doctest::Approx(24 * 1.3 * 1.3).epsilon(1e-12));
    for (std::size_t n = 1; n < sp.psd.size(); ++n) CHECK(sp.psd[n] < 1e-24);
    CHECK(spectrum_fluctuation_sum(sp) < 1e-24);
  }

  TEST_CASE("the default window grid bins fall 1.105 MHz apart") {
    std::vector<double> x(181);
    for (int k = 0; k < 181; ++k) x[k] = std::sin(0.3 * k);
    const SpectrumReport sp = power_spectrum(x, 5.0);
    REQUIRE(sp.psd.size() == 92);  // n = 0..91
    CHECK(sp.frequency_mhz[1] == doctest::Approx(1.1049723756906078).epsilon(1e-14));
    CHECK(sp.frequency_mhz[28] == doctest::Approx(30.939226519337016).epsilon(1e-14));
  }

  TEST_CASE("the spectrum satisfies Parseval once the duplicated bin is removed") {
    // Reported bins run to ceil(K/2); for odd K the last one duplicates its
    // mirror, for even K the Nyquist bin appears once but is double-counted
    // by the 2/K sum. Removing that single term recovers the population
    // variance exactly.
    for (int K : {181, 180}) {
      const std::vector<double> x = random_series(K, 77);
      const SpectrumReport sp = power_spectrum(x, 5.0);
      const double fluct = spectrum_fluctuation_sum(sp);
      const double pop = pop_variance(x);
      const double dup = (K % 2 == 1) ? 2.0 * sp.psd.back() / K : sp.psd.back() / K;
      CHECK(fluct - dup == doctest::Approx(pop).epsilon(1e-11));
      // The uncorrected sum is still within the advertised 2/K relative slack.
      CHECK(std::abs(fluct - pop) / pop < 2.0 / K);
    }
    CHECK_THROWS_WITH_AS(power_spectrum(std::vector<double>{1.0}, 5.0),
                         "spectrum needs at least two samples", std::invalid_argument);
    CHECK_THROWS_WITH_AS(power_spectrum(std::vector<double>{1.0, 2.0}, 0.0),
                         "sample spacing must be positive", std::invalid_argument);
  }

  TEST_CASE("variance homogeneity statistic matches an independent reference") {
    // Median-centered Levene statistic for a small fixed table, validated
    // against an established statistics package.
    MeasurementRecord rec;
    rec.repetitions = 4;
    rec.t_ns = {0.0, 1.0, 2.0};
    rec.x = {0.1, 0.25, -0.3, 0.02, 1.0, 1.4, 0.7, 1.1, -0.5, -0.45, -0.62, -0.51};
    const VarianceTestResult res = brown_forsythe(rec);
    CHECK(res.dof1 == 2);
    CHECK(res.dof2 == 9);
    CHECK(res.statistic == doctest::Approx(1.37557706626955).epsilon(1e-10));
    CHECK(res.p_value == doctest::Approx(0.301112608029064).epsilon(1e-9));
  }

  TEST_CASE("variance homogeneity test holds its false-positive rate") {
    const int trials = 400;
    int rejected = 0;
    const std::vector<double> signal(5, 0.0);
    for (int t = 0; t < trials; ++t) {
      const MeasurementRecord rec = gaussian_record(5, 6, signal, 1.0, 5000 + t);
      if (brown_forsythe(rec).p_value < 0.05) ++rejected;
    }
    const double rate = static_cast<double>(rejected) / trials;
    CHECK(rate > 0.015);
    CHECK(rate < 0.11);
  }

  TEST_CASE("variance homogeneity test sees a blatant variance split") {
    MeasurementRecord rec;
    const int K = 6, R = 10;
    rec.repetitions = R;
    rec.t_ns.resize(K);
    rec.x.resize(K * R);
    for (int k = 0; k < K; ++k) {
      rec.t_ns[k] = k;
      const double sigma = (k % 2 == 0) ? 0.01 : 1.0;
      for (int r = 0; r < R; ++r) {
        SplitStream rng(42, k, r);
        rec.x[static_cast<std::size_t>(k) * R + r] = sigma * rng.next_normal();
      }
    }
    CHECK(brown_forsythe(rec).p_value < 1e-4);

    CHECK_THROWS_WITH_AS(brown_forsythe(constant_record(4, 5, 0.3)),
                         "Brown-Forsythe statistic degenerate: no within-group spread",
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(brown_forsythe(constant_record(1, 5, 0.3)),
                         "test needs K >= 2 groups of R >= 2", std::invalid_argument);
  }

  TEST_CASE("sampling variances follow the chi-square law when noise is honest") {
    const std::vector<double> signal(400, 0.3);
    const MeasurementRecord good = gaussian_record(400, 10, signal, 0.07, 271);
    const ChiSquareCheck ok = chi_square_variance_check(good);
    CHECK_FALSE(ok.degenerate);
    CHECK(ok.ks_distance < 0.1);

    // Same table with every second time point five times noisier: the pooled
    // scale fits neither half.
    MeasurementRecord mixed = good;
    for (int k = 0; k < 400; k += 2) {
      for (int r = 0; r < 10; ++r) {
        SplitStream rng(999, k, r);
        mixed.x[static_cast<std::size_t>(k) * 10 + r] += 0.35 * rng.next_normal();
      }
    }
    CHECK(chi_square_variance_check(mixed).ks_distance > 0.25);

    const ChiSquareCheck degen = chi_square_variance_check(constant_record(10, 5, 0.2));
    CHECK(degen.degenerate);
    CHECK(degen.ks_distance == 0.0);
  }
}
