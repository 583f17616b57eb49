#include "ladderflux/stats.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "ladderflux/special.hpp"
#include "ladderflux/units.hpp"

namespace ladderflux {

double temporal_fluctuation(const std::vector<double>& series) {
  const std::size_t k = series.size();
  if (k < 2) throw std::invalid_argument("fluctuation needs at least two samples");
  double mean = 0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(k);
  double ss = 0;
  for (double v : series) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(k - 1);
}

EstimatorReport estimator_report(const MeasurementRecord& rec) {
  const int K = rec.n_times();
  const int R = rec.repetitions;
  if (K < 2) throw std::invalid_argument("record needs at least two time points");
  if (R < 2) throw std::invalid_argument("record needs at least two repetitions");

  EstimatorReport rep;
  rep.K = K;
  rep.R = R;
  const std::vector<double> means = rec.rep_means();
  rep.sigma_t2_naive = temporal_fluctuation(means);

  rep.sampling_variances.resize(K);
  double sum_s = 0, sum_s2 = 0;
  for (int k = 0; k < K; ++k) {
    double ss = 0;
    for (int r = 0; r < R; ++r) {
      const double d = rec.at(k, r) - means[k];
      ss += d * d;
    }
    const double skk = ss / (R - 1);
    rep.sampling_variances[k] = skk;
    sum_s += skk;
    sum_s2 += skk * skk;
  }
  rep.mean_sampling_variance = sum_s / K;
  // The naive estimator's finite-shot bias is mean sampling variance / R;
  // subtracting its unbiased estimate can push the result below zero, which
  // is reported as-is.
  rep.sigma_t2_mitigated = rep.sigma_t2_naive - rep.mean_sampling_variance / R;

  double grand = 0;
  for (double m : means) grand += m;
  grand /= K;
  double weighted = 0;
  for (int k = 0; k < K; ++k) {
    weighted += rep.sampling_variances[k] * (means[k] - grand) * (means[k] - grand);
  }
  const double kr = static_cast<double>(K) * R;
  const double inside = (2.0 / R) * weighted + (sum_s * sum_s) / (kr * kr) +
                        (double(K - 2) / (double(K) * R * R)) * sum_s2;
  rep.standard_error = (std::sqrt(2.0) / (K - 1)) * std::sqrt(std::max(0.0, inside));
  return rep;
}

SpectrumReport power_spectrum(const std::vector<double>& series, double dt_ns) {
  const int K = static_cast<int>(series.size());
  if (K < 2) throw std::invalid_argument("spectrum needs at least two samples");
  if (!(dt_ns > 0)) throw std::invalid_argument("sample spacing must be positive");
  SpectrumReport out;
  out.K = K;
  out.dt_ns = dt_ns;
  const int n_max = (K + 1) / 2;  // ceil(K/2)
  out.frequency_mhz.resize(n_max + 1);
  out.psd.resize(n_max + 1);
  for (int n = 0; n <= n_max; ++n) {
    // Direct evaluation of the defining sum; K is always small here.
    std::complex<double> acc{0, 0};
    const double w = 2.0 * kPi * n / K;
    for (int k = 0; k < K; ++k) {
      acc += series[k] * std::polar(1.0, -w * k);
    }
    out.psd[n] = std::norm(acc) / K;
    out.frequency_mhz[n] = 1e3 * n / (K * dt_ns);  // cycles/ns -> MHz
  }
  return out;
}

double spectrum_fluctuation_sum(const SpectrumReport& spec) {
  double s = 0;
  for (std::size_t n = 1; n < spec.psd.size(); ++n) s += spec.psd[n];
  return 2.0 * s / spec.K;
}

VarianceTestResult brown_forsythe(const MeasurementRecord& rec) {
  const int K = rec.n_times();
  const int R = rec.repetitions;
  if (K < 2 || R < 2) throw std::invalid_argument("test needs K >= 2 groups of R >= 2");
  const int N = K * R;

  // z_{kr} = |x_{kr} - median_k|
  std::vector<double> z(static_cast<std::size_t>(K) * R);
  std::vector<double> group(R);
  for (int k = 0; k < K; ++k) {
    for (int r = 0; r < R; ++r) group[r] = rec.at(k, r);
    std::sort(group.begin(), group.end());
    const double med = (R % 2 == 1) ? group[R / 2] : 0.5 * (group[R / 2 - 1] + group[R / 2]);
    for (int r = 0; r < R; ++r) {
      z[static_cast<std::size_t>(k) * R + r] = std::abs(rec.at(k, r) - med);
    }
  }
  double zbar = 0;
  for (double v : z) zbar += v;
  zbar /= N;
  double between = 0, within = 0;
  for (int k = 0; k < K; ++k) {
    double zk = 0;
    for (int r = 0; r < R; ++r) zk += z[static_cast<std::size_t>(k) * R + r];
    zk /= R;
    between += R * (zk - zbar) * (zk - zbar);
    for (int r = 0; r < R; ++r) {
      const double d = z[static_cast<std::size_t>(k) * R + r] - zk;
      within += d * d;
    }
  }
  if (within == 0.0) {
    throw std::invalid_argument("Brown-Forsythe statistic degenerate: no within-group spread");
  }
  VarianceTestResult res;
  res.dof1 = K - 1;
  res.dof2 = N - K;
  res.statistic = (between / res.dof1) / (within / res.dof2);
  res.p_value = 1.0 - f_cdf(res.statistic, res.dof1, res.dof2);
  return res;
}

ChiSquareCheck chi_square_variance_check(const MeasurementRecord& rec) {
  const EstimatorReport rep = estimator_report(rec);
  ChiSquareCheck out;
  if (rep.mean_sampling_variance <= 0.0) {
    out.degenerate = true;
    return out;
  }
  // Under homoscedastic Gaussian noise, (R-1) S_kk / sigma^2 ~ chi2_{R-1};
  // sigma^2 is estimated by the mean sampling variance.
  std::vector<double> s = rep.sampling_variances;
  std::sort(s.begin(), s.end());
  const int K = rep.K;
  const double scale = (rep.R - 1) / rep.mean_sampling_variance;
  double worst = 0;
  for (int i = 0; i < K; ++i) {
    const double cdf = chi2_cdf(s[i] * scale, rep.R - 1);
    worst = std::max(worst, std::abs(cdf - double(i + 1) / K));
    worst = std::max(worst, std::abs(cdf - double(i) / K));
  }
  out.ks_distance = worst;
  return out;
}

}  // namespace ladderflux
