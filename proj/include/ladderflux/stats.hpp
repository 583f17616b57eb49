#pragma once

#include <vector>

#include "ladderflux/measurement.hpp"

namespace ladderflux {

// Temporal fluctuation of a sampled series: the (K-1)-normalized variance
// (1/(K-1)) x^T M x with M the mean-subtracting projector. Units us^-2.
double temporal_fluctuation(const std::vector<double>& series);

struct EstimatorReport {
  double sigma_t2_naive = 0.0;       // fluctuation of the per-time means
  double sigma_t2_mitigated = 0.0;   // naive minus the finite-shot bias estimate
  std::vector<double> sampling_variances;  // per-time Sigma_kk over repetitions
  double mean_sampling_variance = 0.0;     // their mean
  double standard_error = 0.0;             // error-propagation SE of the naive value
  int K = 0;
  int R = 0;
};

// Computes everything the record supports: the naive estimator, the
// error-mitigated estimator (naive minus mean_sampling_variance / R, an
// unbiased value that may legitimately be negative), per-time sampling
// variances, and the propagated standard error
//   SE = sqrt(2)/(K-1) * sqrt( (2/R) sum_k S_kk (m_k - mbar)^2
//                             + (KR)^-2 (sum_k S_kk)^2
//                             + (K-2)/(K R^2) sum_k S_kk^2 ).
// Requires R >= 2 (sampling variances need a spread).
EstimatorReport estimator_report(const MeasurementRecord& rec);

struct SpectrumReport {
  std::vector<double> frequency_mhz;  // w_n/2pi for n = 0..ceil(K/2)
  std::vector<double> psd;            // S(w_n) = |DFT|^2 / K, us^-2
  int K = 0;
  double dt_ns = 0.0;
};

// Periodogram S(w_n) = (1/K) |sum_k x_k exp(-i w_n k dt)|^2 at the Fourier
// frequencies w_n = 2 pi n / (K dt), reported up to n = ceil(K/2).
SpectrumReport power_spectrum(const std::vector<double>& series, double dt_ns);

// (2/K) * sum_{n>=1} S(w_n): the spectral estimate of the series' population
// variance (exact for odd K short of the reported-range duplication; see
// tests for the precise identity).
double spectrum_fluctuation_sum(const SpectrumReport& spec);

struct VarianceTestResult {
  double statistic = 0.0;  // Brown-Forsythe F
  int dof1 = 0, dof2 = 0;
  double p_value = 0.0;
};

// Brown-Forsythe test (median-centered Levene) of variance homogeneity across
// the record's time points. Throws if every group has zero spread.
VarianceTestResult brown_forsythe(const MeasurementRecord& rec);

struct ChiSquareCheck {
  double ks_distance = 0.0;
  bool degenerate = false;  // all sampling variances zero (noise-free record)
};

// Kolmogorov-Smirnov distance between the empirical distribution of the
// per-time sampling variances and the scaled chi-square_{R-1} law they should
// follow under Gaussian homoscedastic noise.
ChiSquareCheck chi_square_variance_check(const MeasurementRecord& rec);

}  // namespace ladderflux
