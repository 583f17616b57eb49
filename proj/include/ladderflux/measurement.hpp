#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ladderflux/operators.hpp"
#include "ladderflux/rng.hpp"

namespace ladderflux {

// Finite-statistics plan for the two-basis current estimator. analytic = true
// short-circuits sampling and returns exact expectation values (the
// infinite-shot limit).
struct ShotPlan {
  std::uint64_t shots_per_rep = 6000;
  int repetitions = 10;
  bool analytic = false;
  std::uint64_t seed = 0;
};

// K x R table of current estimates, row-major by time point.
struct MeasurementRecord {
  std::vector<double> t_ns;  // K sample times
  int repetitions = 0;       // R
  std::vector<double> x;     // K * R values in 1/us, x[k*R + r]

  int n_times() const { return static_cast<int>(t_ns.size()); }
  double at(int k, int r) const { return x[static_cast<std::size_t>(k) * repetitions + r]; }
  std::vector<double> rep_means() const;  // per-time mean over repetitions
};

// One finite-shot estimate of the bridge current from the bridge-pair state:
// the pair is measured jointly in the XY and YX Pauli bases, shots_per_basis
// outcomes each, and the two empirical correlators are combined as
// -(gamma_ang/2) (<XY> - <YX>) * 1000. Qubit pairs only (local_dim 2).
double sample_current_estimate(const TwoSiteDensity& rho2, double gamma_mhz,
                               std::uint64_t shots_per_basis, SplitStream& rng);

// Exact joint outcome distribution of one Pauli-product basis measurement;
// index (s_i, s_j) with 0 = +1, 1 = -1: p[2*s_i + s_j].
enum class PairBasis { XY, YX };
std::array<double, 4> pair_outcome_distribution(const TwoSiteDensity& rho2, PairBasis basis);

// Emulated record over a trajectory: one SplitStream keyed (seed, k, r) per
// cell, so any cell can be regenerated independently.
MeasurementRecord build_measurement_record(const LatticeSpec& spec, const SectorBasis& basis,
                                           const std::vector<std::vector<cplx>>& states,
                                           const std::vector<double>& t_ns,
                                           const ShotPlan& plan);

// Same, but starting from precomputed bridge-pair density matrices.
MeasurementRecord build_measurement_record(const std::vector<TwoSiteDensity>& pair_states,
                                           const std::vector<double>& t_ns, double gamma_mhz,
                                           const ShotPlan& plan);

// CSV with header "t_ns,rep_0,...,rep_{R-1}", full round-trip precision.
void write_record_csv(const MeasurementRecord& rec, const std::string& path);
MeasurementRecord read_record_csv(const std::string& path);

}  // namespace ladderflux
