#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "ladderflux/propagation.hpp"

namespace ladderflux {

// All bath-A Fock configurations (bath B empty) at filling num/den, expressed
// as full-lattice configs in bath-A sector enumeration order. Throws if the
// filling is not realizable as an integer particle count.
std::vector<std::uint64_t> bath_a_fock_configs(const LatticeSpec& spec, long long fill_num,
                                               long long fill_den);

int bath_a_particle_count(const LatticeSpec& spec, long long fill_num, long long fill_den);

// Draws `count` distinct entries of `pool` (seeded partial Fisher-Yates).
// Throws if count exceeds the pool size.
std::vector<std::uint64_t> sample_distinct(const std::vector<std::uint64_t>& pool, int count,
                                           std::uint64_t seed);

struct EnsembleMode {
  int max_exhaustive = 10000;  // full average while the sector fits
  int sample_count = 1000;     // Monte-Carlo size beyond that
  std::uint64_t seed = 0;
};

struct EnsembleResult {
  std::map<std::string, TimeSeries> series;  // state-averaged observables
  std::uint64_t sector_size = 0;             // bath-A sector size
  int states_used = 0;
  bool exhaustive = true;
};

// Uniform average of evolve_pure observables over the bath-A Fock sector:
// the dynamics of the maximally mixed bath-A sector state with bath B empty.
// Accumulation order is the enumeration order regardless of threading.
EnsembleResult ensemble_average(const LatticeSpec& spec, long long fill_num, long long fill_den,
                                const TimeGrid& grid, const ObservableRequest& req,
                                const EnsembleMode& mode);

// Mean of a series over the closed time window [w0, w1] (ns).
double steady_value(const TimeSeries& series, double w0_ns, double w1_ns);

// Weak-link transport obeys I(gamma) = I0 (gamma/gamma0)^2 in the
// quadratic-response regime.
double scale_prediction(double i0, double gamma_mhz, double gamma0_mhz);

// Linear-growth model for the bath-B population: N_B(t) = (I0 (g/g0)^2 + Ix) t.
double predict_population(double i0, double ix, double gamma_mhz, double gamma0_mhz,
                          double t_us);

struct EnsemblePrediction {
  double i0 = 0.0;         // ensemble bridge current at gamma0, window mean (1/us)
  double ix = 0.0;         // residual cross-channel current at gamma = 0 (1/us)
  double gamma0_mhz = 0.5;
  double window_start_ns = 60.0;
  double window_end_ns = 150.0;
  std::uint64_t sector_size = 0;
  int states_used = 0;

  nlohmann::json to_json() const;
};

// Calibrates (I0, Ix) from two ensemble runs: the bridge current with the
// weak link at gamma0, and the total cut current with the weak link removed.
EnsemblePrediction calibrate_prediction(const LatticeSpec& spec, long long fill_num,
                                        long long fill_den, double gamma0_mhz,
                                        const TimeGrid& grid, double window_start_ns,
                                        double window_end_ns, const EnsembleMode& mode);

}  // namespace ladderflux
