#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "ladderflux/operators.hpp"

namespace ladderflux {

// Uniform integration grid. The integrator step must divide the sample step,
// and the sample step must divide the full span (checked to relative 1e-9).
struct TimeGrid {
  double t_start_ns = 0.0;
  double t_end_ns = 0.0;
  double dt_ns = 0.1;
  double sample_dt_ns = 1.0;

  TimeGrid() = default;
  TimeGrid(double t0, double t1, double dt, double sample_dt);

  int n_samples() const { return n_samples_; }       // includes t_start
  int steps_per_sample() const { return steps_per_sample_; }
  double sample_time(int k) const { return t_start_ns + k * sample_dt_ns; }

 private:
  int n_samples_ = 1;
  int steps_per_sample_ = 1;
};

struct NoiseSpec {
  double t2_us = std::numeric_limits<double>::infinity();  // pure dephasing time
  double t1_us = std::numeric_limits<double>::infinity();  // fixed: no amplitude damping
};

struct TimeSeries {
  std::string name;
  std::vector<double> t_ns;
  std::vector<double> v;
};

struct ObservableRequest {
  bool current = true;
  bool cut_current = false;
  bool energy = true;
  bool populations = true;
  bool occupations = false;
  CurrentForm form = CurrentForm::Bosonic;
};

struct EvolutionResult {
  std::map<std::string, TimeSeries> series;
  StateVector final_state;
  double max_norm_err = 0.0;  // max |  ||psi|| - 1  | over sample points
};

// Fixed-step 4th-order Runge-Kutta on d psi/dt = -i H psi. No renormalization
// is ever applied; norm drift is reported as a diagnostic. on_sample fires at
// every sample point including t_start.
void evolve_rk4(const SparseOperator& h, std::vector<cplx>& psi, const TimeGrid& grid,
                const std::function<void(int, double, const std::vector<cplx>&)>& on_sample);

EvolutionResult evolve_pure(const System& sys, const StateVector& psi0, const TimeGrid& grid,
                            const ObservableRequest& req = {});

// Snapshots of the RK4 trajectory at the grid's sample points.
std::vector<std::vector<cplx>> evolve_states(const SparseOperator& h, const StateVector& psi0,
                                             const TimeGrid& grid);

// Dense eigendecomposition propagator, exact up to diagonalization error.
// Intended as the reference route for validating RK4; dim must be <= 4000.
class ExactPropagator {
 public:
  explicit ExactPropagator(const SparseOperator& h);
  std::vector<cplx> at(const std::vector<cplx>& psi0, double t_ns) const;

 private:
  Eigen::MatrixXcd vectors_;
  Eigen::VectorXd values_;
};

std::vector<cplx> evolve_exact(const SparseOperator& h, const std::vector<cplx>& psi0,
                               double t_ns);

// Sector density matrix, column-major dim x dim.
struct DensityMatrix {
  std::shared_ptr<const SectorBasis> basis;
  std::int64_t dim = 0;
  std::vector<cplx> rho;

  cplx at(std::int64_t r, std::int64_t c) const { return rho[c * dim + r]; }
  double trace_error() const;
  double hermiticity_error() const;
  double min_eigenvalue() const;  // dim <= 512 only
};

DensityMatrix pure_density(const StateVector& psi);
DensityMatrix mixed_density(std::shared_ptr<const SectorBasis> basis,
                            const std::vector<std::pair<std::uint64_t, double>>& configs_weights);

struct LindbladResult {
  std::map<std::string, TimeSeries> series;
  DensityMatrix final_state;
  double max_trace_err = 0.0;
  double max_hermiticity_err = 0.0;
};

// RK4 on the master equation with pure-dephasing jump operators
// L_j = sqrt(2/T2) n_j. Requires dim <= 4096 (dense storage).
LindbladResult evolve_lindblad(const System& sys, const DensityMatrix& rho0,
                               const NoiseSpec& noise, const TimeGrid& grid,
                               const ObservableRequest& req = {});

}  // namespace ladderflux
