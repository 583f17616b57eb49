#include "ladderflux/propagation.hpp"

#include <cmath>
#include <stdexcept>

#include "ladderflux/kernels.hpp"
#include "ladderflux/units.hpp"

namespace ladderflux {

namespace {

bool divides(double small, double big, double rel_tol = 1e-9) {
  if (small <= 0 || big <= 0) return false;
  const double q = big / small;
  return std::abs(q - std::round(q)) <= rel_tol * std::max(1.0, q);
}

}  // namespace

TimeGrid::TimeGrid(double t0, double t1, double dt, double sample_dt)
    : t_start_ns(t0), t_end_ns(t1), dt_ns(dt), sample_dt_ns(sample_dt) {
  if (!(t1 > t0)) throw std::invalid_argument("time grid must have t_end > t_start");
  if (!(dt > 0) || !(sample_dt > 0)) throw std::invalid_argument("time steps must be positive");
  if (!divides(dt, sample_dt)) {
    throw std::invalid_argument("integrator step must divide the sample step");
  }
  if (!divides(sample_dt, t1 - t0)) {
    throw std::invalid_argument("sample step must divide the time span");
  }
  steps_per_sample_ = static_cast<int>(std::llround(sample_dt / dt));
  n_samples_ = static_cast<int>(std::llround((t1 - t0) / sample_dt)) + 1;
}

void evolve_rk4(const SparseOperator& h, std::vector<cplx>& psi, const TimeGrid& grid,
                const std::function<void(int, double, const std::vector<cplx>&)>& on_sample) {
  if (static_cast<std::int64_t>(psi.size()) != h.dim) {
    throw std::invalid_argument("state dimension does not match operator");
  }
  const std::int64_t d = h.dim;
  const int spp = grid.steps_per_sample();
  const double step = grid.sample_dt_ns / spp;  // exact per-segment step
  std::vector<cplx> k1(d), k2(d), k3(d), k4(d), stage(d);
  const cplx mi{0, -1};

  if (on_sample) on_sample(0, grid.sample_time(0), psi);
  for (int seg = 1; seg < grid.n_samples(); ++seg) {
    for (int s = 0; s < spp; ++s) {
      kernels::spmv(h, psi.data(), k1.data());
      for (std::int64_t i = 0; i < d; ++i) {
        k1[i] *= mi;
        stage[i] = psi[i] + 0.5 * step * k1[i];
      }
      kernels::spmv(h, stage.data(), k2.data());
      for (std::int64_t i = 0; i < d; ++i) {
        k2[i] *= mi;
        stage[i] = psi[i] + 0.5 * step * k2[i];
      }
      kernels::spmv(h, stage.data(), k3.data());
      for (std::int64_t i = 0; i < d; ++i) {
        k3[i] *= mi;
        stage[i] = psi[i] + step * k3[i];
      }
      kernels::spmv(h, stage.data(), k4.data());
      const double w = step / 6.0;
      for (std::int64_t i = 0; i < d; ++i) {
        k4[i] *= mi;
        psi[i] += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      }
    }
    if (on_sample) on_sample(seg, grid.sample_time(seg), psi);
  }
}

namespace {

void record_observables(const System& sys, const ObservableRequest& req, double t,
                        const std::vector<cplx>& amps,
                        std::map<std::string, TimeSeries>& series) {
  const auto put = [&](const std::string& name, double v) {
    TimeSeries& s = series[name];
    if (s.name.empty()) s.name = name;
    s.t_ns.push_back(t);
    s.v.push_back(v);
  };
  if (req.current) put("current", current_expectation(sys.spec, *sys.basis, amps, req.form));
  if (req.cut_current) {
    put("cut_current", cut_current_expectation(sys.spec, *sys.basis, amps));
  }
  if (req.energy) put("energy", energy_expectation(sys.h, amps));
  if (req.populations) {
    put("pop_a", bath_population(*sys.basis, amps, sys.spec.bath_a));
    put("pop_b", bath_population(*sys.basis, amps, sys.spec.bath_b));
  }
  if (req.occupations) {
    const std::vector<double> occ = site_occupations(*sys.basis, amps);
    for (int i = 0; i < sys.spec.n_sites; ++i) put("occ_" + std::to_string(i), occ[i]);
  }
}

}  // namespace

EvolutionResult evolve_pure(const System& sys, const StateVector& psi0, const TimeGrid& grid,
                            const ObservableRequest& req) {
  EvolutionResult out;
  out.final_state.basis = psi0.basis;
  std::vector<cplx> psi = psi0.amps;
  evolve_rk4(sys.h, psi, grid, [&](int, double t, const std::vector<cplx>& cur) {
    record_observables(sys, req, t, cur, out.series);
    double n2 = 0;
    for (const cplx& a : cur) n2 += std::norm(a);
    out.max_norm_err = std::max(out.max_norm_err, std::abs(std::sqrt(n2) - 1.0));
  });
  out.final_state.amps = std::move(psi);
  return out;
}

std::vector<std::vector<cplx>> evolve_states(const SparseOperator& h, const StateVector& psi0,
                                             const TimeGrid& grid) {
  std::vector<std::vector<cplx>> snaps;
  snaps.reserve(grid.n_samples());
  std::vector<cplx> psi = psi0.amps;
  evolve_rk4(h, psi, grid,
             [&](int, double, const std::vector<cplx>& cur) { snaps.push_back(cur); });
  return snaps;
}

ExactPropagator::ExactPropagator(const SparseOperator& h) {
  if (h.dim > 4000) {
    throw std::invalid_argument("dense propagator limited to dim <= 4000");
  }
  Eigen::MatrixXcd dense = Eigen::MatrixXcd::Zero(h.dim, h.dim);
  for (std::int64_t r = 0; r < h.dim; ++r) {
    for (std::int64_t k = h.row_ptr[r]; k < h.row_ptr[r + 1]; ++k) {
      dense(r, h.col[k]) = h.val[k];
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  vectors_ = es.eigenvectors();
  values_ = es.eigenvalues();
}

std::vector<cplx> ExactPropagator::at(const std::vector<cplx>& psi0, double t_ns) const {
  const std::int64_t d = values_.size();
  if (static_cast<std::int64_t>(psi0.size()) != d) {
    throw std::invalid_argument("state dimension does not match propagator");
  }
  Eigen::Map<const Eigen::VectorXcd> v0(psi0.data(), d);
  Eigen::VectorXcd modes = vectors_.adjoint() * v0;
  for (std::int64_t m = 0; m < d; ++m) {
    modes[m] *= std::polar(1.0, -values_[m] * t_ns);
  }
  Eigen::VectorXcd vt = vectors_ * modes;
  return std::vector<cplx>(vt.data(), vt.data() + d);
}

std::vector<cplx> evolve_exact(const SparseOperator& h, const std::vector<cplx>& psi0,
                               double t_ns) {
  return ExactPropagator(h).at(psi0, t_ns);
}

double DensityMatrix::trace_error() const {
  cplx tr{0, 0};
  for (std::int64_t i = 0; i < dim; ++i) tr += at(i, i);
  return std::abs(tr - cplx{1, 0});
}

double DensityMatrix::hermiticity_error() const {
  double worst = 0;
  for (std::int64_t c = 0; c < dim; ++c) {
    for (std::int64_t r = 0; r <= c; ++r) {
      worst = std::max(worst, std::abs(at(r, c) - std::conj(at(c, r))));
    }
  }
  return worst;
}

double DensityMatrix::min_eigenvalue() const {
  if (dim > 512) throw std::invalid_argument("eigenvalue check limited to dim <= 512");
  Eigen::MatrixXcd m(dim, dim);
  for (std::int64_t c = 0; c < dim; ++c) {
    for (std::int64_t r = 0; r < dim; ++r) m(r, c) = at(r, c);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

DensityMatrix pure_density(const StateVector& psi) {
  DensityMatrix rho;
  rho.basis = psi.basis;
  rho.dim = static_cast<std::int64_t>(psi.amps.size());
  rho.rho.assign(rho.dim * rho.dim, cplx{0, 0});
  for (std::int64_t c = 0; c < rho.dim; ++c) {
    const cplx w = std::conj(psi.amps[c]);
    for (std::int64_t r = 0; r < rho.dim; ++r) rho.rho[c * rho.dim + r] = psi.amps[r] * w;
  }
  return rho;
}

DensityMatrix mixed_density(std::shared_ptr<const SectorBasis> basis,
                            const std::vector<std::pair<std::uint64_t, double>>& configs_weights) {
  DensityMatrix rho;
  rho.dim = static_cast<std::int64_t>(basis->dimension());
  rho.rho.assign(rho.dim * rho.dim, cplx{0, 0});
  double total = 0;
  for (const auto& [cfg, w] : configs_weights) {
    if (w < 0) throw std::invalid_argument("mixture weights must be >= 0");
    const std::int64_t r = static_cast<std::int64_t>(basis->rank(cfg));
    rho.rho[r * rho.dim + r] += w;
    total += w;
  }
  if (total <= 0) throw std::invalid_argument("mixture weights must sum to > 0");
  for (cplx& x : rho.rho) x /= total;
  rho.basis = std::move(basis);
  return rho;
}

namespace {

void record_density_observables(const System& sys, const ObservableRequest& req, double t,
                                const DensityMatrix& rho,
                                std::map<std::string, TimeSeries>& series) {
  const auto put = [&](const std::string& name, double v) {
    TimeSeries& s = series[name];
    if (s.name.empty()) s.name = name;
    s.t_ns.push_back(t);
    s.v.push_back(v);
  };
  const SectorBasis& basis = *sys.basis;
  const std::int64_t d = rho.dim;
  const int top = basis.local_dim() - 1;

  // tr(rho a+_i a_j), needed for current observables.
  const auto hop_trace = [&](int site_i, int site_j) {
    cplx z{0, 0};
    for (std::int64_t s = 0; s < d; ++s) {
      const std::uint64_t cfg = basis.configs()[s];
      const int ni = basis.occ(cfg, site_i), nj = basis.occ(cfg, site_j);
      if (nj < 1 || ni >= top) continue;
      const std::uint64_t to_cfg =
          basis.with_occ(basis.with_occ(cfg, site_i, ni + 1), site_j, nj - 1);
      const std::int64_t to = static_cast<std::int64_t>(basis.rank(to_cfg));
      z += rho.at(s, to) * std::sqrt(double(nj) * double(ni + 1));
    }
    return z;
  };

  if (req.current) {
    const cplx z = hop_trace(sys.spec.bridge_a, sys.spec.bridge_b);
    put("current", -2.0 * rad_per_ns(sys.spec.bridge_f_mhz()) * z.imag() * kPerNsToPerUs);
  }
  if (req.cut_current) {
    double total = 0;
    for (const Edge& e : cut_crossing_edges(sys.spec)) {
      const int ia = sys.spec.in_bath_a(e.a) ? e.a : e.b;
      const int ib = sys.spec.in_bath_a(e.a) ? e.b : e.a;
      total += -2.0 * rad_per_ns(e.f_mhz) * hop_trace(ia, ib).imag() * kPerNsToPerUs;
    }
    put("cut_current", total);
  }
  if (req.energy) {
    cplx e{0, 0};
    for (std::int64_t r = 0; r < d; ++r) {
      for (std::int64_t k = sys.h.row_ptr[r]; k < sys.h.row_ptr[r + 1]; ++k) {
        e += sys.h.val[k] * rho.at(sys.h.col[k], r);
      }
    }
    put("energy", e.real());
  }
  if (req.populations || req.occupations) {
    std::vector<double> occ(sys.spec.n_sites, 0.0);
    for (std::int64_t s = 0; s < d; ++s) {
      const double w = rho.at(s, s).real();
      for (int i = 0; i < sys.spec.n_sites; ++i) {
        occ[i] += w * basis.occ(basis.configs()[s], i);
      }
    }
    if (req.populations) {
      double pa = 0, pb = 0;
      for (int s : sys.spec.bath_a) pa += occ[s];
      for (int s : sys.spec.bath_b) pb += occ[s];
      put("pop_a", pa);
      put("pop_b", pb);
    }
    if (req.occupations) {
      for (int i = 0; i < sys.spec.n_sites; ++i) put("occ_" + std::to_string(i), occ[i]);
    }
  }
}

}  // namespace

LindbladResult evolve_lindblad(const System& sys, const DensityMatrix& rho0,
                               const NoiseSpec& noise, const TimeGrid& grid,
                               const ObservableRequest& req) {
  const std::int64_t d = rho0.dim;
  if (d != sys.h.dim) throw std::invalid_argument("density matrix does not match operator");
  if (d > 4096) throw std::invalid_argument("density-matrix propagation limited to dim <= 4096");
  if (!(noise.t2_us > 0)) throw std::invalid_argument("T2 must be positive");
  if (!std::isinf(noise.t1_us)) {
    throw std::invalid_argument("amplitude damping is not modeled; t1_us must be infinite");
  }

  // Pure dephasing acts elementwise in the occupation basis:
  // d rho_ab/dt += -(1/T2) sum_j (n_j(a)-n_j(b))^2 rho_ab.
  std::vector<double> decay;
  const bool dephase = std::isfinite(noise.t2_us);
  if (dephase) {
    const double rate = 1.0 / (noise.t2_us * 1000.0);  // 1/ns
    const SectorBasis& basis = *sys.basis;
    decay.resize(d * d);
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < d; ++b) {
      const std::uint64_t cb = basis.configs()[b];
      for (std::int64_t a = 0; a < d; ++a) {
        const std::uint64_t ca = basis.configs()[a];
        int s = 0;
        for (int j = 0; j < basis.n_sites(); ++j) {
          const int dn = basis.occ(ca, j) - basis.occ(cb, j);
          s += dn * dn;
        }
        decay[b * d + a] = rate * s;
      }
    }
  }
  const double* decay_ptr = dephase ? decay.data() : nullptr;

  LindbladResult out;
  out.final_state.basis = rho0.basis;
  out.final_state.dim = d;
  std::vector<cplx> rho = rho0.rho;
  const std::int64_t nn = d * d;
  std::vector<cplx> k1(nn), k2(nn), k3(nn), k4(nn), stage(nn);
  const int spp = grid.steps_per_sample();
  const double step = grid.sample_dt_ns / spp;

  const auto sample = [&](double t) {
    DensityMatrix view;
    view.basis = rho0.basis;
    view.dim = d;
    view.rho = rho;  // copy keeps the observable code simple; desk-scale dims
    record_density_observables(sys, req, t, view, out.series);
    out.max_trace_err = std::max(out.max_trace_err, view.trace_error());
    out.max_hermiticity_err = std::max(out.max_hermiticity_err, view.hermiticity_error());
  };

  sample(grid.sample_time(0));
  for (int seg = 1; seg < grid.n_samples(); ++seg) {
    for (int s = 0; s < spp; ++s) {
      kernels::lindblad_rhs(sys.h, decay_ptr, rho.data(), k1.data());
      for (std::int64_t i = 0; i < nn; ++i) stage[i] = rho[i] + 0.5 * step * k1[i];
      kernels::lindblad_rhs(sys.h, decay_ptr, stage.data(), k2.data());
      for (std::int64_t i = 0; i < nn; ++i) stage[i] = rho[i] + 0.5 * step * k2[i];
      kernels::lindblad_rhs(sys.h, decay_ptr, stage.data(), k3.data());
      for (std::int64_t i = 0; i < nn; ++i) stage[i] = rho[i] + step * k3[i];
      kernels::lindblad_rhs(sys.h, decay_ptr, stage.data(), k4.data());
      const double w = step / 6.0;
      for (std::int64_t i = 0; i < nn; ++i) {
        rho[i] += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      }
    }
    sample(grid.sample_time(seg));
  }
  out.final_state.rho = std::move(rho);
  return out;
}

}  // namespace ladderflux
