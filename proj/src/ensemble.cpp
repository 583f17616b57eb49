#include "ladderflux/ensemble.hpp"

#include <numeric>
#include <stdexcept>

#include "ladderflux/rng.hpp"

namespace ladderflux {

int bath_a_particle_count(const LatticeSpec& spec, long long fill_num, long long fill_den) {
  if (fill_den <= 0 || fill_num < 0 || fill_num > fill_den) {
    throw std::invalid_argument("filling must be a rational in [0, 1]");
  }
  const long long sites = static_cast<long long>(spec.bath_a.size());
  if ((sites * fill_num) % fill_den != 0) {
    throw std::invalid_argument("filling " + std::to_string(fill_num) + "/" +
                                std::to_string(fill_den) + " is not an integer count on " +
                                std::to_string(sites) + " bath-A sites");
  }
  return static_cast<int>(sites * fill_num / fill_den);
}

std::vector<std::uint64_t> bath_a_fock_configs(const LatticeSpec& spec, long long fill_num,
                                               long long fill_den) {
  const int n_a = bath_a_particle_count(spec, fill_num, fill_den);
  // Hard-core bath-A patterns even when local_dim = 3: initial Fock states
  // never start with doubly occupied sites.
  SectorBasis local(static_cast<int>(spec.bath_a.size()), 2, n_a);
  SectorBasis full(spec.n_sites, spec.local_dim, n_a);
  std::vector<std::uint64_t> out;
  out.reserve(local.dimension());
  for (std::uint64_t idx = 0; idx < local.dimension(); ++idx) {
    const std::uint64_t pattern = local.config(idx);
    std::uint64_t cfg = 0;
    for (std::size_t i = 0; i < spec.bath_a.size(); ++i) {
      if (local.occ(pattern, static_cast<int>(i))) {
        cfg = full.with_occ(cfg, spec.bath_a[i], 1);
      }
    }
    out.push_back(cfg);
  }
  return out;
}

std::vector<std::uint64_t> sample_distinct(const std::vector<std::uint64_t>& pool, int count,
                                           std::uint64_t seed) {
  const std::size_t n = pool.size();
  if (count < 0 || static_cast<std::size_t>(count) > n) {
    throw std::invalid_argument("requested " + std::to_string(count) +
                                " distinct states from a sector of " + std::to_string(n));
  }
  std::vector<std::uint64_t> work = pool;
  SplitStream rng(seed, 0x73616d706c65ull, 0);  // fixed purpose tag
  std::vector<std::uint64_t> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const std::uint64_t j = i + rng.next_below(n - i);
    std::swap(work[i], work[j]);
    out.push_back(work[i]);
  }
  return out;
}

EnsembleResult ensemble_average(const LatticeSpec& spec, long long fill_num, long long fill_den,
                                const TimeGrid& grid, const ObservableRequest& req,
                                const EnsembleMode& mode) {
  const int n_a = bath_a_particle_count(spec, fill_num, fill_den);
  const std::vector<std::uint64_t> pool = bath_a_fock_configs(spec, fill_num, fill_den);

  EnsembleResult out;
  out.sector_size = pool.size();
  std::vector<std::uint64_t> initial;
  if (pool.size() <= static_cast<std::size_t>(mode.max_exhaustive) ||
      static_cast<std::size_t>(mode.sample_count) >= pool.size()) {
    initial = pool;
    out.exhaustive = true;
  } else {
    initial = sample_distinct(pool, mode.sample_count, mode.seed);
    out.exhaustive = false;
  }
  out.states_used = static_cast<int>(initial.size());

  const System sys = make_system(spec, n_a);
  const int m = static_cast<int>(initial.size());
  std::vector<std::map<std::string, TimeSeries>> per_state(m);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < m; ++i) {
    const StateVector psi0 = fock_state(sys.basis, initial[i]);
    per_state[i] = evolve_pure(sys, psi0, grid, req).series;
  }
  // Fixed-order reduction keeps the average bit-identical across thread counts.
  for (int i = 0; i < m; ++i) {
    for (auto& [name, s] : per_state[i]) {
      TimeSeries& acc = out.series[name];
      if (acc.t_ns.empty()) {
        acc = s;
      } else {
        for (std::size_t k = 0; k < s.v.size(); ++k) acc.v[k] += s.v[k];
      }
    }
  }
  for (auto& [name, s] : out.series) {
    for (double& v : s.v) v /= m;
  }
  return out;
}

double steady_value(const TimeSeries& series, double w0_ns, double w1_ns) {
  if (!(w1_ns >= w0_ns)) throw std::invalid_argument("window end before start");
  double sum = 0;
  int n = 0;
  for (std::size_t k = 0; k < series.t_ns.size(); ++k) {
    if (series.t_ns[k] >= w0_ns - 1e-9 && series.t_ns[k] <= w1_ns + 1e-9) {
      sum += series.v[k];
      ++n;
    }
  }
  if (n == 0) throw std::invalid_argument("no samples inside the averaging window");
  return sum / n;
}

double scale_prediction(double i0, double gamma_mhz, double gamma0_mhz) {
  if (gamma0_mhz == 0) throw std::invalid_argument("reference coupling must be nonzero");
  const double r = gamma_mhz / gamma0_mhz;
  return i0 * r * r;
}

double predict_population(double i0, double ix, double gamma_mhz, double gamma0_mhz,
                          double t_us) {
  return (scale_prediction(i0, gamma_mhz, gamma0_mhz) + ix) * t_us;
}

nlohmann::json EnsemblePrediction::to_json() const {
  return nlohmann::json{{"i0_per_us", i0},
                        {"ix_per_us", ix},
                        {"gamma0_mhz", gamma0_mhz},
                        {"window_start_ns", window_start_ns},
                        {"window_end_ns", window_end_ns},
                        {"sector_size", sector_size},
                        {"states_used", states_used}};
}

EnsemblePrediction calibrate_prediction(const LatticeSpec& spec, long long fill_num,
                                        long long fill_den, double gamma0_mhz,
                                        const TimeGrid& grid, double window_start_ns,
                                        double window_end_ns, const EnsembleMode& mode) {
  ObservableRequest req;
  req.current = true;
  req.cut_current = true;
  req.energy = false;
  req.populations = false;

  EnsemblePrediction pred;
  pred.gamma0_mhz = gamma0_mhz;
  pred.window_start_ns = window_start_ns;
  pred.window_end_ns = window_end_ns;

  const LatticeSpec at_gamma0 = apply_tuning(spec, TuningDirective::bridge(gamma0_mhz));
  const EnsembleResult base = ensemble_average(at_gamma0, fill_num, fill_den, grid, req, mode);
  pred.i0 = steady_value(base.series.at("current"), window_start_ns, window_end_ns);
  pred.sector_size = base.sector_size;
  pred.states_used = base.states_used;

  // With the weak link off, whatever still flows through the cut is the
  // parasitic cross-channel contribution.
  const LatticeSpec no_bridge = apply_tuning(spec, TuningDirective::bridge(0.0));
  const EnsembleResult cross = ensemble_average(no_bridge, fill_num, fill_den, grid, req, mode);
  pred.ix = steady_value(cross.series.at("cut_current"), window_start_ns, window_end_ns);
  return pred;
}

}  // namespace ladderflux
