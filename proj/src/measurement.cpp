#include "ladderflux/measurement.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ladderflux/units.hpp"

namespace ladderflux {

std::vector<double> MeasurementRecord::rep_means() const {
  std::vector<double> m(n_times(), 0.0);
  for (int k = 0; k < n_times(); ++k) {
    double s = 0;
    for (int r = 0; r < repetitions; ++r) s += at(k, r);
    m[k] = s / repetitions;
  }
  return m;
}

std::array<double, 4> pair_outcome_distribution(const TwoSiteDensity& rho2, PairBasis basis) {
  if (rho2.local_dim != 2) {
    throw std::invalid_argument("Pauli measurement emulation requires local_dim 2");
  }
  // Eigenvectors of sigma_x and sigma_y in the |0>,|1> basis, outcome +1 first.
  static const cplx rt = 1.0 / std::sqrt(2.0);
  static const cplx ix{0, 1};
  const cplx ex[2][2] = {{rt, rt}, {rt, -rt}};            // ex[s][component]
  const cplx ey[2][2] = {{rt, ix * rt}, {rt, -ix * rt}};  // ey[s][component]
  const auto& first = (basis == PairBasis::XY) ? ex : ey;
  const auto& second = (basis == PairBasis::XY) ? ey : ex;

  std::array<double, 4> p{};
  double total = 0;
  for (int si = 0; si < 2; ++si) {
    for (int sj = 0; sj < 2; ++sj) {
      // <v| rho |v> with v = first[si] kron second[sj]
      cplx acc{0, 0};
      for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
          const cplx va = first[si][a / 2] * second[sj][a % 2];
          const cplx vb = first[si][b / 2] * second[sj][b % 2];
          acc += std::conj(va) * rho2.at(a, b) * vb;
        }
      }
      double prob = acc.real();
      if (prob < 0) {
        if (prob < -1e-9) throw std::runtime_error("measurement distribution negative");
        prob = 0;
      }
      p[2 * si + sj] = prob;
      total += prob;
    }
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw std::runtime_error("measurement distribution does not sum to 1");
  }
  for (double& q : p) q /= total;
  return p;
}

namespace {

// Empirical product correlator from shots_per_basis draws of (s_i, s_j).
double sampled_correlator(const std::array<double, 4>& p, std::uint64_t shots,
                          SplitStream& rng) {
  const double c1 = p[0];
  const double c2 = c1 + p[1];
  const double c3 = c2 + p[2];
  std::int64_t sum = 0;
  for (std::uint64_t s = 0; s < shots; ++s) {
    const double u = rng.next_unit();
    // products: ++ -> +1, +- -> -1, -+ -> -1, -- -> +1
    if (u < c1) {
      ++sum;
    } else if (u < c2) {
      --sum;
    } else if (u < c3) {
      --sum;
    } else {
      ++sum;
    }
  }
  return static_cast<double>(sum) / static_cast<double>(shots);
}

double exact_correlator(const std::array<double, 4>& p) {
  return p[0] - p[1] - p[2] + p[3];
}

}  // namespace

double sample_current_estimate(const TwoSiteDensity& rho2, double gamma_mhz,
                               std::uint64_t shots_per_basis, SplitStream& rng) {
  if (shots_per_basis < 1) throw std::invalid_argument("need at least one shot per basis");
  const auto pxy = pair_outcome_distribution(rho2, PairBasis::XY);
  const auto pyx = pair_outcome_distribution(rho2, PairBasis::YX);
  const double mxy = sampled_correlator(pxy, shots_per_basis, rng);
  const double myx = sampled_correlator(pyx, shots_per_basis, rng);
  return -0.5 * rad_per_ns(gamma_mhz) * (mxy - myx) * kPerNsToPerUs;
}

MeasurementRecord build_measurement_record(const std::vector<TwoSiteDensity>& pair_states,
                                           const std::vector<double>& t_ns, double gamma_mhz,
                                           const ShotPlan& plan) {
  if (pair_states.size() != t_ns.size()) {
    throw std::invalid_argument("one pair state per time point required");
  }
  if (plan.repetitions < 1) throw std::invalid_argument("need at least one repetition");
  const int K = static_cast<int>(t_ns.size());
  const int R = plan.repetitions;
  MeasurementRecord rec;
  rec.t_ns = t_ns;
  rec.repetitions = R;
  rec.x.assign(static_cast<std::size_t>(K) * R, 0.0);
  for (int k = 0; k < K; ++k) {
    if (plan.analytic) {
      const auto pxy = pair_outcome_distribution(pair_states[k], PairBasis::XY);
      const auto pyx = pair_outcome_distribution(pair_states[k], PairBasis::YX);
      const double exact = -0.5 * rad_per_ns(gamma_mhz) *
                           (exact_correlator(pxy) - exact_correlator(pyx)) * kPerNsToPerUs;
      for (int r = 0; r < R; ++r) rec.x[static_cast<std::size_t>(k) * R + r] = exact;
      continue;
    }
    for (int r = 0; r < R; ++r) {
      SplitStream rng(plan.seed, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(r));
      rec.x[static_cast<std::size_t>(k) * R + r] =
          sample_current_estimate(pair_states[k], gamma_mhz, plan.shots_per_rep, rng);
    }
  }
  return rec;
}

MeasurementRecord build_measurement_record(const LatticeSpec& spec, const SectorBasis& basis,
                                           const std::vector<std::vector<cplx>>& states,
                                           const std::vector<double>& t_ns,
                                           const ShotPlan& plan) {
  std::vector<TwoSiteDensity> pairs;
  pairs.reserve(states.size());
  for (const auto& amps : states) {
    pairs.push_back(reduced_density_two_site(basis, amps, spec.bridge_a, spec.bridge_b));
  }
  return build_measurement_record(pairs, t_ns, spec.bridge_f_mhz(), plan);
}

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

}  // namespace

void write_record_csv(const MeasurementRecord& rec, const std::string& path) {
  std::string out = "t_ns";
  for (int r = 0; r < rec.repetitions; ++r) out += ",rep_" + std::to_string(r);
  out += "\n";
  for (int k = 0; k < rec.n_times(); ++k) {
    append_double(out, rec.t_ns[k]);
    for (int r = 0; r < rec.repetitions; ++r) {
      out += ',';
      append_double(out, rec.at(k, r));
    }
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << out;
}

MeasurementRecord read_record_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error(path + ": empty file");
  int reps = 0;
  {
    std::stringstream hdr(line);
    std::string cell;
    if (!std::getline(hdr, cell, ',') || cell != "t_ns") {
      throw std::runtime_error(path + ": bad header");
    }
    while (std::getline(hdr, cell, ',')) ++reps;
  }
  MeasurementRecord rec;
  rec.repetitions = reps;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = p + line.size();
    double t;
    auto res = std::from_chars(p, end, t);
    if (res.ec != std::errc{}) throw std::runtime_error(path + ": bad number");
    rec.t_ns.push_back(t);
    p = res.ptr;
    for (int r = 0; r < reps; ++r) {
      if (p == end || *p != ',') throw std::runtime_error(path + ": short row");
      ++p;
      double v;
      res = std::from_chars(p, end, v);
      if (res.ec != std::errc{}) throw std::runtime_error(path + ": bad number");
      rec.x.push_back(v);
      p = res.ptr;
    }
  }
  return rec;
}

}  // namespace ladderflux
