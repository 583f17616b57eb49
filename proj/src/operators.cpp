#include "ladderflux/operators.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "ladderflux/units.hpp"

namespace ladderflux {

double StateVector::norm() const {
  double s = 0;
  for (const cplx& a : amps) s += std::norm(a);
  return std::sqrt(s);
}

void StateVector::normalize() {
  const double n = norm();
  if (n == 0) throw std::runtime_error("cannot normalize the zero vector");
  for (cplx& a : amps) a /= n;
}

StateVector fock_state(std::shared_ptr<const SectorBasis> basis, std::uint64_t config) {
  StateVector psi;
  psi.amps.assign(basis->dimension(), cplx{0, 0});
  psi.amps[basis->rank(config)] = 1.0;
  psi.basis = std::move(basis);
  return psi;
}

StateVector fock_state(std::shared_ptr<const SectorBasis> basis,
                       const std::vector<int>& occupations) {
  const std::uint64_t cfg = basis->pack(occupations);
  return fock_state(std::move(basis), cfg);
}

namespace {

struct RowEntry {
  std::int32_t col;
  double val;
};

// Generates one Hamiltonian row: diagonal first, then one entry per allowed
// hop. `rank` throwing doubles as the sector-closure assertion.
void hamiltonian_row(const LatticeSpec& spec, const SectorBasis& basis, std::uint64_t cfg,
                     std::int64_t row, std::vector<RowEntry>& out) {
  out.clear();
  double diag = 0.0;
  for (int i = 0; i < spec.n_sites; ++i) {
    const int n = basis.occ(cfg, i);
    if (n == 0) continue;
    diag += rad_per_ns(spec.potential_mhz[i]) * n;
    diag += 0.5 * rad_per_ns(spec.u_mhz) * n * (n - 1);
  }
  out.push_back({static_cast<std::int32_t>(row), diag});
  const int top = spec.local_dim - 1;
  for (const Edge& e : spec.edges) {
    if (e.f_mhz == 0.0) continue;
    const double w = rad_per_ns(e.f_mhz);
    const int na = basis.occ(cfg, e.a), nb = basis.occ(cfg, e.b);
    if (nb >= 1 && na < top) {  // hop b -> a
      const std::uint64_t to = basis.with_occ(basis.with_occ(cfg, e.a, na + 1), e.b, nb - 1);
      out.push_back({static_cast<std::int32_t>(basis.rank(to)),
                     w * std::sqrt(double(nb) * double(na + 1))});
    }
    if (na >= 1 && nb < top) {  // hop a -> b
      const std::uint64_t to = basis.with_occ(basis.with_occ(cfg, e.a, na - 1), e.b, nb + 1);
      out.push_back({static_cast<std::int32_t>(basis.rank(to)),
                     w * std::sqrt(double(na) * double(nb + 1))});
    }
  }
  std::sort(out.begin(), out.end(), [](const RowEntry& x, const RowEntry& y) {
    return x.col < y.col;
  });
}

}  // namespace

SparseOperator build_hamiltonian(const LatticeSpec& spec, const SectorBasis& basis) {
  if (basis.n_sites() != spec.n_sites || basis.local_dim() != spec.local_dim) {
    throw std::invalid_argument("basis does not match lattice");
  }
  const std::int64_t dim = static_cast<std::int64_t>(basis.dimension());
  SparseOperator h;
  h.dim = dim;
  h.row_ptr.assign(dim + 1, 0);

  std::vector<RowEntry> entries;
  // First pass: exact per-row sizes (after merging duplicate columns).
  std::vector<std::int32_t> counts(dim, 0);
  for (std::int64_t r = 0; r < dim; ++r) {
    hamiltonian_row(spec, basis, basis.configs()[r], r, entries);
    std::int32_t n = 0;
    for (std::size_t k = 0; k < entries.size(); ++k) {
      if (k == 0 || entries[k].col != entries[k - 1].col) ++n;
    }
    counts[r] = n;
  }
  for (std::int64_t r = 0; r < dim; ++r) h.row_ptr[r + 1] = h.row_ptr[r] + counts[r];
  h.col.resize(h.row_ptr[dim]);
  h.val.resize(h.row_ptr[dim]);
  for (std::int64_t r = 0; r < dim; ++r) {
    hamiltonian_row(spec, basis, basis.configs()[r], r, entries);
    std::int64_t at = h.row_ptr[r];
    for (std::size_t k = 0; k < entries.size(); ++k) {
      if (k > 0 && entries[k].col == entries[k - 1].col) {
        h.val[at - 1] += entries[k].val;
      } else {
        h.col[at] = entries[k].col;
        h.val[at] = entries[k].val;
        ++at;
      }
    }
  }
  return h;
}

System make_system(const LatticeSpec& spec, int total_n) {
  validate(spec);
  System sys;
  sys.spec = spec;
  sys.basis = std::make_shared<SectorBasis>(spec.n_sites, spec.local_dim, total_n);
  sys.h = build_hamiltonian(spec, *sys.basis);
  return sys;
}

namespace {

// <a+_i a_j> with optional hard projection onto the {0,1} subspace.
cplx hop_expectation(const SectorBasis& basis, const std::vector<cplx>& amps, int site_i,
                     int site_j, CurrentForm form) {
  const int top = basis.local_dim() - 1;
  cplx z{0, 0};
  const auto& cfgs = basis.configs();
  for (std::size_t r = 0; r < cfgs.size(); ++r) {
    if (amps[r] == cplx{0, 0}) continue;
    const std::uint64_t cfg = cfgs[r];
    const int ni = basis.occ(cfg, site_i), nj = basis.occ(cfg, site_j);
    if (nj < 1 || ni >= top) continue;
    if (form == CurrentForm::PauliProjected && (nj > 1 || ni > 0)) continue;
    const std::uint64_t to = basis.with_occ(basis.with_occ(cfg, site_i, ni + 1), site_j, nj - 1);
    const double amp = (form == CurrentForm::PauliProjected)
                           ? 1.0
                           : std::sqrt(double(nj) * double(ni + 1));
    z += std::conj(amps[basis.rank(to)]) * amp * amps[r];
  }
  return z;
}

}  // namespace

double current_expectation(const LatticeSpec& spec, const SectorBasis& basis,
                           const std::vector<cplx>& amps, CurrentForm form) {
  if (spec.bridge_a < 0 || spec.bridge_b < 0) {
    throw std::invalid_argument("lattice has no bridge pair");
  }
  const double g = rad_per_ns(spec.bridge_f_mhz());
  const cplx z = hop_expectation(basis, amps, spec.bridge_a, spec.bridge_b, form);
  return -2.0 * g * z.imag() * kPerNsToPerUs;
}

double cut_current_expectation(const LatticeSpec& spec, const SectorBasis& basis,
                               const std::vector<cplx>& amps) {
  double total = 0.0;
  for (const Edge& e : cut_crossing_edges(spec)) {
    const int from_a = spec.in_bath_a(e.a) ? e.a : e.b;
    const int from_b = spec.in_bath_a(e.a) ? e.b : e.a;
    const cplx z = hop_expectation(basis, amps, from_a, from_b, CurrentForm::Bosonic);
    total += -2.0 * rad_per_ns(e.f_mhz) * z.imag() * kPerNsToPerUs;
  }
  return total;
}

std::vector<double> site_occupations(const SectorBasis& basis, const std::vector<cplx>& amps) {
  std::vector<double> occ(basis.n_sites(), 0.0);
  const auto& cfgs = basis.configs();
  for (std::size_t r = 0; r < cfgs.size(); ++r) {
    const double w = std::norm(amps[r]);
    if (w == 0.0) continue;
    for (int i = 0; i < basis.n_sites(); ++i) occ[i] += w * basis.occ(cfgs[r], i);
  }
  return occ;
}

double bath_population(const SectorBasis& basis, const std::vector<cplx>& amps,
                       const std::vector<int>& sites) {
  double pop = 0.0;
  const auto& cfgs = basis.configs();
  for (std::size_t r = 0; r < cfgs.size(); ++r) {
    const double w = std::norm(amps[r]);
    if (w == 0.0) continue;
    int n = 0;
    for (int s : sites) n += basis.occ(cfgs[r], s);
    pop += w * n;
  }
  return pop;
}

double energy_expectation(const SparseOperator& h, const std::vector<cplx>& amps) {
  if (static_cast<std::int64_t>(amps.size()) != h.dim) {
    throw std::invalid_argument("state dimension does not match operator");
  }
  cplx e{0, 0};
  for (std::int64_t r = 0; r < h.dim; ++r) {
    cplx row{0, 0};
    for (std::int64_t k = h.row_ptr[r]; k < h.row_ptr[r + 1]; ++k) {
      row += h.val[k] * amps[h.col[k]];
    }
    e += std::conj(amps[r]) * row;
  }
  return e.real();
}

double TwoSiteDensity::trace_error() const {
  const int d2 = local_dim * local_dim;
  cplx tr{0, 0};
  for (int p = 0; p < d2; ++p) tr += at(p, p);
  return std::abs(tr - cplx{1, 0});
}

double TwoSiteDensity::hermiticity_error() const {
  const int d2 = local_dim * local_dim;
  double worst = 0.0;
  for (int p = 0; p < d2; ++p) {
    for (int q = 0; q < d2; ++q) {
      worst = std::max(worst, std::abs(at(p, q) - std::conj(at(q, p))));
    }
  }
  return worst;
}

double TwoSiteDensity::min_eigenvalue() const {
  const int d2 = local_dim * local_dim;
  Eigen::MatrixXcd m(d2, d2);
  for (int p = 0; p < d2; ++p) {
    for (int q = 0; q < d2; ++q) m(p, q) = at(p, q);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

TwoSiteDensity reduced_density_two_site(const SectorBasis& basis, const std::vector<cplx>& amps,
                                        int site_i, int site_j) {
  if (site_i == site_j || site_i < 0 || site_j < 0 || site_i >= basis.n_sites() ||
      site_j >= basis.n_sites()) {
    throw std::invalid_argument("reduced density needs two distinct valid sites");
  }
  const int d = basis.local_dim();
  const int d2 = d * d;
  TwoSiteDensity out;
  out.local_dim = d;
  out.site_i = site_i;
  out.site_j = site_j;
  out.rho.assign(d2 * d2, cplx{0, 0});

  // Group basis states by the configuration of all *other* sites; within a
  // group the pair pattern indexes amplitudes contributing coherently.
  std::unordered_map<std::uint64_t, std::vector<std::pair<int, std::size_t>>> groups;
  const auto& cfgs = basis.configs();
  groups.reserve(cfgs.size());
  for (std::size_t r = 0; r < cfgs.size(); ++r) {
    const std::uint64_t cfg = cfgs[r];
    const int p = basis.occ(cfg, site_i) * d + basis.occ(cfg, site_j);
    const std::uint64_t rest = basis.with_occ(basis.with_occ(cfg, site_i, 0), site_j, 0);
    groups[rest].push_back({p, r});
  }
  for (const auto& [rest, members] : groups) {
    for (const auto& [p, rp] : members) {
      for (const auto& [q, rq] : members) {
        out.rho[p * d2 + q] += amps[rp] * std::conj(amps[rq]);
      }
    }
  }
  return out;
}

namespace {

// tr(rho * (A_i kron B_j)) for 2x2 single-site matrices A, B.
cplx pair_trace(const TwoSiteDensity& rho2, const cplx a[2][2], const cplx b[2][2]) {
  cplx tr{0, 0};
  for (int p = 0; p < 4; ++p) {
    for (int q = 0; q < 4; ++q) {
      // M[q][p] = A[q_i][p_i] * B[q_j][p_j]
      const cplx m = a[q / 2][p / 2] * b[q % 2][p % 2];
      tr += rho2.at(p, q) * m;
    }
  }
  return tr;
}

constexpr cplx kI{0, 1};
// Basis ordering |0> = empty, |1> = occupied; sigma+ = |1><0|.
const cplx kSx[2][2] = {{0, 1}, {1, 0}};
const cplx kSy[2][2] = {{0, -kI}, {kI, 0}};

}  // namespace

double current_from_pair_density(const TwoSiteDensity& rho2, double gamma_mhz,
                                 CurrentForm form) {
  const int d = rho2.local_dim;
  const int d2 = d * d;
  const double g = rad_per_ns(gamma_mhz);
  // tr(rho a+_i a_j) = sum_s rho[s, hop(s)] * amp(s).
  cplx z{0, 0};
  for (int ni = 0; ni < d; ++ni) {
    for (int nj = 0; nj < d; ++nj) {
      if (nj < 1 || ni >= d - 1) continue;
      if (form == CurrentForm::PauliProjected && (nj > 1 || ni > 0)) continue;
      const int s = ni * d + nj;
      const int to = (ni + 1) * d + (nj - 1);
      const double amp = (form == CurrentForm::PauliProjected)
                             ? 1.0
                             : std::sqrt(double(nj) * double(ni + 1));
      z += rho2.rho[s * d2 + to] * amp;
    }
  }
  return -2.0 * g * z.imag() * kPerNsToPerUs;
}

double pauli_xy_expectation(const TwoSiteDensity& rho2) {
  if (rho2.local_dim != 2) throw std::invalid_argument("Pauli correlators need local_dim 2");
  return pair_trace(rho2, kSx, kSy).real();
}

double pauli_yx_expectation(const TwoSiteDensity& rho2) {
  if (rho2.local_dim != 2) throw std::invalid_argument("Pauli correlators need local_dim 2");
  return pair_trace(rho2, kSy, kSx).real();
}

double current_pauli_form(const TwoSiteDensity& rho2, double gamma_mhz) {
  const double g = rad_per_ns(gamma_mhz);
  return -0.5 * g * (pauli_xy_expectation(rho2) - pauli_yx_expectation(rho2)) * kPerNsToPerUs;
}

}  // namespace ladderflux
