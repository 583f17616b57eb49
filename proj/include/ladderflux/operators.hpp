#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <vector>

#include "ladderflux/basis.hpp"
#include "ladderflux/lattice.hpp"

namespace ladderflux {

using cplx = std::complex<double>;

// Sector wavefunction. Amplitudes are indexed by basis rank.
struct StateVector {
  std::shared_ptr<const SectorBasis> basis;
  std::vector<cplx> amps;

  double norm() const;
  void normalize();
};

StateVector fock_state(std::shared_ptr<const SectorBasis> basis, std::uint64_t config);
StateVector fock_state(std::shared_ptr<const SectorBasis> basis,
                       const std::vector<int>& occupations);

// Hermitian sector operator in compressed-row form. Column indices within a
// row are strictly increasing.
struct SparseOperator {
  std::int64_t dim = 0;
  std::vector<std::int64_t> row_ptr;
  std::vector<std::int32_t> col;
  std::vector<cplx> val;

  std::int64_t nnz() const { return static_cast<std::int64_t>(val.size()); }
};

// Assembles the sector Hamiltonian in angular units (rad/ns): exchange terms
// f_ij (a+_i a_j + a_i a+_j) with sqrt(n) bosonic factors truncated at
// local_dim-1, per-site detunings, and the normal-ordered on-site interaction
// (u/2) n(n-1). Throws if a hop ever leaves the sector (closure check).
SparseOperator build_hamiltonian(const LatticeSpec& spec, const SectorBasis& basis);

// How the weak-link current operator treats the occupied-twice level when
// local_dim = 3: full truncated-boson matrix elements, or hard projection
// onto the {0,1} subspace.
enum class CurrentForm { Bosonic, PauliProjected };

// Convenience bundle: a lattice, its sector basis, and the assembled H.
struct System {
  LatticeSpec spec;
  std::shared_ptr<const SectorBasis> basis;
  SparseOperator h;
};
System make_system(const LatticeSpec& spec, int total_n);

// Bridge particle current in 1/us, positive from bath A to bath B:
//   I = i*gamma_ang*(<a+_ba a_bb> - <a_ba a+_bb>) * 1000.
double current_expectation(const LatticeSpec& spec, const SectorBasis& basis,
                           const std::vector<cplx>& amps,
                           CurrentForm form = CurrentForm::Bosonic);

// Same quantity summed over every cut-crossing channel (bridge plus any
// diagonal couplings that span the cut); equals d<N_B>/dt.
double cut_current_expectation(const LatticeSpec& spec, const SectorBasis& basis,
                               const std::vector<cplx>& amps);

std::vector<double> site_occupations(const SectorBasis& basis, const std::vector<cplx>& amps);
double bath_population(const SectorBasis& basis, const std::vector<cplx>& amps,
                       const std::vector<int>& sites);
double energy_expectation(const SparseOperator& h, const std::vector<cplx>& amps);

// Reduced density matrix of the ordered site pair (i, j), row-major with
// combined index occ_i * local_dim + occ_j.
struct TwoSiteDensity {
  int local_dim = 2;
  int site_i = -1, site_j = -1;
  std::vector<cplx> rho;  // (local_dim^2)^2 entries

  cplx at(int p, int q) const { return rho[p * local_dim * local_dim + q]; }
  double trace_error() const;
  double hermiticity_error() const;
  double min_eigenvalue() const;
};

TwoSiteDensity reduced_density_two_site(const SectorBasis& basis, const std::vector<cplx>& amps,
                                        int site_i, int site_j);

// Bridge current evaluated from the bridge-pair reduced density matrix; the
// pair must be ordered (bridge_a, bridge_b).
double current_from_pair_density(const TwoSiteDensity& rho2, double gamma_mhz,
                                 CurrentForm form = CurrentForm::Bosonic);

// Pauli-correlator form -gamma_ang/2 * (<XY> - <YX>) * 1000; local_dim 2 only.
double current_pauli_form(const TwoSiteDensity& rho2, double gamma_mhz);

// <X(x)Y> and <Y(x)X> two-site Pauli correlators of a qubit pair.
double pauli_xy_expectation(const TwoSiteDensity& rho2);
double pauli_yx_expectation(const TwoSiteDensity& rho2);

}  // namespace ladderflux
