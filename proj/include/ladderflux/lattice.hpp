#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace ladderflux {

enum class EdgeKind { Horizontal, Vertical, Bridge, Cross };

const char* to_string(EdgeKind k);

struct Edge {
  int a = 0, b = 0;       // site indices, stored with a < b
  double f_mhz = 0.0;     // exchange coupling omega/2pi
  EdgeKind kind = EdgeKind::Horizontal;
};

// Two-leg ladder split into two baths joined by one weak link. Couplings and
// on-site terms are plain frequencies (MHz); conversion to angular units
// happens when the Hamiltonian is assembled.
struct LatticeSpec {
  int n_sites = 0;
  int local_dim = 2;                 // 2: hard-core, 3: one extra boson level
  std::vector<Edge> edges;
  std::vector<double> potential_mhz; // per-site detuning h_i/2pi
  double u_mhz = 0.0;                // on-site interaction U/2pi (local_dim 3)
  std::vector<int> bath_a, bath_b;   // disjoint cover of all sites
  int bridge_a = -1, bridge_b = -1;  // weak-link pair; bridge_a in bath_a
  std::string geometry_note;         // human-readable shape, echoed in manifests

  bool in_bath_a(int site) const;
  const Edge* find_edge(int i, int j) const;
  double bridge_f_mhz() const;
};

// Throws std::invalid_argument describing the first violated constraint.
void validate(const LatticeSpec& spec);

// Canonical device: columns_a + columns_b columns of two sites each (top leg
// then bottom leg per column, bath A columns first). Legs carry jh, rungs jv,
// next-nearest diagonals jx (omitted entirely when jx == 0). At the cut the
// top pair is disconnected and the bottom pair is the bridge with coupling
// gamma.
LatticeSpec default_device(int columns_a, int columns_b, int local_dim, double gamma_mhz,
                           double jh_mhz, double jv_mhz, double jx_mhz, double u_mhz);

// Geometry for a total site count. Even n_sites: columns split with bath A
// taking the extra column. Odd n_sites: bath A additionally gains a single
// bottom-leg site adjacent to the cut, which then carries the bridge.
LatticeSpec device_for_sites(int n_sites, int local_dim, double gamma_mhz, double jh_mhz,
                             double jv_mhz, double jx_mhz, double u_mhz);

// Parse a lattice description from JSON (see README for the schema). Errors
// name the offending key.
LatticeSpec parse_lattice_config(const nlohmann::json& doc);

struct TuningDirective {
  enum class Kind { Filling, Detuning, CouplingScale, Bridge };
  Kind kind = Kind::Bridge;
  long long filling_num = 1, filling_den = 2;  // Filling: target bath-A filling
  double value = 0.0;                          // Detuning h0 [MHz] / scale r / gamma [MHz]

  static TuningDirective filling(long long num, long long den);
  static TuningDirective detuning(double h0_mhz);
  static TuningDirective coupling_scale(double r);
  static TuningDirective bridge(double gamma_mhz);
};

// Returns a tuned copy; the input is never mutated. Filling directives leave
// the lattice untouched (they select the initial sector downstream).
LatticeSpec apply_tuning(const LatticeSpec& spec, const TuningDirective& d);

std::vector<Edge> cut_crossing_edges(const LatticeSpec& spec);

}  // namespace ladderflux
