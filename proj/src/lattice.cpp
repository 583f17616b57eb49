#include "ladderflux/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace ladderflux {

const char* to_string(EdgeKind k) {
  switch (k) {
    case EdgeKind::Horizontal: return "horizontal";
    case EdgeKind::Vertical: return "vertical";
    case EdgeKind::Bridge: return "bridge";
    case EdgeKind::Cross: return "cross";
  }
  return "?";
}

bool LatticeSpec::in_bath_a(int site) const {
  return std::find(bath_a.begin(), bath_a.end(), site) != bath_a.end();
}

const Edge* LatticeSpec::find_edge(int i, int j) const {
  if (i > j) std::swap(i, j);
  for (const Edge& e : edges) {
    if (e.a == i && e.b == j) return &e;
  }
  return nullptr;
}

double LatticeSpec::bridge_f_mhz() const {
  const Edge* e = find_edge(bridge_a, bridge_b);
  if (e == nullptr) throw std::runtime_error("bridge edge missing from edge list");
  return e->f_mhz;
}

void validate(const LatticeSpec& spec) {
  if (spec.n_sites < 2) throw std::invalid_argument("n_sites must be >= 2");
  if (spec.local_dim != 2 && spec.local_dim != 3) {
    throw std::invalid_argument("local_dim must be 2 or 3");
  }
  if (static_cast<int>(spec.potential_mhz.size()) != spec.n_sites) {
    throw std::invalid_argument("potentials must have one entry per site");
  }
  if (spec.edges.empty()) throw std::invalid_argument("edge list is empty (no connectivity)");
  std::vector<char> seen(spec.n_sites, 0);
  for (int s : spec.bath_a) {
    if (s < 0 || s >= spec.n_sites) throw std::invalid_argument("bath_a site out of range");
    if (seen[s]++) throw std::invalid_argument("bath partition repeats a site");
  }
  for (int s : spec.bath_b) {
    if (s < 0 || s >= spec.n_sites) throw std::invalid_argument("bath_b site out of range");
    if (seen[s]++) throw std::invalid_argument("bath partition repeats a site");
  }
  for (int s = 0; s < spec.n_sites; ++s) {
    if (!seen[s]) throw std::invalid_argument("bath partition does not cover all sites");
  }
  std::set<std::pair<int, int>> keys;
  for (const Edge& e : spec.edges) {
    if (e.a < 0 || e.b < 0 || e.a >= spec.n_sites || e.b >= spec.n_sites) {
      throw std::invalid_argument("edge endpoint out of range");
    }
    if (e.a == e.b) throw std::invalid_argument("self-loop edge");
    if (e.a > e.b) throw std::invalid_argument("edges must be stored with a < b");
    if (!keys.insert({e.a, e.b}).second) {
      throw std::invalid_argument("duplicate edge (" + std::to_string(e.a) + "," +
                                  std::to_string(e.b) + ")");
    }
  }
  if (!spec.in_bath_a(spec.bridge_a) || spec.in_bath_a(spec.bridge_b)) {
    throw std::invalid_argument("bridge must connect a bath_a site to a bath_b site");
  }
  const Edge* bridge = spec.find_edge(spec.bridge_a, spec.bridge_b);
  if (bridge == nullptr || bridge->kind != EdgeKind::Bridge) {
    throw std::invalid_argument("bridge pair is not an edge tagged as bridge");
  }
  for (const Edge& e : spec.edges) {
    const bool crosses = spec.in_bath_a(e.a) != spec.in_bath_a(e.b);
    if (e.kind == EdgeKind::Bridge && !crosses) {
      throw std::invalid_argument("bridge-tagged edge does not cross the cut");
    }
    if (crosses && e.kind != EdgeKind::Bridge && e.kind != EdgeKind::Cross) {
      throw std::invalid_argument("cut-crossing edge must be bridge or cross");
    }
  }
}

namespace {

void push_edge(std::vector<Edge>& edges, int i, int j, double f, EdgeKind kind) {
  if (i > j) std::swap(i, j);
  edges.push_back(Edge{i, j, f, kind});
}

}  // namespace

LatticeSpec default_device(int columns_a, int columns_b, int local_dim, double gamma_mhz,
                           double jh_mhz, double jv_mhz, double jx_mhz, double u_mhz) {
  if (columns_a < 1 || columns_b < 1) throw std::invalid_argument("need >= 1 column per bath");
  const int columns = columns_a + columns_b;
  LatticeSpec spec;
  spec.n_sites = 2 * columns;
  spec.local_dim = local_dim;
  spec.potential_mhz.assign(spec.n_sites, 0.0);
  spec.u_mhz = u_mhz;
  const auto top = [](int c) { return 2 * c; };
  const auto bot = [](int c) { return 2 * c + 1; };
  for (int c = 0; c < columns; ++c) {
    (c < columns_a ? spec.bath_a : spec.bath_b).push_back(top(c));
    (c < columns_a ? spec.bath_a : spec.bath_b).push_back(bot(c));
  }
  for (int c = 0; c < columns; ++c) {
    push_edge(spec.edges, top(c), bot(c), jv_mhz, EdgeKind::Vertical);
  }
  const int cut = columns_a - 1;  // last bath-A column
  for (int c = 0; c + 1 < columns; ++c) {
    if (c == cut) {
      // Weak link on the bottom leg only; the top pair stays disconnected.
      push_edge(spec.edges, bot(c), bot(c + 1), gamma_mhz, EdgeKind::Bridge);
    } else {
      push_edge(spec.edges, top(c), top(c + 1), jh_mhz, EdgeKind::Horizontal);
      push_edge(spec.edges, bot(c), bot(c + 1), jh_mhz, EdgeKind::Horizontal);
    }
  }
  if (jx_mhz != 0.0) {
    for (int c = 0; c + 1 < columns; ++c) {
      push_edge(spec.edges, top(c), bot(c + 1), jx_mhz, EdgeKind::Cross);
      push_edge(spec.edges, bot(c), top(c + 1), jx_mhz, EdgeKind::Cross);
    }
  }
  spec.bridge_a = bot(cut);
  spec.bridge_b = bot(cut + 1);
  spec.geometry_note = "2x" + std::to_string(columns) + " ladder, bath A columns 0.." +
                       std::to_string(columns_a - 1) + ", bridge (" +
                       std::to_string(spec.bridge_a) + "," + std::to_string(spec.bridge_b) +
                       ") on the bottom leg";
  validate(spec);
  return spec;
}

LatticeSpec device_for_sites(int n_sites, int local_dim, double gamma_mhz, double jh_mhz,
                             double jv_mhz, double jx_mhz, double u_mhz) {
  if (n_sites < 4) throw std::invalid_argument("device needs at least 4 sites");
  if (n_sites % 2 == 0) {
    const int columns = n_sites / 2;
    const int columns_a = (columns + 1) / 2;
    return default_device(columns_a, columns - columns_a, local_dim, gamma_mhz, jh_mhz,
                          jv_mhz, jx_mhz, u_mhz);
  }
  // Odd count: start from the even ladder one site short, then splice a single
  // bottom-leg site into bath A at the cut. The extra site takes over the
  // bridge; its only intra-bath neighbours are the old last column of A.
  const int columns = (n_sites - 1) / 2;       // full columns
  const int columns_a = (columns + 1) / 2;     // full columns belonging to A
  const int columns_b = columns - columns_a;
  if (columns_b < 1) throw std::invalid_argument("device needs at least one bath-B column");
  LatticeSpec spec;
  spec.n_sites = n_sites;
  spec.local_dim = local_dim;
  spec.potential_mhz.assign(n_sites, 0.0);
  spec.u_mhz = u_mhz;
  const int x = n_sites - 1;  // the extra bath-A bottom-leg site, placed last
  const auto top = [](int c) { return 2 * c; };
  const auto bot = [](int c) { return 2 * c + 1; };
  for (int c = 0; c < columns; ++c) {
    (c < columns_a ? spec.bath_a : spec.bath_b).push_back(top(c));
    (c < columns_a ? spec.bath_a : spec.bath_b).push_back(bot(c));
  }
  spec.bath_a.push_back(x);
  for (int c = 0; c < columns; ++c) {
    push_edge(spec.edges, top(c), bot(c), jv_mhz, EdgeKind::Vertical);
  }
  const int last_a = columns_a - 1;
  for (int c = 0; c + 1 < columns; ++c) {
    if (c == last_a) continue;  // the gap the extra site sits in
    push_edge(spec.edges, top(c), top(c + 1), jh_mhz, EdgeKind::Horizontal);
    push_edge(spec.edges, bot(c), bot(c + 1), jh_mhz, EdgeKind::Horizontal);
  }
  push_edge(spec.edges, bot(last_a), x, jh_mhz, EdgeKind::Horizontal);
  push_edge(spec.edges, x, bot(last_a + 1), gamma_mhz, EdgeKind::Bridge);
  if (jx_mhz != 0.0) {
    for (int c = 0; c + 1 < columns; ++c) {
      if (c == last_a) continue;
      push_edge(spec.edges, top(c), bot(c + 1), jx_mhz, EdgeKind::Cross);
      push_edge(spec.edges, bot(c), top(c + 1), jx_mhz, EdgeKind::Cross);
    }
    // Diagonals that touch the extra site's half column.
    push_edge(spec.edges, top(last_a), x, jx_mhz, EdgeKind::Cross);
    push_edge(spec.edges, x, top(last_a + 1), jx_mhz, EdgeKind::Cross);
  }
  spec.bridge_a = x;
  spec.bridge_b = bot(last_a + 1);
  spec.geometry_note = "2x" + std::to_string(columns) + " ladder plus one bottom-leg site " +
                       std::to_string(x) + " spliced into bath A at the cut; bridge (" +
                       std::to_string(x) + "," + std::to_string(spec.bridge_b) + ")";
  validate(spec);
  return spec;
}

LatticeSpec parse_lattice_config(const nlohmann::json& doc) {
  const auto need_number = [&](const char* key, double fallback, bool required) {
    if (!doc.contains(key)) {
      if (required) throw std::invalid_argument(std::string("lattice.") + key + " is required");
      return fallback;
    }
    if (!doc[key].is_number()) {
      throw std::invalid_argument(std::string("lattice.") + key + " must be a number");
    }
    return doc[key].get<double>();
  };
  static const std::set<std::string> known = {
      "local_dim", "columns_a",  "columns_b",      "n_sites",       "gamma_mhz",
      "jh_mhz",    "jv_mhz",     "jx_mhz",         "u_mhz",         "edge_overrides",
      "potentials_mhz"};
  for (const auto& [key, _] : doc.items()) {
    if (!known.count(key)) throw std::invalid_argument("lattice." + key + ": unknown key");
  }

  const int local_dim = static_cast<int>(need_number("local_dim", 2, false));
  const double gamma = need_number("gamma_mhz", 1.0, false);
  const double jh = need_number("jh_mhz", 10.0, false);
  const double jv = need_number("jv_mhz", -10.0, false);
  const double jx = need_number("jx_mhz", 0.0, false);
  const double u = need_number("u_mhz", 0.0, false);

  LatticeSpec spec;
  if (doc.contains("n_sites")) {
    if (doc.contains("columns_a") || doc.contains("columns_b")) {
      throw std::invalid_argument("lattice.n_sites: give either n_sites or explicit columns");
    }
    spec = device_for_sites(static_cast<int>(need_number("n_sites", 0, true)), local_dim,
                            gamma, jh, jv, jx, u);
  } else {
    const int ca = static_cast<int>(need_number("columns_a", 0, true));
    const int cb = static_cast<int>(need_number("columns_b", 0, true));
    spec = default_device(ca, cb, local_dim, gamma, jh, jv, jx, u);
  }

  if (doc.contains("potentials_mhz")) {
    const auto& pot = doc["potentials_mhz"];
    if (!pot.is_object()) {
      throw std::invalid_argument("lattice.potentials_mhz must map site index -> MHz");
    }
    for (const auto& [key, value] : pot.items()) {
      int site = -1;
      try {
        site = std::stoi(key);
      } catch (const std::exception&) {
        throw std::invalid_argument("lattice.potentials_mhz." + key + ": not a site index");
      }
      if (site < 0 || site >= spec.n_sites || !value.is_number()) {
        throw std::invalid_argument("lattice.potentials_mhz." + key + ": bad site or value");
      }
      spec.potential_mhz[site] = value.get<double>();
    }
  }

  if (doc.contains("edge_overrides")) {
    const auto& ovr = doc["edge_overrides"];
    if (!ovr.is_array()) throw std::invalid_argument("lattice.edge_overrides must be an array");
    for (std::size_t n = 0; n < ovr.size(); ++n) {
      const std::string where = "lattice.edge_overrides[" + std::to_string(n) + "]";
      const auto& item = ovr[n];
      if (!item.is_object() || !item.contains("i") || !item.contains("j") ||
          !item.contains("f_mhz")) {
        throw std::invalid_argument(where + ": need {i, j, f_mhz}");
      }
      int i = item["i"].get<int>(), j = item["j"].get<int>();
      if (i > j) std::swap(i, j);
      bool found = false;
      for (Edge& e : spec.edges) {
        if (e.a == i && e.b == j) {
          e.f_mhz = item["f_mhz"].get<double>();
          found = true;
          break;
        }
      }
      if (!found) {
        throw std::invalid_argument(where + ": no such edge (" + std::to_string(i) + "," +
                                    std::to_string(j) + ")");
      }
    }
  }
  validate(spec);
  return spec;
}

TuningDirective TuningDirective::filling(long long num, long long den) {
  TuningDirective d;
  d.kind = Kind::Filling;
  d.filling_num = num;
  d.filling_den = den;
  if (den <= 0 || num < 0 || num > den) {
    throw std::invalid_argument("filling must be a rational in [0, 1]");
  }
  return d;
}

TuningDirective TuningDirective::detuning(double h0_mhz) {
  TuningDirective d;
  d.kind = Kind::Detuning;
  d.value = h0_mhz;
  return d;
}

TuningDirective TuningDirective::coupling_scale(double r) {
  if (!(r > 0)) throw std::invalid_argument("coupling scale must be > 0");
  TuningDirective d;
  d.kind = Kind::CouplingScale;
  d.value = r;
  return d;
}

TuningDirective TuningDirective::bridge(double gamma_mhz) {
  TuningDirective d;
  d.kind = Kind::Bridge;
  d.value = gamma_mhz;
  return d;
}

LatticeSpec apply_tuning(const LatticeSpec& spec, const TuningDirective& d) {
  LatticeSpec out = spec;
  switch (d.kind) {
    case TuningDirective::Kind::Filling:
      break;  // selects the initial sector; no couplings change
    case TuningDirective::Kind::Detuning:
      if (spec.bath_b.empty()) throw std::invalid_argument("detuning: bath B is empty");
      for (int s : spec.bath_b) out.potential_mhz[s] += d.value;
      break;
    case TuningDirective::Kind::CouplingScale:
      if (spec.bath_b.empty()) throw std::invalid_argument("coupling scale: bath B is empty");
      // Scales exchange couplings internal to bath B; the bridge and anything
      // touching bath A keep their values.
      for (Edge& e : out.edges) {
        if (!spec.in_bath_a(e.a) && !spec.in_bath_a(e.b) && e.kind != EdgeKind::Bridge) {
          e.f_mhz *= d.value;
        }
      }
      break;
    case TuningDirective::Kind::Bridge:
      for (Edge& e : out.edges) {
        if (e.kind == EdgeKind::Bridge) e.f_mhz = d.value;
      }
      break;
  }
  validate(out);
  return out;
}

std::vector<Edge> cut_crossing_edges(const LatticeSpec& spec) {
  std::vector<Edge> out;
  for (const Edge& e : spec.edges) {
    if (spec.in_bath_a(e.a) != spec.in_bath_a(e.b)) out.push_back(e);
  }
  return out;
}

}  // namespace ladderflux
