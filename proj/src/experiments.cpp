#include "ladderflux/experiments.hpp"

#include <omp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "ladderflux/ensemble.hpp"
#include "ladderflux/units.hpp"

namespace ladderflux {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

void check_keys(const json& doc, const std::string& path, const std::set<std::string>& allowed) {
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!allowed.count(it.key())) fail(path + "." + it.key() + ": unknown key");
  }
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path + ": expected a number");
  return v.get<double>();
}

double number_or(const json& doc, const std::string& path, const char* key, double fallback) {
  if (!doc.contains(key)) return fallback;
  return as_number(doc.at(key), path + "." + key);
}

std::uint64_t uint_or(const json& doc, const std::string& path, const char* key,
                      std::uint64_t fallback) {
  if (!doc.contains(key)) return fallback;
  const json& v = doc.at(key);
  // Signed storage is fine as long as the value itself is non-negative.
  const bool ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
  if (!ok) fail(path + "." + key + ": expected a non-negative integer");
  return v.get<std::uint64_t>();
}

int int_or(const json& doc, const std::string& path, const char* key, int fallback) {
  if (!doc.contains(key)) return fallback;
  const json& v = doc.at(key);
  if (!v.is_number_integer()) fail(path + "." + key + ": expected an integer");
  return v.get<int>();
}

bool bool_or(const json& doc, const std::string& path, const char* key, bool fallback) {
  if (!doc.contains(key)) return fallback;
  const json& v = doc.at(key);
  if (!v.is_boolean()) fail(path + "." + key + ": expected a boolean");
  return v.get<bool>();
}

std::string string_or(const json& doc, const std::string& path, const char* key,
                      const std::string& fallback) {
  if (!doc.contains(key)) return fallback;
  const json& v = doc.at(key);
  if (!v.is_string()) fail(path + "." + key + ": expected a string");
  return v.get<std::string>();
}

std::vector<double> number_list_or(const json& doc, const std::string& path, const char* key,
                                   std::vector<double> fallback) {
  if (!doc.contains(key)) return fallback;
  const json& v = doc.at(key);
  if (!v.is_array() || v.empty()) fail(path + "." + key + ": expected a non-empty array");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(as_number(v[i], path + "." + key + "[" + std::to_string(i) + "]"));
  }
  return out;
}

// Shortest representation that round-trips through from_chars.
std::string fmt(double v) {
  if (v == 0.0) v = 0.0;  // drop a negative zero's sign
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot read " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail("short write to " + path);
}

constexpr std::pair<long long, long long> default_fill{1, 2};

std::pair<long long, long long> primary_filling(const ScenarioConfig& cfg) {
  return cfg.fillings.empty() ? default_fill : cfg.fillings.front();
}

// Filename fragment for a numeric parameter: 0.5 -> "0p5", -2 -> "m2".
std::string num_tag(double v) {
  std::string s = fmt(v);
  for (char& c : s) {
    if (c == '.') c = 'p';
    if (c == '-') c = 'm';
  }
  return s;
}

json geometry_json(const LatticeSpec& spec) {
  return json{{"n_sites", spec.n_sites},
              {"local_dim", spec.local_dim},
              {"bath_a_sites", spec.bath_a.size()},
              {"bath_b_sites", spec.bath_b.size()},
              {"bridge", {spec.bridge_a, spec.bridge_b}},
              {"note", spec.geometry_note}};
}

}  // namespace

std::vector<int> spread_pattern(const LatticeSpec& spec, int count) {
  const int na = static_cast<int>(spec.bath_a.size());
  if (count < 0 || count > na) {
    fail("cannot place " + std::to_string(count) + " particles on " + std::to_string(na) +
         " bath-A sites (one per site)");
  }
  // Checkerboard over the ladder: bath-A list position p sits in column p/2
  // on leg p%2, so even column+leg parity selects alternating sites. Those
  // fill first; beyond half filling the odd-parity sites follow.
  std::vector<int> order;
  for (int pass = 0; pass < 2; ++pass) {
    for (int p = 0; p < na; ++p) {
      if ((p / 2 + p % 2) % 2 == pass) order.push_back(p);
    }
  }
  std::vector<int> occ(spec.n_sites, 0);
  for (int i = 0; i < count; ++i) occ[spec.bath_a[order[i]]] = 1;
  return occ;
}

LatticeSpec ScenarioConfig::lattice_for_sites(int n_sites) const {
  json d = lattice_doc;
  d["n_sites"] = n_sites;
  return parse_lattice_config(d);
}

LatticeSpec ScenarioConfig::lattice() const { return parse_lattice_config(lattice_doc); }

std::vector<double> ScenarioConfig::fluctuation_times() const {
  std::vector<double> out;
  const int n = static_cast<int>(std::llround((window_end_ns - window_start_ns) / window_step_ns));
  for (int k = 0; k <= n; ++k) out.push_back(window_start_ns + k * window_step_ns);
  return out;
}

ScenarioConfig parse_scenario_config(const json& doc, const CliOverrides& cli) {
  if (!doc.is_object()) fail("config: expected a JSON object");
  static const std::set<std::string> top = {
      "scenario",  "lattice",       "l_list",    "grid",          "window",
      "shots",     "seed",          "state_count", "t_probe_ns",  "gamma_list_mhz",
      "fillings",  "h0_list_mhz",   "r_list",    "t2_us",         "steady_window",
      "gamma0_mhz", "initial",      "bridge_operator_form",       "out",
      "occupations"};
  check_keys(doc, "config", top);

  ScenarioConfig cfg;
  if (!doc.contains("scenario")) fail("config.scenario: required");
  if (!doc.at("scenario").is_string()) fail("config.scenario: expected a string");
  cfg.scenario = doc.at("scenario").get<std::string>();
  static const std::set<std::string> scenarios = {"evolve",     "typicality", "steadiness",
                                                  "tunability", "gamma_scan", "ensemble"};
  if (!scenarios.count(cfg.scenario)) {
    fail("config.scenario: unknown scenario '" + cfg.scenario + "'");
  }
  const bool by_site_count = cfg.scenario == "typicality" || cfg.scenario == "steadiness";

  cfg.lattice_doc = doc.contains("lattice") ? doc.at("lattice") : json::object();
  if (!cfg.lattice_doc.is_object()) fail("config.lattice: expected an object");
  const bool sized = cfg.lattice_doc.contains("n_sites") || cfg.lattice_doc.contains("columns_a") ||
                     cfg.lattice_doc.contains("columns_b");
  if (by_site_count && sized) {
    fail("config.lattice: size keys conflict with l_list; the scenario sets the site count");
  }
  if (!by_site_count && !sized) {
    fail("config.lattice: set n_sites or columns_a/columns_b");
  }

  if (doc.contains("l_list")) {
    if (!by_site_count) fail("config.l_list: only typicality and steadiness scan site counts");
    const json& v = doc.at("l_list");
    if (!v.is_array() || v.empty()) fail("config.l_list: expected a non-empty array");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer()) fail("config.l_list[" + std::to_string(i) + "]: expected an integer");
      cfg.l_list.push_back(v[i].get<int>());
    }
  } else if (cfg.scenario == "typicality") {
    cfg.l_list = {10, 14};
  } else if (cfg.scenario == "steadiness") {
    cfg.l_list = {6, 10, 14};
  }

  {
    json g = doc.contains("grid") ? doc.at("grid") : json::object();
    if (!g.is_object()) fail("config.grid: expected an object");
    check_keys(g, "config.grid", {"t_start_ns", "t_end_ns", "dt_ns", "sample_dt_ns"});
    const double t0 = number_or(g, "config.grid", "t_start_ns", 0.0);
    const double t1 = number_or(g, "config.grid", "t_end_ns", 1000.0);
    const double dt = number_or(g, "config.grid", "dt_ns", 0.1);
    const double sdt = number_or(g, "config.grid", "sample_dt_ns", 1.0);
    cfg.grid = TimeGrid(t0, t1, dt, sdt);
  }
  {
    json w = doc.contains("window") ? doc.at("window") : json::object();
    if (!w.is_object()) fail("config.window: expected an object");
    check_keys(w, "config.window", {"start_ns", "end_ns", "step_ns"});
    cfg.window_start_ns = number_or(w, "config.window", "start_ns", 100.0);
    cfg.window_end_ns = number_or(w, "config.window", "end_ns", 1000.0);
    cfg.window_step_ns = number_or(w, "config.window", "step_ns", 5.0);
    if (!(cfg.window_step_ns > 0.0) || cfg.window_end_ns <= cfg.window_start_ns) {
      fail("config.window: end must exceed start and the step must be positive");
    }
    const double span = (cfg.window_end_ns - cfg.window_start_ns) / cfg.window_step_ns;
    if (std::abs(span - std::llround(span)) > 1e-9 * std::max(1.0, span)) {
      fail("config.window: the step must divide the span");
    }
  }
  {
    json s = doc.contains("shots") ? doc.at("shots") : json::object();
    if (!s.is_object()) fail("config.shots: expected an object");
    check_keys(s, "config.shots", {"shots_per_rep", "repetitions", "analytic"});
    cfg.shots.shots_per_rep = uint_or(s, "config.shots", "shots_per_rep", 6000);
    cfg.shots.repetitions = int_or(s, "config.shots", "repetitions", 10);
    cfg.shots.analytic = bool_or(s, "config.shots", "analytic", false);
    if (cfg.shots.shots_per_rep == 0) fail("config.shots.shots_per_rep: must be positive");
    if (cfg.shots.repetitions < 1) fail("config.shots.repetitions: must be positive");
    cfg.measure = doc.contains("shots");
  }
  if (cli.analytic) {
    cfg.shots.analytic = true;
    cfg.measure = true;
  }

  cfg.seed = cli.seed ? *cli.seed : uint_or(doc, "config", "seed", 1);
  cfg.shots.seed = cfg.seed;

  int default_states = 1;
  if (cfg.scenario == "typicality") default_states = 20;
  if (cfg.scenario == "steadiness" || cfg.scenario == "tunability" || cfg.scenario == "gamma_scan")
    default_states = 10;
  if (cfg.scenario == "ensemble") default_states = 1000;
  cfg.state_count = int_or(doc, "config", "state_count", default_states);
  if (cfg.state_count < 1) fail("config.state_count: must be positive");

  // Scenario-specific knobs: reject keys the scenario would silently ignore.
  const auto only_for = [&](const char* key, const char* scenario) {
    if (doc.contains(key) && cfg.scenario != scenario) {
      fail(std::string("config.") + key + ": only valid for the " + scenario + " scenario");
    }
  };
  only_for("t_probe_ns", "typicality");
  only_for("gamma_list_mhz", "gamma_scan");
  only_for("h0_list_mhz", "tunability");
  only_for("r_list", "tunability");

  cfg.t_probe_ns = number_or(doc, "config", "t_probe_ns", 200.0);
  cfg.gamma_list_mhz = number_list_or(doc, "config", "gamma_list_mhz", {0.25, 0.5, 1.0});

  if (doc.contains("fillings")) {
    const json& v = doc.at("fillings");
    if (!v.is_array() || v.empty()) fail("config.fillings: expected a non-empty array");
    for (std::size_t i = 0; i < v.size(); ++i) {
      const json& p = v[i];
      const std::string path = "config.fillings[" + std::to_string(i) + "]";
      if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer()) {
        fail(path + ": expected a [numerator, denominator] integer pair");
      }
      const long long num = p[0].get<long long>(), den = p[1].get<long long>();
      if (den < 1 || num < 0 || num > den) fail(path + ": expected a fraction in [0, 1]");
      cfg.fillings.emplace_back(num, den);
    }
    if (cfg.scenario != "tunability" && cfg.fillings.size() != 1) {
      fail("config.fillings: scenarios other than tunability take a single filling");
    }
  }

  cfg.h0_list_mhz = number_list_or(doc, "config", "h0_list_mhz", {});
  cfg.r_list = number_list_or(doc, "config", "r_list", {});
  if (cfg.scenario == "tunability") {
    const int axes = (cfg.fillings.empty() ? 0 : 1) + (cfg.h0_list_mhz.empty() ? 0 : 1) +
                     (cfg.r_list.empty() ? 0 : 1);
    if (axes > 1) {
      fail("config: conflicting directive lists; give exactly one of fillings, h0_list_mhz, "
           "r_list");
    }
    if (axes == 0) {
      fail("config: the tunability scenario needs one of fillings, h0_list_mhz, r_list");
    }
  }

  if (cli.t2_us) {
    cfg.t2_us = *cli.t2_us;
  } else if (doc.contains("t2_us")) {
    cfg.t2_us = as_number(doc.at("t2_us"), "config.t2_us");
  }
  if (cfg.t2_us && !(*cfg.t2_us > 0.0)) fail("config.t2_us: must be positive");

  {
    json w = doc.contains("steady_window") ? doc.at("steady_window") : json::object();
    if (!w.is_object()) fail("config.steady_window: expected an object");
    check_keys(w, "config.steady_window", {"start_ns", "end_ns"});
    cfg.steady_window_start_ns = number_or(w, "config.steady_window", "start_ns", 60.0);
    cfg.steady_window_end_ns = number_or(w, "config.steady_window", "end_ns", 150.0);
    if (cfg.steady_window_end_ns <= cfg.steady_window_start_ns) {
      fail("config.steady_window: end must exceed start");
    }
  }
  cfg.gamma0_mhz = number_or(doc, "config", "gamma0_mhz", 0.5);
  if (!(cfg.gamma0_mhz > 0.0)) fail("config.gamma0_mhz: must be positive");

  cfg.initial = string_or(doc, "config", "initial", "alternating");
  if (cfg.initial != "alternating" && cfg.initial != "random") {
    fail("config.initial: expected \"alternating\" or \"random\"");
  }
  const std::string form = string_or(doc, "config", "bridge_operator_form", "bosonic");
  if (form == "bosonic") {
    cfg.current_form = CurrentForm::Bosonic;
  } else if (form == "pauli_projected") {
    cfg.current_form = CurrentForm::PauliProjected;
  } else {
    fail("config.bridge_operator_form: expected \"bosonic\" or \"pauli_projected\"");
  }
  cfg.occupations = bool_or(doc, "config", "occupations", false);
  cfg.out_dir = cli.out_dir ? *cli.out_dir
                            : string_or(doc, "config", "out", "runs/" + cfg.scenario);

  // Echo of the fully-resolved configuration, written into the manifest.
  json fill_echo = json::array();
  for (const auto& [num, den] : cfg.fillings) fill_echo.push_back(json{num, den});
  cfg.resolved = json{
      {"scenario", cfg.scenario},
      {"lattice", cfg.lattice_doc},
      {"grid",
       {{"t_start_ns", cfg.grid.t_start_ns},
        {"t_end_ns", cfg.grid.t_end_ns},
        {"dt_ns", cfg.grid.dt_ns},
        {"sample_dt_ns", cfg.grid.sample_dt_ns}}},
      {"window",
       {{"start_ns", cfg.window_start_ns},
        {"end_ns", cfg.window_end_ns},
        {"step_ns", cfg.window_step_ns}}},
      {"shots",
       {{"shots_per_rep", cfg.shots.shots_per_rep},
        {"repetitions", cfg.shots.repetitions},
        {"analytic", cfg.shots.analytic},
        {"enabled", cfg.measure}}},
      {"seed", cfg.seed},
      {"state_count", cfg.state_count},
      {"t_probe_ns", cfg.t_probe_ns},
      {"gamma_list_mhz", cfg.gamma_list_mhz},
      {"fillings", fill_echo},
      {"h0_list_mhz", cfg.h0_list_mhz},
      {"r_list", cfg.r_list},
      {"steady_window",
       {{"start_ns", cfg.steady_window_start_ns}, {"end_ns", cfg.steady_window_end_ns}}},
      {"gamma0_mhz", cfg.gamma0_mhz},
      {"initial", cfg.initial},
      {"bridge_operator_form", form},
      {"occupations", cfg.occupations},
      {"out", cfg.out_dir}};
  if (cfg.t2_us) cfg.resolved["t2_us"] = *cfg.t2_us;
  if (!cfg.l_list.empty()) cfg.resolved["l_list"] = cfg.l_list;

  // Fail configuration errors now, not after files exist: build every lattice
  // this run will use.
  if (by_site_count) {
    for (int l : cfg.l_list) (void)cfg.lattice_for_sites(l);
  } else {
    (void)cfg.lattice();
  }
  return cfg;
}

ScenarioConfig load_scenario_config(const std::string& path, const CliOverrides& cli) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(path + ": " + e.what());
  }
  return parse_scenario_config(doc, cli);
}

nlohmann::json estimator_report_json(const EstimatorReport& rep) {
  return json{{"sigma_t2_naive_per_us2", rep.sigma_t2_naive},
              {"sigma_t2_mitigated_per_us2", rep.sigma_t2_mitigated},
              {"mean_sampling_variance_per_us2", rep.mean_sampling_variance},
              {"standard_error_per_us2", rep.standard_error},
              {"times", rep.K},
              {"repetitions", rep.R}};
}

RunWriter::RunWriter(std::string out_dir, nlohmann::json manifest_seed)
    : dir_(std::move(out_dir)), manifest_(std::move(manifest_seed)) {
  std::filesystem::create_directories(dir_);
  manifest_["status"] = "running";
  manifest_["outputs"] = json::object();
  started_ = std::chrono::steady_clock::now();
  write_file(dir_ + "/manifest.json", manifest_.dump(2) + "\n");
}

void RunWriter::note_output(const std::string& name) {
  manifest_["outputs"][name] = json::object();
}

void RunWriter::write_csv(const std::string& name, const std::vector<std::string>& columns,
                          const std::vector<std::vector<double>>& rows) {
  std::string bytes;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c) bytes += ',';
    bytes += columns[c];
  }
  bytes += '\n';
  for (const auto& row : rows) {
    if (row.size() != columns.size()) fail(name + ": row width does not match the header");
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) bytes += ',';
      bytes += fmt(row[c]);
    }
    bytes += '\n';
  }
  write_file(dir_ + "/" + name, bytes);
  note_output(name);
}

void RunWriter::write_record(const std::string& name, const MeasurementRecord& rec) {
  write_record_csv(rec, dir_ + "/" + name);
  note_output(name);
}

void RunWriter::write_json(const std::string& name, const nlohmann::json& doc) {
  write_file(dir_ + "/" + name, doc.dump(2) + "\n");
  note_output(name);
}

void RunWriter::merge_manifest(const nlohmann::json& extra) {
  for (auto it = extra.begin(); it != extra.end(); ++it) manifest_[it.key()] = it.value();
}

void RunWriter::finish() {
  for (auto& [name, entry] : manifest_["outputs"].items()) {
    const std::string bytes = read_file(dir_ + "/" + name);
    entry = json{{"bytes", bytes.size()}, {"fnv1a64", hex64(fnv1a64(bytes))}};
  }
  manifest_["status"] = "complete";
  const auto elapsed = std::chrono::steady_clock::now() - started_;
  manifest_["elapsed_s"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count() / 1000.0;
  write_file(dir_ + "/manifest.json", manifest_.dump(2) + "\n");
}

void run_evolve(const ScenarioConfig& cfg, RunWriter& w) {
  const LatticeSpec spec = cfg.lattice();
  const auto [num, den] = primary_filling(cfg);
  const int n = bath_a_particle_count(spec, num, den);
  const System sys = make_system(spec, n);
  w.merge_manifest({{"geometry", geometry_json(spec)}});

  StateVector psi0;
  if (cfg.initial == "alternating") {
    psi0 = fock_state(sys.basis, spread_pattern(spec, n));
  } else {
    // One uniformly drawn bath-A pattern from the fixed-filling sector.
    const auto pick = sample_distinct(bath_a_fock_configs(spec, num, den), 1, cfg.seed);
    psi0 = fock_state(sys.basis, pick.front());
  }

  ObservableRequest req;
  req.current = true;
  req.cut_current = true;
  req.energy = true;
  req.populations = true;
  req.occupations = cfg.occupations;
  req.form = cfg.current_form;

  std::map<std::string, TimeSeries> series;
  if (cfg.t2_us) {
    if (cfg.measure) fail("finite-shot sampling requires unitary evolution; unset t2_us");
    NoiseSpec noise;
    noise.t2_us = *cfg.t2_us;
    LindbladResult res = evolve_lindblad(sys, pure_density(psi0), noise, cfg.grid, req);
    series = std::move(res.series);
    w.merge_manifest({{"max_trace_error", res.max_trace_err},
                      {"max_hermiticity_error", res.max_hermiticity_err}});
  } else {
    EvolutionResult res = evolve_pure(sys, psi0, cfg.grid, req);
    series = std::move(res.series);
    w.merge_manifest({{"max_norm_error", res.max_norm_err}});
  }

  const auto label = [](const std::string& k) -> std::string {
    if (k == "current") return "current_per_us";
    if (k == "cut_current") return "cut_current_per_us";
    if (k == "energy") return "energy_rad_per_ns";
    return k;
  };
  std::vector<std::string> columns = {"t_ns"};
  std::vector<std::string> keys;
  for (const char* k : {"current", "cut_current", "energy", "pop_a", "pop_b"}) {
    if (series.count(k)) {
      keys.push_back(k);
      columns.push_back(label(k));
    }
  }
  for (int i = 0; i < spec.n_sites; ++i) {
    const std::string k = "occ_" + std::to_string(i);
    if (series.count(k)) {
      keys.push_back(k);
      columns.push_back(k);
    }
  }
  const auto& t = series.at("current").t_ns;
  std::vector<std::vector<double>> rows;
  rows.reserve(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::vector<double> row = {t[i]};
    for (const auto& k : keys) row.push_back(series.at(k).v[i]);
    rows.push_back(std::move(row));
  }
  w.write_csv("trace.csv", columns, rows);

  if (cfg.measure) {
    // Snapshot the trajectory at the fluctuation-window sample times and
    // emulate the finite-shot record there.
    const std::vector<double> times = cfg.fluctuation_times();
    if (times.front() < cfg.grid.t_start_ns - 1e-9 || times.back() > cfg.grid.t_end_ns + 1e-9) {
      fail("config.window: the fluctuation window must lie inside the grid");
    }
    std::vector<std::vector<cplx>> snaps;
    std::vector<cplx> psi = psi0.amps;
    if (times.front() > cfg.grid.t_start_ns + 1e-9) {
      TimeGrid lead(cfg.grid.t_start_ns, times.front(), cfg.grid.dt_ns,
                    times.front() - cfg.grid.t_start_ns);
      StateVector tmp{psi0.basis, psi};
      auto states = evolve_states(sys.h, tmp, lead);
      psi = std::move(states.back());
    }
    TimeGrid windowed(times.front(), times.back(), cfg.grid.dt_ns, cfg.window_step_ns);
    StateVector start{psi0.basis, psi};
    snaps = evolve_states(sys.h, start, windowed);

    const MeasurementRecord rec =
        build_measurement_record(spec, *sys.basis, snaps, times, cfg.shots);
    w.write_record("record.csv", rec);

    const EstimatorReport rep = estimator_report(rec);
    json est = estimator_report_json(rep);
    if (!cfg.shots.analytic) {
      const VarianceTestResult bf = brown_forsythe(rec);
      est["brown_forsythe"] = {{"statistic", bf.statistic},
                               {"dof", {bf.dof1, bf.dof2}},
                               {"p_value", bf.p_value}};
      const ChiSquareCheck chi = chi_square_variance_check(rec);
      est["sampling_variance_ks"] = chi.ks_distance;
    }
    w.write_json("estimators.json", est);

    const SpectrumReport ps = power_spectrum(rec.rep_means(), cfg.window_step_ns);
    std::vector<std::vector<double>> srows;
    for (std::size_t i = 0; i < ps.psd.size(); ++i) {
      srows.push_back({ps.frequency_mhz[i], ps.psd[i]});
    }
    w.write_csv("spectrum.csv", {"frequency_mhz", "psd_per_us2"}, srows);
  }
}

// Index of the sample at time t, which must lie on the sample grid.
int sample_index(const TimeSeries& s, double t_ns) {
  for (std::size_t i = 0; i < s.t_ns.size(); ++i) {
    if (std::abs(s.t_ns[i] - t_ns) < 1e-9) return static_cast<int>(i);
  }
  fail(fmt(t_ns) + " ns is not a sample point of the grid");
}

void run_typicality(const ScenarioConfig& cfg, RunWriter& w) {
  if (cfg.state_count < 2) fail("config.state_count: typicality needs at least 2 states");
  const auto [num, den] = primary_filling(cfg);
  json geo = json::object();
  std::vector<std::vector<double>> probe_rows, summary_rows;
  for (int l : cfg.l_list) {
    const LatticeSpec spec = cfg.lattice_for_sites(l);
    const int n = bath_a_particle_count(spec, num, den);
    const System sys = make_system(spec, n);
    geo[std::to_string(l)] = geometry_json(spec);

    const auto pool = bath_a_fock_configs(spec, num, den);
    const auto chosen = sample_distinct(pool, cfg.state_count, cfg.seed);

    ObservableRequest req;
    req.current = true;
    req.cut_current = false;
    req.energy = false;
    req.populations = false;
    req.form = cfg.current_form;

    std::vector<double> t_axis;
    std::vector<std::vector<double>> traces(chosen.size());
    std::vector<double> at_probe(chosen.size());
    int probe_k = -1;
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      const StateVector psi0 = fock_state(sys.basis, chosen[i]);
      const EvolutionResult res = evolve_pure(sys, psi0, cfg.grid, req);
      const TimeSeries& cur = res.series.at("current");
      if (i == 0) {
        t_axis = cur.t_ns;
        probe_k = sample_index(cur, cfg.t_probe_ns);
      }
      traces[i] = cur.v;
      at_probe[i] = cur.v[probe_k];
    }

    std::vector<std::string> cols = {"t_ns"};
    for (std::size_t i = 0; i < chosen.size(); ++i) cols.push_back("state_" + std::to_string(i));
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < t_axis.size(); ++k) {
      std::vector<double> row = {t_axis[k]};
      for (const auto& tr : traces) row.push_back(tr[k]);
      rows.push_back(std::move(row));
    }
    w.write_csv("typicality_trace_l" + std::to_string(l) + ".csv", cols, rows);

    double mean = 0.0;
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      mean += at_probe[i];
      probe_rows.push_back({static_cast<double>(l), static_cast<double>(i), at_probe[i]});
    }
    mean /= static_cast<double>(chosen.size());
    double var = 0.0;
    for (double v : at_probe) var += (v - mean) * (v - mean);
    var /= static_cast<double>(chosen.size() - 1);
    summary_rows.push_back({static_cast<double>(l), static_cast<double>(chosen.size()), mean,
                            std::sqrt(var)});
  }
  w.merge_manifest({{"geometry", geo}});
  w.write_csv("typicality.csv", {"l", "state", "current_at_probe_per_us"}, probe_rows);
  w.write_csv("typicality_summary.csv", {"l", "states", "mean_per_us", "std_per_us"},
              summary_rows);
}

void run_steadiness(const ScenarioConfig& cfg, RunWriter& w) {
  const auto [num, den] = primary_filling(cfg);
  const std::vector<double> times = cfg.fluctuation_times();
  json geo = json::object();
  std::vector<std::vector<double>> rows;
  std::vector<double> log_x, log_y;
  for (int l : cfg.l_list) {
    const LatticeSpec spec = cfg.lattice_for_sites(l);
    const int n = bath_a_particle_count(spec, num, den);
    const System sys = make_system(spec, n);
    geo[std::to_string(l)] = geometry_json(spec);

    // Deterministic start: the alternating half-filled bath-A pattern.
    const StateVector psi0 = fock_state(sys.basis, spread_pattern(spec, n));

    std::vector<cplx> amps = psi0.amps;
    if (times.front() > cfg.grid.t_start_ns + 1e-9) {
      TimeGrid lead(cfg.grid.t_start_ns, times.front(), cfg.grid.dt_ns,
                    times.front() - cfg.grid.t_start_ns);
      StateVector tmp;
      tmp.basis = sys.basis;
      tmp.amps = amps;
      amps = evolve_states(sys.h, tmp, lead).back();
    }
    TimeGrid windowed(times.front(), times.back(), cfg.grid.dt_ns, cfg.window_step_ns);
    StateVector start;
    start.basis = sys.basis;
    start.amps = amps;
    const auto snaps = evolve_states(sys.h, start, windowed);

    // Noise-free fluctuation straight from the exact currents.
    std::vector<double> exact(snaps.size());
    for (std::size_t k = 0; k < snaps.size(); ++k) {
      exact[k] = current_expectation(spec, *sys.basis, snaps[k], cfg.current_form);
    }
    const double noise_free = temporal_fluctuation(exact);

    const MeasurementRecord rec =
        build_measurement_record(spec, *sys.basis, snaps, times, cfg.shots);
    w.write_record("record_l" + std::to_string(l) + ".csv", rec);
    const EstimatorReport rep = estimator_report(rec);

    double dephased = std::numeric_limits<double>::quiet_NaN();
    if (cfg.t2_us) {
      NoiseSpec noise;
      noise.t2_us = *cfg.t2_us;
      ObservableRequest req;
      req.current = true;
      req.cut_current = false;
      req.energy = false;
      req.populations = false;
      req.form = cfg.current_form;
      const LindbladResult lr = evolve_lindblad(sys, pure_density(psi0), noise, cfg.grid, req);
      const TimeSeries& cur = lr.series.at("current");
      std::vector<double> damped;
      damped.reserve(times.size());
      for (double t : times) damped.push_back(cur.v[sample_index(cur, t)]);
      dephased = temporal_fluctuation(damped);
    }

    rows.push_back({static_cast<double>(l), static_cast<double>(rep.K),
                    static_cast<double>(rep.R), rep.sigma_t2_naive, rep.sigma_t2_mitigated,
                    rep.standard_error, noise_free, dephased});
    if (noise_free > 0.0) {
      log_x.push_back(static_cast<double>(l));
      log_y.push_back(std::log(noise_free));
    }
  }
  w.merge_manifest({{"geometry", geo}});
  w.write_csv("steadiness.csv",
              {"l", "k", "r", "sigma_t2_naive_per_us2", "sigma_t2_mitigated_per_us2",
               "standard_error_per_us2", "sigma_t2_noise_free_per_us2",
               "sigma_t2_dephased_per_us2"},
              rows);

  // Least-squares slope of log sigma_t^2 vs L, with its regression SE.
  if (log_x.size() >= 3) {
    const double nn = static_cast<double>(log_x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < log_x.size(); ++i) {
      mx += log_x[i];
      my += log_y[i];
    }
    mx /= nn;
    my /= nn;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < log_x.size(); ++i) {
      sxx += (log_x[i] - mx) * (log_x[i] - mx);
      sxy += (log_x[i] - mx) * (log_y[i] - my);
    }
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < log_x.size(); ++i) {
      const double r = log_y[i] - (intercept + slope * log_x[i]);
      ss_res += r * r;
    }
    const double se = std::sqrt(ss_res / (nn - 2.0) / sxx);
    w.merge_manifest({{"log_slope",
                       json{{"slope_per_site", slope},
                            {"stderr", se},
                            {"t_statistic", se > 0.0 ? slope / se : 0.0},
                            {"points", log_x.size()}}}});
  }
}

void run_tunability(const ScenarioConfig& cfg, RunWriter& w) {
  const LatticeSpec base = cfg.lattice();
  w.merge_manifest({{"geometry", geometry_json(base)}});
  const double w0 = cfg.steady_window_start_ns, w1 = cfg.steady_window_end_ns;

  struct Knob {
    std::string tag;        // filename fragment
    double value_a = 0.0;   // numeric echo for the summary table
    double value_b = 0.0;
    LatticeSpec spec;
    long long num, den;
  };
  std::vector<Knob> knobs;
  std::string axis;
  if (!cfg.fillings.empty()) {
    axis = "filling";
    for (const auto& [num, den] : cfg.fillings) {
      knobs.push_back({"filling_" + std::to_string(num) + "of" + std::to_string(den),
                       static_cast<double>(num), static_cast<double>(den), base, num, den});
    }
  } else if (!cfg.h0_list_mhz.empty()) {
    axis = "detuning";
    for (double h0 : cfg.h0_list_mhz) {
      knobs.push_back({"h0_" + num_tag(h0), h0, 0.0,
                       apply_tuning(base, TuningDirective::detuning(h0)), default_fill.first,
                       default_fill.second});
    }
  } else {
    axis = "coupling_scale";
    for (double r : cfg.r_list) {
      knobs.push_back({"r_" + num_tag(r), r, 0.0,
                       apply_tuning(base, TuningDirective::coupling_scale(r)),
                       default_fill.first, default_fill.second});
    }
  }

  std::vector<std::vector<double>> summary;
  for (const Knob& k : knobs) {
    const int n = bath_a_particle_count(k.spec, k.num, k.den);
    const System sys = make_system(k.spec, n);
    const auto pool = bath_a_fock_configs(k.spec, k.num, k.den);
    // One seed for the whole run: knobs that share a sector probe the same
    // random states, so their comparison is paired.
    const auto chosen = sample_distinct(pool, std::min<int>(cfg.state_count,
                                                            static_cast<int>(pool.size())),
                                        cfg.seed);
    ObservableRequest req;
    req.current = true;
    req.cut_current = false;
    req.energy = false;
    req.populations = false;
    req.form = cfg.current_form;

    std::vector<double> t_axis, mean_v;
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      const StateVector psi0 = fock_state(sys.basis, chosen[i]);
      const EvolutionResult res = evolve_pure(sys, psi0, cfg.grid, req);
      const TimeSeries& cur = res.series.at("current");
      if (i == 0) {
        t_axis = cur.t_ns;
        mean_v.assign(cur.v.size(), 0.0);
      }
      for (std::size_t j = 0; j < cur.v.size(); ++j) mean_v[j] += cur.v[j];
    }
    for (double& v : mean_v) v /= static_cast<double>(chosen.size());

    std::vector<std::vector<double>> rows;
    for (std::size_t j = 0; j < t_axis.size(); ++j) rows.push_back({t_axis[j], mean_v[j]});
    w.write_csv("tunability_trace_" + k.tag + ".csv", {"t_ns", "current_per_us"}, rows);

    TimeSeries avg;
    avg.t_ns = t_axis;
    avg.v = mean_v;
    const double wm = steady_value(avg, w0, w1);
    summary.push_back({k.value_a, k.value_b, wm, std::abs(wm),
                       static_cast<double>(chosen.size())});
  }

  const std::vector<std::string> cols =
      axis == "filling"
          ? std::vector<std::string>{"fill_num", "fill_den", "window_mean_per_us",
                                     "abs_window_mean_per_us", "states"}
          : std::vector<std::string>{axis == "detuning" ? "h0_mhz" : "r", "unused",
                                     "window_mean_per_us", "abs_window_mean_per_us", "states"};
  w.write_csv("tunability.csv", cols, summary);

  // Ordering report: values ranked by their window-averaged current.
  std::vector<std::size_t> order(summary.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return summary[a][2] > summary[b][2]; });
  json ranked = json::array();
  for (std::size_t i : order) {
    ranked.push_back(json{{"tag", knobs[i].tag}, {"window_mean_per_us", summary[i][2]}});
  }
  w.merge_manifest({{"axis", axis}, {"ordering", ranked}});
  w.write_json("tunability_summary.json", json{{"axis", axis}, {"ordering", ranked}});
}

void run_gamma_scan(const ScenarioConfig& cfg, RunWriter& w) {
  const LatticeSpec base = cfg.lattice();
  w.merge_manifest({{"geometry", geometry_json(base)}});
  const auto [num, den] = primary_filling(cfg);
  const double w0 = cfg.steady_window_start_ns, w1 = cfg.steady_window_end_ns;

  EnsembleMode mode;
  mode.sample_count = cfg.state_count;
  mode.seed = cfg.seed;
  ObservableRequest req;
  req.current = true;
  req.cut_current = true;
  req.energy = false;
  req.populations = true;
  req.form = cfg.current_form;

  // Quadratic weak-link model calibrated once: bridge current at gamma0 and
  // the gamma-independent cross-channel leak at gamma = 0.
  const EnsemblePrediction pred =
      calibrate_prediction(base, num, den, cfg.gamma0_mhz, cfg.grid, w0, w1, mode);
  w.write_json("prediction.json", pred.to_json());

  std::vector<std::vector<double>> scan_rows;
  for (double g : cfg.gamma_list_mhz) {
    if (g < 0.0) fail("config.gamma_list_mhz: couplings must be non-negative");
    const LatticeSpec spec = apply_tuning(base, TuningDirective::bridge(g));
    const EnsembleResult res = ensemble_average(spec, num, den, cfg.grid, req, mode);

    const TimeSeries& cur = res.series.at("current");
    const TimeSeries& pop = res.series.at("pop_b");
    const double level = scale_prediction(pred.i0, g, pred.gamma0_mhz);
    std::vector<std::vector<double>> rows;
    rows.reserve(cur.t_ns.size());
    for (std::size_t i = 0; i < cur.t_ns.size(); ++i) {
      const double t_us = cur.t_ns[i] / 1000.0;
      rows.push_back({cur.t_ns[i], cur.v[i], pop.v[i], level,
                      predict_population(pred.i0, pred.ix, g, pred.gamma0_mhz, t_us)});
    }
    w.write_csv("gamma_trace_" + num_tag(g) + ".csv",
                {"t_ns", "current_per_us", "pop_b", "predicted_current_per_us",
                 "predicted_pop_b"},
                rows);
    scan_rows.push_back({g, steady_value(cur, w0, w1), level,
                         static_cast<double>(res.sector_size),
                         static_cast<double>(res.states_used)});
  }
  w.write_csv("gamma_scan.csv",
              {"gamma_mhz", "window_current_per_us", "predicted_per_us", "sector_size",
               "states_used"},
              scan_rows);
}

void run_ensemble(const ScenarioConfig& cfg, RunWriter& w) {
  const LatticeSpec spec = cfg.lattice();
  w.merge_manifest({{"geometry", geometry_json(spec)}});
  const auto [num, den] = primary_filling(cfg);

  EnsembleMode mode;
  mode.sample_count = cfg.state_count;
  mode.seed = cfg.seed;

  ObservableRequest req;
  req.current = true;
  req.cut_current = true;
  req.energy = true;
  req.populations = true;
  req.form = cfg.current_form;

  const EnsembleResult res = ensemble_average(spec, num, den, cfg.grid, req, mode);
  const auto& t = res.series.at("current").t_ns;
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < t.size(); ++i) {
    rows.push_back({t[i], res.series.at("current").v[i], res.series.at("cut_current").v[i],
                    res.series.at("energy").v[i], res.series.at("pop_a").v[i],
                    res.series.at("pop_b").v[i]});
  }
  w.write_csv("ensemble_trace.csv",
              {"t_ns", "current_per_us", "cut_current_per_us", "energy_rad_per_ns", "pop_a",
               "pop_b"},
              rows);
  w.merge_manifest({{"sector_size", res.sector_size},
                    {"states_used", res.states_used},
                    {"exhaustive", res.exhaustive}});

  // Calibrate the quadratic weak-link model over a grid that just covers the
  // steady window, then predict the bath-B filling curve.
  TimeGrid cal(cfg.grid.t_start_ns, cfg.steady_window_end_ns, cfg.grid.dt_ns,
               cfg.grid.sample_dt_ns);
  const EnsemblePrediction pred =
      calibrate_prediction(spec, num, den, cfg.gamma0_mhz, cal, cfg.steady_window_start_ns,
                           cfg.steady_window_end_ns, mode);
  json pj = pred.to_json();
  pj["gamma_mhz"] = spec.bridge_f_mhz();
  pj["predicted_n_b_at_1us"] =
      predict_population(pred.i0, pred.ix, spec.bridge_f_mhz(), pred.gamma0_mhz, 1.0);
  w.write_json("prediction.json", pj);
}

int run_scenario(const ScenarioConfig& cfg, const CliOverrides& cli) {
  if (cli.threads) {
    omp_set_num_threads(*cli.threads);
  } else if (const char* env = std::getenv("LADDERFLUX_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
  }

  json cli_echo = json::object();
  if (cli.seed) cli_echo["seed"] = *cli.seed;
  if (cli.out_dir) cli_echo["out"] = *cli.out_dir;
  if (cli.threads) cli_echo["threads"] = *cli.threads;
  if (cli.analytic) cli_echo["analytic"] = true;
  if (cli.t2_us) cli_echo["t2_us"] = *cli.t2_us;

  json manifest = {{"tool", "ladderflux"}, {"version", kToolVersion},
                   {"scenario", cfg.scenario}, {"seed", cfg.seed},
                   {"threads", omp_get_max_threads()}, {"config", cfg.resolved},
                   {"cli", cli_echo}};
  RunWriter w(cfg.out_dir, manifest);
  if (cfg.scenario == "evolve") run_evolve(cfg, w);
  else if (cfg.scenario == "typicality") run_typicality(cfg, w);
  else if (cfg.scenario == "steadiness") run_steadiness(cfg, w);
  else if (cfg.scenario == "tunability") run_tunability(cfg, w);
  else if (cfg.scenario == "gamma_scan") run_gamma_scan(cfg, w);
  else if (cfg.scenario == "ensemble") run_ensemble(cfg, w);
  else fail("config.scenario: unknown scenario '" + cfg.scenario + "'");
  w.finish();
  return 0;
}

}  // namespace ladderflux
