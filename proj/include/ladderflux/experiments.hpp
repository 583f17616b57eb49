#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ladderflux/ensemble.hpp"
#include "ladderflux/measurement.hpp"
#include "ladderflux/propagation.hpp"
#include "ladderflux/stats.hpp"

namespace ladderflux {

inline constexpr const char* kToolVersion = "0.1.0";

// Fully-resolved scenario description: the config document with defaults
// applied plus everything the runners need. Parsing throws with the offending
// key's path; nothing is written to disk on a parse failure.
struct ScenarioConfig {
  std::string scenario;
  nlohmann::json lattice_doc;       // columns/couplings block (without n_sites)
  std::vector<int> l_list;          // scenarios keyed by total site count
  TimeGrid grid{0.0, 1000.0, 0.1, 1.0};
  double window_start_ns = 100.0, window_end_ns = 1000.0, window_step_ns = 5.0;
  ShotPlan shots;                   // seed is filled from the global seed
  std::uint64_t seed = 1;
  int state_count = 1;
  double t_probe_ns = 200.0;
  std::vector<double> gamma_list_mhz;
  std::vector<std::pair<long long, long long>> fillings;
  std::vector<double> h0_list_mhz;
  std::vector<double> r_list;
  std::optional<double> t2_us;
  double gamma0_mhz = 0.5;
  double steady_window_start_ns = 60.0, steady_window_end_ns = 150.0;
  CurrentForm current_form = CurrentForm::Bosonic;
  std::string initial = "alternating";  // or "random"
  bool measure = false;                 // evolve: emit a finite-shot record
  bool occupations = false;             // evolve: per-site columns in the trace
  std::string out_dir;
  nlohmann::json resolved;              // echo for the manifest

  LatticeSpec lattice_for_sites(int n_sites) const;
  LatticeSpec lattice() const;          // when the config fixes the geometry itself
  std::vector<double> fluctuation_times() const;
};

// Command-line overrides, echoed into the manifest.
struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
  bool analytic = false;
  std::optional<double> t2_us;
};

ScenarioConfig load_scenario_config(const std::string& path, const CliOverrides& cli);
ScenarioConfig parse_scenario_config(const nlohmann::json& doc, const CliOverrides& cli);

// Deterministic initial bath-A pattern as per-site occupations: `count`
// particles placed checkerboard-style (even column+leg parity first, so half
// filling alternates across both legs), spilling onto the odd-parity sites.
std::vector<int> spread_pattern(const LatticeSpec& spec, int count);

nlohmann::json estimator_report_json(const EstimatorReport& rep);

// Output collector: writes the manifest first, then data files, then rewrites
// the manifest with per-file checksums. CSV cells are shortest-round-trip
// formatted, so identical runs produce identical bytes.
class RunWriter {
 public:
  RunWriter(std::string out_dir, nlohmann::json manifest_seed);
  void write_csv(const std::string& name, const std::vector<std::string>& columns,
                 const std::vector<std::vector<double>>& rows);
  void write_record(const std::string& name, const MeasurementRecord& rec);
  void write_json(const std::string& name, const nlohmann::json& doc);
  void merge_manifest(const nlohmann::json& extra);
  void finish();  // rewrites the manifest with checksums and elapsed time
  const std::string& dir() const { return dir_; }

 private:
  void note_output(const std::string& name);
  std::string dir_;
  nlohmann::json manifest_;
  std::chrono::steady_clock::time_point started_;
};

int run_scenario(const ScenarioConfig& cfg, const CliOverrides& cli);

// Individual runners (exposed for tests).
void run_evolve(const ScenarioConfig& cfg, RunWriter& w);
void run_typicality(const ScenarioConfig& cfg, RunWriter& w);
void run_steadiness(const ScenarioConfig& cfg, RunWriter& w);
void run_tunability(const ScenarioConfig& cfg, RunWriter& w);
void run_gamma_scan(const ScenarioConfig& cfg, RunWriter& w);
void run_ensemble(const ScenarioConfig& cfg, RunWriter& w);

}  // namespace ladderflux
