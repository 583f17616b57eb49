// Command-line front end: one subcommand per scenario, a JSON config file,
// and a handful of overrides. All heavy lifting lives in the core library.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ladderflux/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"ladderflux: transport in a weakly linked hard-core boson ladder"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  int threads = 0;
  bool analytic = false;
  double t2_us = 0.0;

  const std::vector<std::pair<const char*, const char*>> scenarios = {
      {"evolve", "Single-state time evolution with optional finite-shot readout"},
      {"typicality", "Spread of the bridge current over random sector states, by lattice size"},
      {"steadiness", "Temporal current fluctuations of random states, by lattice size"},
      {"tunability", "Steady current versus filling, bath-B detuning, and coupling scale"},
      {"gamma_scan", "Steady current versus the weak-link coupling"},
      {"ensemble", "Sector-averaged evolution and the quadratic transport prediction"}};
  for (const auto& [name, blurb] : scenarios) {
    CLI::App* sub = app.add_subcommand(name, blurb);
    sub->add_option("--config", config_path, "JSON scenario configuration")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override the configured RNG seed");
    sub->add_option("--out", out_dir, "Override the output directory");
    sub->add_option("--threads", threads, "OpenMP thread count (else LADDERFLUX_THREADS)")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--analytic", analytic, "Exact expectation values instead of shot noise");
    sub->add_option("--t2-us", t2_us, "Pure-dephasing time in us (density-matrix evolution)")
        ->check(CLI::PositiveNumber);
  }

  CLI11_PARSE(app, argc, argv);
  CLI::App* sub = app.get_subcommands().front();

  ladderflux::CliOverrides cli;
  if (sub->count("--seed")) cli.seed = seed;
  if (sub->count("--out")) cli.out_dir = out_dir;
  if (sub->count("--threads")) cli.threads = threads;
  if (sub->count("--t2-us")) cli.t2_us = t2_us;
  cli.analytic = analytic;

  try {
    std::ifstream in(config_path);
    nlohmann::json doc = nlohmann::json::parse(in);
    if (doc.is_object() && doc.contains("scenario")) {
      if (doc["scenario"] != sub->get_name()) {
        std::cerr << "error: config declares scenario '" << doc["scenario"]
                  << "' but the subcommand is '" << sub->get_name() << "'\n";
        return 1;
      }
    } else if (doc.is_object()) {
      doc["scenario"] = sub->get_name();
    }
    const ladderflux::ScenarioConfig cfg = ladderflux::parse_scenario_config(doc, cli);
    return ladderflux::run_scenario(cfg, cli);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
