/*
 * Copyright (c) 2026 mgsim contributors
 * SPDX-License-Identifier: Apache-2.0
 */
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mgsim/engine.hpp"
#include "mgsim/errors.hpp"
#include "mgsim/log.hpp"
#include "mgsim/scenario_io.hpp"
#include "mgsim/validation.hpp"

namespace {

using namespace mgsim;

std::vector<double> parse_sweep_list(const std::string& s) {
  std::vector<double> eps;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      eps.push_back(v);
    } catch (const std::exception&) {
      throw InputError("--sweep: '" + item + "' is not a number");
    }
  }
  if (eps.empty()) throw InputError("--sweep: empty list");
  return eps;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(path + ": cannot open for writing");
  out << content;
  if (!out) throw InputError(path + ": write failed");
}

struct Options {
  std::string scenario_path;
  std::string out_path;
  std::string model;
  std::string method;
  double dt = 0.0;
  std::string sweep = "1,0.1,0.01";
  std::uint64_t seed = 0;
};

void apply_overrides(Scenario& sc, const Options& opt) {
  if (opt.model == "full") sc.settings.model = ModelKind::Full;
  if (opt.model == "reduced") sc.settings.model = ModelKind::Reduced;
  if (opt.method == "rk4") sc.settings.method = IntegrationMethod::Rk4;
  if (opt.method == "trapezoidal")
    sc.settings.method = IntegrationMethod::Trapezoidal;
  if (opt.dt > 0.0) sc.settings.dt = opt.dt;
}

int run_simulate(const Options& opt) {
  Scenario sc = parse_scenario(opt.scenario_path);
  apply_overrides(sc, opt);
  const SimulationOutput out = simulate_scenario(sc);
  for (const auto& ev : out.stats.log)
    LOG_INFO("t=%.6g: %s", ev.time, ev.what.c_str());
  if (out.stats.clamp_events > 0)
    LOG_WARN("voltage clamps engaged %ld times during load current division",
             out.stats.clamp_events);

  std::ostringstream csv;
  write_trajectory_csv(csv, out);
  if (opt.out_path.empty())
    std::cout << csv.str();
  else
    write_file(opt.out_path, csv.str());

  if (!out.completed) {
    std::cerr << "mgsim: simulation aborted: " << out.abort_reason << "\n";
    return 1;
  }
  return 0;
}

int run_powerflow(const Options& opt) {
  Scenario sc = parse_scenario(opt.scenario_path);
  apply_overrides(sc, opt);
  const Equilibrium eq = find_equilibrium(sc);
  std::ostringstream table;
  write_powerflow_table(table, sc, eq);
  if (opt.out_path.empty())
    std::cout << table.str();
  else
    write_file(opt.out_path, table.str());
  return 0;
}

int run_validate(const Options& opt) {
  Scenario sc = parse_scenario(opt.scenario_path);
  apply_overrides(sc, opt);
  const std::vector<double> eps = parse_sweep_list(opt.sweep);
  const ValidationBundle bundle = run_validation(sc, eps, opt.seed);

  std::ostringstream text, csv;
  write_validation_text(text, bundle);
  write_validation_csv(csv, bundle);
  if (opt.out_path.empty()) {
    std::cout << text.str();
  } else {
    write_file(opt.out_path + ".txt", text.str());
    write_file(opt.out_path + ".csv", csv.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mgsim: two-fidelity microgrid simulation toolkit"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--scenario", opt.scenario_path, "scenario JSON file")
        ->required();
    cmd->add_option("--out", opt.out_path,
                    "output path (stdout when omitted)");
    cmd->add_option("--model", opt.model, "model override")
        ->check(CLI::IsMember({"full", "reduced"}));
    cmd->add_option("--dt", opt.dt, "time step override (s)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--method", opt.method, "integrator override")
        ->check(CLI::IsMember({"rk4", "trapezoidal"}));
  };

  CLI::App* simulate =
      app.add_subcommand("simulate", "integrate a scenario, write a CSV trajectory");
  add_common(simulate);
  CLI::App* powerflow =
      app.add_subcommand("powerflow", "solve the droop equilibrium, write a table");
  add_common(powerflow);
  CLI::App* validate = app.add_subcommand(
      "validate", "run the model-reduction and conservation checks");
  add_common(validate);
  validate->add_option("--sweep", opt.sweep,
                       "comma-separated epsilon list (default 1,0.1,0.01)");
  validate->add_option("--seed", opt.seed,
                       "seed for the randomized cross-checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exit 0
  } catch (const CLI::ParseError& e) {
    std::cerr << "mgsim: " << e.what() << "\n";
    return 2;
  }

  try {
    if (simulate->parsed()) return run_simulate(opt);
    if (powerflow->parsed()) return run_powerflow(opt);
    if (validate->parsed()) return run_validate(opt);
    return 2;
  } catch (const InputError& e) {
    std::cerr << "mgsim: input error: " << e.what() << "\n";
    return 2;
  } catch (const ModelError& e) {
    std::cerr << "mgsim: model error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "mgsim: error: " << e.what() << "\n";
    return 1;
  }
}
