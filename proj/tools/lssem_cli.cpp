#include "lssem/bench.hpp"

#include "CLI11.hpp"

#include <iostream>

using namespace lssem;

namespace {

int run_solve(const RunConfig& config) {
  if (config.orders.size() != 1) {
    std::cerr << "solve takes exactly one W value; use sweep for a list\n";
    return kExitUsage;
  }
  const ProblemSpec problem = config_problem(config);
  const Mesh mesh = build_mesh(problem);
  SweepResult result;
  try {
    result.rows.push_back(run_order(mesh, problem, config, config.orders.front()));
    if (!result.rows.back().report.converged) result.exit_code = kExitNonconvergence;
  } catch (const std::runtime_error& e) {
    result.failure = e.what();
    result.exit_code = kExitNonconvergence;
  }
  std::cout << sweep_report(config, result) << '\n';
  return result.exit_code;
}

int run_sweep_command(const RunConfig& config) {
  const SweepResult result = run_sweep(config);
  std::cout << kCsvHeader << '\n';
  for (const auto& row : result.rows) std::cout << csv_row(row, config.record_seconds) << '\n';
  if (result.slope_u) std::cout << "slope log10 E_u: " << result.slope_u->slope << '\n';
  if (!result.failure.empty()) std::cerr << result.failure << '\n';
  std::cerr << "outputs in " << config.output_dir.string() << '\n';
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Least-squares spectral element Stokes interface solver"};
  app.require_subcommand(1);
  std::string solve_path, sweep_path;
  auto* solve = app.add_subcommand("solve", "Solve at a single W and print a report");
  solve->add_option("--config", solve_path, "run config (key = value)")->required();
  auto* sweep = app.add_subcommand("sweep", "Solve over the W list and write CSV, plot data and a report");
  sweep->add_option("--config", sweep_path, "run config (key = value)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (solve->parsed()) return run_solve(load_config(solve_path));
    return run_sweep_command(load_config(sweep_path));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  }
}
