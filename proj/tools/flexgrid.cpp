// flexgrid command-line front end.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "flexgrid/commands.hpp"
#include "flexgrid/error.hpp"

using namespace flexgrid;

namespace {

struct Options {
  std::string feeder;
  std::string mode = "constant-pf";
  double vmin = 0.9;
  double vmax = 1.1;
  std::string direction = "both";
  int workers = 1;
  std::string out = ".";
  double epsilon = 1e-4;
  double feasibility_tol = 1e-6;
  double bisection_tol = 1e-6;
  double lambda_box = 1e3;
  int node_limit = 200;
  double time_limit = 60.0;
  int grid_points = 11;
  std::string result;
  std::string report;
};

void add_run_options(CLI::App* sub, Options& o, bool needs_mode) {
  sub->add_option("--feeder", o.feeder, "Feeder JSON file")->required()->check(CLI::ExistingFile);
  if (needs_mode) {
    sub->add_option("--mode", o.mode, "constant-pf | constant-q | volt-var");
    sub->add_option("--vmin", o.vmin, "Lower voltage limit, p.u.");
    sub->add_option("--vmax", o.vmax, "Upper voltage limit, p.u.");
    sub->add_option("--direction", o.direction, "both | overvoltage-only | undervoltage-only");
  }
  sub->add_option("--workers", o.workers, "Worker threads (default: $FLEXGRID_WORKERS or 1)");
  sub->add_option("--out", o.out, "Output directory");
  sub->add_option("--epsilon", o.epsilon, "Relative branch-and-bound gap");
  sub->add_option("--feasibility-tol", o.feasibility_tol, "Voltage tolerance of the feasibility check, p.u.");
  sub->add_option("--bisection-tol", o.bisection_tol, "Bisection tolerance relative to available flexibility");
  sub->add_option("--lambda-box", o.lambda_box, "Initial bound on dual variables in products");
  sub->add_option("--node-limit", o.node_limit, "Branch-and-bound node limit per iteration");
  sub->add_option("--time-limit", o.time_limit, "Branch-and-bound time limit per iteration, s");
}

RunConfig to_config(const Options& o) {
  RunConfig c;
  c.feeder = o.feeder;
  c.mode = parse_mode(o.mode);
  c.band = {o.vmin, o.vmax};
  c.flex.direction = parse_direction(o.direction);
  c.flex.workers = o.workers;
  c.flex.epsilon = o.epsilon;
  c.flex.feasibility_tol = o.feasibility_tol;
  c.flex.bisection_tol = o.bisection_tol;
  c.flex.lambda_box = o.lambda_box;
  c.flex.node_limit = o.node_limit;
  c.flex.time_limit_seconds = o.time_limit;
  c.grid_points = o.grid_points;
  c.out_dir = o.out;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Secure aggregate flexibility of unbalanced distribution feeders"};
  app.require_subcommand(1);
  Options o;
  o.workers = default_workers();

  auto* worst = app.add_subcommand("worst-case", "Per-node limits with worst-case inverter setpoints");
  add_run_options(worst, o, true);
  auto* solve = app.add_subcommand("solve", "Flexibility range and setpoints");
  add_run_options(solve, o, true);
  auto* verify = app.add_subcommand("verify", "Check a result against nonlinear power flow");
  add_run_options(verify, o, false);
  verify->add_option("--result", o.result, "result.json from solve")->required()->check(CLI::ExistingFile);
  verify->add_option("--grid-points", o.grid_points, "Grid points per flexible device");
  auto* plot = app.add_subcommand("plotdata", "CSV tables for plotting");
  plot->add_option("--result", o.result, "result.json from solve")->required()->check(CLI::ExistingFile);
  plot->add_option("--report", o.report, "oracle_report.json from verify")->check(CLI::ExistingFile);
  plot->add_option("--out", o.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code::kValidation;
  }

  try {
    if (plot->parsed()) {
      std::optional<std::filesystem::path> report;
      if (!o.report.empty()) report = o.report;
      return cmd_plotdata(o.result, report, o.out, std::cerr);
    }
    const RunConfig c = to_config(o);
    if (worst->parsed()) return cmd_worst_case(c, std::cerr);
    if (solve->parsed()) return cmd_solve(c, std::cerr);
    return cmd_verify(c, o.result, std::cerr);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code::kValidation;
  }
}
