#include "flexgrid/commands.hpp"

#include <cstdlib>
#include <iomanip>
#include <string>

#include "flexgrid/error.hpp"

namespace flexgrid {

namespace {

template <class Fn>
int guarded(std::ostream& log, Fn&& fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    log << "error: " << e.what() << '\n';
    return exit_code::kValidation;
  } catch (const InfeasibleAnchorError& e) {
    log << "error: " << e.what() << '\n';
    return exit_code::kInfeasibleAnchor;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return exit_code::kFailed;
  }
}

FlexContext context_for(const RunConfig& c) {
  validate(c);
  return FlexContext::build(load_feeder(c.feeder), c.mode, c.band);
}

double mw(const FlexContext& ctx, double pu) { return ctx.model.to_kw(pu) / 1000.0; }

}  // namespace

int default_workers() {
  const char* env = std::getenv("FLEXGRID_WORKERS");
  if (!env) return 1;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  return (end != env && *end == '\0' && n > 0 && n < 1024) ? static_cast<int>(n) : 1;
}

int cmd_worst_case(const RunConfig& c, std::ostream& log) {
  return guarded(log, [&] {
    const FlexContext ctx = context_for(c);
    const WorstCaseTable t = worst_case_limits(ctx, c.flex.direction, c.flex.workers, c.flex.bisection_tol);
    write_limits_csv(c.out_dir / "limits_per_node.csv", node_limit_records(ctx, t));
    write_text(c.out_dir / "worst_case.json", worst_case_json(ctx, c, t));
    log << std::fixed << std::setprecision(4) << "worst-case range [" << mw(ctx, t.range_lower) << ", "
        << mw(ctx, t.range_upper) << "] MW of available [" << mw(ctx, ctx.dp_min) << ", "
        << mw(ctx, ctx.dp_max) << "]\n";
    if (!t.binding_upper.empty())
      log << "binding upper: " << t.scenarios[t.binding_upper.front()].scenario.describe(ctx.index) << '\n';
    if (!t.binding_lower.empty())
      log << "binding lower: " << t.scenarios[t.binding_lower.front()].scenario.describe(ctx.index) << '\n';
    return exit_code::kOk;
  });
}

int cmd_solve(const RunConfig& c, std::ostream& log) {
  return guarded(log, [&] {
    const FlexContext ctx = context_for(c);
    const FlexibilityResult r = run_iterative(ctx, c.flex);
    write_text(c.out_dir / "result.json", result_json(ctx, c, r));
    write_text(c.out_dir / "timings.json", timings_json(r));
    log << std::fixed << std::setprecision(4) << "range [" << mw(ctx, r.decision.dp_minus) << ", "
        << mw(ctx, r.decision.dp_plus) << "] MW, " << r.log.size() << " iteration(s), "
        << (r.converged ? "converged" : "NOT converged (worst-case fallback)") << '\n';
    return r.converged ? exit_code::kOk : exit_code::kNotConverged;
  });
}

int cmd_verify(const RunConfig& c, const std::filesystem::path& result, std::ostream& log) {
  return guarded(log, [&] {
    const StoredResult stored = parse_result(read_text(result), result.string());
    RunConfig rc = c;
    rc.mode = stored.mode;
    rc.band = stored.band;
    rc.flex.direction = stored.direction;
    const FlexContext ctx = context_for(rc);
    if (stored.setpoints.size() != ctx.num_setpoints())
      throw ValidationError(result.string() + ": setpoint count does not match the feeder");
    const UpperDecision d = decision_of(stored);
    check_decision(ctx, d, 1e-7);

    OracleOptions opt;
    opt.direction = rc.flex.direction;
    opt.workers = rc.flex.workers;
    opt.grid_points = rc.grid_points;
    const OracleReport rep = verify_setpoints_nonlinear(ctx, d, opt);
    write_text(c.out_dir / "oracle_report.json", oracle_report_json(ctx, d, rep));
    log << std::scientific << std::setprecision(3) << "max violation " << rep.max_violation
        << " p.u., max linearization error " << rep.max_linearization_error << " p.u.: "
        << (rep.passed ? "PASS" : "FAIL") << '\n';
    for (const std::string& v : rep.violating) log << "  violation at " << v << '\n';
    return rep.passed ? exit_code::kOk : exit_code::kFailed;
  });
}

int cmd_plotdata(const std::filesystem::path& result, const std::optional<std::filesystem::path>& report,
                 const std::filesystem::path& out_dir, std::ostream& log) {
  return guarded(log, [&] {
    const StoredResult stored = parse_result(read_text(result), result.string());
    std::vector<MagnitudeRecord> mags;
    if (report) mags = parse_oracle_magnitudes(read_text(*report), report->string());
    write_limits_csv(out_dir / "limits_per_node.csv", stored.nodes);
    write_setpoints_csv(out_dir / "setpoints.csv", stored.mode, stored.setpoints);
    write_magnitudes_csv(out_dir / "magnitudes.csv", mags);
    log << "wrote " << stored.nodes.size() << " node rows, " << stored.setpoints.size() << " setpoints, "
        << mags.size() << " magnitude rows to " << out_dir.string() << '\n';
    return exit_code::kOk;
  });
}

}  // namespace flexgrid
