#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "flexgrid/bilinear.hpp"
#include "flexgrid/follower.hpp"

namespace flexgrid {

/// Bounds on the aggregate deviation, kW.
struct FlexBounds {
  double lower_kw = 0.0;
  double upper_kw = 0.0;
};

/// Sums of device headroom: upper = sum(pG_max - pG + pL_max - pL), lower
/// likewise with the lower limits (load minimum clamped at zero).
FlexBounds available_flexibility_bounds(const std::vector<LoadSpec>& loads,
                                        const std::vector<InverterSpec>& inverters);

/// Largest t in [0, t_max] such that the follower's optimum stays inside the
/// band when its aggregate bound is t (positive case) or -t (negative case).
/// `u` supplies the setpoints; its dp entries are overwritten.  Returns 0
/// when even t = 0 is inadmissible.  Exact up to `tol` because the follower
/// optimum is monotone in t.
struct BisectionResult {
  double limit = 0.0;
  double magnitude = 0.0;  ///< follower optimum at `limit`
  bool feasible = true;    ///< false when t = 0 is already inadmissible
  int solves = 0;
};
BisectionResult bisect_limit(const FollowerProblem& f, std::vector<double> u, double t_max,
                             VoltageBand band, double tol);

struct ScenarioLimit {
  Scenario scenario;
  double limit = 0.0;      ///< dp+ (>= 0) or dp- (<= 0), p.u.
  double magnitude = 0.0;  ///< worst |v| at the limit
};

struct WorstCaseTable {
  std::vector<ScenarioLimit> scenarios;
  std::vector<double> node_upper;  ///< per node, p.u.
  std::vector<double> node_lower;
  double range_lower = 0.0;
  double range_upper = 0.0;
  std::vector<std::size_t> binding_upper;  ///< scenario positions attaining range_upper
  std::vector<std::size_t> binding_lower;
};

/// Bisection per scenario with fixed worst-case setpoints (constant-q leaves
/// q to the follower).  Upper limit of a node = min over its positive
/// scenarios, lower limit = max over its negative ones; global range =
/// (max of lower limits, min of upper limits).
WorstCaseTable worst_case_limits(const FlexContext& ctx, Direction direction, int workers,
                                 double rel_tol = 1e-6);

struct SingleLevelOptions {
  double lambda_box = 1e3;
  Interval magnitude_box{0.5, 1.5};
};

/// Strong-duality single-level program for a set of followers.  Variables
/// 0..1 are dp+, dp-, then one setpoint per inverter, then one block per
/// follower: primal copy, row duals, bound duals.
struct SingleLevelProgram {
  struct Block {
    FollowerProblem follower;
    std::size_t x0 = 0;       ///< first primal variable
    std::size_t lambda0 = 0;  ///< first row dual
    std::vector<std::size_t> mu_upper;  ///< per primal variable, npos if bound infinite
    std::vector<std::size_t> mu_lower;
    std::size_t duality_row = 0;
    std::vector<std::size_t> boxed_duals;  ///< row duals that appear in products
  };
  BilinearProgram bp;
  std::vector<Block> blocks;
  std::size_t primal_terms = 0;   ///< products in primal rows
  std::size_t dual_terms = 0;     ///< products in dual rows
  std::size_t duality_terms = 0;  ///< products in strong-duality rows
  std::size_t num_setpoints = 0;
};

SingleLevelProgram assemble_single_level(const FlexContext& ctx, const std::vector<Scenario>& followers,
                                         const SingleLevelOptions& options = {});

UpperDecision decision_of(const SingleLevelProgram& sl, const std::vector<double>& x, InverterMode mode);

/// Full single-level point for a decision, built by solving every follower
/// and reading off its certificate.  nullopt if a follower is infeasible.
std::optional<std::vector<double>> single_level_point(const SingleLevelProgram& sl,
                                                      const UpperDecision& d);

/// |primal - dual| / (1 + |primal|) of each block at x.
std::vector<double> duality_gaps(const SingleLevelProgram& sl, const std::vector<double>& x);

struct Violation {
  Scenario scenario;
  double magnitude = 0.0;
  double excess = 0.0;  ///< distance outside the band, p.u.
};

/// Solves every follower admitted by `direction` at the decision and returns
/// those whose worst |v| leaves [vmin - tol, vmax + tol], largest excess
/// first.  Throws NumericalError if a follower is infeasible.
std::vector<Violation> feasibility_check(const FlexContext& ctx, const UpperDecision& d,
                                         Direction direction, int workers, double tol = 1e-6);

/// Setpoints that reproduce the anchor's inverter reactive outputs, clamped
/// to their boxes.  With them the decision (0, 0) is always admissible.
std::vector<double> anchor_setpoints(const FlexContext& ctx);

struct FlexConfig {
  Direction direction = Direction::Both;
  int workers = 1;
  double epsilon = 1e-4;
  double feasibility_tol = 1e-6;
  double bisection_tol = 1e-6;  ///< relative to the available flexibility
  double lambda_box = 1e3;
  int lambda_escalations = 3;
  int node_limit = 200;
  double time_limit_seconds = 60.0;
};

struct IterationRecord {
  int iteration = 0;
  std::vector<Scenario> followers;
  double dp_plus = 0.0;
  double dp_minus = 0.0;
  double bound = 0.0;  ///< single-level upper bound on dp+ - dp-
  bool proven = false;
  int nodes = 0;
  double lambda_box = 0.0;
  double max_duality_gap = 0.0;
  std::size_t violations = 0;
  double seconds = 0.0;
};

struct FlexibilityResult {
  UpperDecision decision;
  WorstCaseTable worst;
  std::vector<Scenario> active;
  std::vector<IterationRecord> log;
  bool converged = false;
  bool hit_iteration_cap = false;
  double worst_case_seconds = 0.0;
  double total_seconds = 0.0;
};

/// Worst case, then the ideal-case loop: solve the single-level program for
/// the selected followers, check all followers at its decision, add the
/// worst violator of each activation case, repeat.  If the loop does not
/// converge (cap of 4n iterations, or no new violator to add) the worst-case
/// range is returned with the last setpoints and `converged` is false.
FlexibilityResult run_iterative(const FlexContext& ctx, const FlexConfig& config = {});

}  // namespace flexgrid
