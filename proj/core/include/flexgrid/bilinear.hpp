#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "flexgrid/lp.hpp"

namespace flexgrid {

struct Interval {
  double lo = -kInf;
  double hi = kInf;

  double width() const { return hi - lo; }
  bool finite() const { return std::isfinite(lo) && std::isfinite(hi); }
  bool degenerate() const { return lo == hi; }
};

/// coef * x[i] * x[j] added to the left-hand side of `row`.
struct BilinearTerm {
  std::size_t row;
  double coef;
  std::size_t var_i;
  std::size_t var_j;
};

/// An LP whose rows may additionally carry bilinear products.  `boxes` are
/// the intervals used by the McCormick envelopes; they default to the LP
/// bounds and must be finite for every variable in a product.  Branching
/// prefers the variable of a product with the higher `priority`.
struct BilinearProgram {
  LinearProgram base;
  std::vector<BilinearTerm> terms;
  std::vector<int> priority;
  std::vector<Interval> boxes;

  explicit BilinearProgram(LinearProgram lp = {});

  /// Keeps priority/boxes sized with base.variables after adding variables.
  void sync();
  void add_term(std::size_t row, double coef, std::size_t i, std::size_t j);

  /// Row activity with products evaluated exactly.
  double row_activity(std::size_t r, const std::vector<double>& x) const;
  /// Largest row or bound violation with exact products.
  double max_violation(const std::vector<double>& x) const;
};

/// Relaxation LP plus the position of the auxiliary variable standing for
/// each term (nullopt when the term collapsed to a linear one because a
/// factor's box is a single point).
struct McCormickRelaxation {
  LinearProgram lp;
  std::vector<std::optional<std::size_t>> product_var;
};

/// Replaces every product by an auxiliary variable constrained by the four
/// McCormick inequalities over `boxes`; variable bounds are intersected with
/// their boxes.  Throws ValidationError if a product has an unbounded factor
/// and neither factor is fixed.
McCormickRelaxation mccormick_relax(const BilinearProgram& bp, const std::vector<Interval>& boxes);

struct BranchAndBoundOptions {
  double epsilon = 1e-4;            ///< relative gap
  double feasibility_tol = 1e-6;    ///< row violation accepted for incumbents
  int node_limit = 5000;
  double time_limit_seconds = 120.0;
  LpOptions lp;

  /// Feasible start point, checked like any other candidate.
  std::optional<std::vector<double>> warm_start;
  /// A priori bound on the objective in the problem sense (upper bound when
  /// maximizing), e.g. from variable bounds.  When the
  /// warm start already attains it, no relaxation is solved.
  double objective_bound = kInf;

  /// Optional problem-specific primal heuristic, called with the relaxation
  /// solution (original variables only) of each node.  Returns a candidate
  /// that is accepted only if it is feasible.
  std::function<std::optional<std::vector<double>>(const std::vector<double>& relaxed,
                                                   const std::vector<Interval>& boxes, int depth)>
      heuristic;
};

struct BranchAndBoundResult {
  LpStatus status = LpStatus::Infeasible;  ///< Optimal means an incumbent exists
  bool proven = false;                     ///< gap closed within epsilon
  std::vector<double> x;
  double objective = 0.0;
  double bound = 0.0;
  double root_bound = 0.0;
  int nodes = 0;
  int lp_iterations = 0;
};

/// Best-bound spatial branch-and-bound on single-interval McCormick
/// relaxations.  Without an incumbent when the limits trip, status is
/// Infeasible and `proven` is false.
BranchAndBoundResult spatial_branch_and_bound(const BilinearProgram& bp,
                                              const BranchAndBoundOptions& options = {});

}  // namespace flexgrid
