#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace flexgrid {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Relation : std::uint8_t { LessEqual, Equal, GreaterEqual };
enum class Sense : std::uint8_t { Maximize, Minimize };

struct Term {
  std::size_t var;
  double coef;
};

/// Sparse-row linear program with bounded variables.
struct LinearProgram {
  struct Variable {
    std::string name;
    double lower = 0.0;
    double upper = kInf;
  };
  struct Row {
    std::string name;
    std::vector<Term> terms;
    Relation relation = Relation::LessEqual;
    double rhs = 0.0;
  };

  std::vector<Variable> variables;
  std::vector<Row> rows;
  std::vector<double> objective;  ///< dense, one coefficient per variable
  double objective_constant = 0.0;
  Sense sense = Sense::Maximize;

  std::size_t add_variable(std::string name, double lower, double upper, double cost = 0.0);
  std::size_t add_row(std::string name, std::vector<Term> terms, Relation relation, double rhs);

  std::size_t num_variables() const { return variables.size(); }
  std::size_t num_rows() const { return rows.size(); }

  /// Throws ValidationError on NaN data, inverted bounds or bad indices.
  void validate() const;

  double evaluate_objective(const std::vector<double>& x) const;
  double row_activity(std::size_t r, const std::vector<double>& x) const;
  /// Largest bound or row violation of `x`.
  double max_violation(const std::vector<double>& x) const;

  /// Human-readable dump, one line per objective/row/bound.
  std::string to_text() const;
};

enum class LpStatus : std::uint8_t { Optimal, Infeasible, Unbounded };

std::string_view status_name(LpStatus s);

/// Result of an LP solve.  `row_duals[i]` is the sensitivity of the optimal
/// objective to the right-hand side of row i; `reduced_costs[j]` is
/// c_j - a_j' * row_duals.  With those conventions the dual objective is
///   b' * row_duals + sum_j reduced_costs[j] * (bound x_j rests on).
struct DualCertificate {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> x;
  double objective = 0.0;
  std::vector<double> row_duals;
  std::vector<double> reduced_costs;
  double dual_objective = 0.0;
  int iterations = 0;
  bool used_bland = false;

  bool optimal() const { return status == LpStatus::Optimal; }
};

enum class PivotRule : std::uint8_t { Dantzig, Bland };

struct LpOptions {
  PivotRule rule = PivotRule::Dantzig;
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-10;
  int max_iterations = 200000;
};

/// Two-phase bounded-variable primal simplex on a dense tableau.  Falls back
/// to Bland's rule after 5 * (number of columns) consecutive degenerate
/// pivots.  Throws NumericalError on breakdown or when the iteration guard
/// trips.
DualCertificate solve_lp(const LinearProgram& lp, const LpOptions& options = {});

/// Dual objective recomputed from `lp` data and the certificate's row duals.
/// Returns +/-infinity when the duals are not dual feasible.
double dual_objective(const LinearProgram& lp, const std::vector<double>& row_duals,
                      double tol = 1e-7);

/// True iff `cert` is optimal, its duals are dual feasible and
/// |primal - dual| <= rel_tol * (1 + |primal|).
bool verify_strong_duality(const LinearProgram& lp, const DualCertificate& cert,
                           double rel_tol = 1e-6);

/// Largest complementary-slackness product over rows and variable bounds.
double complementarity_violation(const LinearProgram& lp, const DualCertificate& cert);

}  // namespace flexgrid
