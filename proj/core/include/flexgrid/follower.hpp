#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "flexgrid/bilinear.hpp"
#include "flexgrid/feeder.hpp"
#include "flexgrid/lp.hpp"
#include "flexgrid/powerflow.hpp"

namespace flexgrid {

enum class Activation : std::uint8_t { Positive, Negative };
enum class Extremum : std::uint8_t { Min, Max };
enum class Direction : std::uint8_t { Both, OvervoltageOnly, UndervoltageOnly };

std::string_view direction_name(Direction d);
Direction parse_direction(std::string_view text);

/// One lower-level problem: the worst |v| of `node` in one activation case.
/// Numbering follows the usual table: 1 = positive/min, 2 = positive/max,
/// 3 = negative/min, 4 = negative/max.
struct Scenario {
  Activation activation = Activation::Positive;
  Extremum extremum = Extremum::Max;
  std::size_t node = 0;

  int id() const {
    return (activation == Activation::Positive ? 1 : 3) + (extremum == Extremum::Max ? 1 : 0);
  }
  std::string describe(const BusPhaseIndex& index) const;
  bool operator==(const Scenario&) const = default;
};

/// All scenarios admitted by the direction filter, ordered by node, then
/// scenario id.  Overvoltage-only keeps the Max followers.
std::vector<Scenario> enumerate_scenarios(std::size_t n, Direction filter = Direction::Both);

struct VoltageBand {
  double vmin = 0.9;
  double vmax = 1.1;
};

/// Everything the follower builders share: the validated feeder, its anchor
/// state and linearization, the control mode and the voltage band.  All
/// quantities are per unit.  Build once; read-only afterwards.
struct FlexContext {
  FeederModel model;
  BusPhaseIndex index;
  InverterMode mode = InverterMode::ConstantPF;
  VoltageBand band;
  OperatingPoint anchor;
  LinearPFModel lpf;
  MagnitudeTaylor taylor;
  std::vector<std::size_t> load_node;      ///< node of loads[i]
  std::vector<std::size_t> inverter_node;  ///< node of inverters[j]
  double dp_max = 0.0;                     ///< available upward flexibility, p.u.
  double dp_min = 0.0;                     ///< available downward flexibility, p.u.

  /// Solves the anchor power flow and linearizes around it.  Throws
  /// ValidationError for an invalid band or missing mode parameters.
  static FlexContext build(const FeederModel& model, InverterMode mode, VoltageBand band);

  std::size_t size() const { return index.size(); }
  std::size_t num_setpoints() const { return model.inverters.size(); }
};

/// Upper-level parameter vector layout: [dp+, dp-, setpoint_0, ...].
namespace param {
inline constexpr std::size_t kDpPlus = 0;
inline constexpr std::size_t kDpMinus = 1;
inline constexpr std::size_t setpoint(std::size_t j) { return 2 + j; }
}  // namespace param

/// Box of inverter j's setpoint in the context's mode: the power ratio range
/// for constant-pf, the reactive output admissible at the anchor for
/// constant-q, [0, |s|] for Volt-VAR.
Interval setpoint_box(const FlexContext& ctx, std::size_t j);

/// Upper-level decision, per unit.  `setpoints[j]` is gamma, q or q-bar of
/// inverter j depending on `mode`.
struct UpperDecision {
  double dp_plus = 0.0;
  double dp_minus = 0.0;
  InverterMode mode = InverterMode::ConstantPF;
  std::vector<double> setpoints;

  std::vector<double> parameters() const;
};

/// Throws ValidationError when the decision violates its sign convention,
/// the available flexibility or a setpoint box.
void check_decision(const FlexContext& ctx, const UpperDecision& d, double tol = 1e-9);

/// LP whose matrix and right-hand side are affine in the upper-level
/// parameters:  A(u) = A0 + sum coef * u_p at (row, var),
///              b(u) = b0 + sum coef * u_p at row.
/// Variable bounds and the objective never depend on u.  Always maximizes.
struct ParametricLP {
  struct CoefTerm {
    std::size_t row, var, param;
    double coef;
  };
  struct RhsTerm {
    std::size_t row, param;
    double coef;
  };

  LinearProgram lp;
  std::vector<CoefTerm> coef_terms;
  std::vector<RhsTerm> rhs_terms;

  LinearProgram instantiate(const std::vector<double>& u) const;
};

enum class RowGroup : std::uint8_t { System, Inverter, Flexibility };

/// Whether upper-level setpoints enter as parameters (ideal case) or the
/// constant-q reactive output is left to the follower (worst case).
enum class SetpointRole : std::uint8_t { Parameter, FollowerChoosesQ };

struct FollowerProblem {
  Scenario scenario;
  ParametricLP plp;
  std::vector<RowGroup> row_group;
  std::size_t target_magnitude = 0;  ///< variable holding |v| of the target
  std::size_t aggregate_row = 0;
  std::vector<std::size_t> inverter_p;  ///< total generation p_G + dp_G
  std::vector<std::size_t> inverter_q;
  std::vector<std::size_t> load_dp;
  std::vector<std::size_t> load_q;
  /// Voltage variables exist only for nodes whose magnitude is used: the
  /// target and, in Volt-VAR mode, every inverter node.
  std::vector<std::size_t> magnitude_of_node;  ///< npos when absent
};

FollowerProblem build_follower(const FlexContext& ctx, const Scenario& s,
                               SetpointRole role = SetpointRole::Parameter);

/// Worst-case setpoints for followers of the given extremum: full reactive
/// injection (constant-pf) or no Volt-VAR support (Volt-VAR) for Max, the
/// opposite extremes for Min.  Constant-q returns zeros (unused, because its
/// worst case leaves q to the follower).
std::vector<double> fix_worst_case_setpoints(const FlexContext& ctx, Extremum e);

/// Worst-case setpoints for one follower.  With mutual phase coupling a
/// reactive injection can lower the magnitude of another phase, so in
/// constant-pf mode each inverter takes the box end that pushes the target's
/// linearized magnitude toward the follower's extremum.  Other modes fall
/// back to the per-extremum rule above.
std::vector<double> fix_worst_case_setpoints(const FlexContext& ctx, const Scenario& s);

/// d|v_k|/dq_j of the linear model: target node k, inverter j.
double magnitude_sensitivity_q(const FlexContext& ctx, std::size_t k, std::size_t j);

struct FollowerSolution {
  DualCertificate cert;
  double magnitude = 0.0;  ///< |v| of the target at the optimum
};

/// Solves the follower at the parameter vector u (see `param`).
FollowerSolution solve_follower(const FollowerProblem& f, const std::vector<double>& u);

}  // namespace flexgrid
