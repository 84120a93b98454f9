#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "flexgrid/flex.hpp"
#include "flexgrid/follower.hpp"
#include "flexgrid/powerflow.hpp"

namespace flexgrid {

/// Device set-points in p.u.: total inverter output, load deviation.
struct DevicePoint {
  std::vector<double> p_gen;
  std::vector<double> q_gen;
  std::vector<double> dp_load;
};

/// Injections of a device point; load reactive demand follows its power
/// factor.
Injections device_injections(const FeederModel& model, const BusPhaseIndex& index,
                             const DevicePoint& d);

/// Solves the nonlinear power flow at a device point.  In Volt-VAR mode the
/// inverter reactive outputs are recomputed from the solved magnitudes by a
/// damped fixed-point loop and clipped to the capability circle; `q_gen` is
/// updated in place.
OperatingPoint nonlinear_state(const FlexContext& ctx, DevicePoint& d,
                               const std::vector<double>& setpoints, const PowerFlowSolver& pf);

struct OracleWorst {
  double magnitude = 0.0;
  DevicePoint argext;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;  ///< grid points where the power flow diverged
};

/// Grid of nonlinear states for one activation case and one set of
/// setpoints.  The grid ignores the aggregate bound, so one sampling serves
/// every node, both extrema and every bound; vertices of the aggregate face
/// are added per query.
class BruteForceOracle {
 public:
  BruteForceOracle(const FlexContext& ctx, Activation activation, std::vector<double> setpoints,
                   SetpointRole role, int grid_points = 11);

  OracleWorst worst(std::size_t node, Extremum e, double dp_bound) const;
  /// Largest bound whose worst |v| stays in the band, bisected to `tol`.
  double limit(std::size_t node, Extremum e, double tol) const;

  std::size_t flexible_devices() const { return devices_.size(); }

 private:
  struct Device {
    bool inverter;
    std::size_t id;
    double lo, hi;  // injection deviation range
  };
  struct Sample {
    double aggregate;
    Eigen::VectorXd mag;
    DevicePoint point;
  };

  void evaluate(const std::vector<double>& dev, std::vector<Sample>& out, std::size_t& skipped) const;

  const FlexContext& ctx_;
  Activation activation_;
  std::vector<double> setpoints_;
  SetpointRole role_;
  PowerFlowSolver pf_;
  std::vector<Device> devices_;
  std::vector<Sample> grid_;
  std::size_t skipped_ = 0;
};

/// Exhaustive search of the worst |v| of the scenario's node over the device
/// deviations: a uniform grid of `grid_points` per device plus the vertices
/// of the aggregate face.  Activation rules, device bounds, the aggregate
/// bound `dp_bound` (>= 0, applied with the scenario's sign), the exact
/// capability circle and the mode rules are all enforced; every point is a
/// nonlinear power flow.  With SetpointRole::FollowerChoosesQ the constant-q
/// output also ranges over {-g*gamma, 0, +g*gamma}.
OracleWorst brute_force_worst_voltage(const FlexContext& ctx, const Scenario& s, double dp_bound,
                                      const std::vector<double>& setpoints, SetpointRole role,
                                      int grid_points = 11);

struct OracleEntry {
  Scenario scenario;
  double linear = 0.0;     ///< follower LP optimum
  double nonlinear = 0.0;  ///< nonlinear worst |v|
  double excess = 0.0;     ///< distance outside the band, p.u.
  bool brute_force = false;
};

struct NodeMagnitude {
  std::size_t node = 0;
  double linear = 0.0;
  double nonlinear = 0.0;
};

struct OracleReport {
  std::vector<OracleEntry> entries;
  std::vector<NodeMagnitude> magnitudes;  ///< target node of each entry, at its LP optimizer
  double max_violation = 0.0;             ///< largest excess over all entries
  /// max |linear - nonlinear| worst-case magnitude of the target nodes
  double max_linearization_error = 0.0;
  /// same, over every node at every LP optimizer (diagnostic)
  double max_linearization_error_all_nodes = 0.0;
  double tolerance = 0.01;
  std::vector<std::string> violating;  ///< descriptions of failing scenarios
  std::size_t points_evaluated = 0;
  std::size_t points_skipped = 0;
  bool passed = false;
};

struct OracleOptions {
  Direction direction = Direction::Both;
  int workers = 1;
  int grid_points = 11;
  std::size_t brute_force_devices = 4;  ///< brute force at or below this many devices
  double tolerance = 0.01;
};

/// Nonlinear check of a decision.  Every follower is re-solved with the
/// exact circle, exact magnitude and nonlinear power flow: by brute force on
/// small feeders, by evaluating the follower's LP optimizer otherwise.  The
/// linearization error compares each follower's linear optimum with the
/// nonlinear magnitude of its target at the same device point.
OracleReport verify_setpoints_nonlinear(const FlexContext& ctx, const UpperDecision& d,
                                        const OracleOptions& options = {});

}  // namespace flexgrid
