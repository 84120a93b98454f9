#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "flexgrid/feeder.hpp"

namespace flexgrid {

/// Per-node active and reactive injections (generation minus load), p.u.
struct Injections {
  Eigen::VectorXd p;
  Eigen::VectorXd q;

  static Injections zero(std::size_t n) {
    return {Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)),
            Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))};
  }
};

/// Solved state of the feeder.  Everything is per unit; convert with
/// FeederModel::to_kw for reporting.
struct OperatingPoint {
  Eigen::VectorXcd v;        ///< complex voltage per single-phase node
  Eigen::Vector3cd v_slack;  ///< substation phasor (balanced)
  Eigen::Vector3cd s_slack;  ///< substation injection per phase
  Injections injections;     ///< injections the state was solved for
  int iterations = 0;
  std::vector<double> residual_history;  ///< max mismatch before each step

  Eigen::VectorXd vd() const { return v.real(); }
  Eigen::VectorXd vq() const { return v.imag(); }
  Eigen::VectorXd magnitudes() const { return v.cwiseAbs(); }
  double residual() const { return residual_history.empty() ? 0.0 : residual_history.back(); }
};

/// Balanced unit substation phasor 1∠0°, 1∠-120°, 1∠120°.
Eigen::Vector3cd balanced_slack_voltage();

struct PowerFlowOptions {
  double tolerance = 1e-8;
  int max_iterations = 50;
  /// Start point; defaults to the slack phasor of each node's phase.
  std::optional<Eigen::VectorXcd> initial;
};

/// Newton-Raphson power flow in rectangular coordinates.  The admittance
/// matrix is factored once per instance, so reuse a solver for many solves on
/// the same feeder.
class PowerFlowSolver {
 public:
  explicit PowerFlowSolver(const FeederModel& model);

  /// Throws NumericalError on divergence or a singular Jacobian.
  OperatingPoint solve(const Injections& injections, const PowerFlowOptions& options = {}) const;

  std::size_t size() const { return flat_start_.size(); }
  const Eigen::MatrixXcd& ybus() const { return ybus_; }
  const Eigen::VectorXcd& flat_start() const { return flat_start_; }

 private:
  Eigen::MatrixXcd ybus_;
  Eigen::VectorXcd flat_start_;
  Eigen::Vector3cd v_slack_;
};

OperatingPoint solve_nonlinear_pf(const FeederModel& model, const Injections& injections,
                                  const PowerFlowOptions& options = {});

/// Injections of the device specs at their current set-points, including the
/// constant-power-factor reactive demand of loads.
Injections current_injections(const FeederModel& model, const BusPhaseIndex& index);

/// Power flow solved at `current_injections`.
OperatingPoint current_operating_point(const FeederModel& model);

/// Fixed-point linearization V = Z1 + Z2 * conj(S) anchored at an operating
/// point, written in rectangular form:
///   V_d = Re Z1 + Re Z2 P + Im Z2 Q,   V_q = Im Z1 + Im Z2 P - Re Z2 Q.
struct LinearPFModel {
  Eigen::VectorXcd z1;
  Eigen::MatrixXcd z2;
  Eigen::MatrixXd z2_re;
  Eigen::MatrixXd z2_im;
  OperatingPoint anchor;

  std::size_t size() const { return static_cast<std::size_t>(z1.size()); }
};

/// Z1 is the no-load voltage (slack propagated through the network and
/// regulator taps); Z2 = Y_NN^-1 diag(1 / conj(V_anchor)).
/// Throws NumericalError if the slack-reduced admittance is singular.
LinearPFModel build_fixed_point_model(const FeederModel& model, const OperatingPoint& anchor);

struct LinearVoltages {
  Eigen::VectorXd vd;
  Eigen::VectorXd vq;
};

LinearVoltages evaluate_linear_voltages(const LinearPFModel& lpf, const Eigen::VectorXd& p,
                                        const Eigen::VectorXd& q);

/// First-order expansion of |v| around the anchor, kept in the division-free
/// form
///   (v_d^2 + v_q^2) + 2 v_d x_d + 2 v_q x_q = |v|^2 + 2 |v| m
/// linking candidate rectangular components (x_d, x_q) to the magnitude m.
struct MagnitudeTaylor {
  Eigen::VectorXd vd;
  Eigen::VectorXd vq;
  Eigen::VectorXd mag;

  /// Magnitude predicted for node k at the candidate components.
  double magnitude(std::size_t k, double xd, double xq) const;

  /// Row in the form coef_d * x_d + coef_q * x_q + coef_m * m = rhs.
  struct Row {
    double coef_d, coef_q, coef_m, rhs;
  };
  Row row(std::size_t k) const;
};

/// Throws NumericalError when an anchor magnitude is zero.
MagnitudeTaylor magnitude_taylor(const OperatingPoint& op);

}  // namespace flexgrid
