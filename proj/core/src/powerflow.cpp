#include "flexgrid/powerflow.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "flexgrid/error.hpp"
#include "flexgrid/ybus.hpp"

namespace flexgrid {

Eigen::Vector3cd balanced_slack_voltage() {
  const double shift = 2.0 * std::numbers::pi / 3.0;
  return {std::polar(1.0, 0.0), std::polar(1.0, -shift), std::polar(1.0, shift)};
}

PowerFlowSolver::PowerFlowSolver(const FeederModel& model) : v_slack_(balanced_slack_voltage()) {
  const BusPhaseIndex index(model);
  ybus_ = assemble_ybus(model, index);
  flat_start_.resize(static_cast<Eigen::Index>(index.size()));
  for (std::size_t k = 0; k < index.size(); ++k)
    flat_start_(static_cast<Eigen::Index>(k)) = v_slack_(static_cast<int>(index.label(k).phase));
}

OperatingPoint PowerFlowSolver::solve(const Injections& inj, const PowerFlowOptions& opt) const {
  const Eigen::Index n = flat_start_.size();
  if (inj.p.size() != n || inj.q.size() != n)
    throw ValidationError("power flow: injection vectors must have one entry per node");
  if (!inj.p.allFinite() || !inj.q.allFinite())
    throw ValidationError("power flow: injections must be finite");

  const auto y_nn = ybus_.bottomRightCorner(n, n);
  const Eigen::MatrixXd g = y_nn.real();
  const Eigen::MatrixXd b = y_nn.imag();
  const Eigen::VectorXcd slack_current = ybus_.bottomLeftCorner(n, 3) * v_slack_;

  Eigen::VectorXcd v = opt.initial ? *opt.initial : flat_start_;
  if (v.size() != n) throw ValidationError("power flow: initial guess has wrong dimension");

  OperatingPoint op;
  op.v_slack = v_slack_;
  op.injections = inj;

  auto mismatch = [&](const Eigen::VectorXcd& volt, Eigen::VectorXcd& current) {
    current = y_nn * volt + slack_current;
    const Eigen::VectorXcd s = volt.cwiseProduct(current.conjugate());
    Eigen::VectorXd f(2 * n);
    f.head(n) = inj.p - s.real();
    f.tail(n) = inj.q - s.imag();
    return f;
  };

  Eigen::VectorXcd current;
  Eigen::VectorXd f = mismatch(v, current);
  double residual = f.cwiseAbs().maxCoeff();
  bool polished = false;
  int steps = 0;
  Eigen::MatrixXd jac(2 * n, 2 * n);

  // Iterate to tolerance, then take one polishing step so anchors used for
  // linearization are exact to rounding.
  while (residual >= opt.tolerance || (steps > 0 && !polished && residual > 1e-13)) {
    if (residual < opt.tolerance) polished = true;
    op.residual_history.push_back(residual);
    if (steps >= opt.max_iterations)
      throw NumericalError("power flow did not converge within " +
                           std::to_string(opt.max_iterations) +
                           " iterations (max mismatch " + std::to_string(residual) + " p.u.)");

    const Eigen::VectorXd e = v.real();
    const Eigen::VectorXd fq = v.imag();
    const Eigen::VectorXd a = current.real();
    const Eigen::VectorXd c = current.imag();
    // Jacobian of the computed injections with respect to (e, f).
    for (Eigen::Index k = 0; k < n; ++k) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double gkj = g(k, j), bkj = b(k, j);
        jac(k, j) = e(k) * gkj + fq(k) * bkj;
        jac(k, n + j) = -e(k) * bkj + fq(k) * gkj;
        jac(n + k, j) = fq(k) * gkj - e(k) * bkj;
        jac(n + k, n + j) = -fq(k) * bkj - e(k) * gkj;
      }
      jac(k, k) += a(k);
      jac(k, n + k) += c(k);
      jac(n + k, k) -= c(k);
      jac(n + k, n + k) += a(k);
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
    if (!(lu.rcond() > 1e-14)) throw NumericalError("power flow: singular Jacobian");
    const Eigen::VectorXd dx = lu.solve(f);
    if (!dx.allFinite()) throw NumericalError("power flow: non-finite Newton step");
    v.real() += dx.head(n);
    v.imag() += dx.tail(n);
    ++steps;
    f = mismatch(v, current);
    residual = f.cwiseAbs().maxCoeff();
    if (!std::isfinite(residual)) throw NumericalError("power flow diverged");
  }
  op.residual_history.push_back(residual);
  op.iterations = steps;
  op.v = v;

  const Eigen::Vector3cd i_slack =
      ybus_.topLeftCorner(3, 3) * v_slack_ + ybus_.topRightCorner(3, n) * v;
  op.s_slack = v_slack_.cwiseProduct(i_slack.conjugate());
  return op;
}

OperatingPoint solve_nonlinear_pf(const FeederModel& model, const Injections& injections,
                                  const PowerFlowOptions& options) {
  return PowerFlowSolver(model).solve(injections, options);
}

Injections current_injections(const FeederModel& model, const BusPhaseIndex& index) {
  Injections inj = Injections::zero(index.size());
  for (const LoadSpec& l : model.loads) {
    const auto k = static_cast<Eigen::Index>(index.at(l.bus, l.phase));
    const double ratio = std::sqrt(1.0 - l.pf * l.pf) / l.pf;
    inj.p(k) -= model.to_pu(l.p_kw);
    inj.q(k) -= ratio * model.to_pu(l.p_kw);
  }
  for (const InverterSpec& v : model.inverters) {
    const auto k = static_cast<Eigen::Index>(index.at(v.bus, v.phase));
    inj.p(k) += model.to_pu(v.p_kw);
    inj.q(k) += model.to_pu(v.q_kvar);
  }
  return inj;
}

OperatingPoint current_operating_point(const FeederModel& model) {
  return solve_nonlinear_pf(model, current_injections(model, index_nodes(model)));
}

LinearPFModel build_fixed_point_model(const FeederModel& model, const OperatingPoint& anchor) {
  const BusPhaseIndex index(model);
  const Eigen::MatrixXcd y = assemble_ybus(model, index);
  const auto n = static_cast<Eigen::Index>(index.size());
  if (anchor.v.size() != n) throw ValidationError("anchor does not match the feeder");
  if ((anchor.v.array() == std::complex<double>(0.0, 0.0)).any())
    throw NumericalError("anchor has a zero voltage");

  Eigen::FullPivLU<Eigen::MatrixXcd> lu(y.bottomRightCorner(n, n));
  if (!lu.isInvertible()) throw NumericalError("slack-reduced admittance matrix is singular");

  LinearPFModel lpf;
  lpf.z1 = -lu.solve(y.bottomLeftCorner(n, 3) * anchor.v_slack);
  const Eigen::VectorXcd inv_conj = anchor.v.conjugate().cwiseInverse();
  lpf.z2 = lu.inverse() * inv_conj.asDiagonal();
  lpf.z2_re = lpf.z2.real();
  lpf.z2_im = lpf.z2.imag();
  lpf.anchor = anchor;
  return lpf;
}

LinearVoltages evaluate_linear_voltages(const LinearPFModel& lpf, const Eigen::VectorXd& p,
                                        const Eigen::VectorXd& q) {
  const Eigen::Index n = lpf.z1.size();
  if (p.size() != n || q.size() != n)
    throw ValidationError("evaluate_linear_voltages: dimension mismatch");
  return {lpf.z1.real() + lpf.z2_re * p + lpf.z2_im * q,
          lpf.z1.imag() + lpf.z2_im * p - lpf.z2_re * q};
}

double MagnitudeTaylor::magnitude(std::size_t k, double xd, double xq) const {
  const auto i = static_cast<Eigen::Index>(k);
  const double a = vd(i), b = vq(i), m = mag(i);
  return (a * a + b * b + 2.0 * a * xd + 2.0 * b * xq - m * m) / (2.0 * m);
}

MagnitudeTaylor::Row MagnitudeTaylor::row(std::size_t k) const {
  const auto i = static_cast<Eigen::Index>(k);
  const double a = vd(i), b = vq(i), m = mag(i);
  return {2.0 * a, 2.0 * b, -2.0 * m, m * m - (a * a + b * b)};
}

MagnitudeTaylor magnitude_taylor(const OperatingPoint& op) {
  MagnitudeTaylor t{op.v.real(), op.v.imag(), op.v.cwiseAbs()};
  for (Eigen::Index k = 0; k < t.mag.size(); ++k)
    if (!(t.mag(k) > 0.0))
      throw NumericalError("magnitude_taylor: zero anchor magnitude at node " + std::to_string(k));
  return t;
}

}  // namespace flexgrid
