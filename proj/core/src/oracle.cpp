#include "flexgrid/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "flexgrid/error.hpp"
#include "flexgrid/parallel.hpp"

namespace flexgrid {

namespace {

double load_ratio(double pf) { return std::sqrt(1.0 - pf * pf) / pf; }

double circle_room(double s, double g) { return std::sqrt(std::max(s * s - g * g, 0.0)); }

/// Total-output range of inverter j in the activation case, p.u.
std::pair<double, double> generation_range(const FeederModel& m, std::size_t j, Activation a) {
  const InverterSpec& v = m.inverters[j];
  const double p = m.to_pu(v.p_kw);
  double lo = std::max(m.to_pu(v.p_min_kw), 0.0), hi = std::min(m.to_pu(v.p_max_kw), m.to_pu(v.s_kva));
  if (a == Activation::Positive) lo = std::max(lo, p);
  else hi = std::min(hi, p);
  return {lo, hi};
}

std::pair<double, double> load_range(const FeederModel& m, std::size_t i, Activation a) {
  const LoadSpec& l = m.loads[i];
  const double p = m.to_pu(l.p_kw);
  double lo = m.to_pu(std::max(l.p_min_kw, 0.0)) - p, hi = m.to_pu(l.p_max_kw) - p;
  if (a == Activation::Positive) hi = std::min(hi, 0.0);
  else lo = std::max(lo, 0.0);
  return {lo, hi};
}

std::size_t count_flexible(const FeederModel& m) {
  std::size_t n = 0;
  for (std::size_t j = 0; j < m.inverters.size(); ++j) {
    const auto [pl, ph] = generation_range(m, j, Activation::Positive);
    const auto [nl, nh] = generation_range(m, j, Activation::Negative);
    n += (ph > pl || nh > nl) ? 1 : 0;
  }
  for (std::size_t i = 0; i < m.loads.size(); ++i) {
    const auto [pl, ph] = load_range(m, i, Activation::Positive);
    const auto [nl, nh] = load_range(m, i, Activation::Negative);
    n += (ph > pl || nh > nl) ? 1 : 0;
  }
  return n;
}

}  // namespace

Injections device_injections(const FeederModel& model, const BusPhaseIndex& index, const DevicePoint& d) {
  Injections inj = Injections::zero(index.size());
  for (std::size_t j = 0; j < model.inverters.size(); ++j) {
    const auto k = static_cast<Eigen::Index>(index.at(model.inverters[j].bus, model.inverters[j].phase));
    inj.p(k) += d.p_gen[j];
    inj.q(k) += d.q_gen[j];
  }
  for (std::size_t i = 0; i < model.loads.size(); ++i) {
    const LoadSpec& l = model.loads[i];
    const auto k = static_cast<Eigen::Index>(index.at(l.bus, l.phase));
    const double p = model.to_pu(l.p_kw) + d.dp_load[i];
    inj.p(k) -= p;
    inj.q(k) -= load_ratio(l.pf) * p;
  }
  return inj;
}

OperatingPoint nonlinear_state(const FlexContext& ctx, DevicePoint& d, const std::vector<double>& setpoints,
                               const PowerFlowSolver& pf) {
  PowerFlowOptions opt;
  opt.initial = ctx.anchor.v;
  OperatingPoint op = pf.solve(device_injections(ctx.model, ctx.index, d), opt);
  if (ctx.mode != InverterMode::VoltVar) return op;

  // Solve q = T(q), T_j = clip(qbar_j (c - kappa |v_j|)), by a chord Newton
  // method whose Jacobian uses the anchor sensitivity d|v|/dq.  Plain damped
  // iteration stalls when many inverters sit on a steep curve.
  const double kappa = 2.0 / (ctx.band.vmax - ctx.band.vmin);
  const double centre = (ctx.band.vmax + ctx.band.vmin) / (ctx.band.vmax - ctx.band.vmin);
  const auto ni = static_cast<Eigen::Index>(ctx.model.inverters.size());
  opt.tolerance = 1e-10;
  Eigen::MatrixXd sens(ni, ni);
  for (Eigen::Index a = 0; a < ni; ++a) {
    const auto k = static_cast<Eigen::Index>(ctx.inverter_node[static_cast<std::size_t>(a)]);
    const double vd = ctx.taylor.vd(k), vq = ctx.taylor.vq(k), m = ctx.taylor.mag(k);
    for (Eigen::Index b = 0; b < ni; ++b) {
      const auto l = static_cast<Eigen::Index>(ctx.inverter_node[static_cast<std::size_t>(b)]);
      sens(a, b) = (vd * ctx.lpf.z2_im(k, l) - vq * ctx.lpf.z2_re(k, l)) / m;
    }
  }
  for (int it = 0; it < 100; ++it) {
    Eigen::VectorXd r(ni);
    Eigen::MatrixXd jac = Eigen::MatrixXd::Identity(ni, ni);
    for (Eigen::Index a = 0; a < ni; ++a) {
      const auto j = static_cast<std::size_t>(a);
      const double mag = std::abs(op.v(static_cast<Eigen::Index>(ctx.inverter_node[j])));
      const double room = circle_room(ctx.model.to_pu(ctx.model.inverters[j].s_kva), d.p_gen[j]);
      const double t = setpoints[j] * (centre - kappa * mag);
      r(a) = d.q_gen[j] - std::clamp(t, -room, room);
      if (std::abs(t) < room) jac.row(a) += setpoints[j] * kappa * sens.row(a);
    }
    if (r.cwiseAbs().maxCoeff() < 1e-8) return op;
    const Eigen::VectorXd step = jac.partialPivLu().solve(-r);
    for (Eigen::Index a = 0; a < ni; ++a) {
      const auto j = static_cast<std::size_t>(a);
      const double room = circle_room(ctx.model.to_pu(ctx.model.inverters[j].s_kva), d.p_gen[j]);
      d.q_gen[j] = std::clamp(d.q_gen[j] + step(a), -room, room);
    }
    opt.initial = op.v;
    op = pf.solve(device_injections(ctx.model, ctx.index, d), opt);
  }
  throw NumericalError("Volt-VAR fixed point did not settle");
}

BruteForceOracle::BruteForceOracle(const FlexContext& ctx, Activation activation,
                                   std::vector<double> setpoints, SetpointRole role, int grid_points)
    : ctx_(ctx), activation_(activation), setpoints_(std::move(setpoints)), role_(role), pf_(ctx.model) {
  if (grid_points < 2) throw ValidationError("oracle: need at least 2 grid points per device");
  const FeederModel& m = ctx.model;
  for (std::size_t j = 0; j < m.inverters.size(); ++j) {
    const auto [lo, hi] = generation_range(m, j, activation);
    const double p = m.to_pu(m.inverters[j].p_kw);
    if (hi - lo > 1e-12) devices_.push_back({true, j, lo - p, hi - p});
  }
  for (std::size_t i = 0; i < m.loads.size(); ++i) {
    const auto [lo, hi] = load_range(m, i, activation);
    if (hi - lo > 1e-12) devices_.push_back({false, i, -hi, -lo});
  }
  if (devices_.size() > 6) throw ValidationError("oracle: too many flexible devices for brute force");

  std::vector<double> dev(devices_.size());
  const auto g = static_cast<std::size_t>(grid_points);
  std::vector<std::size_t> digit(devices_.size(), 0);
  while (true) {
    for (std::size_t k = 0; k < devices_.size(); ++k)
      dev[k] = devices_[k].lo + (devices_[k].hi - devices_[k].lo) * double(digit[k]) / double(g - 1);
    evaluate(dev, grid_, skipped_);
    std::size_t k = 0;
    while (k < digit.size() && ++digit[k] == g) digit[k++] = 0;
    if (k == digit.size()) break;
  }
}

void BruteForceOracle::evaluate(const std::vector<double>& dev, std::vector<Sample>& out,
                                std::size_t& skipped) const {
  const FeederModel& m = ctx_.model;
  DevicePoint d;
  d.p_gen.resize(m.inverters.size());
  d.q_gen.assign(m.inverters.size(), 0.0);
  d.dp_load.assign(m.loads.size(), 0.0);
  for (std::size_t j = 0; j < m.inverters.size(); ++j) d.p_gen[j] = m.to_pu(m.inverters[j].p_kw);
  double aggregate = 0.0;
  for (std::size_t k = 0; k < devices_.size(); ++k) {
    if (devices_[k].inverter) d.p_gen[devices_[k].id] += dev[k];
    else d.dp_load[devices_[k].id] = -dev[k];
    aggregate += dev[k];
  }

  // Reactive options per inverter; only the follower-chosen constant-q case
  // has more than one.
  std::vector<std::vector<double>> options(m.inverters.size());
  for (std::size_t j = 0; j < m.inverters.size(); ++j) {
    const InverterSpec& v = m.inverters[j];
    const double s = m.to_pu(v.s_kva), g = d.p_gen[j];
    const double room = circle_room(s, g);
    switch (ctx_.mode) {
      case InverterMode::ConstantPF: {
        const double q = setpoints_[j] * g;
        if (std::abs(q) > room * (1.0 + 1e-9) + 1e-15) return;
        options[j] = {q};
        break;
      }
      case InverterMode::ConstantQ: {
        const double gmax = *v.params.gamma * g;
        if (role_ == SetpointRole::FollowerChoosesQ) {
          options[j] = {std::clamp(-gmax, -room, room), 0.0, std::clamp(gmax, -room, room)};
        } else {
          const double q = setpoints_[j];
          if (std::abs(q) > gmax + 1e-12 || std::abs(q) > room * (1.0 + 1e-9) + 1e-15) return;
          options[j] = {q};
        }
        break;
      }
      case InverterMode::VoltVar: options[j] = {0.0}; break;
    }
  }

  std::vector<std::size_t> pick(m.inverters.size(), 0);
  while (true) {
    for (std::size_t j = 0; j < pick.size(); ++j) d.q_gen[j] = options[j][pick[j]];
    DevicePoint point = d;
    try {
      const OperatingPoint op = nonlinear_state(ctx_, point, setpoints_, pf_);
      out.push_back({aggregate, op.magnitudes(), std::move(point)});
    } catch (const NumericalError&) {
      ++skipped;
    }
    std::size_t j = 0;
    while (j < pick.size() && ++pick[j] == options[j].size()) pick[j++] = 0;
    if (j == pick.size()) break;
  }
}

OracleWorst BruteForceOracle::worst(std::size_t node, Extremum e, double dp_bound) const {
  const bool positive = activation_ == Activation::Positive;
  auto allowed = [&](double aggregate) {
    return positive ? aggregate <= dp_bound + 1e-12 : aggregate >= -dp_bound - 1e-12;
  };

  OracleWorst w;
  w.skipped = skipped_;
  bool have = false;
  auto consider = [&](const Sample& s) {
    ++w.evaluated;
    const double v = s.mag(static_cast<Eigen::Index>(node));
    if (!have || (e == Extremum::Max ? v > w.magnitude : v < w.magnitude)) {
      have = true;
      w.magnitude = v;
      w.argext = s.point;
    }
  };
  for (const Sample& s : grid_)
    if (allowed(s.aggregate)) consider(s);

  // Vertices of box ∩ {aggregate = bound}: every device at an end of its
  // range except one.
  const std::size_t nd = devices_.size();
  const double target = positive ? dp_bound : -dp_bound;
  std::vector<Sample> extra;
  std::size_t skipped = 0;
  std::vector<double> dev(nd);
  for (std::size_t f = 0; f < nd; ++f) {
    for (std::size_t mask = 0; mask < (std::size_t{1} << nd); ++mask) {
      if (mask & (std::size_t{1} << f)) continue;
      double sum = 0.0;
      for (std::size_t k = 0; k < nd; ++k) {
        const double far = positive ? devices_[k].hi : devices_[k].lo;
        const double near = positive ? devices_[k].lo : devices_[k].hi;
        dev[k] = (mask & (std::size_t{1} << k)) ? far : near;
        if (k != f) sum += dev[k];
      }
      const double rest = target - sum;
      if (rest < devices_[f].lo - 1e-15 || rest > devices_[f].hi + 1e-15) continue;
      dev[f] = rest;
      evaluate(dev, extra, skipped);
    }
  }
  for (const Sample& s : extra) consider(s);
  w.skipped += skipped;
  if (!have) throw NumericalError("oracle: no admissible point");
  return w;
}

double BruteForceOracle::limit(std::size_t node, Extremum e, double tol) const {
  const double t_max = activation_ == Activation::Positive ? ctx_.dp_max : -ctx_.dp_min;
  auto ok = [&](double t) {
    const double v = worst(node, e, t).magnitude;
    return v >= ctx_.band.vmin && v <= ctx_.band.vmax;
  };
  if (t_max <= 0.0 || ok(t_max)) return std::max(t_max, 0.0);
  if (!ok(0.0)) return 0.0;
  double lo = 0.0, hi = t_max;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return lo;
}

OracleWorst brute_force_worst_voltage(const FlexContext& ctx, const Scenario& s, double dp_bound,
                                      const std::vector<double>& setpoints, SetpointRole role,
                                      int grid_points) {
  return BruteForceOracle(ctx, s.activation, setpoints, role, grid_points)
      .worst(s.node, s.extremum, dp_bound);
}

OracleReport verify_setpoints_nonlinear(const FlexContext& ctx, const UpperDecision& d,
                                        const OracleOptions& opt) {
  check_decision(ctx, d, 1e-7);
  OracleReport rep;
  rep.tolerance = opt.tolerance;
  const std::vector<Scenario> scen = enumerate_scenarios(ctx.size(), opt.direction);
  const std::vector<double> u = d.parameters();
  const bool brute = count_flexible(ctx.model) <= opt.brute_force_devices;

  std::optional<BruteForceOracle> pos, neg;
  if (brute) {
    pos.emplace(ctx, Activation::Positive, d.setpoints, SetpointRole::Parameter, opt.grid_points);
    neg.emplace(ctx, Activation::Negative, d.setpoints, SetpointRole::Parameter, opt.grid_points);
  }
  const PowerFlowSolver pf(ctx.model);

  rep.entries.resize(scen.size());
  rep.magnitudes.resize(scen.size());
  std::vector<double> lin_error(scen.size(), 0.0), lin_error_all(scen.size(), 0.0);
  std::vector<std::size_t> evaluated(scen.size(), 0), skipped(scen.size(), 0);
  parallel_for(scen.size(), opt.workers, [&](std::size_t i) {
    const Scenario& s = scen[i];
    const FollowerProblem f = build_follower(ctx, s, SetpointRole::Parameter);
    const FollowerSolution sol = solve_follower(f, u);
    if (!sol.cert.optimal())
      throw NumericalError("verify: follower " + s.describe(ctx.index) + " is " +
                           std::string(status_name(sol.cert.status)));

    // The LP optimizer as a device point, q pulled onto the exact circle.
    const FeederModel& m = ctx.model;
    DevicePoint pt;
    for (std::size_t j = 0; j < m.inverters.size(); ++j) {
      const double g = sol.cert.x[f.inverter_p[j]];
      const double room = circle_room(m.to_pu(m.inverters[j].s_kva), g);
      pt.p_gen.push_back(g);
      pt.q_gen.push_back(std::clamp(sol.cert.x[f.inverter_q[j]], -room, room));
    }
    for (std::size_t l = 0; l < m.loads.size(); ++l) pt.dp_load.push_back(sol.cert.x[f.load_dp[l]]);

    const Injections inj = device_injections(m, ctx.index, pt);
    const LinearVoltages lv = evaluate_linear_voltages(ctx.lpf, inj.p, inj.q);
    const OperatingPoint op = nonlinear_state(ctx, pt, d.setpoints, pf);
    double err = 0.0;
    for (std::size_t k = 0; k < ctx.size(); ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      const double lin = ctx.taylor.magnitude(k, lv.vd(kk), lv.vq(kk));
      err = std::max(err, std::abs(lin - std::abs(op.v(kk))));
    }
    lin_error_all[i] = err;
    const double point_mag = std::abs(op.v(static_cast<Eigen::Index>(s.node)));
    lin_error[i] = std::abs(sol.magnitude - point_mag);
    rep.magnitudes[i] = {s.node, sol.magnitude, point_mag};

    OracleEntry e{s, sol.magnitude, point_mag, 0.0, brute};
    if (brute) {
      const BruteForceOracle& o = s.activation == Activation::Positive ? *pos : *neg;
      const OracleWorst w = o.worst(s.node, s.extremum,
                                    s.activation == Activation::Positive ? d.dp_plus : -d.dp_minus);
      e.nonlinear = w.magnitude;
      evaluated[i] = w.evaluated;
      skipped[i] = w.skipped;
    } else {
      evaluated[i] = 1;
    }
    e.excess = std::max({ctx.band.vmin - e.nonlinear, e.nonlinear - ctx.band.vmax, 0.0});
    rep.entries[i] = e;
  });

  for (std::size_t i = 0; i < scen.size(); ++i) {
    rep.max_violation = std::max(rep.max_violation, rep.entries[i].excess);
    rep.max_linearization_error = std::max(rep.max_linearization_error, lin_error[i]);
    rep.max_linearization_error_all_nodes = std::max(rep.max_linearization_error_all_nodes, lin_error_all[i]);
    rep.points_evaluated += evaluated[i];
    rep.points_skipped += skipped[i];
    if (rep.entries[i].excess > opt.tolerance) rep.violating.push_back(scen[i].describe(ctx.index));
  }
  rep.passed = rep.violating.empty();
  return rep;
}

}  // namespace flexgrid
