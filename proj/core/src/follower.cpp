#include "flexgrid/follower.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "flexgrid/error.hpp"

namespace flexgrid {

namespace {

constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

double power_ratio(double pf) { return std::sqrt(1.0 - pf * pf) / pf; }

std::string where(std::size_t j) { return "inverters[" + std::to_string(j) + "]"; }

}  // namespace

std::string_view direction_name(Direction d) {
  switch (d) {
    case Direction::Both: return "both";
    case Direction::OvervoltageOnly: return "overvoltage-only";
    case Direction::UndervoltageOnly: return "undervoltage-only";
  }
  return "?";
}

Direction parse_direction(std::string_view text) {
  if (text == "both") return Direction::Both;
  if (text == "overvoltage-only" || text == "over") return Direction::OvervoltageOnly;
  if (text == "undervoltage-only" || text == "under") return Direction::UndervoltageOnly;
  throw ValidationError("direction: expected both, overvoltage-only or undervoltage-only, got '" +
                        std::string(text) + "'");
}

std::string Scenario::describe(const BusPhaseIndex& index) const {
  return index.describe(node) + (activation == Activation::Positive ? "/pos-" : "/neg-") +
         (extremum == Extremum::Max ? "max" : "min");
}

std::vector<Scenario> enumerate_scenarios(std::size_t n, Direction filter) {
  std::vector<Scenario> out;
  for (std::size_t k = 0; k < n; ++k)
    for (Activation a : {Activation::Positive, Activation::Negative})
      for (Extremum e : {Extremum::Min, Extremum::Max}) {
        if (filter == Direction::OvervoltageOnly && e == Extremum::Min) continue;
        if (filter == Direction::UndervoltageOnly && e == Extremum::Max) continue;
        out.push_back({a, e, k});
      }
  return out;
}

FlexContext FlexContext::build(const FeederModel& model, InverterMode mode, VoltageBand band) {
  validate(model);
  if (!(band.vmin > 0.0) || !(band.vmin < band.vmax) || !std::isfinite(band.vmax))
    throw ValidationError("voltage band: need 0 < vmin < vmax, got [" + std::to_string(band.vmin) +
                          ", " + std::to_string(band.vmax) + "]");
  for (std::size_t j = 0; j < model.inverters.size(); ++j) {
    const ModeParams& p = model.inverters[j].params;
    if (mode == InverterMode::ConstantPF && !p.pf)
      throw ValidationError(where(j) + ".mode_params.pf: required in constant-pf mode");
    if (mode == InverterMode::ConstantQ && !p.gamma)
      throw ValidationError(where(j) + ".mode_params.gamma: required in constant-q mode");
  }

  FlexContext ctx{model, BusPhaseIndex(model), mode, band, {}, {}, {}, {}, {}, 0.0, 0.0};
  ctx.anchor = current_operating_point(model);
  ctx.lpf = build_fixed_point_model(model, ctx.anchor);
  ctx.taylor = magnitude_taylor(ctx.anchor);
  for (const LoadSpec& l : model.loads) {
    ctx.load_node.push_back(ctx.index.at(l.bus, l.phase));
    ctx.dp_max += model.to_pu(l.p_max_kw - l.p_kw);
    ctx.dp_min += model.to_pu(std::max(l.p_min_kw, 0.0) - l.p_kw);
  }
  for (const InverterSpec& v : model.inverters) {
    ctx.inverter_node.push_back(ctx.index.at(v.bus, v.phase));
    ctx.dp_max += model.to_pu(v.p_max_kw - v.p_kw);
    ctx.dp_min += model.to_pu(v.p_min_kw - v.p_kw);
  }

  const Eigen::VectorXd mag = ctx.anchor.magnitudes();
  for (std::size_t k = 0; k < ctx.size(); ++k) {
    const double m = mag(static_cast<Eigen::Index>(k));
    if (m < band.vmin || m > band.vmax)
      throw InfeasibleAnchorError("anchor voltage at " + ctx.index.describe(k) + " is " +
                                  std::to_string(m) + " p.u., outside [" +
                                  std::to_string(band.vmin) + ", " + std::to_string(band.vmax) + "]");
  }
  return ctx;
}

Interval setpoint_box(const FlexContext& ctx, std::size_t j) {
  const InverterSpec& v = ctx.model.inverters.at(j);
  switch (ctx.mode) {
    case InverterMode::ConstantPF: {
      const double g = power_ratio(*v.params.pf);
      return {-g, g};
    }
    case InverterMode::ConstantQ: {
      // Must stay reachable with the generation frozen at its current value,
      // otherwise the follower is infeasible at zero flexibility.
      const double q = *v.params.gamma * ctx.model.to_pu(v.p_kw);
      return {-q, q};
    }
    case InverterMode::VoltVar: return {0.0, ctx.model.to_pu(v.s_kva)};
  }
  return {};
}

std::vector<double> UpperDecision::parameters() const {
  std::vector<double> u{dp_plus, dp_minus};
  u.insert(u.end(), setpoints.begin(), setpoints.end());
  return u;
}

void check_decision(const FlexContext& ctx, const UpperDecision& d, double tol) {
  if (d.mode != ctx.mode)
    throw ValidationError("decision: mode " + std::string(mode_name(d.mode)) +
                          " does not match the run mode " + std::string(mode_name(ctx.mode)));
  if (!std::isfinite(d.dp_plus) || !std::isfinite(d.dp_minus))
    throw ValidationError("decision: flexibility limits must be finite");
  if (d.dp_minus > tol || d.dp_plus < -tol)
    throw ValidationError("decision: need dp_minus <= 0 <= dp_plus");
  if (d.dp_plus > ctx.dp_max + tol || d.dp_minus < ctx.dp_min - tol)
    throw ValidationError("decision: limits exceed the available flexibility");
  if (d.setpoints.size() != ctx.num_setpoints())
    throw ValidationError("decision: expected " + std::to_string(ctx.num_setpoints()) +
                          " setpoints, got " + std::to_string(d.setpoints.size()));
  for (std::size_t j = 0; j < d.setpoints.size(); ++j) {
    const Interval b = setpoint_box(ctx, j);
    if (!(d.setpoints[j] >= b.lo - tol && d.setpoints[j] <= b.hi + tol))
      throw ValidationError("decision: setpoints[" + std::to_string(j) + "] = " +
                            std::to_string(d.setpoints[j]) + " outside [" + std::to_string(b.lo) +
                            ", " + std::to_string(b.hi) + "]");
  }
}

LinearProgram ParametricLP::instantiate(const std::vector<double>& u) const {
  LinearProgram out = lp;
  for (const CoefTerm& t : coef_terms) {
    const double v = t.coef * u.at(t.param);
    if (v != 0.0) out.rows[t.row].terms.push_back({t.var, v});
  }
  for (const RhsTerm& t : rhs_terms) out.rows[t.row].rhs += t.coef * u.at(t.param);
  return out;
}

FollowerProblem build_follower(const FlexContext& ctx, const Scenario& s, SetpointRole role) {
  const FeederModel& m = ctx.model;
  const std::size_t n = ctx.size();
  if (s.node >= n) throw ValidationError("scenario: node out of range");
  const bool positive = s.activation == Activation::Positive;

  FollowerProblem f;
  f.scenario = s;
  LinearProgram& lp = f.plp.lp;
  lp.sense = Sense::Maximize;

  std::vector<std::size_t> needed{s.node};
  if (ctx.mode == InverterMode::VoltVar)
    for (std::size_t k : ctx.inverter_node) needed.push_back(k);
  std::sort(needed.begin(), needed.end());
  needed.erase(std::unique(needed.begin(), needed.end()), needed.end());

  f.magnitude_of_node.assign(n, npos);
  std::vector<std::size_t> vd(n, npos), vq(n, npos);
  for (std::size_t k : needed) {
    const std::string tag = ctx.index.describe(k);
    vd[k] = lp.add_variable("vd[" + tag + "]", -kInf, kInf);
    vq[k] = lp.add_variable("vq[" + tag + "]", -kInf, kInf);
    f.magnitude_of_node[k] = lp.add_variable("v[" + tag + "]", -kInf, kInf);
  }
  f.target_magnitude = f.magnitude_of_node[s.node];
  lp.objective[f.target_magnitude] = s.extremum == Extremum::Max ? 1.0 : -1.0;

  double p_gen = 0.0;
  for (std::size_t j = 0; j < m.inverters.size(); ++j) {
    const InverterSpec& v = m.inverters[j];
    const double p = m.to_pu(v.p_kw), cap = m.to_pu(v.s_kva);
    double lo = std::max(m.to_pu(v.p_min_kw), 0.0), hi = std::min(m.to_pu(v.p_max_kw), cap);
    if (positive) lo = std::max(lo, p);
    else hi = std::min(hi, p);
    p_gen += p;
    f.inverter_p.push_back(lp.add_variable("pG[" + std::to_string(j) + "]", lo, hi));
    f.inverter_q.push_back(lp.add_variable("qG[" + std::to_string(j) + "]", -cap, cap));
  }
  for (std::size_t i = 0; i < m.loads.size(); ++i) {
    const LoadSpec& l = m.loads[i];
    const double p = m.to_pu(l.p_kw);
    double lo = m.to_pu(std::max(l.p_min_kw, 0.0)) - p, hi = m.to_pu(l.p_max_kw) - p;
    if (positive) hi = std::min(hi, 0.0);
    else lo = std::max(lo, 0.0);
    f.load_dp.push_back(lp.add_variable("dpL[" + std::to_string(i) + "]", lo, hi));
    f.load_q.push_back(lp.add_variable("qL[" + std::to_string(i) + "]", -kInf, kInf));
  }

  auto add = [&](RowGroup g, std::string name, std::vector<Term> terms, Relation rel, double rhs) {
    f.row_group.push_back(g);
    return lp.add_row(std::move(name), std::move(terms), rel, rhs);
  };

  // Linearized power flow at the nodes whose voltage is modelled.
  for (std::size_t k : needed) {
    const auto i = static_cast<Eigen::Index>(k);
    std::vector<Term> rd{{vd[k], 1.0}}, rq{{vq[k], 1.0}};
    double bd = ctx.lpf.z1(i).real(), bq = ctx.lpf.z1(i).imag();
    for (std::size_t j = 0; j < m.inverters.size(); ++j) {
      const auto c = static_cast<Eigen::Index>(ctx.inverter_node[j]);
      const double re = ctx.lpf.z2_re(i, c), im = ctx.lpf.z2_im(i, c);
      rd.push_back({f.inverter_p[j], -re});
      rd.push_back({f.inverter_q[j], -im});
      rq.push_back({f.inverter_p[j], -im});
      rq.push_back({f.inverter_q[j], re});
    }
    for (std::size_t l = 0; l < m.loads.size(); ++l) {
      const auto c = static_cast<Eigen::Index>(ctx.load_node[l]);
      const double re = ctx.lpf.z2_re(i, c), im = ctx.lpf.z2_im(i, c);
      const double p = m.to_pu(m.loads[l].p_kw);
      rd.push_back({f.load_dp[l], re});
      rd.push_back({f.load_q[l], im});
      rq.push_back({f.load_dp[l], im});
      rq.push_back({f.load_q[l], -re});
      bd -= re * p;
      bq -= im * p;
    }
    const std::string tag = ctx.index.describe(k);
    add(RowGroup::System, "pf_d[" + tag + "]", std::move(rd), Relation::Equal, bd);
    add(RowGroup::System, "pf_q[" + tag + "]", std::move(rq), Relation::Equal, bq);
    const MagnitudeTaylor::Row t = ctx.taylor.row(k);
    add(RowGroup::System, "mag[" + tag + "]",
        {{vd[k], t.coef_d}, {vq[k], t.coef_q}, {f.magnitude_of_node[k], t.coef_m}}, Relation::Equal,
        t.rhs);
  }

  for (std::size_t l = 0; l < m.loads.size(); ++l) {
    const double k = power_ratio(m.loads[l].pf);
    add(RowGroup::System, "qL[" + std::to_string(l) + "]", {{f.load_q[l], 1.0}, {f.load_dp[l], -k}},
        Relation::Equal, k * m.to_pu(m.loads[l].p_kw));
  }

  const double kappa = 2.0 / (ctx.band.vmax - ctx.band.vmin);
  const double centre = (ctx.band.vmax + ctx.band.vmin) / (ctx.band.vmax - ctx.band.vmin);
  for (std::size_t j = 0; j < m.inverters.size(); ++j) {
    const InverterSpec& v = m.inverters[j];
    const std::string tag = std::to_string(j);
    const double cap = std::numbers::sqrt2 * m.to_pu(v.s_kva);
    const std::size_t p = f.inverter_p[j], q = f.inverter_q[j];
    add(RowGroup::Inverter, "cap+[" + tag + "]", {{p, 1.0}, {q, 1.0}}, Relation::LessEqual, cap);
    add(RowGroup::Inverter, "cap-[" + tag + "]", {{p, 1.0}, {q, -1.0}}, Relation::LessEqual, cap);
    switch (ctx.mode) {
      case InverterMode::ConstantPF: {
        const std::size_t r = add(RowGroup::Inverter, "pf[" + tag + "]", {{q, 1.0}}, Relation::Equal, 0.0);
        f.plp.coef_terms.push_back({r, p, param::setpoint(j), -1.0});
        break;
      }
      case InverterMode::ConstantQ: {
        const double g = *v.params.gamma;
        add(RowGroup::Inverter, "qlo[" + tag + "]", {{q, 1.0}, {p, g}}, Relation::GreaterEqual, 0.0);
        add(RowGroup::Inverter, "qhi[" + tag + "]", {{q, 1.0}, {p, -g}}, Relation::LessEqual, 0.0);
        if (role == SetpointRole::Parameter) {
          const std::size_t r = add(RowGroup::Inverter, "qset[" + tag + "]", {{q, 1.0}}, Relation::Equal, 0.0);
          f.plp.rhs_terms.push_back({r, param::setpoint(j), 1.0});
        }
        break;
      }
      case InverterMode::VoltVar: {
        const std::size_t r = add(RowGroup::Inverter, "vv[" + tag + "]", {{q, 1.0}}, Relation::Equal, 0.0);
        f.plp.coef_terms.push_back(
            {r, f.magnitude_of_node[ctx.inverter_node[j]], param::setpoint(j), kappa});
        f.plp.rhs_terms.push_back({r, param::setpoint(j), centre});
        break;
      }
    }
  }

  std::vector<Term> agg;
  for (std::size_t p : f.inverter_p) agg.push_back({p, 1.0});
  for (std::size_t d : f.load_dp) agg.push_back({d, -1.0});
  f.aggregate_row = add(RowGroup::Flexibility, "aggregate", std::move(agg),
                        positive ? Relation::LessEqual : Relation::GreaterEqual, p_gen);
  f.plp.rhs_terms.push_back({f.aggregate_row, positive ? param::kDpPlus : param::kDpMinus, 1.0});
  return f;
}

std::vector<double> fix_worst_case_setpoints(const FlexContext& ctx, Extremum e) {
  std::vector<double> out(ctx.num_setpoints(), 0.0);
  for (std::size_t j = 0; j < out.size(); ++j) {
    const Interval b = setpoint_box(ctx, j);
    switch (ctx.mode) {
      case InverterMode::ConstantPF: out[j] = e == Extremum::Max ? b.hi : b.lo; break;
      case InverterMode::VoltVar: out[j] = e == Extremum::Max ? b.lo : b.hi; break;
      case InverterMode::ConstantQ: out[j] = 0.0; break;
    }
  }
  return out;
}

double magnitude_sensitivity_q(const FlexContext& ctx, std::size_t k, std::size_t j) {
  const auto i = static_cast<Eigen::Index>(k);
  const auto c = static_cast<Eigen::Index>(ctx.inverter_node.at(j));
  const MagnitudeTaylor::Row t = ctx.taylor.row(k);
  return -(t.coef_d * ctx.lpf.z2_im(i, c) - t.coef_q * ctx.lpf.z2_re(i, c)) / t.coef_m;
}

std::vector<double> fix_worst_case_setpoints(const FlexContext& ctx, const Scenario& s) {
  std::vector<double> out = fix_worst_case_setpoints(ctx, s.extremum);
  if (ctx.mode != InverterMode::ConstantPF) return out;
  // q_j = gamma_j * p_j with p_j >= 0, so the sign of the sensitivity decides.
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double d = magnitude_sensitivity_q(ctx, s.node, j);
    if (d == 0.0) continue;
    const Interval b = setpoint_box(ctx, j);
    const bool raise = (d > 0.0) == (s.extremum == Extremum::Max);
    out[j] = raise ? b.hi : b.lo;
  }
  return out;
}

FollowerSolution solve_follower(const FollowerProblem& f, const std::vector<double>& u) {
  FollowerSolution s;
  s.cert = solve_lp(f.plp.instantiate(u));
  if (s.cert.optimal()) s.magnitude = s.cert.x[f.target_magnitude];
  return s;
}

}  // namespace flexgrid
