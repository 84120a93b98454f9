#include "flexgrid/flex.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "flexgrid/error.hpp"
#include "flexgrid/parallel.hpp"

namespace flexgrid {

namespace {

constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool in_band(double m, VoltageBand band) { return m >= band.vmin && m <= band.vmax; }

double band_margin(double m, VoltageBand band) { return std::min(m - band.vmin, band.vmax - m); }

}  // namespace

FlexBounds available_flexibility_bounds(const std::vector<LoadSpec>& loads,
                                        const std::vector<InverterSpec>& inverters) {
  FlexBounds b;
  for (const InverterSpec& v : inverters) {
    b.upper_kw += v.p_max_kw - v.p_kw;
    b.lower_kw += v.p_min_kw - v.p_kw;
  }
  for (const LoadSpec& l : loads) {
    b.upper_kw += l.p_max_kw - l.p_kw;
    b.lower_kw += std::max(l.p_min_kw, 0.0) - l.p_kw;
  }
  return b;
}

BisectionResult bisect_limit(const FollowerProblem& f, std::vector<double> u, double t_max,
                             VoltageBand band, double tol) {
  const bool positive = f.scenario.activation == Activation::Positive;
  BisectionResult r;
  auto admissible = [&](double t, double& mag) {
    u[positive ? param::kDpPlus : param::kDpMinus] = positive ? t : -t;
    const FollowerSolution s = solve_follower(f, u);
    ++r.solves;
    if (!s.cert.optimal()) return false;
    mag = s.magnitude;
    return in_band(mag, band);
  };

  double m = 0.0;
  if (t_max > 0.0 && admissible(t_max, m)) {
    r.limit = t_max;
    r.magnitude = m;
    return r;
  }
  if (!admissible(0.0, m)) {
    r.feasible = false;
    r.magnitude = m;
    return r;
  }
  double lo = 0.0, hi = std::max(t_max, 0.0);
  r.magnitude = m;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (admissible(mid, m)) {
      lo = mid;
      r.magnitude = m;
    } else {
      hi = mid;
    }
  }
  r.limit = lo;
  return r;
}

WorstCaseTable worst_case_limits(const FlexContext& ctx, Direction direction, int workers,
                                 double rel_tol) {
  const std::vector<Scenario> scen = enumerate_scenarios(ctx.size(), direction);
  const SetpointRole role =
      ctx.mode == InverterMode::ConstantQ ? SetpointRole::FollowerChoosesQ : SetpointRole::Parameter;
  const double tol = rel_tol * std::max(ctx.dp_max, -ctx.dp_min);

  WorstCaseTable t;
  t.scenarios.resize(scen.size());
  parallel_for(scen.size(), workers, [&](std::size_t i) {
    const Scenario& s = scen[i];
    const FollowerProblem f = build_follower(ctx, s, role);
    std::vector<double> u{0.0, 0.0};
    const std::vector<double> sp = fix_worst_case_setpoints(ctx, s);
    u.insert(u.end(), sp.begin(), sp.end());
    const bool positive = s.activation == Activation::Positive;
    const BisectionResult r = bisect_limit(f, u, positive ? ctx.dp_max : -ctx.dp_min, ctx.band, tol);
    t.scenarios[i] = {s, positive ? r.limit : -r.limit, r.magnitude};
  });

  t.node_upper.assign(ctx.size(), ctx.dp_max);
  t.node_lower.assign(ctx.size(), ctx.dp_min);
  for (const ScenarioLimit& l : t.scenarios) {
    if (l.scenario.activation == Activation::Positive)
      t.node_upper[l.scenario.node] = std::min(t.node_upper[l.scenario.node], l.limit);
    else
      t.node_lower[l.scenario.node] = std::max(t.node_lower[l.scenario.node], l.limit);
  }
  t.range_upper = ctx.dp_max;
  t.range_lower = ctx.dp_min;
  for (double v : t.node_upper) t.range_upper = std::min(t.range_upper, v);
  for (double v : t.node_lower) t.range_lower = std::max(t.range_lower, v);
  for (std::size_t i = 0; i < t.scenarios.size(); ++i) {
    const ScenarioLimit& l = t.scenarios[i];
    if (l.scenario.activation == Activation::Positive && t.range_upper < ctx.dp_max &&
        l.limit == t.range_upper)
      t.binding_upper.push_back(i);
    if (l.scenario.activation == Activation::Negative && t.range_lower > ctx.dp_min &&
        l.limit == t.range_lower)
      t.binding_lower.push_back(i);
  }
  return t;
}

SingleLevelProgram assemble_single_level(const FlexContext& ctx, const std::vector<Scenario>& followers,
                                         const SingleLevelOptions& opt) {
  if (followers.empty()) throw ValidationError("single-level program needs at least one follower");
  SingleLevelProgram sl;
  sl.num_setpoints = ctx.num_setpoints();
  LinearProgram lp;
  lp.sense = Sense::Maximize;
  lp.add_variable("dp+", 0.0, ctx.dp_max, 1.0);
  lp.add_variable("dp-", ctx.dp_min, 0.0, -1.0);
  for (std::size_t j = 0; j < ctx.num_setpoints(); ++j) {
    const Interval b = setpoint_box(ctx, j);
    lp.add_variable("setpoint[" + std::to_string(j) + "]", b.lo, b.hi);
  }
  const std::size_t num_upper = lp.variables.size();

  std::vector<BilinearTerm> terms;
  std::vector<std::size_t> boxed_primal;

  for (std::size_t b = 0; b < followers.size(); ++b) {
    SingleLevelProgram::Block blk;
    blk.follower = build_follower(ctx, followers[b], SetpointRole::Parameter);
    const ParametricLP& plp = blk.follower.plp;
    const LinearProgram& f = plp.lp;
    const std::string tag = "f" + std::to_string(b) + ".";
    const std::size_t nx = f.variables.size(), nr = f.rows.size();

    blk.x0 = lp.variables.size();
    for (const auto& v : f.variables) lp.add_variable(tag + v.name, v.lower, v.upper);
    blk.lambda0 = lp.variables.size();
    for (const auto& r : f.rows) {
      const double lo = r.relation == Relation::LessEqual ? 0.0 : -kInf;
      const double hi = r.relation == Relation::GreaterEqual ? 0.0 : kInf;
      lp.add_variable(tag + "y." + r.name, lo, hi);
    }
    blk.mu_upper.assign(nx, npos);
    blk.mu_lower.assign(nx, npos);
    for (std::size_t j = 0; j < nx; ++j) {
      if (std::isfinite(f.variables[j].upper))
        blk.mu_upper[j] = lp.add_variable(tag + "mu+." + f.variables[j].name, 0.0, kInf);
      if (std::isfinite(f.variables[j].lower))
        blk.mu_lower[j] = lp.add_variable(tag + "mu-." + f.variables[j].name, 0.0, kInf);
    }

    // Primal feasibility.
    std::vector<std::size_t> primal_row(nr);
    for (std::size_t i = 0; i < nr; ++i) {
      std::vector<Term> row;
      for (const Term& t : f.rows[i].terms) row.push_back({blk.x0 + t.var, t.coef});
      for (const auto& rt : plp.rhs_terms)
        if (rt.row == i) row.push_back({rt.param, -rt.coef});
      primal_row[i] = lp.add_row(tag + f.rows[i].name, std::move(row), f.rows[i].relation, f.rows[i].rhs);
    }
    for (const auto& ct : plp.coef_terms) {
      terms.push_back({primal_row[ct.row], ct.coef, ct.param, blk.x0 + ct.var});
      boxed_primal.push_back(blk.x0 + ct.var);
      ++sl.primal_terms;
    }

    // Dual feasibility: A' y + mu+ - mu- = c, one row per primal variable.
    std::vector<std::vector<Term>> cols(nx);
    for (std::size_t i = 0; i < nr; ++i)
      for (const Term& t : f.rows[i].terms) cols[t.var].push_back({blk.lambda0 + i, t.coef});
    std::vector<std::size_t> dual_row(nx);
    for (std::size_t j = 0; j < nx; ++j) {
      if (blk.mu_upper[j] != npos) cols[j].push_back({blk.mu_upper[j], 1.0});
      if (blk.mu_lower[j] != npos) cols[j].push_back({blk.mu_lower[j], -1.0});
      dual_row[j] = lp.add_row(tag + "dual." + f.variables[j].name, std::move(cols[j]), Relation::Equal,
                               f.objective[j]);
    }
    for (const auto& ct : plp.coef_terms) {
      terms.push_back({dual_row[ct.var], ct.coef, ct.param, blk.lambda0 + ct.row});
      blk.boxed_duals.push_back(blk.lambda0 + ct.row);
      ++sl.dual_terms;
    }

    // Strong duality: c'x >= b(u)'y + u'mu+ - l'mu-.
    std::vector<Term> sd;
    for (std::size_t j = 0; j < nx; ++j)
      if (f.objective[j] != 0.0) sd.push_back({blk.x0 + j, f.objective[j]});
    for (std::size_t i = 0; i < nr; ++i)
      if (f.rows[i].rhs != 0.0) sd.push_back({blk.lambda0 + i, -f.rows[i].rhs});
    for (std::size_t j = 0; j < nx; ++j) {
      if (blk.mu_upper[j] != npos && f.variables[j].upper != 0.0)
        sd.push_back({blk.mu_upper[j], -f.variables[j].upper});
      if (blk.mu_lower[j] != npos && f.variables[j].lower != 0.0)
        sd.push_back({blk.mu_lower[j], f.variables[j].lower});
    }
    blk.duality_row = lp.add_row(tag + "strong_duality", std::move(sd), Relation::GreaterEqual,
                                 0.0);
    for (const auto& rt : plp.rhs_terms) {
      terms.push_back({blk.duality_row, -rt.coef, rt.param, blk.lambda0 + rt.row});
      blk.boxed_duals.push_back(blk.lambda0 + rt.row);
      ++sl.duality_terms;
    }

    // Upper-level band on the follower's optimal magnitude.
    const std::size_t m = blk.x0 + blk.follower.target_magnitude;
    lp.add_row(tag + "band.lo", {{m, 1.0}}, Relation::GreaterEqual, ctx.band.vmin);
    lp.add_row(tag + "band.hi", {{m, 1.0}}, Relation::LessEqual, ctx.band.vmax);

    std::sort(blk.boxed_duals.begin(), blk.boxed_duals.end());
    blk.boxed_duals.erase(std::unique(blk.boxed_duals.begin(), blk.boxed_duals.end()),
                          blk.boxed_duals.end());
    sl.blocks.push_back(std::move(blk));
  }

  sl.bp = BilinearProgram(std::move(lp));
  sl.bp.terms = std::move(terms);
  for (std::size_t j = 0; j < num_upper; ++j) sl.bp.priority[j] = 1;
  for (std::size_t j : boxed_primal) {
    Interval& box = sl.bp.boxes[j];
    if (!box.finite()) box = {std::max(box.lo, opt.magnitude_box.lo), std::min(box.hi, opt.magnitude_box.hi)};
  }
  for (const auto& blk : sl.blocks)
    for (std::size_t j : blk.boxed_duals) {
      Interval& box = sl.bp.boxes[j];
      box = {std::max(box.lo, -opt.lambda_box), std::min(box.hi, opt.lambda_box)};
    }
  return sl;
}

UpperDecision decision_of(const SingleLevelProgram& sl, const std::vector<double>& x, InverterMode mode) {
  UpperDecision d;
  d.mode = mode;
  d.dp_plus = x.at(param::kDpPlus);
  d.dp_minus = x.at(param::kDpMinus);
  d.setpoints.assign(x.begin() + 2, x.begin() + 2 + static_cast<std::ptrdiff_t>(sl.num_setpoints));
  return d;
}

std::optional<std::vector<double>> single_level_point(const SingleLevelProgram& sl,
                                                      const UpperDecision& d) {
  const std::vector<double> u = d.parameters();
  std::vector<double> x(sl.bp.base.variables.size(), 0.0);
  std::copy(u.begin(), u.end(), x.begin());
  for (const auto& blk : sl.blocks) {
    const FollowerSolution s = solve_follower(blk.follower, u);
    if (!s.cert.optimal()) return std::nullopt;
    const LinearProgram& f = blk.follower.plp.lp;
    for (std::size_t j = 0; j < s.cert.x.size(); ++j) x[blk.x0 + j] = s.cert.x[j];
    for (std::size_t i = 0; i < f.rows.size(); ++i) {
      double y = s.cert.row_duals[i];
      if (f.rows[i].relation == Relation::LessEqual) y = std::max(y, 0.0);
      if (f.rows[i].relation == Relation::GreaterEqual) y = std::min(y, 0.0);
      x[blk.lambda0 + i] = y;
    }
    for (std::size_t j = 0; j < s.cert.reduced_costs.size(); ++j) {
      const double r = s.cert.reduced_costs[j];
      if (blk.mu_upper[j] != npos) x[blk.mu_upper[j]] = std::max(r, 0.0);
      if (blk.mu_lower[j] != npos) x[blk.mu_lower[j]] = std::max(-r, 0.0);
    }
  }
  return x;
}

std::vector<double> duality_gaps(const SingleLevelProgram& sl, const std::vector<double>& x) {
  std::vector<double> gaps;
  for (const auto& blk : sl.blocks) {
    const ParametricLP& plp = blk.follower.plp;
    const LinearProgram& f = plp.lp;
    std::vector<double> rhs(f.rows.size());
    for (std::size_t i = 0; i < f.rows.size(); ++i) rhs[i] = f.rows[i].rhs;
    for (const auto& rt : plp.rhs_terms) rhs[rt.row] += rt.coef * x[rt.param];
    double primal = 0.0, dual = 0.0;
    for (std::size_t j = 0; j < f.variables.size(); ++j) {
      primal += f.objective[j] * x[blk.x0 + j];
      if (blk.mu_upper[j] != npos) dual += f.variables[j].upper * x[blk.mu_upper[j]];
      if (blk.mu_lower[j] != npos) dual -= f.variables[j].lower * x[blk.mu_lower[j]];
    }
    for (std::size_t i = 0; i < f.rows.size(); ++i) dual += rhs[i] * x[blk.lambda0 + i];
    gaps.push_back(std::abs(primal - dual) / (1.0 + std::abs(primal)));
  }
  return gaps;
}

std::vector<Violation> feasibility_check(const FlexContext& ctx, const UpperDecision& d,
                                         Direction direction, int workers, double tol) {
  check_decision(ctx, d, 1e-7);
  const std::vector<Scenario> scen = enumerate_scenarios(ctx.size(), direction);
  const std::vector<double> u = d.parameters();
  std::vector<std::optional<Violation>> found(scen.size());
  parallel_for(scen.size(), workers, [&](std::size_t i) {
    const FollowerProblem f = build_follower(ctx, scen[i], SetpointRole::Parameter);
    const FollowerSolution s = solve_follower(f, u);
    if (!s.cert.optimal())
      throw NumericalError("feasibility check: follower " + scen[i].describe(ctx.index) + " is " +
                           std::string(status_name(s.cert.status)));
    const double excess = std::max(ctx.band.vmin - s.magnitude, s.magnitude - ctx.band.vmax);
    if (excess > tol) found[i] = Violation{scen[i], s.magnitude, excess};
  });
  std::vector<Violation> out;
  for (auto& v : found)
    if (v) out.push_back(*v);
  std::stable_sort(out.begin(), out.end(),
                   [](const Violation& a, const Violation& b) { return a.excess > b.excess; });
  return out;
}

std::vector<double> anchor_setpoints(const FlexContext& ctx) {
  const double kappa = 2.0 / (ctx.band.vmax - ctx.band.vmin);
  const double centre = (ctx.band.vmax + ctx.band.vmin) / (ctx.band.vmax - ctx.band.vmin);
  std::vector<double> out(ctx.num_setpoints(), 0.0);
  for (std::size_t j = 0; j < out.size(); ++j) {
    const InverterSpec& v = ctx.model.inverters[j];
    const double q = ctx.model.to_pu(v.q_kvar);
    double s = 0.0;
    switch (ctx.mode) {
      case InverterMode::ConstantPF: s = v.p_kw > 0.0 ? v.q_kvar / v.p_kw : 0.0; break;
      case InverterMode::ConstantQ: s = q; break;
      case InverterMode::VoltVar: {
        const double m = ctx.taylor.mag(static_cast<Eigen::Index>(ctx.inverter_node[j]));
        const double slope = centre - kappa * m;
        s = std::abs(slope) > 1e-9 ? q / slope : 0.0;
        break;
      }
    }
    const Interval b = setpoint_box(ctx, j);
    out[j] = std::clamp(s, b.lo, b.hi);
  }
  return out;
}

namespace {

/// Upper-level search used both as warm start and as the branch-and-bound
/// primal heuristic: fix the setpoints, then push dp+ and dp- as far as
/// every selected follower allows.
class DecisionSearch {
 public:
  DecisionSearch(const FlexContext& ctx, const SingleLevelProgram& sl, const FlexConfig& cfg)
      : ctx_(ctx), sl_(sl), tol_(cfg.bisection_tol * std::max(ctx.dp_max, -ctx.dp_min)) {}

  struct Candidate {
    std::vector<double> x;
    double objective = -kInf;
    double margin = -kInf;
  };

  std::optional<Candidate> evaluate(const std::vector<double>& setpoints) const {
    UpperDecision d;
    d.mode = ctx_.mode;
    d.setpoints = setpoints;
    for (std::size_t j = 0; j < setpoints.size(); ++j) {
      const Interval b = setpoint_box(ctx_, j);
      d.setpoints[j] = std::clamp(d.setpoints[j], b.lo, b.hi);
    }
    std::vector<double> u = d.parameters();
    d.dp_plus = ctx_.dp_max;
    d.dp_minus = ctx_.dp_min;
    for (const auto& blk : sl_.blocks) {
      const bool positive = blk.follower.scenario.activation == Activation::Positive;
      const double t_max = positive ? d.dp_plus : -d.dp_minus;
      const BisectionResult r = bisect_limit(blk.follower, u, t_max, ctx_.band, tol_);
      if (!r.feasible) return std::nullopt;
      if (positive) d.dp_plus = r.limit;
      else d.dp_minus = -r.limit;
    }
    auto x = single_level_point(sl_, d);
    if (!x) return std::nullopt;
    Candidate c;
    c.objective = d.dp_plus - d.dp_minus;
    c.margin = kInf;
    for (const auto& blk : sl_.blocks)
      c.margin = std::min(c.margin, band_margin((*x)[blk.x0 + blk.follower.target_magnitude], ctx_.band));
    c.x = std::move(*x);
    return c;
  }

  static bool better(const Candidate& a, const Candidate& b, double scale) {
    const double tie = 1e-9 * (1.0 + scale);
    if (a.objective > b.objective + tie) return true;
    if (a.objective < b.objective - tie) return false;
    return a.margin > b.margin;
  }

  std::vector<std::vector<double>> fixed_candidates(const std::vector<double>& previous) const {
    const std::size_t ns = ctx_.num_setpoints();
    std::vector<double> lo(ns), hi(ns);
    for (std::size_t j = 0; j < ns; ++j) {
      lo[j] = setpoint_box(ctx_, j).lo;
      hi[j] = setpoint_box(ctx_, j).hi;
    }
    return {previous, anchor_setpoints(ctx_), std::vector<double>(ns, 0.0), lo, hi,
            fix_worst_case_setpoints(ctx_, Extremum::Max), fix_worst_case_setpoints(ctx_, Extremum::Min)};
  }

 private:
  const FlexContext& ctx_;
  const SingleLevelProgram& sl_;
  double tol_;
};

}  // namespace

FlexibilityResult run_iterative(const FlexContext& ctx, const FlexConfig& cfg) {
  const auto t_start = Clock::now();
  FlexibilityResult res;
  res.decision.mode = ctx.mode;
  res.worst = worst_case_limits(ctx, cfg.direction, cfg.workers, cfg.bisection_tol);
  res.worst_case_seconds = seconds_since(t_start);

  // Seed with the followers that bind the worst-case range.
  std::vector<Scenario>& selected = res.active;
  if (!res.worst.binding_upper.empty())
    selected.push_back(res.worst.scenarios[res.worst.binding_upper.front()].scenario);
  if (!res.worst.binding_lower.empty())
    selected.push_back(res.worst.scenarios[res.worst.binding_lower.front()].scenario);
  if (selected.empty()) {
    std::size_t pick = 0;
    double best = kInf;
    for (std::size_t i = 0; i < res.worst.scenarios.size(); ++i) {
      const double m = band_margin(res.worst.scenarios[i].magnitude, ctx.band);
      if (m < best) {
        best = m;
        pick = i;
      }
    }
    if (!res.worst.scenarios.empty()) selected.push_back(res.worst.scenarios[pick].scenario);
  }
  if (selected.empty()) throw ValidationError("run: no followers (empty feeder?)");

  const int cap = static_cast<int>(4 * ctx.size());
  const double scale = ctx.dp_max - ctx.dp_min;
  std::vector<double> setpoints = anchor_setpoints(ctx);

  for (int it = 1; it <= cap; ++it) {
    const auto t_iter = Clock::now();
    IterationRecord rec;
    rec.iteration = it;
    rec.followers = selected;

    double lambda_box = cfg.lambda_box;
    SingleLevelProgram sl;
    BranchAndBoundResult bb;
    for (int esc = 0;; ++esc) {
      sl = assemble_single_level(ctx, selected, {lambda_box, {0.5, 1.5}});
      const DecisionSearch search(ctx, sl, cfg);
      std::optional<DecisionSearch::Candidate> best;
      for (const auto& sp : search.fixed_candidates(setpoints)) {
        auto c = search.evaluate(sp);
        if (c && (!best || DecisionSearch::better(*c, *best, scale))) best = std::move(c);
      }

      BranchAndBoundOptions opt;
      opt.epsilon = cfg.epsilon;
      opt.feasibility_tol = cfg.feasibility_tol;
      opt.node_limit = cfg.node_limit;
      opt.time_limit_seconds = cfg.time_limit_seconds;
      opt.objective_bound = scale;
      if (best) opt.warm_start = best->x;
      opt.heuristic = [&](const std::vector<double>& relaxed, const std::vector<Interval>&, int) {
        std::vector<double> sp(relaxed.begin() + 2,
                               relaxed.begin() + 2 + static_cast<std::ptrdiff_t>(ctx.num_setpoints()));
        auto c = search.evaluate(sp);
        return c ? std::optional<std::vector<double>>(std::move(c->x)) : std::nullopt;
      };
      bb = spatial_branch_and_bound(sl.bp, opt);
      if (bb.status != LpStatus::Optimal)
        throw NumericalError("single-level program has no admissible decision at iteration " +
                             std::to_string(it));

      bool active = false;
      if (bb.nodes > 0)
        for (const auto& blk : sl.blocks)
          for (std::size_t j : blk.boxed_duals)
            if (std::abs(bb.x[j]) >= lambda_box * (1.0 - 1e-9)) active = true;
      if (!active || esc >= cfg.lambda_escalations) break;
      lambda_box *= 2.0;
    }

    const UpperDecision d = decision_of(sl, bb.x, ctx.mode);
    setpoints = d.setpoints;
    res.decision = d;
    const std::vector<double> gaps = duality_gaps(sl, bb.x);
    rec.max_duality_gap = gaps.empty() ? 0.0 : *std::max_element(gaps.begin(), gaps.end());
    rec.dp_plus = d.dp_plus;
    rec.dp_minus = d.dp_minus;
    rec.bound = bb.bound;
    rec.proven = bb.proven;
    rec.nodes = bb.nodes;
    rec.lambda_box = lambda_box;

    const std::vector<Violation> viol =
        feasibility_check(ctx, d, cfg.direction, cfg.workers, cfg.feasibility_tol);
    rec.violations = viol.size();
    rec.seconds = seconds_since(t_iter);
    res.log.push_back(rec);
    if (viol.empty()) {
      res.converged = true;
      break;
    }

    bool added = false;
    for (Activation a : {Activation::Positive, Activation::Negative}) {
      for (const Violation& v : viol) {
        if (v.scenario.activation != a) continue;
        if (std::find(selected.begin(), selected.end(), v.scenario) != selected.end()) continue;
        selected.push_back(v.scenario);
        added = true;
        break;
      }
    }
    if (!added) break;
    if (it == cap) res.hit_iteration_cap = true;
  }

  if (!res.converged) {
    // Fall back to the range that is secure under worst-case setpoints.
    res.decision.dp_plus = res.worst.range_upper;
    res.decision.dp_minus = res.worst.range_lower;
  }
  res.total_seconds = seconds_since(t_start);
  return res;
}

}  // namespace flexgrid
