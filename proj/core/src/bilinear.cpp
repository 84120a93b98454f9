#include "flexgrid/bilinear.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <queue>
#include <string>

#include "flexgrid/error.hpp"

namespace flexgrid {

BilinearProgram::BilinearProgram(LinearProgram lp) : base(std::move(lp)) { sync(); }

void BilinearProgram::sync() {
  const std::size_t n = base.variables.size();
  priority.resize(n, 0);
  for (std::size_t j = boxes.size(); j < n; ++j)
    boxes.push_back({base.variables[j].lower, base.variables[j].upper});
}

void BilinearProgram::add_term(std::size_t row, double coef, std::size_t i, std::size_t j) {
  terms.push_back({row, coef, i, j});
}

double BilinearProgram::row_activity(std::size_t r, const std::vector<double>& x) const {
  double a = base.row_activity(r, x);
  for (const BilinearTerm& t : terms)
    if (t.row == r) a += t.coef * x[t.var_i] * x[t.var_j];
  return a;
}

double BilinearProgram::max_violation(const std::vector<double>& x) const {
  std::vector<double> act(base.rows.size(), 0.0);
  for (std::size_t r = 0; r < base.rows.size(); ++r) act[r] = base.row_activity(r, x);
  for (const BilinearTerm& t : terms) act[t.row] += t.coef * x[t.var_i] * x[t.var_j];
  double worst = 0.0;
  for (std::size_t j = 0; j < base.variables.size(); ++j) {
    worst = std::max(worst, base.variables[j].lower - x[j]);
    worst = std::max(worst, x[j] - base.variables[j].upper);
  }
  for (std::size_t r = 0; r < base.rows.size(); ++r) {
    const double d = act[r] - base.rows[r].rhs;
    switch (base.rows[r].relation) {
      case Relation::LessEqual: worst = std::max(worst, d); break;
      case Relation::GreaterEqual: worst = std::max(worst, -d); break;
      case Relation::Equal: worst = std::max(worst, std::abs(d)); break;
    }
  }
  return worst;
}

McCormickRelaxation mccormick_relax(const BilinearProgram& bp, const std::vector<Interval>& boxes) {
  const std::size_t n = bp.base.variables.size();
  if (boxes.size() != n) throw ValidationError("mccormick_relax: one box per variable required");
  McCormickRelaxation out;
  out.lp = bp.base;
  for (std::size_t j = 0; j < n; ++j) {
    auto& v = out.lp.variables[j];
    v.lower = std::max(v.lower, boxes[j].lo);
    v.upper = std::min(v.upper, boxes[j].hi);
    // Boxes can be thinner than rounding; never hand the LP inverted bounds.
    if (v.lower > v.upper) v.lower = v.upper = 0.5 * (v.lower + v.upper);
  }
  auto box = [&](std::size_t j) {
    return Interval{out.lp.variables[j].lower, out.lp.variables[j].upper};
  };

  // One auxiliary per unordered pair, shared by all terms that use it.
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> aux;
  out.product_var.resize(bp.terms.size());
  for (std::size_t k = 0; k < bp.terms.size(); ++k) {
    const BilinearTerm& t = bp.terms[k];
    // add_row below may reallocate rows, so no reference is kept.
    auto terms_of = [&]() -> std::vector<Term>& { return out.lp.rows.at(t.row).terms; };
    const Interval bi = box(t.var_i), bj = box(t.var_j);
    if (bi.degenerate() && t.var_i != t.var_j) {
      terms_of().push_back({t.var_j, t.coef * bi.lo});
      continue;
    }
    if (bj.degenerate() && t.var_i != t.var_j) {
      terms_of().push_back({t.var_i, t.coef * bj.lo});
      continue;
    }
    if (bi.degenerate()) {
      out.lp.rows[t.row].rhs -= t.coef * bi.lo * bi.lo;
      continue;
    }
    if (!bi.finite() || !bj.finite())
      throw ValidationError("mccormick_relax: product of '" + bp.base.variables[t.var_i].name +
                            "' and '" + bp.base.variables[t.var_j].name + "' has an unbounded box");

    const auto key = std::minmax(t.var_i, t.var_j);
    auto it = aux.find(key);
    if (it == aux.end()) {
      const double c[4] = {bi.lo * bj.lo, bi.lo * bj.hi, bi.hi * bj.lo, bi.hi * bj.hi};
      double lo = *std::min_element(c, c + 4), hi = *std::max_element(c, c + 4);
      if (t.var_i == t.var_j) lo = std::max(lo, 0.0);
      const std::size_t w =
          out.lp.add_variable("w(" + bp.base.variables[t.var_i].name + "*" +
                                  bp.base.variables[t.var_j].name + ")",
                              lo, hi);
      const std::size_t x = t.var_i, y = t.var_j;
      // w >= xL y + yL x - xL yL,  w >= xU y + yU x - xU yU
      // w <= xU y + yL x - xU yL,  w <= xL y + yU x - xL yU
      auto add = [&](double cy, double cx, double rhs, Relation rel) {
        std::vector<Term> row{{w, 1.0}};
        if (x == y) {
          row.push_back({x, -(cx + cy)});
        } else {
          row.push_back({y, -cy});
          row.push_back({x, -cx});
        }
        out.lp.add_row("mc", std::move(row), rel, rhs);
      };
      add(bi.lo, bj.lo, -bi.lo * bj.lo, Relation::GreaterEqual);
      add(bi.hi, bj.hi, -bi.hi * bj.hi, Relation::GreaterEqual);
      add(bi.hi, bj.lo, -bi.hi * bj.lo, Relation::LessEqual);
      add(bi.lo, bj.hi, -bi.lo * bj.hi, Relation::LessEqual);
      it = aux.emplace(key, w).first;
    }
    terms_of().push_back({it->second, t.coef});
    out.product_var[k] = it->second;
  }
  return out;
}

namespace {

struct Node {
  std::vector<Interval> boxes;
  double bound;  // in maximization orientation
  int depth;
};

struct ByBound {
  bool operator()(const Node& a, const Node& b) const { return a.bound < b.bound; }
};

}  // namespace

BranchAndBoundResult spatial_branch_and_bound(const BilinearProgram& bp,
                                              const BranchAndBoundOptions& opt) {
  if (!(opt.epsilon > 0.0)) throw ValidationError("branch and bound: epsilon must be positive");
  bp.base.validate();
  const std::size_t n = bp.base.variables.size();
  if (bp.boxes.size() != n || bp.priority.size() != n)
    throw ValidationError("branch and bound: boxes/priorities not synced with variables");

  const auto start = std::chrono::steady_clock::now();
  const double sense = bp.base.sense == Sense::Maximize ? 1.0 : -1.0;
  BranchAndBoundResult res;
  bool have_incumbent = false;
  double incumbent = -kInf;  // maximization orientation

  auto offer = [&](const std::vector<double>& x) {
    if (x.size() != n || bp.max_violation(x) > opt.feasibility_tol) return;
    const double v = sense * bp.base.evaluate_objective(x);
    if (!have_incumbent || v > incumbent) {
      have_incumbent = true;
      incumbent = v;
      res.x = x;
    }
  };
  auto closed = [&](double bound) {
    return have_incumbent && bound - incumbent <= opt.epsilon * (1.0 + std::abs(incumbent));
  };

  // Fix the preferred factor of every product at its relaxed value; what
  // remains is an LP whose optimum is feasible for the bilinear program.
  auto fix_and_solve = [&](const std::vector<double>& relaxed, const std::vector<Interval>& boxes) {
    std::vector<Interval> fixed(n);
    for (std::size_t j = 0; j < n; ++j) fixed[j] = {bp.base.variables[j].lower, bp.base.variables[j].upper};
    for (const BilinearTerm& t : bp.terms) {
      const std::size_t f = bp.priority[t.var_j] > bp.priority[t.var_i] ? t.var_j : t.var_i;
      const double lo = std::max(boxes[f].lo, bp.base.variables[f].lower);
      const double hi = std::min(boxes[f].hi, bp.base.variables[f].upper);
      const double v = std::clamp(relaxed[f], lo, std::max(lo, hi));
      fixed[f] = {v, v};
    }
    const McCormickRelaxation r = mccormick_relax(bp, fixed);
    const DualCertificate c = solve_lp(r.lp, opt.lp);
    res.lp_iterations += c.iterations;
    if (c.optimal()) offer(std::vector<double>(c.x.begin(), c.x.begin() + static_cast<std::ptrdiff_t>(n)));
  };

  if (opt.warm_start) offer(*opt.warm_start);
  const double a_priori = std::isfinite(opt.objective_bound) ? sense * opt.objective_bound : kInf;
  if (closed(a_priori)) {
    res.status = LpStatus::Optimal;
    res.proven = true;
    res.objective = sense * incumbent;
    res.bound = res.root_bound = opt.objective_bound;
    return res;
  }

  std::priority_queue<Node, std::vector<Node>, ByBound> open;
  open.push({bp.boxes, a_priori, 0});
  bool root = true;
  bool hit_limit = false;
  double best_open = kInf;

  while (!open.empty()) {
    if (closed(open.top().bound)) break;
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (res.nodes >= opt.node_limit || elapsed > opt.time_limit_seconds) {
      hit_limit = true;
      break;
    }
    Node node = open.top();
    open.pop();
    ++res.nodes;

    const McCormickRelaxation relax = mccormick_relax(bp, node.boxes);
    const DualCertificate cert = solve_lp(relax.lp, opt.lp);
    res.lp_iterations += cert.iterations;
    if (cert.status == LpStatus::Unbounded) {
      if (root) {
        res.status = LpStatus::Unbounded;
        return res;
      }
      throw NumericalError("branch and bound: child relaxation unbounded");
    }
    if (!cert.optimal()) {
      root = false;
      continue;
    }
    const double bound = std::min(node.bound, sense * cert.objective);
    if (root) res.root_bound = sense * bound;
    root = false;
    if (closed(bound)) continue;

    const std::vector<double> x(cert.x.begin(), cert.x.begin() + static_cast<std::ptrdiff_t>(n));
    offer(x);
    if (!bp.terms.empty()) fix_and_solve(x, node.boxes);
    if (opt.heuristic)
      if (auto cand = opt.heuristic(x, node.boxes, node.depth)) offer(*cand);
    if (closed(bound)) continue;

    // Branch on the product whose relaxation is most violated.
    double worst = 0.0;
    std::size_t pick = bp.terms.size();
    for (std::size_t k = 0; k < bp.terms.size(); ++k) {
      if (!relax.product_var[k]) continue;
      const BilinearTerm& t = bp.terms[k];
      const double err = std::abs(t.coef * (cert.x[*relax.product_var[k]] - x[t.var_i] * x[t.var_j]));
      if (err > worst) {
        worst = err;
        pick = k;
      }
    }
    if (pick == bp.terms.size() || worst <= 1e-12) {
      // Relaxation is exact here; its optimum is the node optimum.
      offer(x);
      continue;
    }
    const BilinearTerm& t = bp.terms[pick];
    std::size_t v = t.var_i;
    if (bp.priority[t.var_j] > bp.priority[t.var_i] ||
        (bp.priority[t.var_j] == bp.priority[t.var_i] &&
         node.boxes[t.var_j].width() > node.boxes[t.var_i].width()))
      v = t.var_j;
    const Interval b{relax.lp.variables[v].lower, relax.lp.variables[v].upper};
    const double at = std::clamp(x[v], b.lo + 0.25 * b.width(), b.lo + 0.75 * b.width());
    Node left{node.boxes, bound, node.depth + 1};
    Node right{node.boxes, bound, node.depth + 1};
    left.boxes[v] = {b.lo, at};
    right.boxes[v] = {at, b.hi};
    open.push(std::move(left));
    open.push(std::move(right));
  }

  best_open = open.empty() ? -kInf : open.top().bound;
  if (!have_incumbent) {
    res.status = LpStatus::Infeasible;
    res.proven = !hit_limit;
    res.bound = sense * best_open;
    return res;
  }
  res.status = LpStatus::Optimal;
  res.objective = sense * incumbent;
  const double bound = std::max(incumbent, best_open);
  res.bound = sense * bound;
  res.proven = closed(bound);
  return res;
}

}  // namespace flexgrid
