#include "support.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "flexgrid/error.hpp"
#include "flexgrid/powerflow.hpp"

namespace flexgrid::testing {

std::filesystem::path data_file(const std::string& name) {
  return std::filesystem::path(FLEXGRID_DATA_DIR) / name;
}

std::vector<std::filesystem::path> corpus() {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(FLEXGRID_DATA_DIR))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  return files;
}

// ---------------------------------------------------------------------------

LinearProgram random_lp(std::mt19937_64& rng, std::size_t max_vars) {
  std::uniform_int_distribution<std::size_t> nvar(1, max_vars);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  LinearProgram lp;
  const std::size_t n = nvar(rng);
  const std::size_t max_rows = n <= 6 ? 5 : n <= 9 ? 4 : 3;
  const std::size_t m = std::uniform_int_distribution<std::size_t>(1, max_rows)(rng);
  std::vector<double> x0(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double lo = -5.0 * u01(rng), hi = lo + 0.5 + 4.5 * u01(rng);
    lp.add_variable("x" + std::to_string(j), lo, hi, gauss(rng));
    x0[j] = lo + (hi - lo) * u01(rng);
  }
  lp.sense = u01(rng) < 0.5 ? Sense::Maximize : Sense::Minimize;

  const bool make_infeasible = u01(rng) < 0.125;
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<Term> terms;
    double act = 0.0, lowest = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (u01(rng) < 0.3) continue;
      const double a = std::round(gauss(rng) * 100.0) / 50.0;
      if (a == 0.0) continue;
      terms.push_back({j, a});
      act += a * x0[j];
      lowest += a * (a > 0.0 ? lp.variables[j].lower : lp.variables[j].upper);
    }
    if (terms.empty()) terms.push_back({0, 1.0}), act = x0[0], lowest = lp.variables[0].lower;
    const double r = u01(rng);
    if (make_infeasible && i == 0) {
      lp.add_row("r" + std::to_string(i), std::move(terms), Relation::LessEqual, lowest - 1.0);
    } else if (r < 0.2) {
      lp.add_row("r" + std::to_string(i), std::move(terms), Relation::Equal, act);
    } else if (r < 0.6) {
      lp.add_row("r" + std::to_string(i), std::move(terms), Relation::LessEqual, act + 2.0 * u01(rng));
    } else {
      lp.add_row("r" + std::to_string(i), std::move(terms), Relation::GreaterEqual, act - 2.0 * u01(rng));
    }
  }
  return lp;
}

EnumeratedOptimum enumerate_vertices(const LinearProgram& lp, double feas_tol) {
  const std::size_t n = lp.num_variables(), m = lp.num_rows();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < m; ++i)
    for (const Term& t : lp.rows[i].terms) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t.var)) += t.coef;


  EnumeratedOptimum best;
  const bool maximize = lp.sense == Sense::Maximize;
  std::vector<double> x(n);

  auto consider = [&]() {
    for (std::size_t j = 0; j < n; ++j)
      if (x[j] < lp.variables[j].lower - feas_tol || x[j] > lp.variables[j].upper + feas_tol) return;
    for (std::size_t i = 0; i < m; ++i) {
      double act = 0.0;
      for (std::size_t j = 0; j < n; ++j) act += a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * x[j];
      const double scale = feas_tol * (1.0 + std::abs(lp.rows[i].rhs));
      switch (lp.rows[i].relation) {
        case Relation::LessEqual: if (act > lp.rows[i].rhs + scale) return; break;
        case Relation::GreaterEqual: if (act < lp.rows[i].rhs - scale) return; break;
        case Relation::Equal: if (std::abs(act - lp.rows[i].rhs) > scale) return; break;
      }
    }
    const double obj = lp.evaluate_objective(x);
    if (!best.feasible || (maximize ? obj > best.objective : obj < best.objective)) {
      best.feasible = true;
      best.objective = obj;
      best.x = x;
    }
  };

  // Equalities are treated like any other row here: redundant ones would make
  // the square system singular, and the feasibility check enforces them anyway.
  for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
    std::vector<std::size_t> active;
    for (std::size_t b = 0; b < m; ++b)
      if (mask & (std::size_t{1} << b)) active.push_back(b);
    const std::size_t k = active.size();
    if (k > n) continue;

    // Choose k free variables; the rest sit on a bound.
    std::vector<bool> is_free(n, false);
    std::fill(is_free.begin(), is_free.begin() + static_cast<std::ptrdiff_t>(k), true);
    do {
      std::vector<std::size_t> free_vars, fixed_vars;
      for (std::size_t j = 0; j < n; ++j) (is_free[j] ? free_vars : fixed_vars).push_back(j);
      Eigen::MatrixXd sub(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
      for (std::size_t r = 0; r < k; ++r)
        for (std::size_t c = 0; c < k; ++c)
          sub(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
              a(static_cast<Eigen::Index>(active[r]), static_cast<Eigen::Index>(free_vars[c]));
      Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
      if (k > 0 && lu.rank() < static_cast<Eigen::Index>(k)) continue;

      for (std::size_t pattern = 0; pattern < (std::size_t{1} << fixed_vars.size()); ++pattern) {
        for (std::size_t f = 0; f < fixed_vars.size(); ++f) {
          const auto& v = lp.variables[fixed_vars[f]];
          x[fixed_vars[f]] = (pattern & (std::size_t{1} << f)) ? v.upper : v.lower;
        }
        if (k > 0) {
          Eigen::VectorXd rhs(static_cast<Eigen::Index>(k));
          for (std::size_t r = 0; r < k; ++r) {
            double v = lp.rows[active[r]].rhs;
            for (std::size_t j : fixed_vars) v -= a(static_cast<Eigen::Index>(active[r]), static_cast<Eigen::Index>(j)) * x[j];
            rhs(static_cast<Eigen::Index>(r)) = v;
          }
          const Eigen::VectorXd sol = lu.solve(rhs);
          for (std::size_t c = 0; c < k; ++c) x[free_vars[c]] = sol(static_cast<Eigen::Index>(c));
        }
        consider();
      }
    } while (std::prev_permutation(is_free.begin(), is_free.end()));
  }
  return best;
}

// ---------------------------------------------------------------------------

StarBilinear random_star_bilinear(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  LinearProgram lp;
  lp.sense = Sense::Maximize;
  std::vector<double> xhat(3);
  for (std::size_t j = 0; j < 3; ++j) {
    const double lo = -2.0 * u01(rng), hi = lo + 0.5 + 2.5 * u01(rng);
    lp.add_variable("x" + std::to_string(j), lo, hi, gauss(rng));
    xhat[j] = lo + (hi - lo) * u01(rng);
  }
  StarBilinear inst{BilinearProgram(lp)};
  BilinearProgram& bp = inst.bp;

  const std::size_t rows = 1 + static_cast<std::size_t>(u01(rng) * 3.0);
  for (std::size_t i = 0; i < rows; ++i) {
    const double a0 = gauss(rng), a1 = gauss(rng), a2 = gauss(rng);
    const double b1 = gauss(rng), b2 = u01(rng) < 0.5 ? gauss(rng) : 0.0;
    const double b0 = u01(rng) < 0.3 ? 0.5 * gauss(rng) : 0.0;
    const double act = a0 * xhat[0] + a1 * xhat[1] + a2 * xhat[2] + b1 * xhat[0] * xhat[1] +
                       b2 * xhat[0] * xhat[2] + b0 * xhat[0] * xhat[0];
    const std::size_t r = bp.base.add_row("r" + std::to_string(i), {{0, a0}, {1, a1}, {2, a2}},
                                          Relation::LessEqual, act + 0.5 * u01(rng));
    bp.add_term(r, b1, 0, 1);
    if (b2 != 0.0) bp.add_term(r, b2, 0, 2);
    if (b0 != 0.0) bp.add_term(r, b0, 0, 0);
  }
  bp.sync();
  return inst;
}

namespace {

/// max c1 y1 + c2 y2 over a box and rows g1 y1 + g2 y2 <= h by enumerating
/// every intersection of two active lines (rows or box edges).
std::optional<double> lp2(double c1, double c2, double l1, double u1, double l2, double u2,
                          const std::vector<std::array<double, 3>>& rows) {
  std::vector<std::array<double, 3>> lines = rows;  // g1, g2, h
  lines.push_back({1.0, 0.0, u1});
  lines.push_back({-1.0, 0.0, -l1});
  lines.push_back({0.0, 1.0, u2});
  lines.push_back({0.0, -1.0, -l2});
  std::optional<double> best;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    for (std::size_t j = i + 1; j < lines.size(); ++j) {
      const auto& p = lines[i];
      const auto& q = lines[j];
      const double det = p[0] * q[1] - p[1] * q[0];
      if (std::abs(det) < 1e-14) continue;
      const double y1 = (p[2] * q[1] - p[1] * q[2]) / det;
      const double y2 = (p[0] * q[2] - p[2] * q[0]) / det;
      bool ok = true;
      for (const auto& l : lines)
        if (l[0] * y1 + l[1] * y2 > l[2] + 1e-10 * (1.0 + std::abs(l[2]))) {
          ok = false;
          break;
        }
      if (!ok) continue;
      const double v = c1 * y1 + c2 * y2;
      if (!best || v > *best) best = v;
    }
  }
  return best;
}

}  // namespace

std::optional<double> grid_search(const StarBilinear& inst, int points, int refinements) {
  const BilinearProgram& bp = inst.bp;
  const auto& vars = bp.base.variables;
  const auto& c = bp.base.objective;

  auto phi = [&](double t) -> std::optional<double> {
    std::vector<std::array<double, 3>> rows;
    for (std::size_t r = 0; r < bp.base.rows.size(); ++r) {
      double g1 = 0.0, g2 = 0.0, h = bp.base.rows[r].rhs;
      for (const Term& term : bp.base.rows[r].terms) {
        if (term.var == 0) h -= term.coef * t;
        else if (term.var == 1) g1 += term.coef;
        else g2 += term.coef;
      }
      for (const BilinearTerm& b : bp.terms) {
        if (b.row != r) continue;
        const std::size_t other = b.var_i == 0 ? b.var_j : b.var_i;
        if (other == 0) h -= b.coef * t * t;
        else if (other == 1) g1 += b.coef * t;
        else g2 += b.coef * t;
      }
      rows.push_back({g1, g2, h});
    }
    auto v = lp2(c[1], c[2], vars[1].lower, vars[1].upper, vars[2].lower, vars[2].upper, rows);
    if (!v) return std::nullopt;
    return *v + c[0] * t;
  };

  double lo = vars[0].lower, hi = vars[0].upper;
  std::optional<double> best;
  double best_t = lo;
  for (int level = 0; level <= refinements; ++level) {
    for (int k = 0; k < points; ++k) {
      const double t = lo + (hi - lo) * k / (points - 1);
      const auto v = phi(t);
      if (v && (!best || *v > *best)) {
        best = v;
        best_t = t;
      }
    }
    const double h = (hi - lo) / (points - 1);
    lo = std::max(vars[0].lower, best_t - 2.0 * h);
    hi = std::min(vars[0].upper, best_t + 2.0 * h);
  }
  return best;
}

// ---------------------------------------------------------------------------

namespace {

Matrix3c line_matrix(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double miles = 0.1 + 0.6 * u01(rng);
  Matrix3c z;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      z(r, c) = r == c ? std::complex<double>(0.30 + 0.45 * u01(rng), 0.9 + 0.3 * u01(rng))
                       : std::complex<double>(0.15, 0.45);
  // keep it symmetric
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < r; ++c) z(r, c) = z(c, r);
  return z * miles;
}

}  // namespace

RandomFeeder random_feeder(std::mt19937_64& rng, int buses) {
  if (buses < 2 || buses > 4) throw ValidationError("random_feeder: 2 to 4 buses");
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  for (int attempt = 0; attempt < 200; ++attempt) {
    FeederModel m;
    m.name = "random";
    m.slack = "s";
    m.base_kva = 1000.0;
    m.base_kv = 4.16 / std::sqrt(3.0);
    m.buses.push_back({"s", PhaseSet::all()});
    for (int b = 1; b < buses; ++b) {
      const std::size_t parent = b == 1 ? 0 : static_cast<std::size_t>(u01(rng) * b);
      PhaseSet ph = m.buses[parent].phases;
      if (u01(rng) < 0.3) {
        // drop one or two phases, keep at least one
        std::vector<std::size_t> have;
        for (std::size_t p = 0; p < 3; ++p)
          if (ph.present[p]) have.push_back(p);
        std::shuffle(have.begin(), have.end(), rng);
        const std::size_t keep = 1 + static_cast<std::size_t>(u01(rng) * static_cast<double>(have.size()));
        ph = PhaseSet{};
        for (std::size_t i = 0; i < std::min(keep, have.size()); ++i) ph.present[have[i]] = true;
      }
      const std::string id = std::to_string(b);
      m.buses.push_back({id, ph});
      m.segments.push_back({m.buses[parent].id, id, line_matrix(rng)});
    }
    if (u01(rng) < 0.4) {
      const double t = 1.0 + 0.05 * u01(rng);
      m.regulators.push_back({0, {t, t, t}});
    }

    // (bus, phase) slots for devices
    std::vector<std::pair<std::string, Phase>> slots;
    for (std::size_t b = 1; b < m.buses.size(); ++b)
      for (Phase p : kAllPhases)
        if (m.buses[b].phases.has(p)) slots.emplace_back(m.buses[b].id, p);
    auto slot = [&]() { return slots[static_cast<std::size_t>(u01(rng) * static_cast<double>(slots.size()))]; };

    const int loads = 1 + static_cast<int>(u01(rng) * 2.0);
    const int invs = 1 + static_cast<int>(u01(rng) * 2.0);
    for (int i = 0; i < loads; ++i) {
      const auto [bus, ph] = slot();
      const double p = 80.0 + 320.0 * u01(rng), f = 0.1 + 0.4 * u01(rng);
      m.loads.push_back({bus, ph, p, p * (1.0 - f), p * (1.0 + f), 0.9 + 0.08 * u01(rng)});
    }
    for (int i = 0; i < invs; ++i) {
      const auto [bus, ph] = slot();
      const double s = 150.0 + 250.0 * u01(rng);
      const double p = s * (0.2 + 0.4 * u01(rng)), f = 0.2 + 0.5 * u01(rng);
      InverterSpec v;
      v.bus = bus;
      v.phase = ph;
      v.p_kw = p;
      v.p_min_kw = p * (1.0 - f);
      v.p_max_kw = std::min(s, p * (1.0 + f));
      v.s_kva = s;
      v.params.pf = 0.9;
      v.params.gamma = 0.48;
      m.inverters.push_back(v);
    }

    try {
      validate(m);
      const OperatingPoint op = current_operating_point(m);
      const Eigen::VectorXd mag = op.magnitudes();
      if (mag.minCoeff() < 0.85 || mag.maxCoeff() > 1.15) continue;
      RandomFeeder out;
      out.band.vmin = mag.minCoeff() - 0.001 - 0.01 * u01(rng);
      out.band.vmax = mag.maxCoeff() + 0.001 + 0.01 * u01(rng);
      out.model = std::move(m);
      return out;
    } catch (const Error&) {
      continue;
    }
  }
  throw NumericalError("random_feeder: no usable feeder after 200 attempts");
}

}  // namespace flexgrid::testing
