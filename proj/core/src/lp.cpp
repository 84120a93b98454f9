#include "flexgrid/lp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "flexgrid/error.hpp"

namespace flexgrid {

std::size_t LinearProgram::add_variable(std::string name, double lower, double upper, double cost) {
  variables.push_back({std::move(name), lower, upper});
  objective.push_back(cost);
  return variables.size() - 1;
}

std::size_t LinearProgram::add_row(std::string name, std::vector<Term> terms, Relation relation,
                                   double rhs) {
  rows.push_back({std::move(name), std::move(terms), relation, rhs});
  return rows.size() - 1;
}

void LinearProgram::validate() const {
  if (objective.size() != variables.size())
    throw ValidationError("LP: objective has " + std::to_string(objective.size()) +
                          " coefficients for " + std::to_string(variables.size()) + " variables");
  for (std::size_t j = 0; j < variables.size(); ++j) {
    const auto& v = variables[j];
    if (std::isnan(v.lower) || std::isnan(v.upper) || v.lower > v.upper || v.lower == kInf ||
        v.upper == -kInf)
      throw ValidationError("LP: variable '" + v.name + "' has invalid bounds");
    if (!std::isfinite(objective[j]))
      throw ValidationError("LP: non-finite objective coefficient on '" + v.name + "'");
  }
  for (const Row& r : rows) {
    if (!std::isfinite(r.rhs)) throw ValidationError("LP: row '" + r.name + "' has non-finite rhs");
    for (const Term& t : r.terms) {
      if (t.var >= variables.size())
        throw ValidationError("LP: row '" + r.name + "' references a missing variable");
      if (!std::isfinite(t.coef))
        throw ValidationError("LP: row '" + r.name + "' has a non-finite coefficient");
    }
  }
}

double LinearProgram::evaluate_objective(const std::vector<double>& x) const {
  double v = objective_constant;
  for (std::size_t j = 0; j < objective.size(); ++j) v += objective[j] * x[j];
  return v;
}

double LinearProgram::row_activity(std::size_t r, const std::vector<double>& x) const {
  double a = 0.0;
  for (const Term& t : rows[r].terms) a += t.coef * x[t.var];
  return a;
}

double LinearProgram::max_violation(const std::vector<double>& x) const {
  double worst = 0.0;
  for (std::size_t j = 0; j < variables.size(); ++j) {
    worst = std::max(worst, variables[j].lower - x[j]);
    worst = std::max(worst, x[j] - variables[j].upper);
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double a = row_activity(r, x) - rows[r].rhs;
    switch (rows[r].relation) {
      case Relation::LessEqual: worst = std::max(worst, a); break;
      case Relation::GreaterEqual: worst = std::max(worst, -a); break;
      case Relation::Equal: worst = std::max(worst, std::abs(a)); break;
    }
  }
  return worst;
}

std::string LinearProgram::to_text() const {
  std::ostringstream out;
  out.precision(17);
  auto name_of = [&](std::size_t j) {
    return variables[j].name.empty() ? "x" + std::to_string(j) : variables[j].name;
  };
  out << (sense == Sense::Maximize ? "maximize" : "minimize") << "\n ";
  for (std::size_t j = 0; j < objective.size(); ++j)
    if (objective[j] != 0.0) out << ' ' << std::showpos << objective[j] << std::noshowpos << ' ' << name_of(j);
  if (objective_constant != 0.0) out << ' ' << std::showpos << objective_constant << std::noshowpos;
  out << "\nsubject to\n";
  for (const Row& r : rows) {
    out << ' ' << (r.name.empty() ? "r" : r.name) << ':';
    for (const Term& t : r.terms) out << ' ' << std::showpos << t.coef << std::noshowpos << ' ' << name_of(t.var);
    out << (r.relation == Relation::LessEqual ? " <= " : r.relation == Relation::Equal ? " = " : " >= ")
        << r.rhs << '\n';
  }
  out << "bounds\n";
  for (std::size_t j = 0; j < variables.size(); ++j)
    out << ' ' << variables[j].lower << " <= " << name_of(j) << " <= " << variables[j].upper << '\n';
  out << "end\n";
  return out.str();
}

std::string_view status_name(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
  }
  return "?";
}

namespace {

enum class At : std::uint8_t { Lower, Upper, Zero, Basic };

// Raised when refactoring finds the basis numerically singular; solve_lp
// retries with a stricter pivot tolerance.
struct SingularBasis {};

class Simplex {
 public:
  Simplex(const LinearProgram& lp, const LpOptions& opt) : lp_(lp), opt_(opt) { setup(); }

  DualCertificate run() {
    DualCertificate cert;
    bland_ = opt_.rule == PivotRule::Bland;

    if (num_art_ > 0) {
      std::fill(cost_.begin(), cost_.end(), 0.0);
      for (std::size_t a = 0; a < num_art_; ++a) cost_[ns_ + m_ + a] = 1.0;
      price();
      if (optimize() == Outcome::Unbounded) throw NumericalError("LP: phase 1 reported unbounded");
      double infeas = 0.0;
      for (std::size_t a = 0; a < num_art_; ++a) infeas += x_[ns_ + m_ + a];
      if (infeas > 1e-7 * (1.0 + rhs_scale_)) {
        cert.status = LpStatus::Infeasible;
        cert.iterations = iterations_;
        cert.used_bland = bland_;
        return cert;
      }
      retire_artificials();
      if (drifted()) reinvert();
    }

    std::fill(cost_.begin(), cost_.end(), 0.0);
    const double sign = lp_.sense == Sense::Maximize ? -1.0 : 1.0;
    for (std::size_t j = 0; j < ns_; ++j) cost_[j] = sign * lp_.objective[j];
    price();
    bland_ = opt_.rule == PivotRule::Bland;
    degenerate_ = 0;
    // If the basic values drifted from a fresh solve at the optimum, refactor,
    // re-price and continue from there.
    for (int pass = 0;; ++pass) {
      if (optimize() == Outcome::Unbounded) {
        cert.status = LpStatus::Unbounded;
        cert.iterations = iterations_;
        cert.used_bland = bland_;
        return cert;
      }
      if (pass >= 4 || !drifted()) break;
      reinvert();
    }
    finish(cert);
    return cert;
  }

 private:
  enum class Outcome { Optimal, Unbounded };

  double& tab(std::size_t i, std::size_t j) { return t_[i * ncols_ + j]; }

  void setup() {
    m_ = lp_.rows.size();
    ns_ = lp_.variables.size();
    // Dense copy of A for the final refinement.
    a_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(ns_));
    for (std::size_t i = 0; i < m_; ++i)
      for (const Term& t : lp_.rows[i].terms)
        a_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t.var)) += t.coef;

    lo_.assign(ns_ + m_, 0.0);
    up_.assign(ns_ + m_, 0.0);
    x_.assign(ns_ + m_, 0.0);
    status_.assign(ns_ + m_, At::Lower);
    for (std::size_t j = 0; j < ns_; ++j) {
      lo_[j] = lp_.variables[j].lower;
      up_[j] = lp_.variables[j].upper;
      if (std::isfinite(lo_[j])) {
        x_[j] = lo_[j];
        status_[j] = At::Lower;
      } else if (std::isfinite(up_[j])) {
        x_[j] = up_[j];
        status_[j] = At::Upper;
      } else {
        x_[j] = 0.0;
        status_[j] = At::Zero;
      }
    }

    std::vector<double> residual(m_);
    basis_.assign(m_, 0);
    std::vector<double> basic_coef(m_, 1.0);
    for (std::size_t i = 0; i < m_; ++i) {
      const auto& row = lp_.rows[i];
      const std::size_t s = ns_ + i;
      switch (row.relation) {
        case Relation::LessEqual: lo_[s] = 0.0; up_[s] = kInf; break;
        case Relation::GreaterEqual: lo_[s] = -kInf; up_[s] = 0.0; break;
        case Relation::Equal: lo_[s] = 0.0; up_[s] = 0.0; break;
      }
      double r = row.rhs;
      for (std::size_t j = 0; j < ns_; ++j) r -= a_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * x_[j];
      residual[i] = r;
      rhs_scale_ = std::max(rhs_scale_, std::abs(row.rhs));
      const bool slack_ok = (row.relation == Relation::LessEqual && r >= 0.0) ||
                            (row.relation == Relation::GreaterEqual && r <= 0.0) ||
                            (row.relation == Relation::Equal && r == 0.0);
      if (slack_ok) {
        basis_[i] = s;
        x_[s] = r;
        status_[s] = At::Basic;
      } else {
        const double sigma = r >= 0.0 ? 1.0 : -1.0;
        art_row_.push_back(i);
        art_sign_.push_back(sigma);
        basic_coef[i] = sigma;
        // A >= slack lives on (-inf, 0]; its finite bound is the upper one.
        status_[s] = row.relation == Relation::GreaterEqual ? At::Upper : At::Lower;
        x_[s] = 0.0;
      }
    }
    num_art_ = art_row_.size();
    ncols_ = ns_ + m_ + num_art_;
    lo_.resize(ncols_, 0.0);
    up_.resize(ncols_, kInf);
    x_.resize(ncols_, 0.0);
    status_.resize(ncols_, At::Basic);
    for (std::size_t a = 0; a < num_art_; ++a) {
      const std::size_t col = ns_ + m_ + a;
      basis_[art_row_[a]] = col;
      x_[col] = std::abs(residual[art_row_[a]]);
    }

    t_.assign(m_ * ncols_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      const double inv = 1.0 / basic_coef[i];
      for (std::size_t j = 0; j < ns_; ++j)
        tab(i, j) = a_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * inv;
      tab(i, ns_ + i) = inv;
    }
    for (std::size_t a = 0; a < num_art_; ++a) tab(art_row_[a], ns_ + m_ + a) = 1.0;

    cost_.assign(ncols_, 0.0);
    d_.assign(ncols_, 0.0);
  }

  void price() {
    d_ = cost_;
    for (std::size_t i = 0; i < m_; ++i) {
      const double cb = cost_[basis_[i]];
      if (cb == 0.0) continue;
      const double* row = &t_[i * ncols_];
      for (std::size_t j = 0; j < ncols_; ++j) d_[j] -= cb * row[j];
    }
    for (std::size_t i = 0; i < m_; ++i) d_[basis_[i]] = 0.0;
  }

  Outcome optimize() {
    while (true) {
      if (iterations_ >= opt_.max_iterations)
        throw NumericalError("LP: iteration guard tripped (possible cycling)");

      // Pricing.
      std::size_t enter = ncols_;
      double best = 0.0;
      double dir = 0.0;
      for (std::size_t j = 0; j < ncols_; ++j) {
        if (status_[j] == At::Basic || lo_[j] == up_[j]) continue;
        const double dj = d_[j];
        double score = 0.0, move = 0.0;
        switch (status_[j]) {
          case At::Lower:
            if (dj < -opt_.optimality_tol) { score = -dj; move = 1.0; }
            break;
          case At::Upper:
            if (dj > opt_.optimality_tol) { score = dj; move = -1.0; }
            break;
          case At::Zero:
            if (std::abs(dj) > opt_.optimality_tol) { score = std::abs(dj); move = dj < 0.0 ? 1.0 : -1.0; }
            break;
          case At::Basic: break;
        }
        if (score == 0.0) continue;
        if (bland_) {
          enter = j;
          dir = move;
          break;
        }
        if (score > best) {
          best = score;
          enter = j;
          dir = move;
        }
      }
      if (enter == ncols_) return Outcome::Optimal;

      // Harris two-pass ratio test.
      const double flip = up_[enter] - lo_[enter];
      double relaxed = kInf;
      for (std::size_t i = 0; i < m_; ++i) {
        const double alpha = tab(i, enter) * dir;
        const std::size_t b = basis_[i];
        if (alpha > opt_.pivot_tol && std::isfinite(lo_[b]))
          relaxed = std::min(relaxed, (x_[b] - lo_[b] + opt_.feasibility_tol) / alpha);
        else if (alpha < -opt_.pivot_tol && std::isfinite(up_[b]))
          relaxed = std::min(relaxed, (up_[b] - x_[b] + opt_.feasibility_tol) / -alpha);
      }
      std::size_t leave = m_;
      double step = kInf;
      double best_alpha = 0.0;
      for (std::size_t i = 0; i < m_; ++i) {
        const double alpha = tab(i, enter) * dir;
        const std::size_t b = basis_[i];
        double ratio = kInf;
        if (alpha > opt_.pivot_tol && std::isfinite(lo_[b]))
          ratio = (x_[b] - lo_[b]) / alpha;
        else if (alpha < -opt_.pivot_tol && std::isfinite(up_[b]))
          ratio = (up_[b] - x_[b]) / -alpha;
        else
          continue;
        if (ratio > relaxed) continue;
        const bool better = bland_ ? (leave == m_ || basis_[i] < basis_[leave])
                                   : std::abs(alpha) > best_alpha;
        if (better) {
          leave = i;
          step = ratio;
          best_alpha = std::abs(alpha);
        }
      }

      if (leave == m_ && !std::isfinite(flip)) return Outcome::Unbounded;
      ++iterations_;

      if (leave == m_ || flip <= step) {
        // Entering variable runs to its opposite bound.
        for (std::size_t i = 0; i < m_; ++i) x_[basis_[i]] -= tab(i, enter) * dir * flip;
        if (dir > 0.0) {
          x_[enter] = up_[enter];
          status_[enter] = At::Upper;
        } else {
          x_[enter] = lo_[enter];
          status_[enter] = At::Lower;
        }
        degenerate_ = 0;
        continue;
      }

      step = std::max(step, 0.0);
      for (std::size_t i = 0; i < m_; ++i) x_[basis_[i]] -= tab(i, enter) * dir * step;
      x_[enter] += dir * step;

      const std::size_t out = basis_[leave];
      if (tab(leave, enter) * dir > 0.0) {
        x_[out] = lo_[out];
        status_[out] = At::Lower;
      } else {
        x_[out] = up_[out];
        status_[out] = At::Upper;
      }
      pivot(leave, enter);
      if (++since_reinvert_ >= std::max<std::size_t>(100, 2 * m_)) reinvert();

      if (step <= 1e-12) {
        if (++degenerate_ > 5 * static_cast<long>(ncols_)) bland_ = true;
      } else {
        degenerate_ = 0;
      }
    }
  }

  void pivot(std::size_t r, std::size_t q) {
    double* prow = &t_[r * ncols_];
    const double inv = 1.0 / prow[q];
    nz_.clear();
    for (std::size_t j = 0; j < ncols_; ++j) {
      if (prow[j] != 0.0) {
        prow[j] *= inv;
        nz_.push_back(j);
      }
    }
    prow[q] = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* row = &t_[i * ncols_];
      const double f = row[q];
      if (f == 0.0) continue;
      for (std::size_t j : nz_) row[j] -= f * prow[j];
      row[q] = 0.0;
    }
    const double f = d_[q];
    if (f != 0.0) {
      for (std::size_t j : nz_) d_[j] -= f * prow[j];
      d_[q] = 0.0;
    }
    basis_[r] = q;
    status_[q] = At::Basic;
  }

  void retire_artificials() {
    for (std::size_t a = 0; a < num_art_; ++a) {
      const std::size_t col = ns_ + m_ + a;
      lo_[col] = up_[col] = 0.0;
      if (status_[col] != At::Basic) {
        x_[col] = 0.0;
        status_[col] = At::Lower;
      }
    }
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t b = basis_[i];
      if (b < ns_ + m_) continue;
      // Swap the basic artificial for any usable real column; if the row is
      // redundant the artificial stays basic, pinned at zero.
      std::size_t best = ncols_;
      double mag = 1e-7;
      for (std::size_t j = 0; j < ns_ + m_; ++j) {
        if (status_[j] == At::Basic) continue;
        if (std::abs(tab(i, j)) > mag) {
          mag = std::abs(tab(i, j));
          best = j;
        }
      }
      x_[b] = 0.0;
      if (best == ncols_) continue;
      status_[b] = At::Lower;
      pivot(i, best);
    }
  }

  void finish(DualCertificate& cert) {
    const auto m = static_cast<Eigen::Index>(m_);
    const double sense = lp_.sense == Sense::Maximize ? 1.0 : -1.0;
    std::vector<double> c(ncols_, 0.0);
    for (std::size_t j = 0; j < ns_; ++j) c[j] = lp_.objective[j];

    Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
    if (m_ > 0) {
      Eigen::MatrixXd basis_matrix(m, m);
      Eigen::VectorXd cb(m);
      for (std::size_t i = 0; i < m_; ++i) {
        const auto col = static_cast<Eigen::Index>(i);
        basis_matrix.col(col) = column(basis_[i]);
        cb(col) = c[basis_[i]];
      }
      Eigen::VectorXd rhs(m);
      for (std::size_t i = 0; i < m_; ++i) rhs(static_cast<Eigen::Index>(i)) = lp_.rows[i].rhs;
      for (std::size_t j = 0; j < ncols_; ++j)
        if (status_[j] != At::Basic && x_[j] != 0.0) rhs -= column(j) * x_[j];

      Eigen::PartialPivLU<Eigen::MatrixXd> lu(basis_matrix);
      const Eigen::VectorXd xb = lu.solve(rhs);
      y = lu.transpose().solve(cb);
      if (!xb.allFinite() || !y.allFinite()) throw SingularBasis{};

      double drift = 0.0;
      for (std::size_t i = 0; i < m_; ++i)
        drift = std::max(drift, std::abs(xb(static_cast<Eigen::Index>(i)) - x_[basis_[i]]));
      if (drift < 1e-6 * (1.0 + rhs_scale_))
        for (std::size_t i = 0; i < m_; ++i) x_[basis_[i]] = xb(static_cast<Eigen::Index>(i));
    }
    (void)sense;

    cert.status = LpStatus::Optimal;
    cert.iterations = iterations_;
    cert.used_bland = bland_;
    cert.x.assign(x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(ns_));
    for (std::size_t j = 0; j < ns_; ++j) cert.x[j] = std::clamp(cert.x[j], lo_[j], up_[j]);
    cert.objective = lp_.evaluate_objective(cert.x);
    cert.row_duals.assign(y.data(), y.data() + m);
    cert.reduced_costs.assign(ns_, 0.0);
    for (std::size_t j = 0; j < ns_; ++j)
      cert.reduced_costs[j] = c[j] - a_.col(static_cast<Eigen::Index>(j)).dot(y);
    cert.dual_objective = dual_objective(lp_, cert.row_duals);
  }

  // Rebuilds tableau, basic values and reduced costs from the original data
  // for the current basis, so rounding from many pivots does not pile up.
  void reinvert() {
    since_reinvert_ = 0;
    if (m_ == 0) return;
    const auto m = static_cast<Eigen::Index>(m_);
    const auto lu = factor(basis_matrix());

    Eigen::MatrixXd full = Eigen::MatrixXd::Zero(m, static_cast<Eigen::Index>(ncols_));
    full.leftCols(static_cast<Eigen::Index>(ns_)) = a_;
    for (std::size_t j = ns_; j < ncols_; ++j) full.col(static_cast<Eigen::Index>(j)) = column(j);
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        t_.data(), m, static_cast<Eigen::Index>(ncols_)) = lu.solve(full);

    Eigen::VectorXd rhs(m);
    for (std::size_t i = 0; i < m_; ++i) rhs(static_cast<Eigen::Index>(i)) = lp_.rows[i].rhs;
    for (std::size_t j = 0; j < ncols_; ++j)
      if (status_[j] != At::Basic && x_[j] != 0.0) rhs -= full.col(static_cast<Eigen::Index>(j)) * x_[j];
    const Eigen::VectorXd xb = lu.solve(rhs);
    for (std::size_t i = 0; i < m_; ++i) x_[basis_[i]] = xb(static_cast<Eigen::Index>(i));
    price();
  }

  static Eigen::PartialPivLU<Eigen::MatrixXd> factor(const Eigen::MatrixXd& b) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(b);
    const double rc = lu.rcond();
    if (!(rc > 1e-14)) throw SingularBasis{};
    return lu;
  }

  Eigen::MatrixXd basis_matrix() const {
    const auto m = static_cast<Eigen::Index>(m_);
    Eigen::MatrixXd b(m, m);
    for (std::size_t i = 0; i < m_; ++i) b.col(static_cast<Eigen::Index>(i)) = column(basis_[i]);
    return b;
  }

  // Whether the tableau's basic values disagree with a fresh solve of the
  // current basis.  Throws SingularBasis when the basis is numerically rank
  // deficient.
  bool drifted() const {
    if (m_ == 0) return false;
    const auto m = static_cast<Eigen::Index>(m_);
    const auto lu = factor(basis_matrix());
    Eigen::VectorXd rhs(m);
    for (std::size_t i = 0; i < m_; ++i) rhs(static_cast<Eigen::Index>(i)) = lp_.rows[i].rhs;
    for (std::size_t j = 0; j < ncols_; ++j)
      if (status_[j] != At::Basic && x_[j] != 0.0) rhs -= column(j) * x_[j];
    const Eigen::VectorXd xb = lu.solve(rhs);
    if (!xb.allFinite()) throw SingularBasis{};
    double drift = 0.0;
    for (std::size_t i = 0; i < m_; ++i)
      drift = std::max(drift, std::abs(xb(static_cast<Eigen::Index>(i)) - x_[basis_[i]]));
    return drift > 1e-9 * (1.0 + rhs_scale_);
  }

  Eigen::VectorXd column(std::size_t j) const {
    const auto m = static_cast<Eigen::Index>(m_);
    if (j < ns_) return a_.col(static_cast<Eigen::Index>(j));
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
    if (j < ns_ + m_) {
      e(static_cast<Eigen::Index>(j - ns_)) = 1.0;
    } else {
      const std::size_t a = j - ns_ - m_;
      e(static_cast<Eigen::Index>(art_row_[a])) = art_sign_[a];
    }
    return e;
  }

  const LinearProgram& lp_;
  LpOptions opt_;
  std::size_t m_ = 0, ns_ = 0, ncols_ = 0, num_art_ = 0;
  Eigen::MatrixXd a_;
  std::vector<double> t_, lo_, up_, x_, cost_, d_;
  std::vector<At> status_;
  std::vector<std::size_t> basis_, art_row_, nz_;
  std::vector<double> art_sign_;
  double rhs_scale_ = 0.0;
  bool bland_ = false;
  long degenerate_ = 0;
  int iterations_ = 0;
  std::size_t since_reinvert_ = 0;
};

}  // namespace

DualCertificate solve_lp(const LinearProgram& lp, const LpOptions& options) {
  lp.validate();
  LpOptions opt = options;
  for (int attempt = 0; attempt < 3; ++attempt) {
    try {
      return Simplex(lp, opt).run();
    } catch (const SingularBasis&) {
      // tiny pivots let the basis degenerate: be pickier, then fall back to Bland
      opt.pivot_tol = std::max(opt.pivot_tol * 1e3, 1e-7);
      if (attempt == 1) opt.rule = PivotRule::Bland;
    }
  }
  throw NumericalError("LP: basis stays singular even with a strict pivot tolerance");
}

double dual_objective(const LinearProgram& lp, const std::vector<double>& y, double tol) {
  const double sense = lp.sense == Sense::Maximize ? 1.0 : -1.0;
  const double infeasible = sense * kInf;
  if (y.size() != lp.rows.size()) return infeasible;
  double value = lp.objective_constant;
  std::vector<double> r = lp.objective;
  for (std::size_t i = 0; i < lp.rows.size(); ++i) {
    const auto& row = lp.rows[i];
    const double ys = sense * y[i];
    if (row.relation == Relation::LessEqual && ys < -tol) return infeasible;
    if (row.relation == Relation::GreaterEqual && ys > tol) return infeasible;
    value += row.rhs * y[i];
    for (const Term& t : row.terms) r[t.var] -= t.coef * y[i];
  }
  for (std::size_t j = 0; j < lp.variables.size(); ++j) {
    const double rs = sense * r[j];
    const auto& v = lp.variables[j];
    if (rs > tol) {
      if (!std::isfinite(v.upper)) return infeasible;
      value += r[j] * v.upper;
    } else if (rs < -tol) {
      if (!std::isfinite(v.lower)) return infeasible;
      value += r[j] * v.lower;
    } else if (r[j] != 0.0) {
      if (rs > 0.0 && std::isfinite(v.upper)) value += r[j] * v.upper;
      else if (std::isfinite(v.lower)) value += r[j] * v.lower;
      else if (std::isfinite(v.upper)) value += r[j] * v.upper;
    }
  }
  return value;
}

bool verify_strong_duality(const LinearProgram& lp, const DualCertificate& cert, double rel_tol) {
  if (!cert.optimal()) return false;
  const double dual = dual_objective(lp, cert.row_duals);
  if (!std::isfinite(dual)) return false;
  const double primal = lp.evaluate_objective(cert.x);
  return std::abs(primal - dual) <= rel_tol * (1.0 + std::abs(primal));
}

double complementarity_violation(const LinearProgram& lp, const DualCertificate& cert) {
  double worst = 0.0;
  std::vector<double> r = lp.objective;
  for (std::size_t i = 0; i < lp.rows.size(); ++i) {
    const double slack = lp.rows[i].rhs - lp.row_activity(i, cert.x);
    worst = std::max(worst, std::abs(cert.row_duals[i] * slack));
    for (const Term& t : lp.rows[i].terms) r[t.var] -= t.coef * cert.row_duals[i];
  }
  const double sense = lp.sense == Sense::Maximize ? 1.0 : -1.0;
  for (std::size_t j = 0; j < lp.variables.size(); ++j) {
    const auto& v = lp.variables[j];
    const double rs = sense * r[j];
    double gap = 0.0;
    if (rs > 0.0) gap = std::isfinite(v.upper) ? v.upper - cert.x[j] : kInf;
    else if (rs < 0.0) gap = std::isfinite(v.lower) ? cert.x[j] - v.lower : kInf;
    if (rs != 0.0) worst = std::max(worst, std::abs(r[j]) * gap);
  }
  return worst;
}

}  // namespace flexgrid
