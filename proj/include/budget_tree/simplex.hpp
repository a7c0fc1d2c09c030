#ifndef BUDGET_TREE_SIMPLEX_HPP_
#define BUDGET_TREE_SIMPLEX_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "budget_tree/error.hpp"

namespace budget_tree {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Relation { kLessEqual, kEqual };

struct LpVariable {
  std::string name;
  double lower = 0.0;
  double upper = kInf;
};

struct LpRow {
  std::vector<std::pair<int, double>> coeffs;  // (variable, coefficient)
  Relation relation = Relation::kLessEqual;
  double rhs = 0.0;
  std::string name;
};

// min c.x  s.t.  rows (<= or =),  lower <= x <= upper.
struct LinearProgram {
  std::vector<LpVariable> vars;
  std::vector<double> objective;
  std::vector<LpRow> rows;
  // Optional values for the initial nonbasic variables (clamped to bounds).
  std::vector<double> start;

  int n_vars() const { return static_cast<int>(vars.size()); }
  int n_rows() const { return static_cast<int>(rows.size()); }

  int AddVariable(std::string name, double lower, double upper, double cost = 0.0) {
    vars.push_back({std::move(name), lower, upper});
    objective.push_back(cost);
    return n_vars() - 1;
  }

  int AddRow(std::vector<std::pair<int, double>> coeffs, Relation rel, double rhs,
             std::string name = {}) {
    rows.push_back({std::move(coeffs), rel, rhs, std::move(name)});
    return n_rows() - 1;
  }

  void Validate() const {
    if (objective.size() != vars.size()) {
      throw Error(ErrorKind::kDimension, "lp_train", "objective size mismatch");
    }
    for (const auto& v : vars) {
      if (std::isnan(v.lower) || std::isnan(v.upper) || v.lower > v.upper) {
        throw Error(ErrorKind::kDimension, "lp_train", "bad bounds on " + v.name);
      }
    }
    for (double c : objective) {
      if (!std::isfinite(c)) throw Error(ErrorKind::kDimension, "lp_train", "non-finite cost");
    }
    for (const auto& r : rows) {
      if (!std::isfinite(r.rhs)) throw Error(ErrorKind::kDimension, "lp_train", "non-finite rhs");
      for (auto [j, a] : r.coeffs) {
        if (j < 0 || j >= n_vars()) {
          throw Error(ErrorKind::kDimension, "lp_train", "row references unknown variable");
        }
        if (!std::isfinite(a)) {
          throw Error(ErrorKind::kDimension, "lp_train", "non-finite coefficient");
        }
      }
    }
  }
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

inline const char* ToString(LpStatus s) {
  switch (s) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
    case LpStatus::kIterationLimit: return "iteration-limit";
  }
  return "unknown";
}

struct SimplexOptions {
  int max_iters = 0;  // 0: 50 * (rows + vars) + 1000
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;
  int refresh_interval = 100;
};

struct SimplexSolution {
  std::vector<double> x;
  double objective = 0.0;
  LpStatus status = LpStatus::kIterationLimit;
  int iterations = 0;
  int phase1_iterations = 0;
  int bland_iterations = 0;
  int reinversions = 0;
};

namespace detail {

// Bounded-variable primal revised simplex with an explicit dense basis
// inverse. Every row i gets a logical r_i = a_i.x; the basis starts on the
// logicals, and rows whose logical is out of bounds at the starting point get
// an artificial that phase 1 drives to zero. Pricing is Dantzig's rule with a
// Harris ratio test; after `rows` consecutive pivots without objective
// progress it switches to Bland's rule until progress resumes.
class RevisedSimplex {
 public:
  RevisedSimplex(const LinearProgram& lp, const SimplexOptions& opt) : lp_(lp), opt_(opt) {
    n_ = lp.n_vars();
    m_ = lp.n_rows();
    BuildMatrices();
  }

  SimplexSolution Solve() {
    SimplexSolution sol;
    const long long limit =
        opt_.max_iters > 0 ? opt_.max_iters : 50LL * (m_ + n_) + 1000;
    max_iters_ = static_cast<int>(std::min<long long>(limit, std::numeric_limits<int>::max()));
    InitialBasis();

    if (num_artificial_ > 0) {
      SetPhaseCosts(true);
      LpStatus st = Iterate(&sol);
      sol.phase1_iterations = iterations_;
      if (st == LpStatus::kIterationLimit) return Finish(&sol, st);
      double infeas = 0.0;
      for (int a = n_ + m_; a < total_; ++a) infeas += x_[static_cast<std::size_t>(a)];
      if (infeas > 1e-7 * (1.0 + rhs_scale_)) return Finish(&sol, LpStatus::kInfeasible);
    }
    for (int a = n_ + m_; a < total_; ++a) {
      lower_[static_cast<std::size_t>(a)] = 0.0;
      upper_[static_cast<std::size_t>(a)] = 0.0;
    }
    SetPhaseCosts(false);
    return Finish(&sol, Iterate(&sol));
  }

 private:
  using Index = std::size_t;

  void BuildMatrices() {
    std::vector<int> count(static_cast<Index>(n_), 0);
    row_start_.assign(static_cast<Index>(m_) + 1, 0);
    for (int i = 0; i < m_; ++i) {
      const auto& r = lp_.rows[static_cast<Index>(i)];
      row_start_[static_cast<Index>(i) + 1] =
          row_start_[static_cast<Index>(i)] + static_cast<int>(r.coeffs.size());
      for (auto [j, a] : r.coeffs) {
        row_col_.push_back(j);
        row_val_.push_back(a);
        ++count[static_cast<Index>(j)];
      }
    }
    col_start_.assign(static_cast<Index>(n_) + 1, 0);
    for (int j = 0; j < n_; ++j) {
      col_start_[static_cast<Index>(j) + 1] = col_start_[static_cast<Index>(j)] + count[static_cast<Index>(j)];
    }
    col_row_.resize(row_col_.size());
    col_val_.resize(row_col_.size());
    std::vector<int> fill(col_start_.begin(), col_start_.end() - 1);
    for (int i = 0; i < m_; ++i) {
      for (int p = row_start_[static_cast<Index>(i)]; p < row_start_[static_cast<Index>(i) + 1]; ++p) {
        int j = row_col_[static_cast<Index>(p)];
        int at = fill[static_cast<Index>(j)]++;
        col_row_[static_cast<Index>(at)] = i;
        col_val_[static_cast<Index>(at)] = row_val_[static_cast<Index>(p)];
      }
    }
    rhs_scale_ = 0.0;
    for (const auto& r : lp_.rows) rhs_scale_ = std::max(rhs_scale_, std::abs(r.rhs));
  }

  // Calls fn(row, value) for each nonzero of column j of [A | -I | artificials].
  template <typename Fn>
  void ForColumn(int j, Fn&& fn) const {
    if (j < n_) {
      for (int p = col_start_[static_cast<Index>(j)]; p < col_start_[static_cast<Index>(j) + 1]; ++p) {
        fn(col_row_[static_cast<Index>(p)], col_val_[static_cast<Index>(p)]);
      }
    } else if (j < n_ + m_) {
      fn(j - n_, -1.0);
    } else {
      const Index a = static_cast<Index>(j - n_ - m_);
      fn(art_row_[a], art_sign_[a]);
    }
  }

  void InitialBasis() {
    total_ = n_ + m_;
    lower_.resize(static_cast<Index>(total_));
    upper_.resize(static_cast<Index>(total_));
    x_.assign(static_cast<Index>(total_), 0.0);
    for (int j = 0; j < n_; ++j) {
      const auto& v = lp_.vars[static_cast<Index>(j)];
      lower_[static_cast<Index>(j)] = v.lower;
      upper_[static_cast<Index>(j)] = v.upper;
      double x0;
      if (static_cast<int>(lp_.start.size()) == n_) {
        x0 = std::clamp(lp_.start[static_cast<Index>(j)], v.lower, v.upper);
      } else if (std::isfinite(v.lower)) {
        x0 = v.lower;
      } else if (std::isfinite(v.upper)) {
        x0 = v.upper;
      } else {
        x0 = 0.0;
      }
      x_[static_cast<Index>(j)] = x0;
    }
    std::vector<double> activity(static_cast<Index>(m_), 0.0);
    for (int i = 0; i < m_; ++i) {
      double s = 0.0;
      for (int p = row_start_[static_cast<Index>(i)]; p < row_start_[static_cast<Index>(i) + 1]; ++p) {
        s += row_val_[static_cast<Index>(p)] * x_[static_cast<Index>(row_col_[static_cast<Index>(p)])];
      }
      activity[static_cast<Index>(i)] = s;
      const auto& r = lp_.rows[static_cast<Index>(i)];
      lower_[static_cast<Index>(n_ + i)] = r.relation == Relation::kEqual ? r.rhs : -kInf;
      upper_[static_cast<Index>(n_ + i)] = r.rhs;
    }

    basis_.assign(static_cast<Index>(m_), -1);
    pos_.assign(static_cast<Index>(total_), -1);
    binv_ = Eigen::MatrixXd::Zero(m_, m_);
    std::vector<double> art_value;
    for (int i = 0; i < m_; ++i) {
      const double act = activity[static_cast<Index>(i)];
      const double lo = lower_[static_cast<Index>(n_ + i)];
      const double hi = upper_[static_cast<Index>(n_ + i)];
      const double tol = opt_.feasibility_tol * (1.0 + std::abs(act));
      if (act >= lo - tol && act <= hi + tol) {
        basis_[static_cast<Index>(i)] = n_ + i;
        x_[static_cast<Index>(n_ + i)] = act;
        binv_(i, i) = -1.0;
        continue;
      }
      // Logical rests at the violated bound; an artificial absorbs the gap.
      const double bound = act < lo ? lo : hi;
      x_[static_cast<Index>(n_ + i)] = bound;
      const double gap = bound - act;  // act - bound + sign * a = 0
      art_row_.push_back(i);
      art_sign_.push_back(gap > 0 ? 1.0 : -1.0);
      art_value.push_back(std::abs(gap));
      binv_(i, i) = gap > 0 ? 1.0 : -1.0;
    }
    num_artificial_ = static_cast<int>(art_row_.size());
    total_ = n_ + m_ + num_artificial_;
    lower_.resize(static_cast<Index>(total_), 0.0);
    upper_.resize(static_cast<Index>(total_), kInf);
    x_.resize(static_cast<Index>(total_), 0.0);
    pos_.resize(static_cast<Index>(total_), -1);
    for (int a = 0; a < num_artificial_; ++a) {
      const int var = n_ + m_ + a;
      const int row = art_row_[static_cast<Index>(a)];
      basis_[static_cast<Index>(row)] = var;
      x_[static_cast<Index>(var)] = art_value[static_cast<Index>(a)];
    }
    for (int i = 0; i < m_; ++i) pos_[static_cast<Index>(basis_[static_cast<Index>(i)])] = i;
    cost_.assign(static_cast<Index>(total_), 0.0);
    d_.assign(static_cast<Index>(total_), 0.0);
    alpha_row_.assign(static_cast<Index>(total_), 0.0);
  }

  void SetPhaseCosts(bool phase1) {
    std::fill(cost_.begin(), cost_.end(), 0.0);
    if (phase1) {
      for (int a = n_ + m_; a < total_; ++a) cost_[static_cast<Index>(a)] = 1.0;
    } else {
      for (int j = 0; j < n_; ++j) cost_[static_cast<Index>(j)] = lp_.objective[static_cast<Index>(j)];
    }
    Refresh();
  }

  double Objective() const {
    double obj = 0.0;
    for (int j = 0; j < total_; ++j) obj += cost_[static_cast<Index>(j)] * x_[static_cast<Index>(j)];
    return obj;
  }

  // Recomputes basic values and reduced costs from the current inverse,
  // reinverting first when the basic solution has drifted.
  void Refresh() {
    RecomputeBasics();
    if (Residual() > 1e-9 * (1.0 + rhs_scale_ + max_abs_x_)) {
      Reinvert();
      RecomputeBasics();
    }
    Eigen::VectorXd cb(m_);
    for (int i = 0; i < m_; ++i) cb[i] = cost_[static_cast<Index>(basis_[static_cast<Index>(i)])];
    Eigen::VectorXd y = binv_.transpose() * cb;
    for (int j = 0; j < total_; ++j) {
      if (pos_[static_cast<Index>(j)] >= 0) {
        d_[static_cast<Index>(j)] = 0.0;
        continue;
      }
      double dj = cost_[static_cast<Index>(j)];
      ForColumn(j, [&](int r, double v) { dj -= y[r] * v; });
      d_[static_cast<Index>(j)] = dj;
    }
  }

  void RecomputeBasics() {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(m_);
    for (int j = 0; j < total_; ++j) {
      if (pos_[static_cast<Index>(j)] >= 0) continue;
      const double xj = x_[static_cast<Index>(j)];
      if (xj == 0.0) continue;
      ForColumn(j, [&](int r, double a) { v[r] += a * xj; });
    }
    Eigen::VectorXd xb = -(binv_ * v);
    max_abs_x_ = 0.0;
    for (int i = 0; i < m_; ++i) {
      x_[static_cast<Index>(basis_[static_cast<Index>(i)])] = xb[i];
      max_abs_x_ = std::max(max_abs_x_, std::abs(xb[i]));
    }
  }

  double Residual() const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(m_);
    for (int j = 0; j < total_; ++j) {
      const double xj = x_[static_cast<Index>(j)];
      if (xj == 0.0) continue;
      ForColumn(j, [&](int r, double a) { v[r] += a * xj; });
    }
    return m_ == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
  }

  void Reinvert() {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m_, m_);
    for (int i = 0; i < m_; ++i) {
      ForColumn(basis_[static_cast<Index>(i)], [&](int r, double a) { b(r, i) = a; });
    }
    binv_ = b.partialPivLu().inverse();
    ++reinversions_;
  }

  bool Eligible(int j, double* direction) const {
    const Index jj = static_cast<Index>(j);
    if (pos_[jj] >= 0 || lower_[jj] == upper_[jj]) return false;
    const double dj = d_[jj];
    if (dj < -opt_.optimality_tol && x_[jj] < upper_[jj] - opt_.feasibility_tol) {
      *direction = 1.0;
      return true;
    }
    if (dj > opt_.optimality_tol && x_[jj] > lower_[jj] + opt_.feasibility_tol) {
      *direction = -1.0;
      return true;
    }
    return false;
  }

  LpStatus Iterate(SimplexSolution* sol) {
    Eigen::VectorXd alpha(m_);
    Eigen::VectorXd rho(m_);
    std::vector<int> alpha_nz, rho_nz;
    double obj = Objective();
    int stall = 0;
    bool bland = false;
    int since_refresh = 0;

    for (;;) {
      if (iterations_ >= max_iters_) return LpStatus::kIterationLimit;
      if (since_refresh >= opt_.refresh_interval) {
        Refresh();
        obj = Objective();
        since_refresh = 0;
      }

      // Pricing.
      int q = -1;
      double dir = 0.0;
      double best = 0.0;
      for (int j = 0; j < total_; ++j) {
        double dj_dir;
        if (!Eligible(j, &dj_dir)) continue;
        if (bland) {
          q = j;
          dir = dj_dir;
          break;
        }
        const double score = std::abs(d_[static_cast<Index>(j)]);
        if (score > best) {
          best = score;
          q = j;
          dir = dj_dir;
        }
      }
      if (q < 0) {
        if (since_refresh == 0) return LpStatus::kOptimal;
        Refresh();  // confirm optimality with fresh reduced costs
        obj = Objective();
        since_refresh = 0;
        continue;
      }

      // FTRAN.
      alpha.setZero();
      ForColumn(q, [&](int r, double v) { alpha += v * binv_.col(r); });

      // Ratio test. Basic i moves at rate -dir * alpha_i per unit step.
      const Index qq = static_cast<Index>(q);
      double own_range = dir > 0 ? upper_[qq] - x_[qq] : x_[qq] - lower_[qq];
      int leave = -1;
      double step = kInf;
      const double tol = opt_.feasibility_tol;
      if (bland) {
        for (int i = 0; i < m_; ++i) {
          const double a = alpha[i];
          if (std::abs(a) <= opt_.pivot_tol) continue;
          const double rate = -dir * a;
          const Index b = static_cast<Index>(basis_[static_cast<Index>(i)]);
          double t;
          if (rate < 0 && std::isfinite(lower_[b])) {
            t = (x_[b] - lower_[b]) / -rate;
          } else if (rate > 0 && std::isfinite(upper_[b])) {
            t = (upper_[b] - x_[b]) / rate;
          } else {
            continue;
          }
          t = std::max(t, 0.0);
          if (t < step - 1e-12 ||
              (t <= step + 1e-12 && leave >= 0 &&
               basis_[static_cast<Index>(i)] < basis_[static_cast<Index>(leave)])) {
            step = std::min(step, t);
            leave = i;
          }
        }
      } else {
        double bound_relaxed = kInf;
        for (int i = 0; i < m_; ++i) {
          const double a = alpha[i];
          if (std::abs(a) <= opt_.pivot_tol) continue;
          const double rate = -dir * a;
          const Index b = static_cast<Index>(basis_[static_cast<Index>(i)]);
          if (rate < 0 && std::isfinite(lower_[b])) {
            bound_relaxed = std::min(bound_relaxed, (x_[b] - lower_[b] + tol) / -rate);
          } else if (rate > 0 && std::isfinite(upper_[b])) {
            bound_relaxed = std::min(bound_relaxed, (upper_[b] - x_[b] + tol) / rate);
          }
        }
        double best_pivot = 0.0;
        for (int i = 0; i < m_; ++i) {
          const double a = alpha[i];
          if (std::abs(a) <= opt_.pivot_tol) continue;
          const double rate = -dir * a;
          const Index b = static_cast<Index>(basis_[static_cast<Index>(i)]);
          double t;
          if (rate < 0 && std::isfinite(lower_[b])) {
            t = (x_[b] - lower_[b]) / -rate;
          } else if (rate > 0 && std::isfinite(upper_[b])) {
            t = (upper_[b] - x_[b]) / rate;
          } else {
            continue;
          }
          if (t <= bound_relaxed && std::abs(a) > best_pivot) {
            best_pivot = std::abs(a);
            leave = i;
            step = std::max(t, 0.0);
          }
        }
      }

      if (leave < 0 && !std::isfinite(own_range)) return LpStatus::kUnbounded;
      ++iterations_;
      ++since_refresh;
      if (bland) ++sol->bland_iterations;

      const double prev_obj = obj;
      if (leave < 0 || own_range <= step) {
        // Bound flip: the entering variable crosses to its other bound.
        const double t = own_range;
        x_[qq] += dir * t;
        for (int i = 0; i < m_; ++i) {
          if (alpha[i] != 0.0) x_[static_cast<Index>(basis_[static_cast<Index>(i)])] -= dir * t * alpha[i];
        }
        x_[qq] = dir > 0 ? upper_[qq] : lower_[qq];
        obj += d_[qq] * dir * t;
      } else {
        Pivot(q, dir, leave, step, alpha, rho, alpha_nz, rho_nz);
        obj = prev_obj + d_prev_q_ * dir * step;
      }

      if (obj < prev_obj - 1e-12 * std::max(1.0, std::abs(prev_obj))) {
        stall = 0;
        bland = false;
      } else if (++stall >= std::max(m_, 1)) {
        bland = true;
      }
    }
  }

  void Pivot(int q, double dir, int r, double step, const Eigen::VectorXd& alpha,
             Eigen::VectorXd& rho, std::vector<int>& alpha_nz, std::vector<int>& rho_nz) {
    const Index qq = static_cast<Index>(q);
    const int leaving = basis_[static_cast<Index>(r)];
    const Index ll = static_cast<Index>(leaving);
    const double a_r = alpha[r];

    // Primal update; the leaving variable lands exactly on the bound it hit.
    x_[qq] += dir * step;
    for (int i = 0; i < m_; ++i) {
      if (alpha[i] != 0.0) x_[static_cast<Index>(basis_[static_cast<Index>(i)])] -= dir * step * alpha[i];
    }
    const double rate = -dir * a_r;
    x_[ll] = rate < 0 ? lower_[ll] : upper_[ll];

    // Pivot row rho = e_r' B^-1 and its products with nonbasic columns.
    rho = binv_.row(r).transpose();
    rho_nz.clear();
    for (int i = 0; i < m_; ++i) {
      if (std::abs(rho[i]) > 1e-14) rho_nz.push_back(i);
    }
    touched_.clear();
    for (int i : rho_nz) {
      const double ri = rho[i];
      for (int p = row_start_[static_cast<Index>(i)]; p < row_start_[static_cast<Index>(i) + 1]; ++p) {
        const int j = row_col_[static_cast<Index>(p)];
        if (alpha_row_[static_cast<Index>(j)] == 0.0) touched_.push_back(j);
        alpha_row_[static_cast<Index>(j)] += ri * row_val_[static_cast<Index>(p)];
      }
      const int logical = n_ + i;
      if (alpha_row_[static_cast<Index>(logical)] == 0.0) touched_.push_back(logical);
      alpha_row_[static_cast<Index>(logical)] -= ri;
    }
    for (int a = 0; a < num_artificial_; ++a) {
      const int row = art_row_[static_cast<Index>(a)];
      if (rho[row] != 0.0) {
        const int var = n_ + m_ + a;
        if (alpha_row_[static_cast<Index>(var)] == 0.0) touched_.push_back(var);
        alpha_row_[static_cast<Index>(var)] += art_sign_[static_cast<Index>(a)] * rho[row];
      }
    }

    // Dual update.
    const double dq = d_[qq];
    d_prev_q_ = dq;
    const double ratio = dq / a_r;
    for (int j : touched_) {
      const Index jj = static_cast<Index>(j);
      if (pos_[jj] < 0) d_[jj] -= ratio * alpha_row_[jj];
      alpha_row_[jj] = 0.0;
    }
    d_[qq] = 0.0;
    d_[ll] = -ratio;

    // Inverse update: row r /= a_r; row i -= alpha_i * new row r.
    alpha_nz.clear();
    for (int i = 0; i < m_; ++i) {
      if (i != r && std::abs(alpha[i]) > 1e-14) alpha_nz.push_back(i);
    }
    for (int c : rho_nz) {
      const double v = rho[c] / a_r;
      auto col = binv_.col(c);
      for (int i : alpha_nz) col[i] -= alpha[i] * v;
      col[r] = v;
    }

    basis_[static_cast<Index>(r)] = q;
    pos_[qq] = r;
    pos_[ll] = -1;
    if (leaving >= n_ + m_) {
      // Artificials never re-enter.
      lower_[ll] = 0.0;
      upper_[ll] = 0.0;
      x_[ll] = 0.0;
    }
  }

  SimplexSolution Finish(SimplexSolution* sol, LpStatus status) {
    sol->status = status;
    sol->iterations = iterations_;
    sol->reinversions = reinversions_;
    if (status == LpStatus::kOptimal) {
      RecomputeBasics();
      if (Residual() > 1e-9 * (1.0 + rhs_scale_ + max_abs_x_)) {
        Reinvert();
        RecomputeBasics();
      }
    }
    sol->x.assign(x_.begin(), x_.begin() + n_);
    for (int j = 0; j < n_; ++j) {
      auto& v = sol->x[static_cast<Index>(j)];
      const auto& var = lp_.vars[static_cast<Index>(j)];
      if (std::abs(v - var.lower) <= opt_.feasibility_tol) v = var.lower;
      if (std::abs(v - var.upper) <= opt_.feasibility_tol) v = var.upper;
    }
    double obj = 0.0;
    for (int j = 0; j < n_; ++j) obj += lp_.objective[static_cast<Index>(j)] * sol->x[static_cast<Index>(j)];
    sol->objective = obj;
    return *sol;
  }

  const LinearProgram& lp_;
  SimplexOptions opt_;
  int n_ = 0;
  int m_ = 0;
  int total_ = 0;
  int num_artificial_ = 0;
  int iterations_ = 0;
  int max_iters_ = 0;
  int reinversions_ = 0;
  double rhs_scale_ = 0.0;
  double max_abs_x_ = 0.0;
  double d_prev_q_ = 0.0;

  std::vector<int> row_start_, row_col_;
  std::vector<double> row_val_;
  std::vector<int> col_start_, col_row_;
  std::vector<double> col_val_;
  std::vector<int> art_row_;
  std::vector<double> art_sign_;

  std::vector<double> lower_, upper_, x_, cost_, d_, alpha_row_;
  std::vector<int> basis_, pos_, touched_;
  Eigen::MatrixXd binv_;
};

}  // namespace detail

inline SimplexSolution SolveLp(const LinearProgram& lp, const SimplexOptions& opt = {}) {
  lp.Validate();
  detail::RevisedSimplex solver(lp, opt);
  return solver.Solve();
}

// Largest violation of any row or bound by `x`.
inline double MaxViolation(const LinearProgram& lp, const std::vector<double>& x) {
  double worst = 0.0;
  for (int j = 0; j < lp.n_vars(); ++j) {
    const auto& v = lp.vars[static_cast<std::size_t>(j)];
    const double xj = x[static_cast<std::size_t>(j)];
    worst = std::max({worst, v.lower - xj, xj - v.upper});
  }
  for (const auto& r : lp.rows) {
    double act = 0.0;
    for (auto [j, a] : r.coeffs) act += a * x[static_cast<std::size_t>(j)];
    worst = std::max(worst, act - r.rhs);
    if (r.relation == Relation::kEqual) worst = std::max(worst, r.rhs - act);
  }
  return worst;
}

// Writes the program in CPLEX-LP style text.
inline void WriteLp(std::ostream& out, const LinearProgram& lp) {
  auto name = [&](int j) {
    const auto& n = lp.vars[static_cast<std::size_t>(j)].name;
    return n.empty() ? "x" + std::to_string(j) : n;
  };
  auto term = [&](double a, int j, bool first) {
    if (a < 0) {
      out << (first ? "- " : " - ") << -a << ' ' << name(j);
    } else {
      out << (first ? "" : " + ") << a << ' ' << name(j);
    }
  };
  out.precision(17);
  out << "Minimize\n obj:";
  bool first = true;
  for (int j = 0; j < lp.n_vars(); ++j) {
    const double c = lp.objective[static_cast<std::size_t>(j)];
    if (c == 0.0) continue;
    out << ' ';
    term(c, j, first);
    first = false;
  }
  if (first) out << " 0";
  out << "\nSubject To\n";
  for (int i = 0; i < lp.n_rows(); ++i) {
    const auto& r = lp.rows[static_cast<std::size_t>(i)];
    out << ' ' << (r.name.empty() ? "r" + std::to_string(i) : r.name) << ':';
    bool f = true;
    for (auto [j, a] : r.coeffs) {
      out << ' ';
      term(a, j, f);
      f = false;
    }
    if (f) out << " 0 x0";
    out << (r.relation == Relation::kEqual ? " = " : " <= ") << r.rhs << '\n';
  }
  out << "Bounds\n";
  for (int j = 0; j < lp.n_vars(); ++j) {
    const auto& v = lp.vars[static_cast<std::size_t>(j)];
    out << ' ';
    if (std::isinf(v.lower) && std::isinf(v.upper)) {
      out << name(j) << " free\n";
      continue;
    }
    if (std::isinf(v.lower)) out << "-inf"; else out << v.lower;
    out << " <= " << name(j) << " <= ";
    if (std::isinf(v.upper)) out << "+inf"; else out << v.upper;
    out << '\n';
  }
  out << "End\n";
}

}  // namespace budget_tree

#endif  // BUDGET_TREE_SIMPLEX_HPP_
