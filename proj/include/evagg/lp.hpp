#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "evagg/common.hpp"
#include "evagg/detail/lu.hpp"

namespace evagg {

enum class Relation { le, ge, eq };

struct LpRow {
  std::vector<std::pair<int, double>> coeffs;  // (variable index, coefficient)
  Relation rel = Relation::le;
  double rhs = 0.0;
  std::string name;
};

/// Standard-form container: minimize cost'x subject to row relations and
/// per-variable bounds (+-inf allowed on bounds).
struct LpProblem {
  std::vector<double> cost;
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<std::string> var_names;
  std::vector<LpRow> rows;

  int n_vars() const { return static_cast<int>(cost.size()); }
  int n_rows() const { return static_cast<int>(rows.size()); }

  int add_var(const std::string& name, double lo_bound, double hi_bound,
              double obj_coeff) {
    var_names.push_back(name);
    lo.push_back(lo_bound);
    hi.push_back(hi_bound);
    cost.push_back(obj_coeff);
    return n_vars() - 1;
  }

  void add_row(Relation rel, double rhs,
               std::vector<std::pair<int, double>> coeffs,
               const std::string& name = "") {
    rows.push_back(LpRow{std::move(coeffs), rel, rhs, name});
  }

  /// Returns an empty string when well-formed, else a description.
  std::string validate() const {
    const int n = n_vars();
    for (int j = 0; j < n; ++j) {
      if (!std::isfinite(cost[j])) return "non-finite objective coefficient at variable " + std::to_string(j);
      if (std::isnan(lo[j]) || std::isnan(hi[j])) return "NaN bound at variable " + std::to_string(j);
      if (lo[j] > hi[j]) return "crossed bounds at variable " + std::to_string(j);
    }
    for (int i = 0; i < n_rows(); ++i) {
      if (!std::isfinite(rows[i].rhs)) return "non-finite rhs at row " + std::to_string(i);
      for (const auto& [j, a] : rows[i].coeffs) {
        if (j < 0 || j >= n) return "coefficient index out of range at row " + std::to_string(i);
        if (!std::isfinite(a)) return "non-finite coefficient at row " + std::to_string(i);
      }
    }
    return "";
  }
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  std::vector<double> x;             // primal values (structural variables)
  std::vector<double> row_dual;      // >=0 for >=-rows, <=0 for <=-rows (min sense)
  std::vector<double> reduced_cost;  // per structural variable
  double objective = 0.0;
  long iterations = 0;
};

struct SimplexOptions {
  double feas_tol = 1e-7;   // primal feasibility
  double opt_tol = 1e-7;    // dual feasibility (reduced costs)
  long iter_limit = 0;      // 0 -> 50*(rows+cols)
  int refactor_every = 64;  // basis refactorization cadence
  long bland_after = -1;    // -1 -> 2000 + 20*rows; then Bland's rule
};

enum class VarStatus : unsigned char { basic, at_lo, at_up, nb_free };

/// Simplex basis snapshot (structurals then logicals); reusable as warm start.
struct Basis {
  std::vector<VarStatus> status;
};

namespace detail {

// Bounded-variable primal simplex over [A | -I] with logical variables
// carrying the row bounds. Phase 1 minimizes the sum of bound violations of
// the basic variables; phase 2 the real objective. Pricing is Dantzig with
// lowest-index tie-breaks, switching to Bland's rule after a fixed number of
// iterations so that every solve is deterministic and finite.
class Simplex {
 public:
  Simplex(const LpProblem& p, const SimplexOptions& opt) : opt_(opt) {
    m_ = p.n_rows();
    n_struct_ = p.n_vars();
    n_ = n_struct_ + m_;
    build_matrix(p);
    cost_.assign(n_, 0.0);
    for (int j = 0; j < n_struct_; ++j) cost_[j] = p.cost[j];
    lo_.assign(n_, 0.0);
    hi_.assign(n_, 0.0);
    for (int j = 0; j < n_struct_; ++j) {
      lo_[j] = p.lo[j];
      hi_[j] = p.hi[j];
    }
    for (int i = 0; i < m_; ++i) {
      const auto& r = p.rows[i];
      lo_[n_struct_ + i] = (r.rel == Relation::le) ? -kInf : r.rhs;
      hi_[n_struct_ + i] = (r.rel == Relation::ge) ? kInf : r.rhs;
    }
    if (opt_.iter_limit <= 0) opt_.iter_limit = 50L * (m_ + n_);
    if (opt_.bland_after < 0) opt_.bland_after = 2000L + 20L * m_;
  }

  // Runs the solve; fills the solution. `warm` may carry a starting basis and
  // receives the final one.
  LpStatus solve(LpSolution& sol, Basis* warm) {
    if (!install_basis(warm)) {
      install_cold_basis();
      if (!refactorize()) throw SolverError("simplex: initial basis singular");
    }
    compute_basic_values();

    LpStatus status = LpStatus::optimal;
    bool feasible = (total_infeasibility() <= opt_.feas_tol);
    for (;;) {
      if (iter_ >= opt_.iter_limit)
        throw SolverError("simplex: iteration limit of " + std::to_string(opt_.iter_limit) + " exceeded");
      if (!feasible) {
        const StepResult r = iterate(true);
        if (r == StepResult::no_direction) {
          if (total_infeasibility() > opt_.feas_tol) {
            status = LpStatus::infeasible;
            break;
          }
          feasible = true;
        } else if (r == StepResult::unbounded) {
          throw SolverError("simplex: unbounded phase-1 direction (numerical failure)");
        }
        if (total_infeasibility() <= opt_.feas_tol) feasible = true;
      } else {
        const StepResult r = iterate(false);
        if (r == StepResult::no_direction) {
          status = LpStatus::optimal;
          break;
        }
        if (r == StepResult::unbounded) {
          status = LpStatus::unbounded;
          break;
        }
        // Bound drift out of phase 2 (rare, numerical): fall back to phase 1.
        if (total_infeasibility() > opt_.feas_tol) feasible = false;
      }
    }

    sol.iterations = iter_;
    sol.status = status;
    sol.x.assign(n_struct_, 0.0);
    sol.row_dual.assign(m_, 0.0);
    sol.reduced_cost.assign(n_struct_, 0.0);
    sol.objective = (status == LpStatus::infeasible) ? kInf
                    : (status == LpStatus::unbounded) ? -kInf
                                                      : 0.0;
    if (status == LpStatus::optimal) {
      // Final clean solve against a fresh factorization.
      refactorize_or_throw();
      compute_basic_values();
      for (int j = 0; j < n_struct_; ++j) sol.x[j] = x_[j];
      std::vector<double> pi(m_, 0.0);
      duals(false, pi);
      for (int i = 0; i < m_; ++i) sol.row_dual[i] = pi[i];
      for (int j = 0; j < n_struct_; ++j) sol.reduced_cost[j] = cost_[j] - col_dot(j, pi);
      double obj = 0.0;
      for (int j = 0; j < n_struct_; ++j) obj += cost_[j] * x_[j];
      sol.objective = obj;
    }
    if (warm) {
      warm->status.assign(status_.begin(), status_.end());
    }
    return status;
  }

 private:
  enum class StepResult { pivoted, no_direction, unbounded };

  void build_matrix(const LpProblem& p) {
    // CSC of W = [A | -I], assembled column-wise with duplicates coalesced.
    std::vector<std::vector<std::pair<int, double>>> cols(n_);
    for (int i = 0; i < m_; ++i)
      for (const auto& [j, a] : p.rows[i].coeffs)
        if (a != 0.0) cols[j].push_back({i, a});
    col_ptr_.assign(n_ + 1, 0);
    for (int j = 0; j < n_struct_; ++j) {
      auto& c = cols[j];
      std::sort(c.begin(), c.end());
      // coalesce duplicates
      std::vector<std::pair<int, double>> merged;
      for (const auto& e : c) {
        if (!merged.empty() && merged.back().first == e.first)
          merged.back().second += e.second;
        else
          merged.push_back(e);
      }
      c = std::move(merged);
    }
    long nnz = 0;
    for (int j = 0; j < n_struct_; ++j) nnz += static_cast<long>(cols[j].size());
    nnz += m_;
    row_idx_.reserve(nnz);
    val_.reserve(nnz);
    for (int j = 0; j < n_; ++j) {
      if (j < n_struct_) {
        for (const auto& [i, a] : cols[j]) {
          row_idx_.push_back(i);
          val_.push_back(a);
        }
      } else {
        row_idx_.push_back(j - n_struct_);
        val_.push_back(-1.0);
      }
      col_ptr_[j + 1] = static_cast<int>(row_idx_.size());
    }
  }

  void install_cold_basis() {
    status_.assign(n_, VarStatus::at_lo);
    basic_.assign(m_, 0);
    for (int j = 0; j < n_struct_; ++j) status_[j] = nonbasic_default(j);
    for (int i = 0; i < m_; ++i) {
      status_[n_struct_ + i] = VarStatus::basic;
      basic_[i] = n_struct_ + i;
    }
  }

  VarStatus nonbasic_default(int j) const {
    if (std::isfinite(lo_[j])) return VarStatus::at_lo;
    if (std::isfinite(hi_[j])) return VarStatus::at_up;
    return VarStatus::nb_free;
  }

  bool install_basis(const Basis* warm) {
    if (!warm || static_cast<int>(warm->status.size()) != n_) return false;
    status_.assign(warm->status.begin(), warm->status.end());
    basic_.clear();
    for (int j = 0; j < n_; ++j) {
      switch (status_[j]) {
        case VarStatus::basic:
          basic_.push_back(j);
          break;
        case VarStatus::at_lo:
          if (!std::isfinite(lo_[j])) status_[j] = nonbasic_default(j);
          break;
        case VarStatus::at_up:
          if (!std::isfinite(hi_[j])) status_[j] = nonbasic_default(j);
          break;
        case VarStatus::nb_free:
          if (std::isfinite(lo_[j]) || std::isfinite(hi_[j]))
            status_[j] = nonbasic_default(j);
          break;
      }
    }
    if (static_cast<int>(basic_.size()) != m_) return false;
    return refactorize();
  }

  bool factorize_current() {
    // Gather basis columns into a compact CSC.
    fac_ptr_.assign(m_ + 1, 0);
    fac_idx_.clear();
    fac_val_.clear();
    for (int k = 0; k < m_; ++k) {
      const int j = basic_[k];
      for (int q = col_ptr_[j]; q < col_ptr_[j + 1]; ++q) {
        fac_idx_.push_back(row_idx_[q]);
        fac_val_.push_back(val_[q]);
      }
      fac_ptr_[k + 1] = static_cast<int>(fac_idx_.size());
    }
    return basis_lu_.factorize(m_, fac_ptr_.data(), fac_idx_.data(), fac_val_.data());
  }

  bool refactorize() {
    if (!factorize_current()) return false;
    etas_.clear();
    pivots_since_refactor_ = 0;
    return true;
  }

  void refactorize_or_throw() {
    if (!refactorize()) throw SolverError("simplex: basis became singular");
  }

  // x_B = B^{-1} (0 - N x_N); nonbasics sit at their bounds (free at 0).
  void compute_basic_values() {
    x_.assign(n_, 0.0);
    for (int j = 0; j < n_; ++j) {
      if (status_[j] == VarStatus::at_lo) x_[j] = lo_[j];
      else if (status_[j] == VarStatus::at_up) x_[j] = hi_[j];
      else x_[j] = 0.0;
    }
    std::vector<double> rhs(m_, 0.0);
    for (int j = 0; j < n_; ++j) {
      if (status_[j] == VarStatus::basic) continue;
      const double xj = x_[j];
      if (xj == 0.0) continue;
      for (int q = col_ptr_[j]; q < col_ptr_[j + 1]; ++q)
        rhs[row_idx_[q]] -= val_[q] * xj;
    }
    ftran(rhs);
    for (int k = 0; k < m_; ++k) x_[basic_[k]] = rhs[k];
  }

  void ftran(std::vector<double>& v) const {
    basis_lu_.ftran(v.data());
    for (const Eta& e : etas_) {
      const double t = v[e.pos] / e.wp;
      v[e.pos] = t;
      if (t != 0.0)
        for (const auto& [i, wi] : e.w) v[i] -= wi * t;
    }
  }

  void btran(std::vector<double>& v) const {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double s = v[it->pos];
      for (const auto& [i, wi] : it->w) s -= wi * v[i];
      v[it->pos] = s / it->wp;
    }
    basis_lu_.btran(v.data());
  }

  double col_dot(int j, const std::vector<double>& pi) const {
    double s = 0.0;
    for (int q = col_ptr_[j]; q < col_ptr_[j + 1]; ++q)
      s += val_[q] * pi[row_idx_[q]];
    return s;
  }

  double total_infeasibility() const {
    double s = 0.0;
    for (int k = 0; k < m_; ++k) {
      const int j = basic_[k];
      if (x_[j] < lo_[j]) s += lo_[j] - x_[j];
      else if (x_[j] > hi_[j]) s += x_[j] - hi_[j];
    }
    return s;
  }

  // pi = B^{-T} (phase-1 violation signs | phase-2 basic costs).
  void duals(bool phase1, std::vector<double>& pi) const {
    std::vector<double> cb(m_, 0.0);
    for (int k = 0; k < m_; ++k) {
      const int j = basic_[k];
      if (phase1) {
        if (x_[j] < lo_[j] - 0.5 * opt_.feas_tol) cb[k] = -1.0;
        else if (x_[j] > hi_[j] + 0.5 * opt_.feas_tol) cb[k] = 1.0;
      } else {
        cb[k] = cost_[j];
      }
    }
    pi = cb;
    btran(pi);
  }

  StepResult iterate(bool phase1) {
    std::vector<double> pi;
    duals(phase1, pi);

    const bool bland = iter_ >= opt_.bland_after;
    int enter = -1, dir = 0;
    double best_score = 0.0;
    for (int j = 0; j < n_; ++j) {
      const VarStatus st = status_[j];
      if (st == VarStatus::basic) continue;
      if (lo_[j] == hi_[j]) continue;  // fixed variable never enters
      const double d = (phase1 ? 0.0 : cost_[j]) - col_dot(j, pi);
      // Direction of improvement: increase from lower bound wants d < 0,
      // decrease from upper bound wants d > 0; free variables take either.
      int cand_dir = 0;
      if (st == VarStatus::at_lo && d < -opt_.opt_tol) cand_dir = 1;
      else if (st == VarStatus::at_up && d > opt_.opt_tol) cand_dir = -1;
      else if (st == VarStatus::nb_free && std::abs(d) > opt_.opt_tol)
        cand_dir = (d < 0.0) ? 1 : -1;
      if (cand_dir == 0) continue;
      if (bland) {
        enter = j;
        dir = cand_dir;
        break;
      }
      const double score = std::abs(d);
      if (score > best_score) {
        best_score = score;
        enter = j;
        dir = cand_dir;
      }
    }
    if (enter < 0) return StepResult::no_direction;

    // w = B^{-1} W_enter
    std::vector<double> w(m_, 0.0);
    for (int q = col_ptr_[enter]; q < col_ptr_[enter + 1]; ++q)
      w[row_idx_[q]] = val_[q];
    ftran(w);

    // Ratio test.
    const double kPivotTol = 1e-9;
    double theta = kInf;
    bool own_bound_blocks = false;
    if (std::isfinite(lo_[enter]) && std::isfinite(hi_[enter])) {
      theta = hi_[enter] - lo_[enter];
      own_bound_blocks = true;
    }
    for (int k = 0; k < m_; ++k) {
      if (std::abs(w[k]) <= kPivotTol) continue;
      const int j = basic_[k];
      const double delta = -dir * w[k];  // rate of change of x_B(k)
      double limit = kInf;
      if (phase1 && x_[j] < lo_[j] - 0.5 * opt_.feas_tol) {
        // Infeasible below: blocks only while moving up toward its bound.
        if (delta > 0.0) limit = (lo_[j] - x_[j]) / delta;
      } else if (phase1 && x_[j] > hi_[j] + 0.5 * opt_.feas_tol) {
        if (delta < 0.0) limit = (x_[j] - hi_[j]) / (-delta);
      } else {
        if (delta > 0.0 && std::isfinite(hi_[j])) limit = (hi_[j] - x_[j]) / delta;
        else if (delta < 0.0 && std::isfinite(lo_[j])) limit = (x_[j] - lo_[j]) / (-delta);
      }
      if (limit < 0.0) limit = 0.0;
      if (limit < theta) theta = limit;
    }
    if (!std::isfinite(theta)) {
      if (phase1) return StepResult::unbounded;
      return StepResult::unbounded;
    }

    // Pick the blocking basic: among limits tied with theta, largest |w|
    // under Dantzig, lowest variable index under Bland.
    const double tie_tol = 1e-10 * (1.0 + theta);
    int leave_pos = -1;
    double leave_w = 0.0;
    for (int k = 0; k < m_; ++k) {
      if (std::abs(w[k]) <= kPivotTol) continue;
      const int j = basic_[k];
      const double delta = -dir * w[k];
      double limit = kInf;
      bool to_upper = false;
      if (phase1 && x_[j] < lo_[j] - 0.5 * opt_.feas_tol) {
        if (delta > 0.0) limit = (lo_[j] - x_[j]) / delta;
      } else if (phase1 && x_[j] > hi_[j] + 0.5 * opt_.feas_tol) {
        if (delta < 0.0) { limit = (x_[j] - hi_[j]) / (-delta); to_upper = true; }
      } else {
        if (delta > 0.0 && std::isfinite(hi_[j])) { limit = (hi_[j] - x_[j]) / delta; to_upper = true; }
        else if (delta < 0.0 && std::isfinite(lo_[j])) limit = (x_[j] - lo_[j]) / (-delta);
      }
      if (limit < 0.0) limit = 0.0;
      if (limit <= theta + tie_tol) {
        if (leave_pos < 0 ||
            (bland ? (j < basic_[leave_pos])
                   : (std::abs(w[k]) > std::abs(leave_w) ||
                      (std::abs(w[k]) == std::abs(leave_w) && j < basic_[leave_pos])))) {
          leave_pos = k;
          leave_w = w[k];
          leave_to_upper_ = to_upper;
        }
      }
    }

    ++iter_;

    if (leave_pos < 0) {
      // Entering variable flips to its opposite bound; basis unchanged.
      if (!own_bound_blocks) return StepResult::unbounded;
      apply_step(w, enter, dir, theta);
      status_[enter] = (dir > 0) ? VarStatus::at_up : VarStatus::at_lo;
      x_[enter] = (dir > 0) ? hi_[enter] : lo_[enter];
      return StepResult::pivoted;
    }
    if (own_bound_blocks && theta >= hi_[enter] - lo_[enter] - tie_tol) {
      // Own bound at least as tight: prefer the flip (no basis change).
      const double step = hi_[enter] - lo_[enter];
      apply_step(w, enter, dir, step);
      status_[enter] = (dir > 0) ? VarStatus::at_up : VarStatus::at_lo;
      x_[enter] = (dir > 0) ? hi_[enter] : lo_[enter];
      return StepResult::pivoted;
    }

    // Pivot: entering becomes basic at position leave_pos.
    if (std::abs(leave_w) < 1e-9 && pivots_since_refactor_ > 0) {
      // Tiny pivot with a stale factorization: refresh and redo this step.
      refactorize_or_throw();
      compute_basic_values();
      --iter_;
      return iterate(phase1);
    }
    apply_step(w, enter, dir, theta);
    const int leaving = basic_[leave_pos];
    status_[leaving] = leave_to_upper_ ? VarStatus::at_up : VarStatus::at_lo;
    x_[leaving] = leave_to_upper_ ? hi_[leaving] : lo_[leaving];
    status_[enter] = VarStatus::basic;
    basic_[leave_pos] = enter;

    Eta eta;
    eta.pos = leave_pos;
    eta.wp = w[leave_pos];
    for (int k = 0; k < m_; ++k)
      if (k != leave_pos && w[k] != 0.0) eta.w.push_back({k, w[k]});
    etas_.push_back(std::move(eta));
    ++pivots_since_refactor_;
    if (pivots_since_refactor_ >= opt_.refactor_every) {
      refactorize_or_throw();
      compute_basic_values();
    }
    return StepResult::pivoted;
  }

  void apply_step(const std::vector<double>& w, int enter, int dir, double theta) {
    if (theta != 0.0) {
      for (int k = 0; k < m_; ++k) {
        if (w[k] == 0.0) continue;
        x_[basic_[k]] -= dir * theta * w[k];
      }
      x_[enter] += dir * theta;
    }
  }

  struct Eta {
    int pos = 0;
    double wp = 1.0;
    std::vector<std::pair<int, double>> w;
  };

  SimplexOptions opt_;
  int m_ = 0, n_struct_ = 0, n_ = 0;
  std::vector<int> col_ptr_, row_idx_;
  std::vector<double> val_;
  std::vector<double> cost_, lo_, hi_;

  std::vector<VarStatus> status_;
  std::vector<int> basic_;
  std::vector<double> x_;
  detail::BasisLu basis_lu_;
  std::vector<Eta> etas_;
  std::vector<int> fac_ptr_, fac_idx_;
  std::vector<double> fac_val_;
  int pivots_since_refactor_ = 0;
  bool leave_to_upper_ = false;
  long iter_ = 0;
};

}  // namespace detail

/// Solves the LP with a bounded-variable primal simplex. Throws SolverError
/// when the iteration cap is exceeded, ValidationError on malformed input.
inline LpSolution solve_lp(const LpProblem& p, const SimplexOptions& opt,
                           Basis* warm) {
  const std::string issue = p.validate();
  if (!issue.empty()) throw ValidationError("LP ill-formed: " + issue);
  detail::Simplex simplex(p, opt);
  LpSolution sol;
  simplex.solve(sol, warm);
  return sol;
}

inline LpSolution solve_lp(const LpProblem& p, const SimplexOptions& opt = {}) {
  return solve_lp(p, opt, nullptr);
}

/// Row dual with the sign convention above; requires an optimal solution.
inline double dual_value(const LpSolution& sol, int row) {
  if (sol.status != LpStatus::optimal)
    throw SolverError("dual_value: solution is not optimal");
  if (row < 0 || row >= static_cast<int>(sol.row_dual.size()))
    throw ValidationError("dual_value: row index out of range");
  return sol.row_dual[row];
}

}  // namespace evagg
