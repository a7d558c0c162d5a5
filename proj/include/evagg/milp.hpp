#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>
#include <vector>

#include "evagg/lp.hpp"

namespace evagg {

/// An LpProblem plus the indices of variables restricted to {0,1}.
struct MilpProblem {
  LpProblem lp;
  std::vector<int> binary_vars;

  std::string validate() const {
    const std::string base = lp.validate();
    if (!base.empty()) return base;
    for (int j : binary_vars) {
      if (j < 0 || j >= lp.n_vars())
        return "binary index out of range: " + std::to_string(j);
      if (lp.lo[j] < -1e-12 || lp.hi[j] > 1.0 + 1e-12)
        return "binary variable " + std::to_string(j) + " has bounds outside [0,1]";
    }
    return "";
  }
};

enum class MilpStatus { optimal, infeasible, node_limit };

struct MilpSolution {
  MilpStatus status = MilpStatus::infeasible;
  std::vector<double> x;
  double objective = kInf;
  long nodes = 0;
  double gap = kInf;  // (incumbent - best bound) / max(1, |incumbent|)
};

namespace detail {

struct BnbNode {
  double bound;  // parent LP objective, a valid lower bound
  long id;
  std::vector<std::pair<int, int>> fixings;  // (binary var, 0/1)
  Basis basis;                               // parent basis for warm start

  bool operator>(const BnbNode& other) const {
    if (bound != other.bound) return bound > other.bound;
    return id > other.id;  // deterministic tie-break
  }
};

}  // namespace detail

/// Best-bound branch and bound over the declared binaries. Branching picks
/// the most fractional binary (ties to the lowest index); children warm-start
/// from the parent basis. With gap_target 0 and no node limit the incumbent
/// is optimal on return.
inline MilpSolution solve_milp(const MilpProblem& p, double gap_target = 0.0,
                               long node_limit = -1,
                               const SimplexOptions& lp_opt = {}) {
  const std::string issue = p.validate();
  if (!issue.empty()) throw ValidationError("MILP ill-formed: " + issue);
  if (gap_target < 0.0) throw ValidationError("gap target must be nonnegative");

  const double int_tol = 1e-7;
  MilpSolution best;
  best.status = MilpStatus::infeasible;

  LpProblem work = p.lp;
  auto apply_fixings = [&](const std::vector<std::pair<int, int>>& fixings) {
    for (int j : p.binary_vars) {
      work.lo[j] = p.lp.lo[j];
      work.hi[j] = p.lp.hi[j];
    }
    for (const auto& [j, v] : fixings) {
      work.lo[j] = v;
      work.hi[j] = v;
    }
  };

  std::priority_queue<detail::BnbNode, std::vector<detail::BnbNode>,
                      std::greater<detail::BnbNode>>
      open;
  long next_id = 0;
  open.push(detail::BnbNode{-kInf, next_id++, {}, Basis{}});

  bool have_incumbent = false;

  auto incumbent_gap = [&](double frontier_bound) {
    if (!have_incumbent) return kInf;
    return std::max(0.0, (best.objective - frontier_bound) /
                             std::max(1.0, std::abs(best.objective)));
  };

  while (!open.empty()) {
    if (have_incumbent &&
        incumbent_gap(open.top().bound) <= gap_target + 1e-12) {
      best.gap = incumbent_gap(open.top().bound);
      best.status = MilpStatus::optimal;
      return best;
    }
    if (node_limit >= 0 && best.nodes >= node_limit) {
      best.status = MilpStatus::node_limit;
      best.gap = incumbent_gap(open.top().bound);
      return best;
    }

    detail::BnbNode node = open.top();
    open.pop();
    ++best.nodes;

    // Prune against the incumbent before solving.
    if (have_incumbent && node.bound >= best.objective - 1e-9) continue;

    apply_fixings(node.fixings);
    Basis basis = node.basis;
    LpSolution relax = solve_lp(work, lp_opt, &basis);
    if (relax.status == LpStatus::infeasible) continue;
    if (relax.status == LpStatus::unbounded)
      throw SolverError("branch and bound: relaxation unbounded");
    if (have_incumbent && relax.objective >= best.objective - 1e-9) continue;

    // Most fractional binary, lowest index on ties.
    int branch_var = -1;
    double branch_score = -1.0;
    for (int j : p.binary_vars) {
      const double v = relax.x[j];
      const double frac = std::abs(v - std::round(v));
      if (frac <= int_tol) continue;
      const double score = 0.5 - std::abs(v - 0.5);
      if (score > branch_score + 1e-15) {
        branch_score = score;
        branch_var = j;
      }
    }

    if (branch_var < 0) {
      // Integral: polish by fixing every binary to its rounded value so the
      // reported point is exactly binary.
      auto fixings = node.fixings;
      for (int j : p.binary_vars) {
        bool already = false;
        for (const auto& [fj, fv] : fixings)
          if (fj == j) { already = true; break; }
        if (!already) fixings.push_back({j, static_cast<int>(std::round(relax.x[j]))});
      }
      apply_fixings(fixings);
      LpSolution exact = solve_lp(work, lp_opt, &basis);
      if (exact.status == LpStatus::optimal) {
        if (!have_incumbent || exact.objective < best.objective - 1e-12) {
          best.objective = exact.objective;
          best.x = exact.x;
          for (const auto& [fj, fv] : fixings) best.x[fj] = fv;
          have_incumbent = true;
          best.status = MilpStatus::optimal;
        }
        continue;
      }
      // Rounding made the node infeasible (values were only integral within
      // tolerance): branch on the first free binary to keep the search exact.
      for (int j : p.binary_vars) {
        bool fixed = false;
        for (const auto& [fj, fv] : node.fixings)
          if (fj == j) { fixed = true; break; }
        if (!fixed) { branch_var = j; break; }
      }
      if (branch_var < 0) continue;  // fully fixed and infeasible after all
    }

    for (int v = 0; v <= 1; ++v) {
      detail::BnbNode child;
      child.bound = relax.objective;
      child.id = next_id++;
      child.fixings = node.fixings;
      child.fixings.push_back({branch_var, v});
      child.basis = basis;
      open.push(std::move(child));
    }
  }

  best.gap = have_incumbent ? 0.0 : kInf;
  best.status = have_incumbent ? MilpStatus::optimal : MilpStatus::infeasible;
  return best;
}

}  // namespace evagg
