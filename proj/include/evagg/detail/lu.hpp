#pragma once

#include <cmath>
#include <cstdlib>
#include <vector>

namespace evagg::detail {

// Sparse LU factorization of a square basis matrix with row partial
// pivoting, left-looking (Gilbert-Peierls): P*B = L*U with L unit lower
// triangular. Row indices of the stored factors live in pivot coordinates.
class BasisLu {
 public:
  // Factorizes the m x m matrix whose column j is given by the CSC slice
  // [col_ptr[j], col_ptr[j+1]) of (row_idx, val). Returns false when the
  // matrix is structurally or numerically singular.
  bool factorize(int m, const int* col_ptr, const int* row_idx, const double* val) {
    m_ = m;
    lp_.assign(1, 0);
    li_.clear();
    lx_.clear();
    up_.assign(1, 0);
    ui_.clear();
    ux_.clear();
    udiag_.assign(m, 0.0);
    pinv_.assign(m, -1);
    p_.assign(m, -1);
    work_.assign(m, 0.0);
    mark_.assign(m, -1);
    stack_.resize(m);
    pstack_.resize(m);
    topo_.resize(m);

    for (int col = 0; col < m; ++col) {
      // Symbolic step: reach of A(:,col) in the graph of the partial L.
      int top = m;
      for (int q = col_ptr[col]; q < col_ptr[col + 1]; ++q) {
        const int seed = row_idx[q];
        if (mark_[seed] == col) continue;
        int head = 0;
        stack_[0] = seed;
        while (head >= 0) {
          const int node = stack_[head];
          if (mark_[node] != col) {
            mark_[node] = col;
            pstack_[head] = (pinv_[node] < 0) ? -1 : lp_[pinv_[node]];
          }
          if (pinv_[node] < 0) {
            topo_[--top] = node;
            --head;
            continue;
          }
          const int pend = lp_[pinv_[node] + 1];
          int pp = pstack_[head];
          bool descended = false;
          while (pp < pend) {
            const int child = li_[pp++];
            if (mark_[child] != col) {
              pstack_[head] = pp;
              stack_[++head] = child;
              descended = true;
              break;
            }
          }
          if (!descended) {
            topo_[--top] = node;
            --head;
          }
        }
      }

      // Numeric step: scatter the column and eliminate in topological order.
      for (int q = col_ptr[col]; q < col_ptr[col + 1]; ++q)
        work_[row_idx[q]] += val[q];
      for (int k = top; k < m; ++k) {
        const int node = topo_[k];
        if (pinv_[node] < 0) continue;
        const double t = work_[node];
        if (t == 0.0) continue;
        const int jc = pinv_[node];
        for (int q = lp_[jc]; q < lp_[jc + 1]; ++q) work_[li_[q]] -= lx_[q] * t;
      }

      // Pivot: largest magnitude among not-yet-pivoted rows, lowest index on ties.
      double piv_abs = 0.0, col_max = 0.0;
      int piv_row = -1;
      for (int k = top; k < m; ++k) {
        const int node = topo_[k];
        const double a = std::abs(work_[node]);
        if (a > col_max) col_max = a;
        if (pinv_[node] >= 0) continue;
        if (a > piv_abs || (a == piv_abs && piv_row >= 0 && node < piv_row)) {
          piv_abs = a;
          piv_row = node;
        }
      }
      if (piv_row < 0 || piv_abs <= 1e-11 * (1.0 + col_max)) {
        for (int k = top; k < m; ++k) work_[topo_[k]] = 0.0;
        return false;
      }

      const double d = work_[piv_row];
      for (int k = top; k < m; ++k) {
        const int node = topo_[k];
        const double t = work_[node];
        if (pinv_[node] >= 0) {
          if (t != 0.0) {
            ui_.push_back(pinv_[node]);
            ux_.push_back(t);
          }
        } else if (node != piv_row && t != 0.0) {
          li_.push_back(node);  // original row index; remapped below
          lx_.push_back(t / d);
        }
        work_[node] = 0.0;
      }
      udiag_[col] = d;
      up_.push_back(static_cast<int>(ui_.size()));
      lp_.push_back(static_cast<int>(li_.size()));
      pinv_[piv_row] = col;
      p_[col] = piv_row;
    }
    for (auto& i : li_) i = pinv_[i];
    return true;
  }

  int dim() const { return m_; }
  long factor_nnz() const { return static_cast<long>(li_.size() + ui_.size()) + m_; }

  // Solves B x = b in place; x indexed by basis position (column order).
  void ftran(double* x) const {
    tmp_.resize(m_);
    for (int k = 0; k < m_; ++k) tmp_[k] = x[p_[k]];
    for (int j = 0; j < m_; ++j) {
      const double t = tmp_[j];
      if (t == 0.0) continue;
      for (int q = lp_[j]; q < lp_[j + 1]; ++q) tmp_[li_[q]] -= lx_[q] * t;
    }
    for (int j = m_ - 1; j >= 0; --j) {
      const double t = tmp_[j] / udiag_[j];
      tmp_[j] = t;
      if (t == 0.0) continue;
      for (int q = up_[j]; q < up_[j + 1]; ++q) tmp_[ui_[q]] -= ux_[q] * t;
    }
    for (int k = 0; k < m_; ++k) x[k] = tmp_[k];
  }

  // Solves B^T x = b in place; b indexed by basis position, x by row.
  void btran(double* x) const {
    tmp_.resize(m_);
    for (int j = 0; j < m_; ++j) {
      double s = x[j];
      for (int q = up_[j]; q < up_[j + 1]; ++q) s -= ux_[q] * tmp_[ui_[q]];
      tmp_[j] = s / udiag_[j];
    }
    for (int j = m_ - 1; j >= 0; --j) {
      double s = tmp_[j];
      for (int q = lp_[j]; q < lp_[j + 1]; ++q) s -= lx_[q] * tmp_[li_[q]];
      tmp_[j] = s;
    }
    for (int k = 0; k < m_; ++k) x[p_[k]] = tmp_[k];
  }

 private:
  int m_ = 0;
  std::vector<int> lp_, li_, up_, ui_;
  std::vector<double> lx_, ux_, udiag_;
  std::vector<int> pinv_, p_;
  std::vector<double> work_;
  std::vector<int> mark_, stack_, pstack_, topo_;
  mutable std::vector<double> tmp_;
};

}  // namespace evagg::detail
