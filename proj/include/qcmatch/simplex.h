// Copyright 2026 The qcmatch Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dense two-phase tableau simplex for small linear programs:
//
//   maximize    c . x
//   subject to  A_le x <= b_le,  A_eq x = b_eq,  x >= 0.
//
// Pricing is Dantzig's rule, switching to Bland's rule after a run of
// degenerate pivots. When the final basis is free of artificial columns the
// basic solution is recomputed from the original data with a full-pivot LU,
// so returned values are accurate to roughly machine precision rather than to
// the accumulated tableau error.

#ifndef QCMATCH_SIMPLEX_H_
#define QCMATCH_SIMPLEX_H_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace qcmatch {

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

template <typename Scalar = double>
struct LinearProgram {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector objective;
  Matrix le_matrix;
  Vector le_rhs;
  Matrix eq_matrix;
  Vector eq_rhs;

  explicit LinearProgram(Eigen::Index num_vars = 0)
      : objective(Vector::Zero(num_vars)),
        le_matrix(0, num_vars),
        le_rhs(0),
        eq_matrix(0, num_vars),
        eq_rhs(0) {}

  Eigen::Index num_vars() const { return objective.size(); }
};

template <typename Scalar = double>
struct LpSolution {
  LpStatus status = LpStatus::kInfeasible;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
  Scalar objective = 0;
  // Phase-one optimum: total artificial mass left. Zero for feasible input.
  Scalar infeasibility = 0;
  int iterations = 0;
};

template <typename Scalar = double>
struct SimplexOptions {
  Scalar pivot_tolerance = Scalar(1e-11);
  Scalar cost_tolerance = Scalar(1e-11);
  Scalar feasibility_tolerance = Scalar(1e-9);
  int max_iterations = 200000;
  int degenerate_run_before_bland = 50;
};

namespace internal {

template <typename Scalar>
class Tableau {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Tableau(Matrix t, std::vector<int> basis, std::vector<bool> enterable,
          const SimplexOptions<Scalar>& options)
      : t_(std::move(t)),
        basis_(std::move(basis)),
        enterable_(std::move(enterable)),
        options_(options) {}

  Eigen::Index rows() const { return t_.rows() - 2; }
  Eigen::Index cols() const { return t_.cols() - 1; }
  Matrix& data() { return t_; }
  const std::vector<int>& basis() const { return basis_; }
  std::vector<bool>& enterable() { return enterable_; }
  int iterations() const { return iterations_; }

  // Maximizes the objective stored in `obj_row` (reduced costs z_j - c_j).
  LpStatus Optimize(Eigen::Index obj_row) {
    int degenerate_run = 0;
    bool bland = false;
    while (true) {
      if (iterations_ >= options_.max_iterations) {
        return LpStatus::kIterationLimit;
      }
      const Eigen::Index enter = ChooseEntering(obj_row, bland);
      if (enter < 0) return LpStatus::kOptimal;
      const Eigen::Index leave = ChooseLeaving(enter);
      if (leave < 0) return LpStatus::kUnbounded;
      const bool degenerate =
          std::abs(t_(leave, cols())) <= options_.pivot_tolerance;
      degenerate_run = degenerate ? degenerate_run + 1 : 0;
      if (degenerate_run > options_.degenerate_run_before_bland) bland = true;
      Pivot(leave, enter);
    }
  }

  void Pivot(Eigen::Index row, Eigen::Index col) {
    ++iterations_;
    const Scalar pivot = t_(row, col);
    t_.row(row) /= pivot;
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      if (i == row) continue;
      const Scalar factor = t_(i, col);
      if (factor != Scalar(0)) t_.row(i) -= factor * t_.row(row);
    }
    basis_[row] = static_cast<int>(col);
  }

 private:
  Eigen::Index ChooseEntering(Eigen::Index obj_row, bool bland) const {
    Eigen::Index best = -1;
    Scalar best_cost = -options_.cost_tolerance;
    for (Eigen::Index j = 0; j < cols(); ++j) {
      if (!enterable_[j]) continue;
      const Scalar r = t_(obj_row, j);
      if (r < best_cost) {
        best = j;
        if (bland) break;
        best_cost = r;
      }
    }
    return best;
  }

  Eigen::Index ChooseLeaving(Eigen::Index col) const {
    Eigen::Index best = -1;
    Scalar best_ratio = std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index i = 0; i < rows(); ++i) {
      const Scalar a = t_(i, col);
      if (a <= options_.pivot_tolerance) continue;
      const Scalar ratio = t_(i, cols()) / a;
      if (ratio < best_ratio - options_.pivot_tolerance ||
          (ratio <= best_ratio + options_.pivot_tolerance && best >= 0 &&
           basis_[i] < basis_[best])) {
        best = i;
        best_ratio = std::min(best_ratio, ratio);
      }
    }
    return best;
  }

  Matrix t_;
  std::vector<int> basis_;
  std::vector<bool> enterable_;
  SimplexOptions<Scalar> options_;
  int iterations_ = 0;
};

}  // namespace internal

template <typename Scalar>
LpSolution<Scalar> SolveLinearProgram(
    const LinearProgram<Scalar>& lp,
    const SimplexOptions<Scalar>& options = SimplexOptions<Scalar>()) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  const Eigen::Index n = lp.num_vars();
  const Eigen::Index m_le = lp.le_matrix.rows();
  const Eigen::Index m_eq = lp.eq_matrix.rows();
  const Eigen::Index m = m_le + m_eq;

  // Standard form: every row gets rhs >= 0. A <= row with negative rhs is
  // negated into a >= row carrying a surplus column plus an artificial.
  Matrix a(m, n);
  Vector b(m);
  if (m_le > 0) {
    a.topRows(m_le) = lp.le_matrix;
    b.head(m_le) = lp.le_rhs;
  }
  if (m_eq > 0) {
    a.bottomRows(m_eq) = lp.eq_matrix;
    b.tail(m_eq) = lp.eq_rhs;
  }
  std::vector<bool> flipped(m, false);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (b(i) < 0) {
      a.row(i) *= Scalar(-1);
      b(i) = -b(i);
      flipped[i] = true;
    }
  }
  std::vector<bool> needs_artificial(m, false);
  Eigen::Index num_art = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    needs_artificial[i] = i >= m_le || flipped[i];
    if (needs_artificial[i]) ++num_art;
  }
  const Eigen::Index slack0 = n;
  const Eigen::Index art0 = n + m_le;
  const Eigen::Index total = art0 + num_art;

  // Rows [0, m): constraints. Row m: phase-two reduced costs. Row m+1:
  // phase-one reduced costs. Last column: right-hand side.
  Matrix t = Matrix::Zero(m + 2, total + 1);
  t.block(0, 0, m, n) = a;
  t.block(0, total, m, 1) = b;
  std::vector<int> basis(m, -1);
  Eigen::Index next_art = art0;
  for (Eigen::Index i = 0; i < m_le; ++i) {
    t(i, slack0 + i) = flipped[i] ? Scalar(-1) : Scalar(1);
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (needs_artificial[i]) {
      t(i, next_art) = 1;
      basis[i] = static_cast<int>(next_art++);
    } else {
      basis[i] = static_cast<int>(slack0 + i);
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) t(m, j) = -lp.objective(j);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (needs_artificial[i]) t.row(m + 1) -= t.row(i);
  }
  for (Eigen::Index j = art0; j < total; ++j) t(m + 1, j) = 0;

  std::vector<bool> enterable(total, true);
  internal::Tableau<Scalar> tab(std::move(t), std::move(basis),
                                std::move(enterable), options);
  LpSolution<Scalar> result;

  if (num_art > 0) {
    const LpStatus phase1 = tab.Optimize(m + 1);
    if (phase1 == LpStatus::kIterationLimit) {
      result.status = phase1;
      result.iterations = tab.iterations();
      return result;
    }
    result.infeasibility = -tab.data()(m + 1, total);
    if (result.infeasibility > options.feasibility_tolerance) {
      result.status = LpStatus::kInfeasible;
      result.iterations = tab.iterations();
      return result;
    }
    // Drive zero-level artificials out of the basis where possible.
    for (Eigen::Index i = 0; i < m; ++i) {
      if (tab.basis()[i] < art0) continue;
      for (Eigen::Index j = 0; j < art0; ++j) {
        if (std::abs(tab.data()(i, j)) > options.pivot_tolerance * 100) {
          tab.Pivot(i, j);
          break;
        }
      }
    }
    for (Eigen::Index j = art0; j < total; ++j) tab.enterable()[j] = false;
  }

  const LpStatus phase2 = tab.Optimize(m);
  result.status = phase2;
  result.iterations = tab.iterations();
  if (phase2 != LpStatus::kOptimal) return result;

  Vector full = Vector::Zero(total);
  for (Eigen::Index i = 0; i < m; ++i) {
    full(tab.basis()[i]) = tab.data()(i, total);
  }

  const bool artificial_free = std::all_of(
      tab.basis().begin(), tab.basis().end(),
      [art0](int col) { return col < art0; });
  if (artificial_free && m > 0) {
    Matrix std_form = Matrix::Zero(m, art0);
    std_form.leftCols(n) = a;
    for (Eigen::Index i = 0; i < m_le; ++i) {
      std_form(i, slack0 + i) = flipped[i] ? Scalar(-1) : Scalar(1);
    }
    Matrix basis_matrix(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      basis_matrix.col(i) = std_form.col(tab.basis()[i]);
    }
    Eigen::FullPivLU<Matrix> lu(basis_matrix);
    if (lu.isInvertible()) {
      const Vector refined = lu.solve(b);
      if ((refined.array() >= -options.feasibility_tolerance).all()) {
        full.setZero();
        for (Eigen::Index i = 0; i < m; ++i) {
          full(tab.basis()[i]) = std::max(refined(i), Scalar(0));
        }
      }
    }
  }

  result.x = full.head(n).cwiseMax(Scalar(0));
  result.objective = lp.objective.dot(result.x);
  return result;
}

}  // namespace qcmatch

#endif  // QCMATCH_SIMPLEX_H_
