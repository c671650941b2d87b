#include "gflow/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gflow::lp {

LinearProgram::LinearProgram(int rows) : rows_(rows), rhs_(rows, 0.0) {
  if (rows < 1) throw std::invalid_argument("LinearProgram: need at least one row");
}

int LinearProgram::add_column(double cost, const std::vector<Entry>& entries) {
  for (const auto& e : entries) {
    if (e.row < 0 || e.row >= rows_) throw std::out_of_range("LinearProgram: row index out of range");
    row_.push_back(e.row);
    val_.push_back(e.value);
  }
  cost_.push_back(cost);
  start_.push_back(row_.size());
  return static_cast<int>(cost_.size()) - 1;
}

std::string to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::IterationLimit: return "iteration-limit";
  }
  return "unknown";
}

namespace {

// Working state of the revised simplex. Variables 0..n-1 are the structural
// columns, n..n+m-1 the artificials (artificial n+i is +e_i after the row
// signs have been normalized so that b >= 0).
class Simplex {
 public:
  Simplex(const LinearProgram& lp, const Options& opt)
      : lp_(lp), opt_(opt), m_(lp.rows()), n_(lp.columns()), sign_(m_, 1.0), b_(m_) {
    for (int i = 0; i < m_; ++i) {
      if (lp.rhs(i) < 0.0) sign_[i] = -1.0;
      b_[i] = sign_[i] * lp.rhs(i);
    }
    basis_.resize(m_);
    position_.assign(n_ + m_, -1);
    for (int i = 0; i < m_; ++i) {
      basis_[i] = n_ + i;
      position_[n_ + i] = i;
    }
    binv_ = Eigen::MatrixXd::Identity(m_, m_);
    xb_ = b_;
  }

  Solution run() {
    Solution sol;
    phase_ = 1;
    Status st = iterate();
    if (st != Status::Optimal) return finish(st);
    double infeas = 0.0;
    for (int i = 0; i < m_; ++i)
      if (basis_[i] >= n_) infeas += xb_[i];
    const double scale = std::max(1.0, b_.cwiseAbs().maxCoeff());
    if (infeas > opt_.feasibility_tol * scale) return finish(Status::Infeasible);
    drive_out_artificials();
    phase_ = 2;
    st = iterate();
    return finish(st);
  }

 private:
  double cost(int var) const {
    if (var >= n_) return phase_ == 1 ? 1.0 : 0.0;
    return phase_ == 1 ? 0.0 : lp_.cost(var);
  }

  double column_dot(int var, const Eigen::VectorXd& y) const {
    if (var >= n_) return y[var - n_];
    double s = 0.0;
    for (std::size_t e = lp_.col_begin(var); e < lp_.col_end(var); ++e)
      s += y[lp_.entry_row(e)] * sign_[lp_.entry_row(e)] * lp_.entry_value(e);
    return s;
  }

  Eigen::VectorXd ftran(int var) const {
    if (var >= n_) return binv_.col(var - n_);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(m_);
    for (std::size_t e = lp_.col_begin(var); e < lp_.col_end(var); ++e) {
      const int r = lp_.entry_row(e);
      w.noalias() += (sign_[r] * lp_.entry_value(e)) * binv_.col(r);
    }
    return w;
  }

  Eigen::VectorXd duals() const {
    Eigen::VectorXd cb(m_);
    for (int i = 0; i < m_; ++i) cb[i] = cost(basis_[i]);
    return binv_.transpose() * cb;
  }

  void refactor() {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m_, m_);
    for (int i = 0; i < m_; ++i) {
      const int var = basis_[i];
      if (var >= n_) {
        B(var - n_, i) = 1.0;
      } else {
        for (std::size_t e = lp_.col_begin(var); e < lp_.col_end(var); ++e)
          B(lp_.entry_row(e), i) += sign_[lp_.entry_row(e)] * lp_.entry_value(e);
      }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    binv_ = lu.inverse();
    xb_ = binv_ * b_;
    for (int i = 0; i < m_; ++i)
      if (xb_[i] < 0.0 && xb_[i] > -1e-11) xb_[i] = 0.0;
  }

  void pivot(int row, int var, const Eigen::VectorXd& w) {
    const double piv = w[row];
    binv_.row(row) /= piv;
    for (int i = 0; i < m_; ++i) {
      if (i == row || w[i] == 0.0) continue;
      binv_.row(i) -= w[i] * binv_.row(row);
    }
    position_[basis_[row]] = -1;
    basis_[row] = var;
    position_[var] = row;
  }

  bool eligible(int var) const {
    if (position_[var] >= 0) return false;
    if (var >= n_) return false;  // artificials never re-enter
    return true;
  }

  Status iterate() {
    int degenerate_run = 0;
    int since_refactor = 0;
    while (true) {
      if (iterations_ >= opt_.max_iterations) return Status::IterationLimit;
      if (since_refactor >= opt_.refactor_period) {
        refactor();
        since_refactor = 0;
      }
      const Eigen::VectorXd y = duals();
      const bool bland = degenerate_run >= opt_.degenerate_run_before_bland;

      int enter = -1;
      double best = -opt_.optimality_tol;
      for (int j = 0; j < n_; ++j) {
        if (!eligible(j)) continue;
        const double d = cost(j) - column_dot(j, y);
        if (d < best) {
          enter = j;
          best = d;
          if (bland) break;
        }
      }
      if (enter < 0) {
        if (since_refactor > 0) {
          // confirm optimality on a fresh factorization
          refactor();
          since_refactor = 0;
          const Eigen::VectorXd y2 = duals();
          bool still = true;
          for (int j = 0; j < n_ && still; ++j)
            if (eligible(j) && cost(j) - column_dot(j, y2) < -opt_.optimality_tol) still = false;
          if (!still) continue;
        }
        return Status::Optimal;
      }

      const Eigen::VectorXd w = ftran(enter);
      int leave = -1;
      double ratio = std::numeric_limits<double>::infinity();
      if (phase_ == 2) {
        // an artificial left basic on a redundant row must stay at zero
        for (int i = 0; i < m_; ++i) {
          if (basis_[i] >= n_ && std::abs(w[i]) > opt_.pivot_tol) {
            leave = i;
            ratio = 0.0;
            break;
          }
        }
      }
      const bool forced = leave >= 0;
      for (int i = 0; i < m_ && !forced; ++i) {
        if (phase_ == 2 && basis_[i] >= n_) continue;
        if (w[i] <= opt_.pivot_tol) continue;
        const double r = std::max(0.0, xb_[i]) / w[i];
        if (r < ratio - 1e-13 || (std::abs(r - ratio) <= 1e-13 && leave >= 0 && basis_[i] < basis_[leave])) {
          ratio = r;
          leave = i;
        }
      }
      if (leave < 0) return Status::Unbounded;

      xb_ -= ratio * w;
      xb_[leave] = ratio;
      pivot(leave, enter, w);
      ++iterations_;
      ++since_refactor;
      degenerate_run = ratio <= 1e-14 ? degenerate_run + 1 : 0;
    }
  }

  void drive_out_artificials() {
    refactor();
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] < n_) continue;
      const Eigen::VectorXd row = binv_.row(i).transpose();
      int best = -1;
      double best_abs = 1e-9;
      for (int j = 0; j < n_; ++j) {
        if (position_[j] >= 0) continue;
        const double v = std::abs(column_dot(j, row));
        if (v > best_abs) {
          best_abs = v;
          best = j;
        }
      }
      if (best < 0) continue;  // redundant row
      const Eigen::VectorXd w = ftran(best);
      const double theta = xb_[i] / w[i];
      xb_ -= theta * w;
      xb_[i] = theta;
      pivot(i, best, w);
      ++iterations_;
    }
    refactor();
  }

  Solution finish(Status st) {
    Solution sol;
    sol.status = st;
    sol.iterations = iterations_;
    if (st != Status::Optimal) return sol;
    refactor();
    sol.x.assign(n_, 0.0);
    for (int i = 0; i < m_; ++i)
      if (basis_[i] < n_) sol.x[basis_[i]] = std::max(0.0, xb_[i]);
    Eigen::VectorXd y = duals();
    for (int i = 0; i < m_; ++i) y[i] *= sign_[i];
    sol.duals = y;
    double obj = 0.0;
    Eigen::VectorXd ax = Eigen::VectorXd::Zero(m_);
    double min_rc = 0.0;
    for (int j = 0; j < n_; ++j) {
      obj += lp_.cost(j) * sol.x[j];
      double dot = 0.0;
      for (std::size_t e = lp_.col_begin(j); e < lp_.col_end(j); ++e) {
        ax[lp_.entry_row(e)] += lp_.entry_value(e) * sol.x[j];
        dot += y[lp_.entry_row(e)] * lp_.entry_value(e);
      }
      min_rc = std::min(min_rc, lp_.cost(j) - dot);
    }
    sol.objective = obj;
    double dual_obj = 0.0;
    double res = 0.0;
    for (int i = 0; i < m_; ++i) {
      dual_obj += y[i] * lp_.rhs(i);
      res = std::max(res, std::abs(ax[i] - lp_.rhs(i)));
    }
    sol.dual_objective = dual_obj;
    sol.primal_residual = res;
    sol.min_reduced_cost = min_rc;
    return sol;
  }

  const LinearProgram& lp_;
  Options opt_;
  int m_;
  int n_;
  std::vector<double> sign_;
  Eigen::VectorXd b_;
  std::vector<int> basis_;
  std::vector<int> position_;
  Eigen::MatrixXd binv_;
  Eigen::VectorXd xb_;
  int phase_ = 1;
  std::int64_t iterations_ = 0;
};

}  // namespace

Solution solve(const LinearProgram& program, const Options& options) {
  if (program.columns() == 0) throw std::invalid_argument("lp::solve: program has no columns");
  Simplex s(program, options);
  return s.run();
}

}  // namespace gflow::lp
