#pragma once

// Dense revised simplex for equality-form linear programs
//
//     minimize c^T x   subject to  A x = b,  x >= 0,
//
// with a sparse column store for A. Two phases (artificial basis), explicit
// basis inverse with periodic LU refactorization. Pricing is Dantzig's rule
// and falls back to Bland's rule after a run of degenerate pivots; ratio-test
// ties go to the smallest variable index, so results are reproducible.
//
// Returns primal values and the row duals y (reduced costs c - A^T y >= 0 at
// optimality), which is what the pressure extraction needs.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace gflow::lp {

struct Entry {
  int row;
  double value;
};

class LinearProgram {
 public:
  explicit LinearProgram(int rows);

  int rows() const { return rows_; }
  int columns() const { return static_cast<int>(cost_.size()); }

  /// Appends a column; returns its index.
  int add_column(double cost, const std::vector<Entry>& entries);
  void set_rhs(int row, double value) { rhs_.at(row) = value; }
  double rhs(int row) const { return rhs_[row]; }
  const std::vector<double>& rhs() const { return rhs_; }
  double cost(int col) const { return cost_[col]; }

  // column j occupies [start_[j], start_[j+1]) in row_/val_
  std::size_t col_begin(int j) const { return start_[j]; }
  std::size_t col_end(int j) const { return start_[j + 1]; }
  int entry_row(std::size_t e) const { return row_[e]; }
  double entry_value(std::size_t e) const { return val_[e]; }

 private:
  int rows_;
  std::vector<double> cost_;
  std::vector<double> rhs_;
  std::vector<std::size_t> start_{0};
  std::vector<int> row_;
  std::vector<double> val_;
};

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

std::string to_string(Status s);

struct Options {
  double optimality_tol = 1e-11;
  double pivot_tol = 1e-9;
  double feasibility_tol = 1e-9;
  int refactor_period = 64;
  int degenerate_run_before_bland = 40;
  std::int64_t max_iterations = 5'000'000;
};

struct Solution {
  Status status = Status::IterationLimit;
  double objective = 0.0;
  double dual_objective = 0.0;
  std::vector<double> x;
  Eigen::VectorXd duals;
  std::int64_t iterations = 0;
  /// max |A x - b| after the final refactorization
  double primal_residual = 0.0;
  /// most negative reduced cost over all columns (>= -tol at optimality)
  double min_reduced_cost = 0.0;
};

Solution solve(const LinearProgram& program, const Options& options = {});

}  // namespace gflow::lp
