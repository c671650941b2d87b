#pragma once

// Small regression and rank-correlation helpers for the experiment reports.

#include <array>
#include <vector>

namespace gflow::stats {

struct KendallResult {
  double tau = 0.0;  ///< tau-a: (concordant - discordant) / (n (n - 1) / 2)
  double z = 0.0;    ///< normal approximation 3 tau sqrt(n (n - 1)) / sqrt(2 (2n + 5))
  double p_positive = 1.0;  ///< one-sided p-value for a positive association
  int n = 0;
};

KendallResult kendall_tau(const std::vector<double>& x, const std::vector<double>& y);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int n = 0;
};

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);
/// Line through (log x, log y); pairs with a nonpositive coordinate are skipped.
LinearFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

/// Least squares y ~ c0 f0 + c1 f1 without sign constraints.
std::array<double, 2> least_squares2(const std::vector<double>& f0, const std::vector<double>& f1,
                                     const std::vector<double>& y);
/// Same with c0, c1 >= 0 (active-set on the two coefficients).
std::array<double, 2> nnls2(const std::vector<double>& f0, const std::vector<double>& f1, const std::vector<double>& y);

}  // namespace gflow::stats
