#include "gflow/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace gflow::stats {

KendallResult kendall_tau(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("kendall_tau: size mismatch");
  const int n = static_cast<int>(x.size());
  if (n < 2) throw std::invalid_argument("kendall_tau: need at least two points");
  long s = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double a = (x[j] - x[i]) * (y[j] - y[i]);
      s += a > 0.0 ? 1 : (a < 0.0 ? -1 : 0);
    }
  KendallResult r;
  r.n = n;
  r.tau = 2.0 * s / (static_cast<double>(n) * (n - 1));
  r.z = 3.0 * r.tau * std::sqrt(static_cast<double>(n) * (n - 1)) / std::sqrt(2.0 * (2.0 * n + 5.0));
  r.p_positive = 0.5 * std::erfc(r.z / std::sqrt(2.0));
  return r;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("linear_fit: size mismatch");
  const int n = static_cast<int>(x.size());
  if (n < 2) throw std::invalid_argument("linear_fit: need at least two points");
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("linear_fit: x values are all equal");
  LinearFit f;
  f.n = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

LinearFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i)
    if (x[i] > 0.0 && y[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  return linear_fit(lx, ly);
}

std::array<double, 2> least_squares2(const std::vector<double>& f0, const std::vector<double>& f1,
                                     const std::vector<double>& y) {
  if (f0.size() != y.size() || f1.size() != y.size()) throw std::invalid_argument("least_squares2: size mismatch");
  double a = 0.0, b = 0.0, c = 0.0, u = 0.0, v = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    a += f0[i] * f0[i];
    b += f0[i] * f1[i];
    c += f1[i] * f1[i];
    u += f0[i] * y[i];
    v += f1[i] * y[i];
  }
  const double det = a * c - b * b;
  if (!(std::abs(det) > 1e-300)) throw std::invalid_argument("least_squares2: singular design");
  return {(c * u - b * v) / det, (a * v - b * u) / det};
}

std::array<double, 2> nnls2(const std::vector<double>& f0, const std::vector<double>& f1, const std::vector<double>& y) {
  const auto full = least_squares2(f0, f1, y);
  if (full[0] >= 0.0 && full[1] >= 0.0) return full;
  auto single = [&](const std::vector<double>& f) {
    double ff = 0.0, fy = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      ff += f[i] * f[i];
      fy += f[i] * y[i];
    }
    return ff > 0.0 ? std::max(0.0, fy / ff) : 0.0;
  };
  auto sse = [&](double c0, double c1) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double e = y[i] - c0 * f0[i] - c1 * f1[i];
      s += e * e;
    }
    return s;
  };
  const double c0 = single(f0), c1 = single(f1);
  return sse(c0, 0.0) <= sse(0.0, c1) ? std::array<double, 2>{c0, 0.0} : std::array<double, 2>{0.0, c1};
}

}  // namespace gflow::stats
