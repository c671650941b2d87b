#include "gflow/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gflow {

std::vector<double> uniform_times(int steps) {
  if (steps < 1) throw std::invalid_argument("uniform_times: need at least one step");
  std::vector<double> t(steps + 1);
  for (int k = 0; k <= steps; ++k) t[k] = static_cast<double>(k) / steps;
  return t;
}

bool is_increasing_unit_grid(const std::vector<double>& times) {
  if (times.size() < 2 || times.front() != 0.0 || times.back() != 1.0) return false;
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1])) return false;
  return true;
}

int nearest_frame(const std::vector<double>& times, double t) {
  int best = 0;
  for (int k = 1; k < static_cast<int>(times.size()); ++k)
    if (std::abs(times[k] - t) < std::abs(times[best] - t) - 1e-14) best = k;
  return best;
}

DensityPath DensityPath::uniform(const TorusGrid& grid, std::vector<double> times) {
  DensityPath p{grid, std::move(times), {}};
  p.frames.assign(p.times.size(), uniform_density(grid));
  return p;
}

void DensityPath::validate(double tol) const {
  if (frames.size() != times.size()) throw std::invalid_argument("DensityPath: frame/time count mismatch");
  for (const auto& f : frames) {
    if (f.size() != grid.cell_count()) throw DimensionMismatch("DensityPath: frame size mismatch");
    if (f.minCoeff() < 0.0) throw std::invalid_argument("DensityPath: negative density");
    if (std::abs(total_mass(f, grid) - 1.0) > tol) throw std::invalid_argument("DensityPath: frame is not unit mass");
  }
}

bool DensityPath::has_uniform_endpoints(double tol) const {
  if (frames.empty()) return false;
  return (frames.front().array() - 1.0).abs().maxCoeff() <= tol &&
         (frames.back().array() - 1.0).abs().maxCoeff() <= tol;
}

double DensityPath::min_value() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& f : frames) m = std::min(m, f.minCoeff());
  return m;
}

FieldPath FieldPath::zeros(const TorusGrid& grid, std::vector<double> times, int components) {
  FieldPath p{grid, std::move(times), {}, components, std::nullopt};
  p.frames.assign(p.times.size(), Field::Zero(grid.cell_count() * components));
  return p;
}

FieldPath FieldPath::from_density(const DensityPath& rho) {
  return FieldPath{rho.grid, rho.times, rho.frames, 1, std::nullopt};
}

double FieldPath::sup_abs() const {
  double m = 0.0;
  for (const auto& f : frames) m = std::max(m, f.cwiseAbs().maxCoeff());
  return m;
}

bool FieldPath::vanishes_near_ends(double tau_value, double tol) const {
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    if (t <= tau_value + 1e-14 || t >= 1.0 - tau_value - 1e-14)
      if (frames[k].cwiseAbs().maxCoeff() > tol) return false;
  }
  return true;
}

double discrete_lipschitz(const Field& frame, const TorusGrid& grid, int components) {
  const double h = grid.spacing();
  double lip = 0.0;
  for (int z = 0; z < grid.cell_count(); ++z) {
    for (int a = 0; a < grid.dim(); ++a) {
      std::array<int, 2> e{0, 0};
      e[a] = 1;
      const int w = grid.shifted(z, e);
      double s = 0.0;
      for (int c = 0; c < components; ++c) {
        const double d = frame[w * components + c] - frame[z * components + c];
        s += d * d;
      }
      lip = std::max(lip, std::sqrt(s) / h);
    }
  }
  return lip;
}

namespace {

double frame_sup_norm(const Field& v, int components) {
  double m = 0.0;
  const Eigen::Index cells = v.size() / components;
  for (Eigen::Index z = 0; z < cells; ++z)
    m = std::max(m, v.segment(z * components, components).norm());
  return m;
}

}  // namespace

ENormParts e_norm_parts(const FieldPath& f) {
  if (f.frames.size() < 2) throw std::invalid_argument("e_norm: a path needs at least two frames");
  if (f.frames.size() != f.times.size()) throw std::invalid_argument("e_norm: frame/time count mismatch");
  ENormParts parts;
  for (const auto& fr : f.frames)
    parts.lipschitz = std::max(parts.lipschitz, discrete_lipschitz(fr, f.grid, f.components));
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < f.frames.size(); ++k) {
    const double dt = f.times[k + 1] - f.times[k];
    const double q = frame_sup_norm(f.frames[k + 1] - f.frames[k], f.components) / dt;
    acc += dt * q * q;
  }
  parts.time_derivative = std::sqrt(acc);
  return parts;
}

double e_norm(const FieldPath& f) { return e_norm_parts(f).total(); }

double e_norm(const DensityPath& rho) { return e_norm(FieldPath::from_density(rho)); }

namespace {

void check_eps(double eps) {
  if (!(eps > 0.0 && eps <= 0.25)) throw std::invalid_argument("regularization: eps must lie in (0, 1/4]");
}

bool in_end_window(double t, double eps) { return t <= eps + 1e-14 || t >= 1.0 - eps - 1e-14; }

double rescaled_time(double t, double eps) { return (t - eps) / (1.0 - 2.0 * eps); }

}  // namespace

DensityPath regularize_density(const DensityPath& rho, double eps,
                               const std::optional<std::vector<double>>& out_times) {
  check_eps(eps);
  const Mollifier kernel(rho.grid, eps);
  DensityPath out{rho.grid, out_times.value_or(rho.times), {}};
  out.frames.reserve(out.times.size());
  for (double t : out.times) {
    if (in_end_window(t, eps)) {
      out.frames.push_back(uniform_density(rho.grid));
    } else {
      const int k = nearest_frame(rho.times, rescaled_time(t, eps));
      out.frames.push_back(mollify_density(rho.frames[k], kernel));
    }
  }
  return out;
}

FieldPath regularize_field(const FieldPath& xi, double eps, const std::optional<std::vector<double>>& out_times) {
  check_eps(eps);
  const Mollifier kernel(xi.grid, eps);
  FieldPath out = FieldPath::zeros(xi.grid, out_times.value_or(xi.times), xi.components);
  const int N = xi.grid.cell_count();
  for (std::size_t m = 0; m < out.times.size(); ++m) {
    const double t = out.times[m];
    if (in_end_window(t, eps)) continue;
    const Field& src = xi.frames[nearest_frame(xi.times, rescaled_time(t, eps))];
    for (int c = 0; c < xi.components; ++c) {
      Field comp(N);
      for (int z = 0; z < N; ++z) comp[z] = src[z * xi.components + c];
      const Field sm = mollify(comp, kernel);
      for (int z = 0; z < N; ++z) out.frames[m][z * xi.components + c] = sm[z];
    }
  }
  if (xi.tau && *xi.tau >= eps) out.tau = xi.tau;
  return out;
}

double l2t_linf_distance(const FieldPath& a, const FieldPath& b) {
  if (a.grid != b.grid || a.times != b.times || a.components != b.components)
    throw DimensionMismatch("l2t_linf_distance: paths live on different grids");
  // trapezoid weights in time
  double acc = 0.0;
  const std::size_t K = a.times.size();
  for (std::size_t k = 0; k < K; ++k) {
    double w = 0.0;
    if (k + 1 < K) w += 0.5 * (a.times[k + 1] - a.times[k]);
    if (k > 0) w += 0.5 * (a.times[k] - a.times[k - 1]);
    const double s = frame_sup_norm(a.frames[k] - b.frames[k], a.components);
    acc += w * s * s;
  }
  return std::sqrt(acc);
}

ProductBound lipschitz_product_bound(const FieldPath& a, const FieldPath& b) {
  if (a.grid != b.grid || a.times != b.times) throw DimensionMismatch("lipschitz_product_bound: grid mismatch");
  if (a.components != 1 || b.components != 1)
    throw std::invalid_argument("lipschitz_product_bound: scalar paths only");
  FieldPath ab = a;
  for (std::size_t k = 0; k < ab.frames.size(); ++k) ab.frames[k] = a.frames[k].cwiseProduct(b.frames[k]);
  ProductBound r;
  r.n_product = e_norm(ab);
  r.bound = a.sup_abs() * e_norm(b) + b.sup_abs() * e_norm(a);
  r.holds = r.n_product <= r.bound * (1.0 + 1e-12) + 1e-14;
  return r;
}

}  // namespace gflow
