#include "gflow/dacmoser.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

#include "gflow/transport.hpp"

namespace gflow {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

using CVec = Eigen::VectorXcd;

int wavenumber(int i, int n) { return i < (n + 1) / 2 ? i : i - n; }

// forward/backward transform of a grid field along all axes
CVec transform(const CVec& in, const TorusGrid& g, bool inverse) {
  Eigen::FFT<double> fft;
  const int n = g.n();
  CVec out = in;
  auto line = [&](CVec& buf) {
    CVec res(n);
    if (inverse) fft.inv(res, buf);
    else fft.fwd(res, buf);
    buf = res;
  };
  if (g.dim() == 1) {
    line(out);
    return out;
  }
  CVec buf(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) buf[j] = out[i * n + j];
    line(buf);
    for (int j = 0; j < n; ++j) out[i * n + j] = buf[j];
  }
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) buf[i] = out[i * n + j];
    line(buf);
    for (int i = 0; i < n; ++i) out[i * n + j] = buf[i];
  }
  return out;
}

double symbol(int cell, const TorusGrid& g) {
  const auto c = g.coords(cell);
  double k2 = 0.0;
  for (int a = 0; a < g.dim(); ++a) {
    const double k = wavenumber(c[a], g.n());
    k2 += k * k;
  }
  return -kTwoPi * kTwoPi * k2;
}

Field apply_symbol(const Field& v, const TorusGrid& g, bool invert) {
  const int N = g.cell_count();
  CVec hat = transform(v.cast<std::complex<double>>(), g, false);
  for (int z = 0; z < N; ++z) {
    const double s = symbol(z, g);
    if (s == 0.0) hat[z] = 0.0;
    else hat[z] = invert ? hat[z] / s : hat[z] * s;
  }
  return transform(hat, g, true).real();
}

void check_pair(const DensityPath& f, const DensityPath& g) {
  if (f.grid != g.grid || f.times != g.times || f.frames.size() != g.frames.size())
    throw DimensionMismatch("dacmoser: density paths live on different grids");
  const double h = f.grid.cell_volume();
  for (std::size_t k = 0; k < f.frames.size(); ++k) {
    if (f.frames[k].minCoeff() < 0.5 || g.frames[k].minCoeff() < 0.5)
      throw std::invalid_argument("dacmoser: densities must be at least 1/2");
    if (std::abs(f.frames[k].sum() - g.frames[k].sum()) * h > 1e-9)
      throw std::invalid_argument("dacmoser: frame masses differ");
  }
}

struct FrameFlow {
  Field disp;
  bool ok = true;
};

// RK4 in pseudo-time for one frame; disp is Psi(x) - x for each cell center
FrameFlow integrate_frame(const Field& grad, const Field& f, const Field& g, const TorusGrid& grid, int steps) {
  const int N = grid.cell_count();
  const int dim = grid.dim();
  FrameFlow r{Field::Zero(N * dim)};
  // v(s) at the surrounding cell centers, interpolated
  auto velocity = [&](double s, const Point& p, double* v) {
    const Deposit d = cic_deposit(grid, p);
    for (int a = 0; a < dim; ++a) v[a] = 0.0;
    for (int i = 0; i < d.count; ++i) {
      const int c = d.cells[i];
      const double w = d.weights[i] / ((1.0 - s) * f[c] + s * g[c]);
      for (int a = 0; a < dim; ++a) v[a] += w * grad[c * dim + a];
    }
  };
  const double ds = 1.0 / steps;
  for (int z = 0; z < N; ++z) {
    Point x = grid.center(z);
    const Point x0 = x;
    for (int st = 0; st < steps; ++st) {
      const double s = st * ds;
      double k1[2], k2[2], k3[2], k4[2];
      auto moved = [&](const double* k, double c) {
        Point q = x;
        for (int a = 0; a < dim; ++a) q.x[a] += c * k[a];
        return q;
      };
      velocity(s, x, k1);
      velocity(s + 0.5 * ds, moved(k1, 0.5 * ds), k2);
      velocity(s + 0.5 * ds, moved(k2, 0.5 * ds), k3);
      velocity(s + ds, moved(k3, ds), k4);
      for (int a = 0; a < dim; ++a) {
        const double step = ds / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
        if (std::abs(step) > 0.25) r.ok = false;
        x.x[a] += step;
      }
    }
    for (int a = 0; a < dim; ++a) r.disp[z * dim + a] = x.x[a] - x0.x[a];
  }
  return r;
}

double map_norm(const StraighteningMap& m) {
  if (m.frames.size() < 2) return m.frames.empty() ? 0.0 : discrete_lipschitz(m.frames[0], m.grid, m.grid.dim());
  FieldPath p{m.grid, m.times, m.frames, m.grid.dim(), std::nullopt};
  return e_norm(p);
}

double min_jacobian(const Field& disp, const TorusGrid& g) {
  const int dim = g.dim();
  const double h = g.spacing();
  double worst = std::numeric_limits<double>::infinity();
  for (int z = 0; z < g.cell_count(); ++z) {
    double J[2][2] = {{1.0, 0.0}, {0.0, 1.0}};
    for (int b = 0; b < dim; ++b) {
      std::array<int, 2> e{0, 0};
      e[b] = 1;
      const int up = g.shifted(z, e);
      e[b] = -1;
      const int dn = g.shifted(z, e);
      for (int a = 0; a < dim; ++a) J[a][b] += (disp[up * dim + a] - disp[dn * dim + a]) / (2.0 * h);
    }
    worst = std::min(worst, dim == 1 ? J[0][0] : J[0][0] * J[1][1] - J[0][1] * J[1][0]);
  }
  return worst;
}

}  // namespace

Field poisson_solve(const Field& h, const TorusGrid& grid, double tol) {
  if (h.size() != grid.cell_count()) throw DimensionMismatch("poisson_solve: field size");
  const double mean = h.mean();
  if (std::abs(mean) > tol * std::max(1.0, h.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("poisson_solve: right-hand side must have zero mean");
  Field theta = apply_symbol(h.array() - mean, grid, true);
  theta.array() -= theta.mean();
  return theta;
}

Field spectral_laplacian(const Field& theta, const TorusGrid& grid) {
  if (theta.size() != grid.cell_count()) throw DimensionMismatch("spectral_laplacian: field size");
  return apply_symbol(theta, grid, false);
}

Field centered_gradient(const Field& theta, const TorusGrid& grid) {
  const int dim = grid.dim();
  const double h = grid.spacing();
  Field out(grid.cell_count() * dim);
  for (int z = 0; z < grid.cell_count(); ++z)
    for (int a = 0; a < dim; ++a) {
      std::array<int, 2> e{0, 0};
      e[a] = 1;
      const double up = theta[grid.shifted(z, e)];
      e[a] = -1;
      out[z * dim + a] = (up - theta[grid.shifted(z, e)]) / (2.0 * h);
    }
  return out;
}

FieldPath build_velocity(const DensityPath& f, const DensityPath& g, double s) {
  check_pair(f, g);
  if (s < 0.0 || s > 1.0) throw std::invalid_argument("build_velocity: s must lie in [0,1]");
  const int dim = f.grid.dim();
  FieldPath v = FieldPath::zeros(f.grid, f.times, dim);
  for (std::size_t k = 0; k < f.frames.size(); ++k) {
    if (f.frames[k] == g.frames[k]) continue;
    const Field grad = centered_gradient(poisson_solve(f.frames[k] - g.frames[k], f.grid, 1e-9), f.grid);
    for (int z = 0; z < f.grid.cell_count(); ++z) {
      const double rho = (1.0 - s) * f.frames[k][z] + s * g.frames[k][z];
      for (int a = 0; a < dim; ++a) v.frames[k][z * dim + a] = grad[z * dim + a] / rho;
    }
  }
  return v;
}

StraighteningMap StraighteningMap::identity(const TorusGrid& grid, std::vector<double> times) {
  StraighteningMap m{grid, std::move(times), {}, 0.0, 0, 1.0};
  m.frames.assign(m.times.size(), Field::Zero(grid.cell_count() * grid.dim()));
  return m;
}

Point StraighteningMap::image(int frame, int cell) const {
  Point p = grid.center(cell);
  for (int a = 0; a < grid.dim(); ++a) p.x[a] = wrap_unit(p.x[a] + frames[frame][cell * grid.dim() + a]);
  return p;
}

StraighteningMap flow_map(const DensityPath& f, const DensityPath& g, int ode_steps) {
  FlowMapOptions o;
  o.ode_steps = ode_steps;
  return flow_map(f, g, o);
}

StraighteningMap flow_map(const DensityPath& f, const DensityPath& g, const FlowMapOptions& opt) {
  check_pair(f, g);
  if (opt.ode_steps < 8) throw std::invalid_argument("flow_map: ode_steps must be at least 8");
  const TorusGrid& grid = f.grid;
  std::vector<Field> grads(f.frames.size());
  std::vector<bool> same(f.frames.size());
  for (std::size_t k = 0; k < f.frames.size(); ++k) {
    same[k] = f.frames[k] == g.frames[k];
    if (!same[k]) grads[k] = centered_gradient(poisson_solve(f.frames[k] - g.frames[k], grid, 1e-9), grid);
  }
  auto run = [&](int steps) {
    StraighteningMap m = StraighteningMap::identity(grid, f.times);
    m.ode_steps = steps;
    for (std::size_t k = 0; k < f.frames.size(); ++k) {
      if (same[k]) continue;
      FrameFlow fr = integrate_frame(grads[k], f.frames[k], g.frames[k], grid, steps);
      if (!fr.ok) throw StepSizeFailure("flow_map: displacement per substep exceeds 1/4; increase ode_steps");
      m.frames[k] = fr.disp;
    }
    m.norm_excess = map_norm(m);
    return m;
  };
  StraighteningMap cur = run(opt.ode_steps);
  for (int d = 0; d < opt.max_doublings; ++d) {
    StraighteningMap next = run(cur.ode_steps * 2);
    const bool done = std::abs(next.norm_excess - cur.norm_excess) < opt.refine_tol;
    cur = std::move(next);
    if (done) break;
  }
  for (std::size_t k = 0; k < cur.frames.size(); ++k) {
    const double jac = min_jacobian(cur.frames[k], grid);
    cur.min_jacobian = std::min(cur.min_jacobian, jac);
    if (cur.frames[k].size() > 0 && cur.frames[k].cwiseAbs().maxCoeff() >= 0.5)
      throw std::runtime_error("flow_map: displacement reaches half a period");
  }
  if (!(cur.min_jacobian > 0.0)) throw std::runtime_error("flow_map: map is not orientation preserving");
  return cur;
}

Deposit cic_deposit(const TorusGrid& grid, const Point& p) {
  if (p.dim != grid.dim()) throw DimensionMismatch("cic_deposit: dimension mismatch");
  const int n = grid.n();
  int base[2] = {0, 0};
  double frac[2] = {0.0, 0.0};
  for (int a = 0; a < grid.dim(); ++a) {
    const double u = wrap_unit(p.x[a]) * n;
    base[a] = static_cast<int>(std::floor(u));
    frac[a] = u - base[a];
  }
  Deposit d{};
  if (grid.dim() == 1) {
    d.count = 2;
    d.cells = {grid.index({base[0], 0}), grid.index({base[0] + 1, 0}), 0, 0};
    d.weights = {1.0 - frac[0], frac[0], 0.0, 0.0};
    return d;
  }
  d.count = 4;
  int i = 0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      d.cells[i] = grid.index({base[0] + a, base[1] + b});
      d.weights[i] = (a ? frac[0] : 1.0 - frac[0]) * (b ? frac[1] : 1.0 - frac[1]);
      ++i;
    }
  return d;
}

double grid_w1(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const TorusGrid& grid) {
  const int N = grid.cell_count();
  if (a.size() != N || b.size() != N) throw DimensionMismatch("grid_w1: size mismatch");
  if (grid.dim() == 1) {
    // on the circle W1 = h * sum |F_i - median(F)| with F the cumulative difference
    std::vector<double> F(N);
    double acc = 0.0;
    for (int i = 0; i < N; ++i) F[i] = acc += a[i] - b[i];
    std::vector<double> sorted = F;
    std::nth_element(sorted.begin(), sorted.begin() + N / 2, sorted.end());
    const double med = sorted[N / 2];
    double w = 0.0;
    for (double v : F) w += std::abs(v - med);
    return w * grid.spacing();
  }
  if (N > 1024) return std::numeric_limits<double>::quiet_NaN();
  const Eigen::VectorXd diff = a - b;
  std::vector<int> src, dst;
  for (int i = 0; i < N; ++i) {
    if (diff[i] > 0.0) src.push_back(i);
    if (diff[i] < 0.0) dst.push_back(i);
  }
  if (src.empty() || dst.empty()) return 0.0;
  Eigen::VectorXd sa(src.size()), sb(dst.size());
  for (std::size_t k = 0; k < src.size(); ++k) sa[k] = diff[src[k]];
  for (std::size_t k = 0; k < dst.size(); ++k) sb[k] = -diff[dst[k]];
  if (std::abs(sa.sum() - sb.sum()) > 1e-9 * std::max(1.0, a.sum())) throw std::invalid_argument("grid_w1: masses differ");
  sb *= sa.sum() / sb.sum();
  return solve_transport(sa, sb, [&](int s, int t) { return std::sqrt(cell_dist2(grid, src[s], dst[t])); }).cost;
}

PushforwardReport verify_pushforward(const StraighteningMap& map, const DensityPath& f, const DensityPath& g) {
  if (map.grid != f.grid || f.grid != g.grid || map.frames.size() != f.frames.size() ||
      f.frames.size() != g.frames.size())
    throw DimensionMismatch("verify_pushforward: grids differ");
  const TorusGrid& grid = f.grid;
  const double h = grid.cell_volume();
  PushforwardReport r;
  for (std::size_t k = 0; k < f.frames.size(); ++k) {
    Eigen::VectorXd dep = Eigen::VectorXd::Zero(grid.cell_count());
    for (int z = 0; z < grid.cell_count(); ++z) {
      const Deposit d = cic_deposit(grid, map.image(static_cast<int>(k), z));
      for (int i = 0; i < d.count; ++i) dep[d.cells[i]] += d.weights[i] * f.frames[k][z] * h;
    }
    const Eigen::VectorXd want = g.frames[k] * h;
    r.mass_error = std::max(r.mass_error, std::abs(dep.sum() - f.frames[k].sum() * h));
    r.tv.push_back((dep - want).cwiseAbs().sum());
    r.w1.push_back(grid_w1(dep, want, grid));
    r.max_tv = std::max(r.max_tv, r.tv.back());
    r.max_w1 = std::max(r.max_w1, r.w1.back());
  }
  return r;
}

nlohmann::json to_json(const StraighteningMap& map) {
  nlohmann::json j;
  j["dim"] = map.grid.dim();
  j["n"] = map.grid.n();
  j["times"] = map.times;
  j["norm_excess"] = map.norm_excess;
  j["ode_steps"] = map.ode_steps;
  j["min_jacobian"] = map.min_jacobian;
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& f : map.frames) frames.push_back(std::vector<double>(f.data(), f.data() + f.size()));
  j["displacements"] = frames;
  return j;
}

}  // namespace gflow
