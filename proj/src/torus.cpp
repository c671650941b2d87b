#include "gflow/torus.hpp"

#include <cmath>
#include <string>

namespace gflow {

TorusGrid::TorusGrid(int dim, int cells_per_dim) : dim_(dim), n_(cells_per_dim) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("TorusGrid: dim must be 1 or 2");
  if (cells_per_dim < 2) throw std::invalid_argument("TorusGrid: need at least 2 cells per axis");
}

std::array<int, 2> TorusGrid::coords(int cell) const {
  if (dim_ == 1) return {cell, 0};
  return {cell / n_, cell % n_};
}

int TorusGrid::index(std::array<int, 2> c) const {
  auto wrap = [this](int i) { return ((i % n_) + n_) % n_; };
  if (dim_ == 1) return wrap(c[0]);
  return wrap(c[0]) * n_ + wrap(c[1]);
}

int TorusGrid::shifted(int cell, std::array<int, 2> offset) const {
  auto c = coords(cell);
  return index({c[0] + offset[0], c[1] + offset[1]});
}

Point TorusGrid::center(int cell) const {
  auto c = coords(cell);
  Point p;
  p.dim = dim_;
  p.x = {c[0] * spacing(), dim_ == 2 ? c[1] * spacing() : 0.0};
  return p;
}

int TorusGrid::nearest_cell(const Point& p) const {
  if (p.dim != dim_) throw DimensionMismatch("nearest_cell: point/grid dimension mismatch");
  std::array<int, 2> c{0, 0};
  for (int a = 0; a < dim_; ++a) c[a] = static_cast<int>(std::lround(wrap_unit(p.x[a]) * n_));
  return index(c);
}

double wrap_unit(double a) {
  double w = a - std::floor(a);
  return w >= 1.0 ? 0.0 : w;
}

namespace {

double min_image_1d(double d) {
  double w = d - std::floor(d + 0.5);
  // floor(d + 0.5) maps d = 0.5 to -0.5 already; guard against rounding to 0.5
  if (w >= 0.5) w -= 1.0;
  return w;
}

}  // namespace

Point min_image_disp(const Point& a, const Point& b) {
  if (a.dim != b.dim) throw DimensionMismatch("min_image_disp: point dimensions differ");
  Point d;
  d.dim = a.dim;
  for (int i = 0; i < a.dim; ++i) d.x[i] = min_image_1d(b.x[i] - a.x[i]);
  return d;
}

double norm(const Point& v) {
  double s = 0.0;
  for (int i = 0; i < v.dim; ++i) s += v.x[i] * v.x[i];
  return std::sqrt(s);
}

double geodesic_dist(const Point& a, const Point& b, const TorusGrid& grid) {
  if (a.dim != grid.dim() || b.dim != grid.dim())
    throw DimensionMismatch("geodesic_dist: point/grid dimension mismatch");
  return norm(min_image_disp(a, b));
}

double cell_dist2(const TorusGrid& grid, int a, int b) {
  auto ca = grid.coords(a);
  auto cb = grid.coords(b);
  const int n = grid.n();
  double s = 0.0;
  for (int i = 0; i < grid.dim(); ++i) {
    int k = std::abs(ca[i] - cb[i]) % n;
    k = std::min(k, n - k);
    const double d = k * grid.spacing();
    s += d * d;
  }
  return s;
}

Eigen::MatrixXd cell_dist2_matrix(const TorusGrid& grid) {
  const int N = grid.cell_count();
  Eigen::MatrixXd D(N, N);
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b) D(a, b) = cell_dist2(grid, a, b);
  return D;
}

double bump_profile(double v) {
  const double u = 4.0 * v;
  if (std::abs(u) >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - u * u));
}

Mollifier::Mollifier(const TorusGrid& grid, double epsilon) : grid_(grid), eps_(epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 0.25))
    throw std::invalid_argument("Mollifier: epsilon must lie in (0, 1/4]");
  const double h = grid.spacing();
  // psi^eps(v) = psi(v/eps)/eps^d vanishes for |v| >= eps/4 on any axis
  const int reach = static_cast<int>(std::ceil(eps_ / (4.0 * h))) + 1;
  const int r1 = grid.dim() == 2 ? reach : 0;
  double total = 0.0;
  for (int i = -reach; i <= reach; ++i) {
    for (int j = -r1; j <= r1; ++j) {
      double w = bump_profile(i * h / eps_);
      if (grid.dim() == 2) w *= bump_profile(j * h / eps_);
      if (w <= 0.0) continue;
      taps_.push_back({{i, j}, w});
      total += w;
    }
  }
  for (auto& t : taps_) t.weight /= total;
}

Mollifier Mollifier::from_taps(const TorusGrid& grid, std::vector<Tap> taps) {
  double total = 0.0;
  for (const auto& t : taps) {
    if (t.weight < 0.0) throw std::invalid_argument("Mollifier: negative tap weight");
    total += t.weight;
  }
  if (!(total > 0.0)) throw std::invalid_argument("Mollifier: taps carry no mass");
  Mollifier m;
  m.grid_ = grid;
  m.eps_ = 0.0;
  m.taps_ = std::move(taps);
  for (auto& t : m.taps_) t.weight /= total;
  return m;
}

double Mollifier::second_moment() const {
  const double h = grid_.spacing();
  double s = 0.0;
  for (const auto& t : taps_) {
    const double a = t.offset[0] * h;
    const double b = t.offset[1] * h;
    s += t.weight * (a * a + b * b);
  }
  return s;
}

Field mollify(const Field& values, const Mollifier& kernel) {
  const TorusGrid& g = kernel.grid();
  if (values.size() != g.cell_count())
    throw DimensionMismatch("mollify: field size does not match kernel grid");
  Field out = Field::Zero(values.size());
  for (int z = 0; z < g.cell_count(); ++z) {
    double acc = 0.0;
    for (const auto& t : kernel.taps())
      acc += t.weight * values[g.shifted(z, {-t.offset[0], -t.offset[1]})];
    out[z] = acc;
  }
  return out;
}

Field mollify_density(const Field& rho, const Mollifier& kernel) {
  if (rho.size() == kernel.grid().cell_count()) {
    if (rho.minCoeff() < 0.0) throw std::invalid_argument("mollify_density: negative density");
    if (std::abs(total_mass(rho, kernel.grid()) - 1.0) > 1e-9)
      throw std::invalid_argument("mollify_density: density is not unit mass");
  }
  return mollify(rho, kernel);
}

Field uniform_density(const TorusGrid& grid) { return Field::Ones(grid.cell_count()); }

double total_mass(const Field& rho, const TorusGrid& grid) { return rho.sum() * grid.cell_volume(); }

}  // namespace gflow
