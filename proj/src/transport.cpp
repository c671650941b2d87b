#include "gflow/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gflow {

namespace {

struct Cell {
  int i;
  int j;
  double flow;
};

class NetworkSimplex {
 public:
  NetworkSimplex(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const std::function<double(int, int)>& c)
      : m_(static_cast<int>(a.size())), n_(static_cast<int>(b.size())), cost_fn_(c) {
    if (static_cast<long>(m_) * n_ <= 4'000'000) {
      table_.resize(static_cast<std::size_t>(m_) * n_);
      for (int i = 0; i < m_; ++i)
        for (int j = 0; j < n_; ++j) table_[static_cast<std::size_t>(i) * n_ + j] = c(i, j);
    }
    adj_.resize(m_ + n_);
    parent_.assign(m_ + n_, -1);
    parent_cell_.assign(m_ + n_, -1);
    depth_.assign(m_ + n_, 0);
    u_ = Eigen::VectorXd::Zero(m_);
    v_ = Eigen::VectorXd::Zero(n_);
    northwest(a, b);
  }

  TransportResult run() {
    const int block = std::max(64, static_cast<int>(std::sqrt(static_cast<double>(m_) * n_)));
    double cmax = 0.0;
    for (const auto& cell : cells_) cmax = std::max(cmax, std::abs(cost(cell.i, cell.j)));
    const double tol = 1e-13 * std::max(1.0, cmax);
    long cursor = 0;
    const long total = static_cast<long>(m_) * n_;
    const long limit = 50L * total + 100000L;
    long it = 0;
    while (true) {
      if (it > limit) throw std::runtime_error("solve_transport: iteration limit");
      build_tree();
      // block pricing, cyclic over all cells
      int ei = -1, ej = -1;
      double best = -tol;
      long scanned = 0;
      while (scanned < total) {
        const long stop = std::min(total, scanned + block);
        for (; scanned < stop; ++scanned) {
          const long idx = (cursor + scanned) % total;
          const int i = static_cast<int>(idx / n_);
          const int j = static_cast<int>(idx % n_);
          const double rc = cost(i, j) - u_[i] - v_[j];
          if (rc < best) {
            best = rc;
            ei = i;
            ej = j;
          }
        }
        if (ei >= 0) break;
      }
      if (ei < 0) break;
      cursor = (cursor + scanned) % total;
      pivot(ei, ej);
      ++it;
    }
    TransportResult r;
    r.iterations = it;
    for (const auto& cell : cells_) {
      if (cell.flow <= 0.0) continue;
      r.flows.push_back({cell.i, cell.j, cell.flow});
      r.cost += cell.flow * cost(cell.i, cell.j);
    }
    std::sort(r.flows.begin(), r.flows.end(), [](const TransportFlow& x, const TransportFlow& y) {
      return x.source != y.source ? x.source < y.source : x.target < y.target;
    });
    r.u = u_;
    r.v = v_;
    return r;
  }

 private:
  double cost(int i, int j) const {
    return table_.empty() ? cost_fn_(i, j) : table_[static_cast<std::size_t>(i) * n_ + j];
  }

  void add_cell(int i, int j, double f) {
    const int id = static_cast<int>(cells_.size());
    cells_.push_back({i, j, f});
    adj_[i].push_back(id);
    adj_[m_ + j].push_back(id);
  }

  void northwest(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    int i = 0, j = 0;
    double ra = a[0], rb = b[0];
    while (true) {
      if (i == m_ - 1 && j == n_ - 1) {
        // absorbs the rounding left over from the staircase
        add_cell(i, j, std::max(0.0, std::max(ra, rb)));
        break;
      }
      const double f = std::min(ra, rb);
      add_cell(i, j, f);
      if (j == n_ - 1 || (i < m_ - 1 && ra <= rb)) {
        rb -= f;
        ++i;
        ra = a[i];
      } else {
        ra -= f;
        ++j;
        rb = b[j];
      }
    }
  }

  // potentials and parent pointers by traversal from source node 0
  void build_tree() {
    std::vector<int> stack{0};
    std::fill(parent_.begin(), parent_.end(), -2);
    parent_[0] = -1;
    parent_cell_[0] = -1;
    depth_[0] = 0;
    u_[0] = 0.0;
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      for (int id : adj_[node]) {
        const Cell& c = cells_[id];
        const int other = node < m_ ? m_ + c.j : c.i;
        if (parent_[other] != -2) continue;
        parent_[other] = node;
        parent_cell_[other] = id;
        depth_[other] = depth_[node] + 1;
        if (other < m_)
          u_[other] = cost(c.i, c.j) - v_[c.j];
        else
          v_[c.j] = cost(c.i, c.j) - u_[c.i];
        stack.push_back(other);
      }
    }
  }

  void pivot(int ei, int ej) {
    // tree path from target node ej to source node ei; cells alternate -,+,...,-
    std::vector<int> from_j, from_i;
    int x = m_ + ej, y = ei;
    while (depth_[x] > depth_[y]) {
      from_j.push_back(parent_cell_[x]);
      x = parent_[x];
    }
    while (depth_[y] > depth_[x]) {
      from_i.push_back(parent_cell_[y]);
      y = parent_[y];
    }
    while (x != y) {
      from_j.push_back(parent_cell_[x]);
      x = parent_[x];
      from_i.push_back(parent_cell_[y]);
      y = parent_[y];
    }
    std::vector<int> path = from_j;
    path.insert(path.end(), from_i.rbegin(), from_i.rend());
    double theta = std::numeric_limits<double>::infinity();
    int leave = -1;
    for (std::size_t k = 0; k < path.size(); k += 2) {
      const double f = cells_[path[k]].flow;
      if (f < theta) {
        theta = f;
        leave = path[k];
      }
    }
    for (std::size_t k = 0; k < path.size(); ++k) {
      Cell& c = cells_[path[k]];
      c.flow = k % 2 == 0 ? c.flow - theta : c.flow + theta;
    }
    cells_[leave].flow = 0.0;
    // reuse the leaving slot for the entering cell
    Cell& old = cells_[leave];
    auto drop = [&](std::vector<int>& list) { list.erase(std::find(list.begin(), list.end(), leave)); };
    drop(adj_[old.i]);
    drop(adj_[m_ + old.j]);
    old = {ei, ej, theta};
    adj_[ei].push_back(leave);
    adj_[m_ + ej].push_back(leave);
  }

  int m_;
  int n_;
  const std::function<double(int, int)>& cost_fn_;
  std::vector<double> table_;
  std::vector<Cell> cells_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> parent_;
  std::vector<int> parent_cell_;
  std::vector<int> depth_;
  Eigen::VectorXd u_;
  Eigen::VectorXd v_;
};

}  // namespace

TransportResult solve_transport(const Eigen::VectorXd& supply, const Eigen::VectorXd& demand,
                                const std::function<double(int, int)>& cost) {
  if (supply.size() == 0 || demand.size() == 0) throw std::invalid_argument("solve_transport: empty marginal");
  if (!(supply.minCoeff() > 0.0) || !(demand.minCoeff() > 0.0))
    throw std::invalid_argument("solve_transport: marginals must be positive");
  const double sa = supply.sum(), sb = demand.sum();
  if (std::abs(sa - sb) > 1e-9 * std::max(sa, sb)) throw std::invalid_argument("solve_transport: unbalanced marginals");
  const Eigen::VectorXd b = demand * (sa / sb);
  NetworkSimplex ns(supply, b, cost);
  return ns.run();
}

}  // namespace gflow
