#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ppds/linop.hpp"

namespace ppds {

/// Forward difference along `axis` of a cube with a Neumann boundary:
/// the last slice of the output is zero. The adjoint is the stencil
/// transpose. Norm bound 2.
inline LinOp diff_op(const VarShape& cube, Index axis) {
  if (axis < 0 || axis >= cube.rank()) throw StructuralError("diff_op: bad axis");
  for (Index a = 0; a < cube.rank(); ++a)
    if (cube.dim(a) < 1) throw StructuralError("diff_op: dims must be >= 1");
  const Index n = cube.len();
  const Index stride = cube.stride(axis);
  const Index extent = cube.dim(axis);
  auto coord = [stride, extent](Index idx) { return (idx / stride) % extent; };
  auto fwd = [n, stride, extent, coord](const Eigen::VectorXd& x) {
    Eigen::VectorXd y(n);
    for (Index idx = 0; idx < n; ++idx) {
      const Index c = coord(idx);
      y(idx) = (c < extent - 1) ? x(idx) - x(idx + stride) : 0.0;
    }
    return y;
  };
  auto adj = [n, stride, extent, coord](const Eigen::VectorXd& y) {
    Eigen::VectorXd x(n);
    for (Index idx = 0; idx < n; ++idx) {
      const Index c = coord(idx);
      double v = (c < extent - 1) ? y(idx) : 0.0;
      if (c > 0) v -= y(idx - stride);
      x(idx) = v;
    }
    return x;
  };
  return LinOp(cube, cube, std::move(fwd), std::move(adj), 2.0);
}

inline LinOp diff_v(const VarShape& cube) { return diff_op(cube, 0); }
inline LinOp diff_h(const VarShape& cube) { return diff_op(cube, 1); }
inline LinOp diff_b(const VarShape& cube) { return diff_op(cube, 2); }

struct GraphEdge {
  Index i = 0, j = 0;
  double w = 0.0;
};

/// Weighted directed graph given by its nonzero weights. Edges are kept
/// sorted by (i, j); the diagonal must be zero and weights nonnegative.
class GraphSpec {
 public:
  GraphSpec(Index num_vertices, std::vector<GraphEdge> edges)
      : n_(num_vertices), edges_(std::move(edges)) {
    if (n_ < 1) throw StructuralError("GraphSpec: need at least one vertex");
    std::vector<GraphEdge> kept;
    kept.reserve(edges_.size());
    for (const GraphEdge& e : edges_) {
      if (e.i < 0 || e.i >= n_ || e.j < 0 || e.j >= n_)
        throw StructuralError("GraphSpec: edge endpoint out of range");
      if (!(e.w >= 0.0) || !std::isfinite(e.w))
        throw DomainError("GraphSpec: weights must be finite and nonnegative");
      if (e.w == 0.0) continue;
      if (e.i == e.j) throw DomainError("GraphSpec: diagonal weights must be zero");
      kept.push_back(e);
    }
    std::sort(kept.begin(), kept.end(), [](const GraphEdge& a, const GraphEdge& b) {
      return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    for (std::size_t k = 1; k < kept.size(); ++k)
      if (kept[k - 1].i == kept[k].i && kept[k - 1].j == kept[k].j)
        throw StructuralError("GraphSpec: duplicate edge");
    edges_ = std::move(kept);
  }

  static GraphSpec from_weight_matrix(const Eigen::MatrixXd& w) {
    if (w.rows() != w.cols()) throw StructuralError("GraphSpec: weight matrix not square");
    std::vector<GraphEdge> edges;
    for (Index i = 0; i < w.rows(); ++i)
      for (Index j = 0; j < w.cols(); ++j)
        if (w(i, j) != 0.0) edges.push_back({i, j, w(i, j)});
    return GraphSpec(w.rows(), std::move(edges));
  }

  Index num_vertices() const { return n_; }
  Index num_edges() const { return static_cast<Index>(edges_.size()); }
  const std::vector<GraphEdge>& edges() const { return edges_; }

  /// Out-degree per vertex in edge order (sizes of the difference blocks).
  std::vector<Index> out_degrees() const {
    std::vector<Index> deg(static_cast<std::size_t>(n_), 0);
    for (const GraphEdge& e : edges_) ++deg[static_cast<std::size_t>(e.i)];
    return deg;
  }

 private:
  Index n_;
  std::vector<GraphEdge> edges_;
};

/// The bound 2 max_i sum_j (W_ij^2 + W_ji^2) as printed in the graph
/// signal processing literature. For small weights this expression can
/// fall below the true operator norm (it bounds the squared norm), so
/// graph_diff() never uses it on its own.
inline double graph_diff_norm_formula(const GraphSpec& g) {
  std::vector<double> acc(static_cast<std::size_t>(g.num_vertices()), 0.0);
  for (const GraphEdge& e : g.edges()) {
    acc[static_cast<std::size_t>(e.i)] += e.w * e.w;
    acc[static_cast<std::size_t>(e.j)] += e.w * e.w;
  }
  double mx = 0.0;
  for (double v : acc) mx = std::max(mx, v);
  return 2.0 * mx;
}

/// Stacks the per-vertex weighted difference blocks b_i with
/// [b_i]_j = (x_j - x_i) W_ij over the neighbors of i, ordered by (i, j).
/// The norm bound is the smaller of the printed formula above (when it is
/// a valid upper bound) and a 1%-inflated power-iteration estimate.
inline LinOp graph_diff(const GraphSpec& g) {
  const std::vector<GraphEdge> edges = g.edges();
  const Index n = g.num_vertices();
  const Index m = g.num_edges();
  auto fwd = [edges, m](const Eigen::VectorXd& x) {
    Eigen::VectorXd y(m);
    for (Index k = 0; k < m; ++k) {
      const GraphEdge& e = edges[static_cast<std::size_t>(k)];
      y(k) = (x(e.j) - x(e.i)) * e.w;
    }
    return y;
  };
  auto adj = [edges, n, m](const Eigen::VectorXd& y) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    for (Index k = 0; k < m; ++k) {
      const GraphEdge& e = edges[static_cast<std::size_t>(k)];
      x(e.j) += e.w * y(k);
      x(e.i) -= e.w * y(k);
    }
    return x;
  };
  LinOp op(VarShape::vec(n), VarShape::vec(m), std::move(fwd), std::move(adj), 0.0);
  if (m == 0) return op;
  const double est = power_iteration_norm(op, 300);
  double bound = est * 1.01;
  const double printed = graph_diff_norm_formula(g);
  if (printed >= est) bound = std::min(bound, printed);
  return op.with_norm_bound(bound);
}

}  // namespace ppds
