#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>

#include "ppds/errors.hpp"
#include "ppds/random.hpp"
#include "ppds/shape.hpp"

namespace ppds {

/// Default cap on dense representations (number of matrix entries).
inline constexpr Index kMaterializeCap = 10'000'000;

/// Matrix-free linear map with a forward procedure, an adjoint procedure,
/// and an upper bound on the operator norm. Immutable after construction;
/// forward/adjoint are pure, so instances are safe to share across threads.
class LinOp {
 public:
  using ApplyFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  LinOp(VarShape in, VarShape out, ApplyFn forward, ApplyFn adjoint, double norm_bound)
      : in_(std::move(in)),
        out_(std::move(out)),
        fwd_(std::move(forward)),
        adj_(std::move(adjoint)),
        norm_bound_(norm_bound) {
    if (!(norm_bound_ >= 0.0) || !std::isfinite(norm_bound_))
      throw DomainError("LinOp: norm bound must be finite and nonnegative");
  }

  const VarShape& in_shape() const { return in_; }
  const VarShape& out_shape() const { return out_; }
  double norm_bound() const { return norm_bound_; }

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const {
    if (x.size() != in_.len())
      throw StructuralError("LinOp::forward: input length " + std::to_string(x.size()) +
                            " does not match shape " + in_.to_string());
    Eigen::VectorXd y = fwd_(x);
    if (y.size() != out_.len())
      throw StructuralError("LinOp::forward: output length " + std::to_string(y.size()) +
                            " does not match shape " + out_.to_string());
    return y;
  }

  Eigen::VectorXd adjoint(const Eigen::VectorXd& y) const {
    if (y.size() != out_.len())
      throw StructuralError("LinOp::adjoint: input length " + std::to_string(y.size()) +
                            " does not match shape " + out_.to_string());
    Eigen::VectorXd x = adj_(y);
    if (x.size() != in_.len())
      throw StructuralError("LinOp::adjoint: output length " + std::to_string(x.size()) +
                            " does not match shape " + in_.to_string());
    return x;
  }

  /// Same operator with a replacement norm bound.
  LinOp with_norm_bound(double bound) const { return LinOp(in_, out_, fwd_, adj_, bound); }

 private:
  VarShape in_, out_;
  ApplyFn fwd_, adj_;
  double norm_bound_;
};

/// Estimates the operator norm by power iteration on adjoint∘forward,
/// returning the square root of the final Rayleigh quotient. The estimate
/// is nondecreasing in the iteration count for a fixed seed and approaches
/// the true norm from below. A zero operator yields 0.
inline double power_iteration_norm(const LinOp& op, int iters,
                                   std::uint64_t seed = 0x9e3779b97f4a7c15ULL) {
  if (iters < 1) throw DomainError("power_iteration_norm: iters must be >= 1");
  const Index n = op.in_shape().len();
  if (n == 0) return 0.0;
  Eigen::VectorXd v = random_normal_vector(n, seed);
  const double v0 = v.norm();
  if (v0 == 0.0) return 0.0;
  v /= v0;
  double lambda = 0.0;
  for (int k = 0; k < iters; ++k) {
    Eigen::VectorXd w = op.adjoint(op.forward(v));
    if (!w.allFinite()) throw NumericError("power_iteration_norm: non-finite values");
    lambda = v.dot(w);
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;
    v = w / wn;
  }
  return std::sqrt(std::max(lambda, 0.0));
}

/// Power iteration run to stagnation of the Rayleigh quotient.
inline double power_iteration_norm_converged(const LinOp& op, double rel_tol = 1e-14,
                                             int max_iters = 5000,
                                             std::uint64_t seed = 0x9e3779b97f4a7c15ULL) {
  const Index n = op.in_shape().len();
  if (n == 0) return 0.0;
  Eigen::VectorXd v = random_normal_vector(n, seed);
  const double v0 = v.norm();
  if (v0 == 0.0) return 0.0;
  v /= v0;
  double lambda = 0.0;
  for (int k = 0; k < max_iters; ++k) {
    Eigen::VectorXd w = op.adjoint(op.forward(v));
    if (!w.allFinite()) throw NumericError("power_iteration_norm: non-finite values");
    const double next = v.dot(w);
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;
    v = w / wn;
    if (k > 0 && std::abs(next - lambda) <= rel_tol * std::max(next, 1e-300)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return std::sqrt(std::max(lambda, 0.0));
}

/// Max over random trials of |<Lx,y> - <x,L*y>| / (||Lx|| ||y|| + tiny).
inline double adjoint_consistency_check(const LinOp& op, int trials,
                                        std::uint64_t seed = 1234567ULL) {
  if (trials < 1) throw DomainError("adjoint_consistency_check: trials must be >= 1");
  auto rng = make_rng(seed);
  double worst = 0.0;
  for (int k = 0; k < trials; ++k) {
    const Eigen::VectorXd x = random_normal_vector(op.in_shape().len(), rng);
    const Eigen::VectorXd y = random_normal_vector(op.out_shape().len(), rng);
    const Eigen::VectorXd lx = op.forward(x);
    const Eigen::VectorXd lty = op.adjoint(y);
    const double lhs = lx.dot(y);
    const double rhs = x.dot(lty);
    const double scale = lx.norm() * y.norm() + std::numeric_limits<double>::min();
    worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return worst;
}

/// Dense representation by basis probing: column k equals forward(e_k).
inline Eigen::MatrixXd materialize(const LinOp& op, Index cap = kMaterializeCap) {
  const Index n = op.in_shape().len();
  const Index m = op.out_shape().len();
  if (n > 0 && m > cap / n)
    throw CapacityError("materialize: " + std::to_string(m) + "x" + std::to_string(n) +
                        " entries exceed cap " + std::to_string(cap));
  Eigen::MatrixXd a(m, n);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  for (Index k = 0; k < n; ++k) {
    e(k) = 1.0;
    a.col(k) = op.forward(e);
    e(k) = 0.0;
  }
  return a;
}

inline LinOp identity_op(VarShape s) {
  auto id = [](const Eigen::VectorXd& x) { return x; };
  return LinOp(s, s, id, id, 1.0);
}

inline LinOp scaled_identity_op(VarShape s, double a) {
  if (!std::isfinite(a)) throw NumericError("scaled_identity_op: non-finite scale");
  auto mul = [a](const Eigen::VectorXd& x) { return (a * x).eval(); };
  return LinOp(s, s, mul, mul, std::abs(a));
}

/// a∘b with adjoint b*∘a* and the product of the two norm bounds.
inline LinOp compose(const LinOp& a, const LinOp& b) {
  if (b.out_shape().len() != a.in_shape().len())
    throw StructuralError("compose: inner shapes disagree, " + b.out_shape().to_string() +
                          " vs " + a.in_shape().to_string());
  auto fwd = [a, b](const Eigen::VectorXd& x) { return a.forward(b.forward(x)); };
  auto adj = [a, b](const Eigen::VectorXd& y) { return b.adjoint(a.adjoint(y)); };
  return LinOp(b.in_shape(), a.out_shape(), fwd, adj, a.norm_bound() * b.norm_bound());
}

/// Extracts the entries selected by `mask` in index order; the adjoint
/// scatters back with zeros. Norm bound 1 (the rows are orthonormal).
inline LinOp sampling_op(const std::vector<bool>& mask) {
  std::vector<Index> idx;
  for (std::size_t k = 0; k < mask.size(); ++k)
    if (mask[k]) idx.push_back(static_cast<Index>(k));
  if (idx.empty()) throw StructuralError("sampling_op: mask selects nothing");
  const Index n = static_cast<Index>(mask.size());
  const Index m = static_cast<Index>(idx.size());
  auto fwd = [idx, m](const Eigen::VectorXd& x) {
    Eigen::VectorXd y(m);
    for (Index k = 0; k < m; ++k) y(k) = x(idx[static_cast<std::size_t>(k)]);
    return y;
  };
  auto adj = [idx, n, m](const Eigen::VectorXd& y) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    for (Index k = 0; k < m; ++k) x(idx[static_cast<std::size_t>(k)]) = y(k);
    return x;
  };
  return LinOp(VarShape::vec(n), VarShape::vec(m), fwd, adj, 1.0);
}

namespace detail {
inline double top_singular_value(const Eigen::MatrixXd& a) {
  auto fwd = [&a](const Eigen::VectorXd& x) { return (a * x).eval(); };
  auto adj = [&a](const Eigen::VectorXd& y) { return (a.transpose() * y).eval(); };
  LinOp op(VarShape::vec(a.cols()), VarShape::vec(a.rows()), fwd, adj, 0.0);
  // Tiny inflation keeps the stored value an upper bound of later,
  // shorter power-iteration runs.
  return power_iteration_norm_converged(op) * (1.0 + 1e-10);
}
}  // namespace detail

/// Dense matrix as an operator; the norm bound is the largest singular
/// value estimated by power iteration at construction.
inline LinOp matrix_op(Eigen::MatrixXd a) {
  if (!a.allFinite()) throw NumericError("matrix_op: non-finite entries");
  const double sigma1 = detail::top_singular_value(a);
  auto fwd = [a](const Eigen::VectorXd& x) { return (a * x).eval(); };
  auto adj = [a](const Eigen::VectorXd& y) { return (a.transpose() * y).eval(); };
  return LinOp(VarShape::vec(a.cols()), VarShape::vec(a.rows()), std::move(fwd),
               std::move(adj), sigma1);
}

/// diag(A, ..., A) applied per contiguous block, without forming the big
/// matrix. The norm bound equals the norm bound of A alone.
inline LinOp blockdiag_matrix_op(Eigen::MatrixXd a, Index repeats) {
  if (!a.allFinite()) throw NumericError("blockdiag_matrix_op: non-finite entries");
  if (repeats < 1) throw StructuralError("blockdiag_matrix_op: repeats must be >= 1");
  const double sigma1 = detail::top_singular_value(a);
  const Index r = a.rows(), c = a.cols();
  auto fwd = [a, repeats, r, c](const Eigen::VectorXd& x) {
    Eigen::VectorXd y(r * repeats);
    for (Index b = 0; b < repeats; ++b) y.segment(b * r, r) = a * x.segment(b * c, c);
    return y;
  };
  auto adj = [a, repeats, r, c](const Eigen::VectorXd& y) {
    Eigen::VectorXd x(c * repeats);
    for (Index b = 0; b < repeats; ++b)
      x.segment(b * c, c) = a.transpose() * y.segment(b * r, r);
    return x;
  };
  return LinOp(VarShape::vec(c * repeats), VarShape::vec(r * repeats), std::move(fwd),
               std::move(adj), sigma1);
}

/// Reorders a flat vector holding a (rows x cols) array from column-major
/// to row-major storage: out[r*cols + c] = in[c*rows + r]. Orthogonal, so
/// the adjoint is the inverse reordering and the norm bound is 1.
inline LinOp transpose_reshape_op(Index rows, Index cols) {
  if (rows < 1 || cols < 1) throw StructuralError("transpose_reshape_op: empty shape");
  const Index n = rows * cols;
  auto fwd = [rows, cols, n](const Eigen::VectorXd& x) {
    Eigen::VectorXd y(n);
    for (Index c = 0; c < cols; ++c)
      for (Index r = 0; r < rows; ++r) y(r * cols + c) = x(c * rows + r);
    return y;
  };
  auto adj = [rows, cols, n](const Eigen::VectorXd& y) {
    Eigen::VectorXd x(n);
    for (Index c = 0; c < cols; ++c)
      for (Index r = 0; r < rows; ++r) x(c * rows + r) = y(r * cols + c);
    return x;
  };
  return LinOp(VarShape::vec(n), VarShape::vec(n), std::move(fwd), std::move(adj), 1.0);
}

}  // namespace ppds
