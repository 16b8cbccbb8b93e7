#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "ppds/opgrid.hpp"
#include "ppds/prox.hpp"

namespace ppds {

inline std::string format_double_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

enum class BlockKind { Scalar, PerElement, Dense };

/// One block of a block-diagonal preconditioner: a positive scalar, a
/// positive per-element diagonal, or a dense SPD matrix. Dense blocks keep
/// their inverse, symmetric square root, and extreme eigenvalues from a
/// symmetric eigendecomposition done at construction.
class PrecondBlock {
 public:
  static PrecondBlock scalar(double v) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw DomainError("PrecondBlock: scalar must be positive");
    PrecondBlock b;
    b.kind_ = BlockKind::Scalar;
    b.scalar_ = v;
    return b;
  }

  static PrecondBlock per_element(Eigen::VectorXd d) {
    if (d.size() == 0) throw StructuralError("PrecondBlock: empty diagonal");
    if (!d.allFinite() || (d.array() <= 0.0).any())
      throw DomainError("PrecondBlock: diagonal must be positive");
    PrecondBlock b;
    b.kind_ = BlockKind::PerElement;
    b.diag_ = std::move(d);
    return b;
  }

  static PrecondBlock dense(Eigen::MatrixXd m) {
    detail::check_spd(m);
    PrecondBlock b;
    b.kind_ = BlockKind::Dense;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    if (es.info() != Eigen::Success) throw NumericError("PrecondBlock: eigendecomposition failed");
    const Eigen::VectorXd& ev = es.eigenvalues();
    if (ev.minCoeff() <= 0.0)
      throw DomainError("PrecondBlock: dense block is not positive definite");
    b.dense_ = std::move(m);
    b.inv_ = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    b.sqrt_ = es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
    b.max_eig_ = ev.maxCoeff();
    b.min_eig_ = ev.minCoeff();
    return b;
  }

  BlockKind kind() const { return kind_; }
  double scalar_value() const { return scalar_; }
  const Eigen::VectorXd& diag() const { return diag_; }
  const Eigen::MatrixXd& matrix() const { return dense_; }
  const Eigen::MatrixXd& inverse_matrix() const { return inv_; }

  double max_eig() const {
    switch (kind_) {
      case BlockKind::Scalar: return scalar_;
      case BlockKind::PerElement: return diag_.maxCoeff();
      case BlockKind::Dense: return max_eig_;
    }
    return 0.0;
  }

  double min_eig() const {
    switch (kind_) {
      case BlockKind::Scalar: return scalar_;
      case BlockKind::PerElement: return diag_.minCoeff();
      case BlockKind::Dense: return min_eig_;
    }
    return 0.0;
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    switch (kind_) {
      case BlockKind::Scalar: return scalar_ * x;
      case BlockKind::PerElement: return check(x), diag_.cwiseProduct(x);
      case BlockKind::Dense: return checkd(x), dense_ * x;
    }
    return x;
  }

  Eigen::VectorXd apply_inv(const Eigen::VectorXd& x) const {
    switch (kind_) {
      case BlockKind::Scalar: return x / scalar_;
      case BlockKind::PerElement: return check(x), x.cwiseQuotient(diag_);
      case BlockKind::Dense: return checkd(x), inv_ * x;
    }
    return x;
  }

  Eigen::VectorXd apply_sqrt(const Eigen::VectorXd& x) const {
    switch (kind_) {
      case BlockKind::Scalar: return std::sqrt(scalar_) * x;
      case BlockKind::PerElement: return check(x), diag_.cwiseSqrt().cwiseProduct(x);
      case BlockKind::Dense: return checkd(x), sqrt_ * x;
    }
    return x;
  }

  /// The block as a diagonal metric (scalar and per-element kinds only).
  DiagMetric metric() const {
    switch (kind_) {
      case BlockKind::Scalar: return DiagMetric::scalar(scalar_);
      case BlockKind::PerElement: return DiagMetric::per_element(diag_);
      case BlockKind::Dense: break;
    }
    throw StructuralError("PrecondBlock: dense block has no diagonal metric");
  }

 private:
  void check(const Eigen::VectorXd& x) const {
    if (x.size() != diag_.size()) throw StructuralError("PrecondBlock: dimension mismatch");
  }
  void checkd(const Eigen::VectorXd& x) const {
    if (x.size() != dense_.rows()) throw StructuralError("PrecondBlock: dimension mismatch");
  }

  BlockKind kind_ = BlockKind::Scalar;
  double scalar_ = 1.0;
  Eigen::VectorXd diag_;
  Eigen::MatrixXd dense_, inv_, sqrt_;
  double max_eig_ = 0.0, min_eig_ = 0.0;
};

/// Block-diagonal stepsize pair: one block per primal variable (gamma1)
/// and one per dual variable (gamma2), plus the design tag used in logs.
struct PreconditionerPair {
  std::vector<PrecondBlock> gamma1, gamma2;
  std::string design_tag;
};

/// Root-sum-of-squares bound on the stacked operator norm over the
/// present entries' individual bounds.
inline double block_norm_bound(const OpGrid& grid) {
  grid.validate();
  double sq = 0.0;
  for (Index j = 0; j < grid.num_dual(); ++j)
    for (Index i = 0; i < grid.num_primal(); ++i)
      if (grid.present(j, i)) sq += grid.at(j, i).norm_bound() * grid.at(j, i).norm_bound();
  return std::sqrt(sq);
}

/// Scalar stepsizes gamma1 and gamma2 = 1 / (mu_sp^2 gamma1), the classic
/// choice with mu_sp an upper bound of the stacked operator norm.
inline PreconditionerPair design_sp(const OpGrid& grid, double gamma1, double mu_sp) {
  if (!(gamma1 > 0.0) || !std::isfinite(gamma1)) throw DomainError("design_sp: gamma1 must be positive");
  if (!(mu_sp > 0.0) || !std::isfinite(mu_sp)) throw DomainError("design_sp: mu_sp must be positive");
  PreconditionerPair p;
  const double gamma2 = 1.0 / (mu_sp * mu_sp * gamma1);
  for (Index i = 0; i < grid.num_primal(); ++i) p.gamma1.push_back(PrecondBlock::scalar(gamma1));
  for (Index j = 0; j < grid.num_dual(); ++j) p.gamma2.push_back(PrecondBlock::scalar(gamma2));
  p.design_tag = "SP(g1=" + format_double_short(gamma1) + ")";
  return p;
}

/// Element-wise design from row/column absolute sums of the materialized
/// entries. Constant diagonals collapse to scalar blocks so the proximity
/// operators they meet stay in closed form.
inline PreconditionerPair design_asp(const OpGrid& grid, Index cap = kMaterializeCap) {
  grid.validate();
  const Index n = grid.num_primal(), m = grid.num_dual();
  std::vector<Eigen::VectorXd> col_sums(static_cast<std::size_t>(n)),
      row_sums(static_cast<std::size_t>(m));
  for (Index i = 0; i < n; ++i)
    col_sums[static_cast<std::size_t>(i)] = Eigen::VectorXd::Zero(grid.primal_shape(i).len());
  for (Index j = 0; j < m; ++j)
    row_sums[static_cast<std::size_t>(j)] = Eigen::VectorXd::Zero(grid.dual_shape(j).len());
  for (Index j = 0; j < m; ++j)
    for (Index i = 0; i < n; ++i) {
      if (!grid.present(j, i)) continue;
      const Eigen::MatrixXd a = materialize(grid.at(j, i), cap).cwiseAbs();
      col_sums[static_cast<std::size_t>(i)] += a.colwise().sum().transpose();
      row_sums[static_cast<std::size_t>(j)] += a.rowwise().sum();
    }
  auto make_block = [](Eigen::VectorXd sums, const char* side, Index idx) {
    // Rows/columns with zero absolute sum carry no signal; give them the
    // block's largest sum (smallest stepsize) instead of dividing by zero.
    const double mx = sums.size() > 0 ? sums.maxCoeff() : 0.0;
    if (mx <= 0.0)
      throw DegenerateError(std::string("design_asp: all absolute sums vanish in ") + side +
                            " block " + std::to_string(idx));
    sums = (sums.array() > 0.0).select(sums, mx);
    const Eigen::VectorXd d = sums.cwiseInverse();
    const double first = d(0);
    if (((d.array() - first).abs() <= 1e-12 * first).all())
      return PrecondBlock::scalar(first);
    return PrecondBlock::per_element(d);
  };
  PreconditionerPair p;
  for (Index i = 0; i < n; ++i)
    p.gamma1.push_back(make_block(col_sums[static_cast<std::size_t>(i)], "primal", i));
  for (Index j = 0; j < m; ++j)
    p.gamma2.push_back(make_block(row_sums[static_cast<std::size_t>(j)], "dual", j));
  p.design_tag = "ASP";
  return p;
}

/// Positive-definite design: scalar primal stepsizes and dense dual blocks
/// (1/tau)(sum_i L_ji L_ji^T + theta I)^{-1}. With two dual variables the
/// primal scalar is tau/2, with one it is tau. More dual variables would
/// need a non-block-diagonal gamma2, which this pair cannot represent.
inline PreconditionerPair design_pdp(const OpGrid& grid, double tau, double theta = 0.01,
                                     Index cap = kMaterializeCap) {
  grid.validate();
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("design_pdp: tau must be positive");
  if (!(theta > 0.0) || !std::isfinite(theta)) throw DomainError("design_pdp: theta must be positive");
  const Index n = grid.num_primal(), m = grid.num_dual();
  if (m > 2)
    throw StructuralError("design_pdp: gamma2 is not block-diagonal for " + std::to_string(m) +
                          " dual variables; supported only for 1 or 2");
  const double g1 = (m == 2) ? tau / 2.0 : tau;
  PreconditionerPair p;
  for (Index i = 0; i < n; ++i) p.gamma1.push_back(PrecondBlock::scalar(g1));
  for (Index j = 0; j < m; ++j) {
    const Index mj = grid.dual_shape(j).len();
    if (mj > 0 && mj > cap / mj)
      throw CapacityError("design_pdp: dense dual block " + std::to_string(mj) + "x" +
                          std::to_string(mj) + " exceeds cap " + std::to_string(cap));
    Eigen::MatrixXd s = theta * Eigen::MatrixXd::Identity(mj, mj);
    for (Index i = 0; i < n; ++i) {
      if (!grid.present(j, i)) continue;
      const Eigen::MatrixXd a = materialize(grid.at(j, i), cap);
      s.noalias() += a * a.transpose();
    }
    const Eigen::MatrixXd inv = s.llt().solve(Eigen::MatrixXd::Identity(mj, mj));
    // Symmetrize away the solve's rounding before the SPD checks.
    p.gamma2.push_back(PrecondBlock::dense(((inv + inv.transpose()) / (2.0 * tau)).eval()));
  }
  p.design_tag = "PDP(tau=" + format_double_short(tau) + ",theta=" + format_double_short(theta) + ")";
  return p;
}

/// Variable-wise design from operator-norm bounds:
///   gamma1_i = 1 / sum_j mu_ji^(2-beta),  gamma2_j = 1 / sum_i mu_ji^beta,
/// with beta in [0, 2]. At the endpoints the printed variants count every
/// variable: beta = 0 gives gamma2_j = 1/N and beta = 2 gives gamma1_i = 1/M;
/// in between, only present entries contribute.
inline PreconditionerPair design_ovdp(const OpGrid& grid, double beta) {
  grid.validate();
  if (!(beta >= 0.0 && beta <= 2.0)) throw DomainError("design_ovdp: beta must be in [0,2]");
  const Index n = grid.num_primal(), m = grid.num_dual();
  PreconditionerPair p;
  for (Index i = 0; i < n; ++i) {
    double denom = 0.0;
    if (beta == 2.0) {
      denom = static_cast<double>(m);
    } else {
      for (Index j = 0; j < m; ++j)
        if (grid.present(j, i)) denom += std::pow(grid.at(j, i).norm_bound(), 2.0 - beta);
    }
    if (denom <= 0.0)
      throw DegenerateError("design_ovdp: primal variable " + std::to_string(i) +
                            " has a zero stepsize denominator");
    p.gamma1.push_back(PrecondBlock::scalar(1.0 / denom));
  }
  for (Index j = 0; j < m; ++j) {
    double denom = 0.0;
    if (beta == 0.0) {
      denom = static_cast<double>(n);
    } else {
      for (Index i = 0; i < n; ++i)
        if (grid.present(j, i)) denom += std::pow(grid.at(j, i).norm_bound(), beta);
    }
    if (denom <= 0.0)
      throw DegenerateError("design_ovdp: dual variable " + std::to_string(j) +
                            " has a zero stepsize denominator");
    p.gamma2.push_back(PrecondBlock::scalar(1.0 / denom));
  }
  p.design_tag = "OVDP(beta=" + format_double_short(beta) + ")";
  return p;
}

/// Power-iteration estimate of the squared operator norm of
/// gamma2^(1/2) ∘ L ∘ gamma1^(1/2); convergence of the splitting iteration
/// requires this to stay below one.
inline double verify_convergence_condition(const OpGrid& grid, const PreconditionerPair& p,
                                           int iters = 300, std::uint64_t seed = 0xC0FFEEULL) {
  grid.validate();
  const Index n = grid.num_primal(), m = grid.num_dual();
  if (static_cast<Index>(p.gamma1.size()) != n || static_cast<Index>(p.gamma2.size()) != m)
    throw StructuralError("verify_convergence_condition: block counts do not match grid");
  auto rng = make_rng(seed);
  std::vector<Eigen::VectorXd> x(static_cast<std::size_t>(n));
  double nrm = 0.0;
  for (Index i = 0; i < n; ++i) {
    x[static_cast<std::size_t>(i)] = random_normal_vector(grid.primal_shape(i).len(), rng);
    nrm += x[static_cast<std::size_t>(i)].squaredNorm();
  }
  nrm = std::sqrt(nrm);
  if (nrm == 0.0) return 0.0;
  for (auto& xi : x) xi /= nrm;
  double lambda = 0.0;
  for (int k = 0; k < iters; ++k) {
    std::vector<Eigen::VectorXd> half(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i)
      half[static_cast<std::size_t>(i)] =
          p.gamma1[static_cast<std::size_t>(i)].apply_sqrt(x[static_cast<std::size_t>(i)]);
    std::vector<Eigen::VectorXd> y = grid.forward(half);
    for (Index j = 0; j < m; ++j) {
      auto& yj = y[static_cast<std::size_t>(j)];
      yj = p.gamma2[static_cast<std::size_t>(j)].apply_sqrt(yj);
      yj = p.gamma2[static_cast<std::size_t>(j)].apply_sqrt(yj);
    }
    std::vector<Eigen::VectorXd> w = grid.adjoint(y);
    double dot = 0.0, wn = 0.0;
    for (Index i = 0; i < n; ++i) {
      auto& wi = w[static_cast<std::size_t>(i)];
      wi = p.gamma1[static_cast<std::size_t>(i)].apply_sqrt(wi);
      if (!wi.allFinite()) throw NumericError("verify_convergence_condition: non-finite values");
      dot += x[static_cast<std::size_t>(i)].dot(wi);
      wn += wi.squaredNorm();
    }
    lambda = dot;
    wn = std::sqrt(wn);
    if (wn == 0.0) return 0.0;
    for (Index i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i)] / wn;
  }
  return std::max(lambda, 0.0);
}

}  // namespace ppds
