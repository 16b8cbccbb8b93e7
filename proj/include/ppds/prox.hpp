#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "ppds/errors.hpp"
#include "ppds/random.hpp"
#include "ppds/shape.hpp"

namespace ppds {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Positive diagonal metric G: either a scalar multiple of the identity or
/// a per-element diagonal.
class DiagMetric {
 public:
  static DiagMetric scalar(double a) {
    if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("DiagMetric: scale must be positive");
    DiagMetric m;
    m.scale_ = a;
    return m;
  }

  static DiagMetric per_element(Eigen::VectorXd d) {
    if (d.size() == 0) throw DomainError("DiagMetric: empty diagonal");
    if (!d.allFinite() || (d.array() <= 0.0).any())
      throw DomainError("DiagMetric: diagonal must be positive and finite");
    DiagMetric m;
    m.diag_ = std::move(d);
    return m;
  }

  bool is_scalar() const { return diag_.size() == 0; }
  double scalar_value() const { return scale_; }
  const Eigen::VectorXd& diag() const { return diag_; }

  double max_value() const { return is_scalar() ? scale_ : diag_.maxCoeff(); }
  double min_value() const { return is_scalar() ? scale_ : diag_.minCoeff(); }

  DiagMetric inverse() const {
    return is_scalar() ? scalar(1.0 / scale_) : per_element(diag_.cwiseInverse());
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    if (is_scalar()) return scale_ * x;
    check_dim(x.size());
    return diag_.cwiseProduct(x);
  }

  void check_dim(Index n) const {
    if (!is_scalar() && diag_.size() != n)
      throw StructuralError("DiagMetric: dimension mismatch");
  }

 private:
  double scale_ = 1.0;
  Eigen::VectorXd diag_;
};

enum class ProxKind { Zero, L1, GroupL12, IndL2Ball, IndL1Ball, IndNonneg, IndZero };

/// Euclidean projection onto {y : ||y||_1 <= eta} by sorting and
/// thresholding.
inline Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& x, double eta) {
  if (!(eta > 0.0)) throw DomainError("project_l1_ball: radius must be positive");
  const Eigen::VectorXd ax = x.cwiseAbs();
  if (ax.sum() <= eta) return x;
  std::vector<double> s(ax.data(), ax.data() + ax.size());
  std::sort(s.begin(), s.end(), std::greater<double>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    cum += s[k];
    const double cand = (cum - eta) / static_cast<double>(k + 1);
    if (k + 1 == s.size() || s[k + 1] <= cand) {
      theta = cand;
      break;
    }
  }
  return x.array().sign() * (ax.array() - theta).max(0.0);
}

inline Eigen::VectorXd project_l2_ball(const Eigen::VectorXd& x, const Eigen::VectorXd& c,
                                       double alpha) {
  if (x.size() != c.size()) throw StructuralError("project_l2_ball: shape mismatch");
  if (!(alpha >= 0.0)) throw DomainError("project_l2_ball: negative radius");
  const Eigen::VectorXd d = x - c;
  const double n = d.norm();
  if (n <= alpha) return x;
  if (n == 0.0) return c;
  return c + (alpha / n) * d;
}

inline Eigen::VectorXd project_nonneg(const Eigen::VectorXd& x) { return x.cwiseMax(0.0); }

inline Eigen::VectorXd project_zero(const Eigen::VectorXd& x) {
  return Eigen::VectorXd::Zero(x.size());
}

inline Eigen::VectorXd prox_l1(const Eigen::VectorXd& x, double w) {
  if (!(w > 0.0)) throw DomainError("prox_l1: weight must be positive");
  return x.array().sign() * (x.cwiseAbs().array() - w).max(0.0);
}

/// Convex function appearing as an objective or constraint term, bundled
/// with its value and its standard proximity operator. Indicator values
/// use the IEEE infinity as the distinguished "infinite" flag; feasibility
/// checks allow a small slack relative to the natural scale of the set.
class ProxFn {
 public:
  static ProxFn zero() { return ProxFn(ProxKind::Zero); }

  static ProxFn l1() { return weighted_l1(1.0); }

  static ProxFn weighted_l1(double w) {
    if (!(w > 0.0) || !std::isfinite(w)) throw DomainError("weighted_l1: weight must be positive");
    ProxFn f(ProxKind::L1);
    f.weight_ = w;
    return f;
  }

  /// Sum over contiguous groups of the Euclidean norms of the groups.
  static ProxFn group_l12(double w, std::vector<Index> group_sizes) {
    if (!(w > 0.0) || !std::isfinite(w)) throw DomainError("group_l12: weight must be positive");
    Index total = 0;
    for (Index g : group_sizes) {
      if (g < 0) throw StructuralError("group_l12: negative group size");
      total += g;
    }
    ProxFn f(ProxKind::GroupL12);
    f.weight_ = w;
    f.groups_ = std::move(group_sizes);
    f.group_total_ = total;
    return f;
  }

  static ProxFn group_l12_uniform(double w, Index group_size, Index num_groups) {
    return group_l12(w, std::vector<Index>(static_cast<std::size_t>(num_groups), group_size));
  }

  static ProxFn ind_l2_ball(Eigen::VectorXd center, double radius) {
    if (!(radius >= 0.0) || !std::isfinite(radius))
      throw DomainError("ind_l2_ball: radius must be finite and nonnegative");
    if (!center.allFinite()) throw NumericError("ind_l2_ball: non-finite center");
    ProxFn f(ProxKind::IndL2Ball);
    f.center_ = std::move(center);
    f.radius_ = radius;
    return f;
  }

  static ProxFn ind_l1_ball(double radius) {
    if (!(radius > 0.0) || !std::isfinite(radius))
      throw DomainError("ind_l1_ball: radius must be positive");
    ProxFn f(ProxKind::IndL1Ball);
    f.radius_ = radius;
    return f;
  }

  static ProxFn ind_nonneg() { return ProxFn(ProxKind::IndNonneg); }
  static ProxFn ind_zero() { return ProxFn(ProxKind::IndZero); }

  ProxKind kind() const { return kind_; }
  double weight() const { return weight_; }
  double radius() const { return radius_; }
  const Eigen::VectorXd& center() const { return center_; }
  const std::vector<Index>& group_sizes() const { return groups_; }

  bool is_indicator() const {
    return kind_ == ProxKind::IndL2Ball || kind_ == ProxKind::IndL1Ball ||
           kind_ == ProxKind::IndNonneg || kind_ == ProxKind::IndZero;
  }

  /// True when the proximity operator splits element by element, so any
  /// diagonal metric keeps a closed form.
  bool separable() const {
    return kind_ == ProxKind::Zero || kind_ == ProxKind::L1 ||
           kind_ == ProxKind::IndNonneg || kind_ == ProxKind::IndZero;
  }

  ProxFn with_feas_tol(double tol) const {
    if (!(tol >= 0.0)) throw DomainError("with_feas_tol: negative tolerance");
    ProxFn f = *this;
    f.feas_tol_ = tol;
    return f;
  }

  double feas_tol() const { return feas_tol_; }

  double eval(const Eigen::VectorXd& x) const {
    switch (kind_) {
      case ProxKind::Zero:
        return 0.0;
      case ProxKind::L1:
        return weight_ * x.lpNorm<1>();
      case ProxKind::GroupL12: {
        check_groups(x);
        double v = 0.0;
        Index off = 0;
        for (Index g : groups_) {
          v += x.segment(off, g).norm();
          off += g;
        }
        return weight_ * v;
      }
      case ProxKind::IndL2Ball: {
        if (x.size() != center_.size()) throw StructuralError("ind_l2_ball: shape mismatch");
        const double slack = feas_tol_ * std::max(radius_, 1.0);
        return (x - center_).norm() <= radius_ + slack ? 0.0 : kInf;
      }
      case ProxKind::IndL1Ball: {
        const double slack = feas_tol_ * std::max(radius_, 1.0);
        return x.lpNorm<1>() <= radius_ + slack ? 0.0 : kInf;
      }
      case ProxKind::IndNonneg:
        return x.minCoeff() >= -feas_tol_ ? 0.0 : kInf;
      case ProxKind::IndZero:
        return x.lpNorm<Eigen::Infinity>() <= feas_tol_ ? 0.0 : kInf;
    }
    throw DomainError("ProxFn::eval: unknown kind");
  }

  /// argmin_y 0.5 ||x - y||^2 + step * f(y).
  Eigen::VectorXd prox(const Eigen::VectorXd& x, double step) const {
    if (!(step > 0.0) || !std::isfinite(step)) throw DomainError("prox: step must be positive");
    switch (kind_) {
      case ProxKind::Zero:
        return x;
      case ProxKind::L1:
        return prox_l1(x, step * weight_);
      case ProxKind::GroupL12: {
        check_groups(x);
        Eigen::VectorXd y(x.size());
        const double w = step * weight_;
        Index off = 0;
        for (Index g : groups_) {
          const double n = x.segment(off, g).norm();
          const double scale = n > w ? 1.0 - w / n : 0.0;
          y.segment(off, g) = scale * x.segment(off, g);
          off += g;
        }
        return y;
      }
      case ProxKind::IndL2Ball:
        return project_l2_ball(x, center_, radius_);
      case ProxKind::IndL1Ball:
        return project_l1_ball(x, radius_);
      case ProxKind::IndNonneg:
        return project_nonneg(x);
      case ProxKind::IndZero:
        return project_zero(x);
    }
    throw DomainError("ProxFn::prox: unknown kind");
  }

 private:
  explicit ProxFn(ProxKind k) : kind_(k) {}

  void check_groups(const Eigen::VectorXd& x) const {
    if (x.size() != group_total_)
      throw StructuralError("group_l12: grouping covers " + std::to_string(group_total_) +
                            " entries but input has " + std::to_string(x.size()));
  }

  ProxKind kind_;
  double weight_ = 1.0;
  double radius_ = 0.0;
  double feas_tol_ = 1e-5;
  Eigen::VectorXd center_;
  std::vector<Index> groups_;
  Index group_total_ = 0;
};

struct FistaOptions {
  double tol = 1e-8;
  int max_iters = 1000;
};

namespace detail {

template <class ApplyG>
Eigen::VectorXd fista_prox_impl(const ProxFn& f, const Eigen::VectorXd& x, ApplyG&& apply_g,
                                double lipschitz, const FistaOptions& opts) {
  if (!(lipschitz > 0.0) || !std::isfinite(lipschitz))
    throw DomainError("skewed_prox_fista: nonpositive curvature bound");
  const double step = 1.0 / lipschitz;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(x.size());  // zero start
  Eigen::VectorXd p = y;
  double t = 1.0;
  for (int k = 0; k < opts.max_iters; ++k) {
    const Eigen::VectorXd grad = apply_g((p - x).eval());
    Eigen::VectorXd y_next = f.prox(p - step * grad, step);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    p = y_next + ((t - 1.0) / t_next) * (y_next - y);
    const double change = (y_next - y).norm();
    y = std::move(y_next);
    t = t_next;
    if (change <= opts.tol * std::max(1.0, y.norm())) break;
  }
  return y;
}

inline double spd_max_eig(const Eigen::MatrixXd& g, std::uint64_t seed = 99ULL) {
  Eigen::VectorXd v = random_normal_vector(g.rows(), seed);
  v.normalize();
  double lambda = 0.0;
  for (int k = 0; k < 200; ++k) {
    Eigen::VectorXd w = g * v;
    lambda = v.dot(w);
    const double n = w.norm();
    if (n == 0.0) return 0.0;
    v = w / n;
  }
  return lambda;
}

inline void check_spd(const Eigen::MatrixXd& g) {
  if (g.rows() != g.cols()) throw StructuralError("metric must be square");
  if (!g.allFinite()) throw NumericError("metric has non-finite entries");
  const double scale = g.cwiseAbs().maxCoeff();
  if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(scale, 1.0))
    throw DomainError("metric is not symmetric");
  if ((g.diagonal().array() <= 0.0).any())
    throw DomainError("metric has a nonpositive diagonal entry");
  auto rng = make_rng(2024ULL);
  for (int k = 0; k < 8; ++k) {
    const Eigen::VectorXd v = random_normal_vector(g.rows(), rng);
    if (v.dot(g * v) <= 0.0) throw DomainError("metric has a nonpositive Rayleigh quotient");
  }
}

}  // namespace detail

/// Proximity operator of f in the metric <., G.> for diagonal G, computed
/// by FISTA on the smooth half 0.5 (x-y)^T G (x-y) with prox steps of f.
/// Starts from the zero vector and stops when the iterate change falls
/// below tol relative to max(1, ||y||).
inline Eigen::VectorXd skewed_prox_fista(const ProxFn& f, const Eigen::VectorXd& x,
                                         const DiagMetric& g, const FistaOptions& opts = {}) {
  g.check_dim(x.size());
  return detail::fista_prox_impl(
      f, x, [&g](const Eigen::VectorXd& v) { return g.apply(v); }, g.max_value(), opts);
}

/// Dense-metric overload. G must be symmetric positive definite.
inline Eigen::VectorXd skewed_prox_fista(const ProxFn& f, const Eigen::VectorXd& x,
                                         const Eigen::MatrixXd& g, const FistaOptions& opts = {},
                                         double max_eig_hint = 0.0) {
  if (g.rows() != x.size()) throw StructuralError("skewed_prox_fista: metric size mismatch");
  detail::check_spd(g);
  const double lip = max_eig_hint > 0.0 ? max_eig_hint : detail::spd_max_eig(g) * (1.0 + 1e-8);
  return detail::fista_prox_impl(
      f, x, [&g](const Eigen::VectorXd& v) { return (g * v).eval(); }, lip, opts);
}

/// Proximity operator of f in a diagonal metric G. Exact closed form when
/// G is scalar or f splits element by element; otherwise inner FISTA.
inline Eigen::VectorXd prox_diag(const ProxFn& f, const Eigen::VectorXd& x, const DiagMetric& g,
                                 const FistaOptions& opts = {}) {
  g.check_dim(x.size());
  if (g.is_scalar()) return f.prox(x, 1.0 / g.scalar_value());
  if (f.separable()) {
    switch (f.kind()) {
      case ProxKind::Zero:
        return x;
      case ProxKind::IndNonneg:
        return project_nonneg(x);
      case ProxKind::IndZero:
        return project_zero(x);
      case ProxKind::L1: {
        const Eigen::ArrayXd thr = f.weight() * g.diag().cwiseInverse().array();
        return x.array().sign() * (x.cwiseAbs().array() - thr).max(0.0);
      }
      default:
        break;
    }
  }
  return skewed_prox_fista(f, x, g, opts);
}

/// prox of the convex conjugate through the generalized Moreau identity:
/// prox_{G,f*}(x) = x - G^{-1} prox_{G^{-1},f}(G x).
inline Eigen::VectorXd prox_conjugate(const ProxFn& f, const Eigen::VectorXd& x,
                                      const DiagMetric& g, const FistaOptions& opts = {}) {
  const DiagMetric ginv = g.inverse();
  return x - ginv.apply(prox_diag(f, g.apply(x), ginv, opts));
}

}  // namespace ppds
