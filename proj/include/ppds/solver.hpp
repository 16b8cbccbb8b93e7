#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "ppds/opgrid.hpp"
#include "ppds/precond.hpp"
#include "ppds/prox.hpp"

namespace ppds {

/// An instance of the split problem
///   min sum_i f_i(x_i) + sum_j g_j(z_j)  s.t.  z_j = sum_i L_ji(x_i).
struct ProblemSpec {
  std::vector<ProxFn> primal_fns;
  std::vector<ProxFn> dual_fns;
  OpGrid grid;

  void validate() const {
    grid.validate();
    if (static_cast<Index>(primal_fns.size()) != grid.num_primal())
      throw StructuralError("ProblemSpec: primal function count does not match grid");
    if (static_cast<Index>(dual_fns.size()) != grid.num_dual())
      throw StructuralError("ProblemSpec: dual function count does not match grid");
  }
};

struct IterateState {
  std::vector<Eigen::VectorXd> x, z;
  long t = 0;
};

inline IterateState zero_state(const ProblemSpec& spec) {
  IterateState s;
  for (Index i = 0; i < spec.grid.num_primal(); ++i)
    s.x.push_back(Eigen::VectorXd::Zero(spec.grid.primal_shape(i).len()));
  for (Index j = 0; j < spec.grid.num_dual(); ++j)
    s.z.push_back(Eigen::VectorXd::Zero(spec.grid.dual_shape(j).len()));
  return s;
}

/// sum_i f_i(x_i) + sum_j g_j(sum_i L_ji x_i); +inf when any indicator is
/// violated beyond its slack.
inline double objective(const ProblemSpec& spec, const std::vector<Eigen::VectorXd>& x) {
  double v = 0.0;
  for (Index i = 0; i < spec.grid.num_primal(); ++i)
    v += spec.primal_fns[static_cast<std::size_t>(i)].eval(x[static_cast<std::size_t>(i)]);
  const std::vector<Eigen::VectorXd> z = spec.grid.forward(x);
  for (Index j = 0; j < spec.grid.num_dual(); ++j)
    v += spec.dual_fns[static_cast<std::size_t>(j)].eval(z[static_cast<std::size_t>(j)]);
  return v;
}

inline bool feasible(const ProblemSpec& spec, const std::vector<Eigen::VectorXd>& x) {
  return std::isfinite(objective(spec, x));
}

inline double rmse(const std::vector<Eigen::VectorXd>& x,
                   const std::vector<Eigen::VectorXd>& x_star) {
  if (x.size() != x_star.size()) throw StructuralError("rmse: block count mismatch");
  double sq = 0.0;
  Index total = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != x_star[i].size()) throw StructuralError("rmse: block length mismatch");
    sq += (x[i] - x_star[i]).squaredNorm();
    total += x[i].size();
  }
  if (total == 0) return 0.0;
  return std::sqrt(sq / static_cast<double>(total));
}

/// Absolute objective gap |F(x) - F(x_star)|; +inf when either point
/// evaluates infeasible.
inline double residual(const ProblemSpec& spec, const std::vector<Eigen::VectorXd>& x,
                       const std::vector<Eigen::VectorXd>& x_star) {
  const double a = objective(spec, x);
  const double b = objective(spec, x_star);
  if (!std::isfinite(a) || !std::isfinite(b)) return kInf;
  return std::abs(a - b);
}

/// One sweep of the preconditioned primal-dual iteration: every primal
/// block through prox in the metric gamma1_i^{-1}, then every dual block
/// through the conjugate prox in gamma2_j^{-1} at the over-relaxed point
/// 2 x^{t+1} - x^{t}. Dense dual blocks go through inner FISTA.
inline IterateState ppds_step(const ProblemSpec& spec, const PreconditionerPair& p,
                              const IterateState& state, const FistaOptions& inner = {}) {
  const Index n = spec.grid.num_primal(), m = spec.grid.num_dual();
  IterateState next;
  next.t = state.t + 1;
  next.x.resize(static_cast<std::size_t>(n));
  next.z.resize(static_cast<std::size_t>(m));

  const std::vector<Eigen::VectorXd> back = spec.grid.adjoint(state.z);
  for (Index i = 0; i < n; ++i) {
    const auto& block = p.gamma1[static_cast<std::size_t>(i)];
    const Eigen::VectorXd arg =
        state.x[static_cast<std::size_t>(i)] - block.apply(back[static_cast<std::size_t>(i)]);
    const ProxFn& f = spec.primal_fns[static_cast<std::size_t>(i)];
    Eigen::VectorXd xi;
    if (block.kind() == BlockKind::Dense)
      xi = skewed_prox_fista(f, arg, block.inverse_matrix(), inner, 1.0 / block.min_eig());
    else
      xi = prox_diag(f, arg, block.metric().inverse(), inner);
    if (!xi.allFinite())
      throw DivergenceError("ppds_step: primal block " + std::to_string(i) +
                                " became non-finite at iteration " + std::to_string(next.t),
                            next.t, 'x', static_cast<int>(i));
    next.x[static_cast<std::size_t>(i)] = std::move(xi);
  }

  std::vector<Eigen::VectorXd> relaxed(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    relaxed[static_cast<std::size_t>(i)] =
        2.0 * next.x[static_cast<std::size_t>(i)] - state.x[static_cast<std::size_t>(i)];
  const std::vector<Eigen::VectorXd> fwd = spec.grid.forward(relaxed);
  for (Index j = 0; j < m; ++j) {
    const auto& block = p.gamma2[static_cast<std::size_t>(j)];
    const Eigen::VectorXd w =
        state.z[static_cast<std::size_t>(j)] + block.apply(fwd[static_cast<std::size_t>(j)]);
    const ProxFn& g = spec.dual_fns[static_cast<std::size_t>(j)];
    Eigen::VectorXd zj;
    if (block.kind() == BlockKind::Dense) {
      // prox_{G,g*}(w) = w - G^{-1} prox_{G^{-1},g}(G w) with G = gamma2^{-1}
      zj = w - block.apply(skewed_prox_fista(g, block.apply_inv(w), block.matrix(), inner,
                                             block.max_eig()));
    } else {
      zj = prox_conjugate(g, w, block.metric().inverse(), inner);
    }
    if (!zj.allFinite())
      throw DivergenceError("ppds_step: dual block " + std::to_string(j) +
                                " became non-finite at iteration " + std::to_string(next.t),
                            next.t, 'z', static_cast<int>(j));
    next.z[static_cast<std::size_t>(j)] = std::move(zj);
  }
  return next;
}

struct StopRule {
  enum class Kind { NormalizedStep, RmseThreshold, MaxItersOnly };
  Kind kind = Kind::NormalizedStep;
  double threshold = 1e-5;

  static StopRule normalized_step(double tol = 1e-5) { return {Kind::NormalizedStep, tol}; }
  static StopRule rmse_threshold(double tol) { return {Kind::RmseThreshold, tol}; }
  static StopRule max_iters_only() { return {Kind::MaxItersOnly, 0.0}; }
};

struct LogRecord {
  long t = 0;
  double normalized_step = 0.0;
  std::optional<double> rmse;
  std::optional<double> residual;
  std::optional<double> metric;
  double elapsed_s = 0.0;
};

/// Per-iteration diagnostics. Serializes to CSV with the fixed header
/// t,normalized_step,rmse,residual,metric,elapsed_s; absent or non-finite
/// fields are left empty.
struct ConvergenceLog {
  std::vector<LogRecord> records;

  static std::string csv_header() { return "t,normalized_step,rmse,residual,metric,elapsed_s"; }

  static std::string format_field(double v) {
    if (!std::isfinite(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  }

  void write_csv(std::ostream& os) const {
    os << csv_header() << "\n";
    for (const LogRecord& r : records) {
      os << r.t << "," << format_field(r.normalized_step) << ",";
      os << (r.rmse ? format_field(*r.rmse) : "") << ",";
      os << (r.residual ? format_field(*r.residual) : "") << ",";
      os << (r.metric ? format_field(*r.metric) : "") << ",";
      os << format_field(r.elapsed_s) << "\n";
    }
  }
};

struct SolveOptions {
  long max_iters = 10000;
  StopRule stop_rule = StopRule::normalized_step();
  const std::vector<Eigen::VectorXd>* oracle = nullptr;
  std::function<double(const std::vector<Eigen::VectorXd>&)> metric_hook;
  int record_every = 1;
  std::uint64_t seed = 0;  // recorded for reproducibility; the iteration is deterministic
  FistaOptions inner;
};

struct SolveResult {
  IterateState state;
  ConvergenceLog log;
  bool stopped_by_rule = false;
  long iters = 0;
  double last_normalized_step = kInf;
};

/// Runs the iteration from the all-zero start until the stop rule fires or
/// max_iters is reached.
inline SolveResult solve(const ProblemSpec& spec, const PreconditionerPair& p,
                         const SolveOptions& opts = {}) {
  spec.validate();
  if (opts.max_iters < 1) throw DomainError("solve: max_iters must be >= 1");
  if (opts.record_every < 1) throw DomainError("solve: record_every must be >= 1");
  if (opts.stop_rule.kind == StopRule::Kind::RmseThreshold && opts.oracle == nullptr)
    throw StructuralError("solve: rmse stop rule needs an oracle");

  SolveResult res;
  res.state = zero_state(spec);
  const auto t0 = std::chrono::steady_clock::now();
  for (long t = 1; t <= opts.max_iters; ++t) {
    double prev_norm = 0.0;
    for (const auto& xi : res.state.x) prev_norm += xi.squaredNorm();
    prev_norm = std::sqrt(prev_norm);

    IterateState next = ppds_step(spec, p, res.state, opts.inner);

    double step_sq = 0.0;
    for (std::size_t i = 0; i < next.x.size(); ++i)
      step_sq += (next.x[i] - res.state.x[i]).squaredNorm();
    const double dx = std::sqrt(step_sq);
    double ns;
    if (prev_norm > 0.0) {
      ns = dx / prev_norm;
    } else if (dx > 0.0) {
      ns = kInf;
    } else {
      // ||x|| = 0 and the primal did not move: a genuine fixed point only
      // if the duals are also stationary.
      double dz_sq = 0.0;
      for (std::size_t j = 0; j < next.z.size(); ++j)
        dz_sq += (next.z[j] - res.state.z[j]).squaredNorm();
      ns = dz_sq == 0.0 ? 0.0 : kInf;
    }
    res.state = std::move(next);
    res.iters = t;
    res.last_normalized_step = ns;

    std::optional<double> rm, resid, metric;
    if (opts.oracle && opts.stop_rule.kind == StopRule::Kind::RmseThreshold)
      rm = rmse(res.state.x, *opts.oracle);

    bool stop = false;
    switch (opts.stop_rule.kind) {
      case StopRule::Kind::NormalizedStep:
        stop = ns < opts.stop_rule.threshold;
        break;
      case StopRule::Kind::RmseThreshold:
        stop = rm && *rm < opts.stop_rule.threshold;
        break;
      case StopRule::Kind::MaxItersOnly:
        break;
    }

    if (t % opts.record_every == 0 || stop || t == opts.max_iters) {
      if (opts.oracle) {
        if (!rm) rm = rmse(res.state.x, *opts.oracle);
        resid = residual(spec, res.state.x, *opts.oracle);
      }
      if (opts.metric_hook) metric = opts.metric_hook(res.state.x);
      const double el =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      res.log.records.push_back({t, ns, rm, resid, metric, el});
    }
    if (stop) {
      res.stopped_by_rule = true;
      break;
    }
  }
  return res;
}

struct OracleResult {
  std::vector<Eigen::VectorXd> x;
  double objective_value = kInf;
  int design_index = -1;
};

/// Long-run reference point: solves the problem with every candidate pair
/// for `long_iters` iterations and returns the feasible iterate with the
/// smallest objective (ties by normalized step, then list order).
inline OracleResult pseudo_oracle(const ProblemSpec& spec,
                                  const std::vector<PreconditionerPair>& designs,
                                  long long_iters, const FistaOptions& inner = {}) {
  if (long_iters < 1) throw DomainError("pseudo_oracle: long_iters must be >= 1");
  if (designs.empty()) throw StructuralError("pseudo_oracle: no designs");
  OracleResult best;
  double best_ns = kInf;
  for (std::size_t d = 0; d < designs.size(); ++d) {
    SolveOptions o;
    o.max_iters = long_iters;
    o.stop_rule = StopRule::max_iters_only();
    o.record_every = static_cast<int>(std::min<long>(long_iters, 1000000));
    o.inner = inner;
    const SolveResult r = solve(spec, designs[d], o);
    const double obj = objective(spec, r.state.x);
    if (!std::isfinite(obj)) continue;
    const double ns = r.last_normalized_step;
    const bool better = best.design_index < 0 || obj < best.objective_value - 1e-10 ||
                        (std::abs(obj - best.objective_value) <= 1e-10 && ns < best_ns);
    if (better) {
      best.x = r.state.x;
      best.objective_value = obj;
      best.design_index = static_cast<int>(d);
      best_ns = ns;
    }
  }
  if (best.design_index < 0)
    throw OracleFailureError("pseudo_oracle: every candidate run ended infeasible");
  return best;
}

}  // namespace ppds
