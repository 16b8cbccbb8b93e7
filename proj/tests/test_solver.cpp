#include <catch2/catch_amalgamated.hpp>

#include "ppds/problems.hpp"
#include "ppds/solver.hpp"
#include "test_support.hpp"

using namespace ppds;
using test_support::random_tiny_spec;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> vals) {
  Eigen::VectorXd v(static_cast<Index>(vals.size()));
  Index k = 0;
  for (double x : vals) v(k++) = x;
  return v;
}

ProblemSpec one_dim_ball_problem() {
  OpGrid grid({VarShape::vec(1)}, {VarShape::vec(1)});
  grid.set(0, 0, identity_op(VarShape::vec(1)));
  return ProblemSpec{{ProxFn::l1()}, {ProxFn::ind_l2_ball(vec({5.0}), 1.0)}, std::move(grid)};
}

// Straight-line scalar-stepsize primal-dual iteration on stacked vectors;
// written independently of ppds_step.
void reference_scalar_step(const ProblemSpec& spec, double g1, double g2, Eigen::VectorXd& x,
                           Eigen::VectorXd& z) {
  const auto xs = spec.grid.split_primal(x);
  const auto zs = spec.grid.split_dual(z);
  const auto back = spec.grid.adjoint(zs);
  std::vector<Eigen::VectorXd> xn(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    xn[i] = spec.primal_fns[i].prox(xs[i] - g1 * back[i], g1);
  std::vector<Eigen::VectorXd> relaxed(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) relaxed[i] = 2.0 * xn[i] - xs[i];
  const auto fwd = spec.grid.forward(relaxed);
  std::vector<Eigen::VectorXd> zn(zs.size());
  for (std::size_t j = 0; j < zs.size(); ++j) {
    const Eigen::VectorXd w = zs[j] + g2 * fwd[j];
    zn[j] = w - g2 * spec.dual_fns[j].prox(w / g2, 1.0 / g2);
  }
  x = spec.grid.stack_primal(xn);
  z = spec.grid.stack_dual(zn);
}

}  // namespace

TEST_CASE("step: a point problem is stationary at its solution") {
  // f pins x to xbar via a zero-radius ball, g pins z = L xbar
  const Eigen::VectorXd xbar = vec({1.5, -2.0});
  Eigen::MatrixXd a(2, 2);
  a << 1, 2, 0, 1;
  OpGrid grid({VarShape::vec(2)}, {VarShape::vec(2)});
  grid.set(0, 0, matrix_op(a));
  ProblemSpec spec{{ProxFn::ind_l2_ball(xbar, 0.0)},
                   {ProxFn::ind_l2_ball(a * xbar, 0.0)},
                   std::move(grid)};
  const PreconditionerPair p = design_ovdp(spec.grid, 1.0);
  IterateState s = zero_state(spec);
  s.x[0] = xbar;
  s.z[0] = Eigen::VectorXd::Zero(2);
  const IterateState next = ppds_step(spec, p, s);
  CHECK((next.x[0] - xbar).lpNorm<Eigen::Infinity>() <= 1e-14);
  CHECK(next.t == 1);
}

TEST_CASE("step: single step from zero matches a hand-rolled transcription") {
  const ProblemSpec spec = one_dim_ball_problem();
  const PreconditionerPair p = design_ovdp(spec.grid, 1.0);
  REQUIRE(p.gamma1[0].scalar_value() == 1.0);
  REQUIRE(p.gamma2[0].scalar_value() == 1.0);
  const IterateState next = ppds_step(spec, p, zero_state(spec));
  // by hand: x+ = prox_{|.|}(0 - 1*(1*0)) = 0
  //          w  = 0 + 1*(2*0 - 0) = 0; z+ = w - proj_[4,6](w) = -4
  CHECK(next.x[0](0) == 0.0);
  CHECK(next.z[0](0) == Catch::Approx(-4.0).margin(1e-12));
}

TEST_CASE("solve: converges to the boundary of the data ball") {
  const ProblemSpec spec = one_dim_ball_problem();
  SolveOptions o;
  o.max_iters = 5000;
  o.stop_rule = StopRule::normalized_step(1e-12);
  const SolveResult r = solve(spec, design_ovdp(spec.grid, 1.0), o);
  CHECK(r.state.x[0](0) == Catch::Approx(4.0).margin(1e-9));
  CHECK(r.stopped_by_rule);
}

TEST_CASE("step equals the textbook scalar iteration across random problems") {
  auto rng = make_rng(61);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    const ProblemSpec spec = random_tiny_spec(100 + rep);
    const double mu = block_norm_bound(spec.grid);
    const double g1 = (0.3 + uni(rng)) / mu;
    const double g2 = 1.0 / (mu * mu * g1);
    const PreconditionerPair p = design_sp(spec.grid, g1, mu);

    Eigen::VectorXd xr = Eigen::VectorXd::Zero(spec.grid.total_primal_len());
    Eigen::VectorXd zr = Eigen::VectorXd::Zero(spec.grid.total_dual_len());
    IterateState s = zero_state(spec);
    for (int t = 0; t < 100; ++t) {
      reference_scalar_step(spec, g1, g2, xr, zr);
      s = ppds_step(spec, p, s);
      CHECK((spec.grid.stack_primal(s.x) - xr).lpNorm<Eigen::Infinity>() <= 1e-12);
      CHECK((spec.grid.stack_dual(s.z) - zr).lpNorm<Eigen::Infinity>() <= 1e-12);
    }
  }
}

TEST_CASE("solve: stops in one iteration at a fixed point") {
  // zero is optimal when the data ball contains the origin
  OpGrid grid({VarShape::vec(2)}, {VarShape::vec(2)});
  grid.set(0, 0, identity_op(VarShape::vec(2)));
  ProblemSpec spec{{ProxFn::l1()}, {ProxFn::ind_l2_ball(vec({0.1, 0.0}), 1.0)}, std::move(grid)};
  const SolveResult r = solve(spec, design_ovdp(spec.grid, 1.0));
  CHECK(r.iters == 1);
  CHECK(r.log.records.size() == 1);
  CHECK(r.log.records[0].normalized_step == 0.0);
  CHECK(r.stopped_by_rule);
}

TEST_CASE("solve: divergence raises with iteration and variable info") {
  const ProblemSpec spec = one_dim_ball_problem();
  PreconditionerPair p;
  p.gamma1.push_back(PrecondBlock::scalar(1e150));
  p.gamma2.push_back(PrecondBlock::scalar(1e150));
  p.design_tag = "explode";
  SolveOptions o;
  o.max_iters = 500;
  o.stop_rule = StopRule::max_iters_only();
  bool threw = false;
  try {
    solve(spec, p, o);
  } catch (const DivergenceError& e) {
    threw = true;
    CHECK(e.iteration >= 1);
    CHECK((e.side == 'x' || e.side == 'z'));
  }
  CHECK(threw);
}

TEST_CASE("rmse: formula values") {
  std::vector<Eigen::VectorXd> a = {vec({1.0, 2.0, 3.0, 4.0})};
  std::vector<Eigen::VectorXd> b = {vec({1.0, 2.0, 3.0, 4.0})};
  CHECK(rmse(a, b) == 0.0);
  b[0] = a[0] + Eigen::VectorXd::Ones(4);
  CHECK(rmse(a, b) == Catch::Approx(1.0).margin(1e-15));
  std::vector<Eigen::VectorXd> c = {vec({1.0, 0.0}), vec({0.0, 0.0})};
  std::vector<Eigen::VectorXd> d = {vec({0.0, 0.0}), vec({0.0, 0.0})};
  CHECK(rmse(c, d) == Catch::Approx(0.5).margin(1e-15));
  CHECK_THROWS_AS(rmse(a, c), StructuralError);
}

TEST_CASE("residual: objective gaps and the infinite flag") {
  OpGrid grid({VarShape::vec(1)}, {VarShape::vec(1)});
  grid.set(0, 0, identity_op(VarShape::vec(1)));
  ProblemSpec spec{{ProxFn::l1()}, {ProxFn::ind_l2_ball(vec({2.0}), 1.5)}, std::move(grid)};
  const std::vector<Eigen::VectorXd> xstar = {vec({1.0})};
  CHECK(residual(spec, xstar, xstar) == 0.0);
  CHECK(residual(spec, {vec({2.0})}, xstar) == Catch::Approx(1.0).margin(1e-12));
  // a point violating the ball constraint by 0.4 flags infinite
  CHECK(std::isinf(residual(spec, {vec({3.9})}, xstar)));
  CHECK(std::isinf(objective(spec, {vec({0.0})})));  // 0 violates the ball by 0.5
  CHECK(feasible(spec, xstar));
}

TEST_CASE("pseudo oracle: single design, ties, and failure") {
  const ProblemSpec spec = one_dim_ball_problem();
  const PreconditionerPair a = design_ovdp(spec.grid, 1.0);
  const OracleResult single = pseudo_oracle(spec, {a}, 2000);
  CHECK(single.design_index == 0);
  CHECK(single.x[0](0) == Catch::Approx(4.0).margin(1e-6));
  CHECK(single.objective_value == Catch::Approx(4.0).margin(1e-6));

  // identical designs tie; list order decides
  const OracleResult tie = pseudo_oracle(spec, {a, a}, 2000);
  CHECK(tie.design_index == 0);

  // an unreachable ball makes every candidate infeasible
  OpGrid grid({VarShape::vec(1)}, {VarShape::vec(1)});
  grid.set(0, 0, scaled_identity_op(VarShape::vec(1), 0.0));
  ProblemSpec bad{{ProxFn::l1()}, {ProxFn::ind_l2_ball(vec({5.0}), 1.0)}, std::move(grid)};
  PreconditionerPair manual;
  manual.gamma1.push_back(PrecondBlock::scalar(1.0));
  manual.gamma2.push_back(PrecondBlock::scalar(1.0));
  CHECK_THROWS_AS(pseudo_oracle(bad, {manual}, 100), OracleFailureError);
}

TEST_CASE("solve: log records and csv shape") {
  const ProblemSpec spec = one_dim_ball_problem();
  SolveOptions o;
  o.max_iters = 50;
  o.stop_rule = StopRule::max_iters_only();
  o.record_every = 10;
  const std::vector<Eigen::VectorXd> oracle = {vec({4.0})};
  o.oracle = &oracle;
  o.metric_hook = [](const std::vector<Eigen::VectorXd>& x) { return x[0](0); };
  const SolveResult r = solve(spec, design_ovdp(spec.grid, 1.0), o);
  REQUIRE(r.log.records.size() == 5);
  long prev = 0;
  for (const auto& rec : r.log.records) {
    CHECK(rec.t > prev);
    prev = rec.t;
    CHECK(rec.rmse.has_value());
    CHECK(rec.metric.has_value());
  }
  std::ostringstream os;
  r.log.write_csv(os);
  const std::string csv = os.str();
  CHECK(csv.rfind("t,normalized_step,rmse,residual,metric,elapsed_s\n", 0) == 0);
}

TEST_CASE("solve: rmse stop rule needs an oracle and fires") {
  const ProblemSpec spec = one_dim_ball_problem();
  SolveOptions o;
  o.stop_rule = StopRule::rmse_threshold(1e-3);
  CHECK_THROWS_AS(solve(spec, design_ovdp(spec.grid, 1.0), o), StructuralError);
  const std::vector<Eigen::VectorXd> oracle = {vec({4.0})};
  o.oracle = &oracle;
  const SolveResult r = solve(spec, design_ovdp(spec.grid, 1.0), o);
  CHECK(r.stopped_by_rule);
  CHECK(*r.log.records.back().rmse < 1e-3);
}
