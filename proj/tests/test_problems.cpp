#include <catch2/catch_amalgamated.hpp>

#include "ppds/problems.hpp"
#include "test_support.hpp"

using namespace ppds;

TEST_CASE("mixed-noise builder: grid structure and entry bounds") {
  const MnrConfig cfg = MnrConfig::with_derived_radii(4, 4, 3, 0.005, 0.05, 0.1, 1);
  const MnrData data = make_mnr_data(cfg);
  const ProblemSpec spec = build_mnr(cfg, data.observed);
  CHECK(spec.grid.num_dual() == 4);
  CHECK(spec.grid.num_primal() == 3);
  int present = 0;
  for (Index j = 0; j < 4; ++j)
    for (Index i = 0; i < 3; ++i) present += spec.grid.present(j, i);
  CHECK(present == 6);
  CHECK(spec.grid.at(0, 0).norm_bound() == 4.0);
  CHECK(spec.grid.at(1, 0).norm_bound() == 4.0);
  CHECK(spec.grid.at(2, 2).norm_bound() == 2.0);
  for (Index i = 0; i < 3; ++i) CHECK(spec.grid.at(3, i).norm_bound() == 1.0);
  // u carries no primal regularizer
  CHECK(spec.primal_fns[0].kind() == ProxKind::Zero);
  CHECK(spec.primal_fns[0].eval(data.u_true) == 0.0);
  // derived steps
  const PreconditionerPair p = design_ovdp(spec.grid, 0.0);
  CHECK(p.gamma1[0].scalar_value() == Catch::Approx(1.0 / 33).margin(1e-15));
  CHECK(p.gamma2[0].scalar_value() == Catch::Approx(1.0 / 3).margin(1e-15));
  CHECK_THROWS_AS(build_mnr(cfg, Eigen::VectorXd::Zero(7)), StructuralError);
}

TEST_CASE("mixed-noise parameter formulas at the reference size") {
  const MnrConfig cfg = MnrConfig::with_derived_radii(16, 16, 16, 0.005, 0.05, 0.1, 0);
  CHECK(static_cast<double>(cfg.n1 * cfg.n2 * cfg.n3) == 4096.0);
  CHECK(cfg.eta_s == Catch::Approx(194.56).margin(1e-12));
  CHECK(cfg.eps == Catch::Approx(0.95 * 0.05 * std::sqrt(0.9 * 4096.0)).margin(1e-15));
}

TEST_CASE("unmixing builder: grid, groups, scalar bounds") {
  const UnmixConfig cfg = UnmixConfig::with_derived_radius(4, 4, 8, 3, 0.05, 2);
  const UnmixData data = make_unmix_data(cfg);
  const ProblemSpec spec = build_unmix(cfg, data.endmembers, data.observed);
  CHECK(spec.grid.num_dual() == 2);
  CHECK(spec.grid.num_primal() == 1);
  const double sigma1 = test_support::svd_top(data.endmembers);
  CHECK(spec.grid.at(0, 0).norm_bound() == Catch::Approx(sigma1).epsilon(1e-9));
  CHECK(spec.grid.at(1, 0).norm_bound() == 1.0);
  CHECK(block_norm_bound(spec.grid) ==
        Catch::Approx(std::sqrt(sigma1 * sigma1 + 1.0)).epsilon(1e-9));
  // group prox: one contiguous group per endmember
  CHECK(spec.primal_fns[0].group_sizes().size() == 3);
  for (Index g : spec.primal_fns[0].group_sizes()) CHECK(g == 16);
  // variable-wise steps with one primal variable
  const PreconditionerPair p = design_ovdp(spec.grid, 0.0);
  CHECK(p.gamma1[0].scalar_value() == Catch::Approx(1.0 / (sigma1 * sigma1 + 1.0)).epsilon(1e-9));
  CHECK(p.gamma2[0].scalar_value() == 1.0);
  CHECK(p.gamma2[1].scalar_value() == 1.0);
}

TEST_CASE("unmixing: mixing operator matches an explicit block-diagonal product") {
  const UnmixConfig cfg = UnmixConfig::with_derived_radius(2, 2, 5, 3, 0.0, 4);
  const UnmixData data = make_unmix_data(cfg);
  const ProblemSpec spec = build_unmix(cfg, data.endmembers, data.observed);
  auto rng = make_rng(9);
  const Eigen::VectorXd a = random_normal_vector(cfg.pixels() * cfg.endmembers, rng);
  const Eigen::VectorXd got = spec.grid.at(0, 0).forward(a);
  for (Index pix = 0; pix < cfg.pixels(); ++pix) {
    Eigen::VectorXd ap(cfg.endmembers);
    for (Index e = 0; e < cfg.endmembers; ++e) ap(e) = a(e * cfg.pixels() + pix);
    const Eigen::VectorXd want = data.endmembers * ap;
    CHECK((got.segment(pix * cfg.bands, cfg.bands) - want).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
}

TEST_CASE("unmixing: noiseless ground truth is feasible and competitive") {
  UnmixConfig cfg = UnmixConfig::with_derived_radius(3, 3, 6, 2, 0.05, 5);
  UnmixData data = make_unmix_data(cfg);
  // regenerate the observation without noise; radius stays positive
  const LinOp mix = compose(blockdiag_matrix_op(data.endmembers, cfg.pixels()),
                            transpose_reshape_op(cfg.pixels(), cfg.endmembers));
  data.observed = mix.forward(data.abund_true);
  const ProblemSpec spec = build_unmix(cfg, data.endmembers, data.observed);
  CHECK(feasible(spec, {data.abund_true}));
  const double truth_obj = objective(spec, {data.abund_true});
  // long-run solution should not exceed the ground-truth objective by much
  const SolveResult r = solve(spec, design_ovdp(spec.grid, 1.0),
                              {20000, StopRule::max_iters_only(), nullptr, {}, 4000});
  CHECK(objective(spec, r.state.x) <= truth_obj + 1e-4);
}

TEST_CASE("graph recovery builder: groups follow vertex blocks") {
  // path graph over 3 vertices, unit weights
  GraphSpec g(3, {{0, 1, 1.0}, {1, 2, 1.0}});
  const GsrConfig cfg = GsrConfig::with_derived_radius(3, 1, 0.7, 0.1, 0, 1);
  std::vector<bool> mask = {true, false, true};
  Eigen::VectorXd observed(2);
  observed << 0.5, 0.7;
  const ProblemSpec spec = build_gsr(cfg, g, mask, observed);
  CHECK(spec.grid.at(0, 0).out_shape().len() == 2);
  const auto& groups = spec.dual_fns[0].group_sizes();
  REQUIRE(groups.size() == 3);
  CHECK(groups[0] == 1);
  CHECK(groups[1] == 1);
  CHECK(groups[2] == 0);
  // constant signals have zero total variation
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(3, 0.8);
  CHECK(spec.dual_fns[0].eval(spec.grid.at(0, 0).forward(c)) == 0.0);
  CHECK(spec.grid.at(1, 0).norm_bound() == 1.0);
}

TEST_CASE("generators: determinism and ranges") {
  const VarShape cube = VarShape::cube(6, 5, 4);
  const Eigen::VectorXd a = gen_hsi_phantom(cube, 42);
  const Eigen::VectorXd b = gen_hsi_phantom(cube, 42);
  CHECK((a - b).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(a.minCoeff() >= 0.0);
  CHECK(a.maxCoeff() <= 1.0);
  CHECK((a - gen_hsi_phantom(cube, 43)).lpNorm<Eigen::Infinity>() > 0.0);

  const Eigen::VectorXd s1 = gen_stripes(cube, 0.3, 0.1, 7);
  CHECK((s1 - gen_stripes(cube, 0.3, 0.1, 7)).lpNorm<Eigen::Infinity>() == 0.0);
  // stripes are constant along the first axis
  const LinOp dv = diff_v(cube);
  CHECK(dv.forward(s1).lpNorm<Eigen::Infinity>() == 0.0);

  const GraphSpec g1 = gen_graph(30, 4, 11);
  const GraphSpec g2 = gen_graph(30, 4, 11);
  REQUIRE(g1.num_edges() == g2.num_edges());
  for (Index k = 0; k < g1.num_edges(); ++k) {
    CHECK(g1.edges()[static_cast<std::size_t>(k)].i == g2.edges()[static_cast<std::size_t>(k)].i);
    CHECK(g1.edges()[static_cast<std::size_t>(k)].w == g2.edges()[static_cast<std::size_t>(k)].w);
  }
  CHECK_THROWS_AS(gen_graph(5, 5, 1), StructuralError);

  const Eigen::VectorXd sig = gen_graph_signal(g1, 4, 13);
  CHECK((sig - gen_graph_signal(g1, 4, 13)).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(sig.minCoeff() >= 0.0);
  CHECK(sig.maxCoeff() <= 1.0);

  const Eigen::MatrixXd e = gen_endmembers(12, 4, 3);
  CHECK(e.minCoeff() > 0.0);
  for (Index c = 0; c < 4; ++c) CHECK(e.col(c).maxCoeff() == Catch::Approx(1.0).margin(1e-15));

  const Eigen::VectorXd ab = gen_abundances(10, 3, 5);
  CHECK(ab.minCoeff() >= 0.0);
  for (Index p = 0; p < 10; ++p) {
    double sum = 0.0;
    for (Index m = 0; m < 3; ++m) sum += ab(m * 10 + p);
    CHECK(sum <= 1.0 + 1e-12);
  }
}

TEST_CASE("graph generator: zero diagonal and symmetric support") {
  const GraphSpec g = gen_graph(25, 3, 99);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(25, 25);
  for (const GraphEdge& e : g.edges()) {
    CHECK(e.i != e.j);
    w(e.i, e.j) = e.w;
  }
  for (Index i = 0; i < 25; ++i)
    for (Index j = 0; j < 25; ++j) CHECK((w(i, j) != 0.0) == (w(j, i) != 0.0));
}

TEST_CASE("noise: identity at zero strength, empirical standard deviation") {
  auto rng = make_rng(71);
  const Eigen::VectorXd x = random_uniform_vector(1000, rng);
  CHECK((add_gaussian(x, 0.0, 1) - x).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((add_salt_pepper(x, 0.0, 1) - x).lpNorm<Eigen::Infinity>() == 0.0);

  const Eigen::VectorXd big = Eigen::VectorXd::Zero(1000000);
  const Eigen::VectorXd noisy = add_gaussian(big, 0.05, 12345);
  const double std_est = std::sqrt(noisy.squaredNorm() / static_cast<double>(noisy.size()));
  CHECK(std_est == Catch::Approx(0.05).epsilon(0.01));

  const Eigen::VectorXd sp = add_salt_pepper(x, 0.25, 9);
  Index changed = 0;
  for (Index k = 0; k < x.size(); ++k)
    if (sp(k) != x(k)) {
      ++changed;
      CHECK((sp(k) == 0.0 || sp(k) == 1.0));
    }
  CHECK(changed <= 250);
  CHECK(changed >= 200);  // a replaced entry can coincide with the old value
}

TEST_CASE("ground truth feasibility: exact without noise, bounded with noise") {
  int feasible_count = 0;
  const int seeds = 30;
  for (int s = 0; s < seeds; ++s) {
    MnrConfig cfg = MnrConfig::with_derived_radii(8, 8, 4, 0.005, 0.05, 0.1, 1000 + s);
    // noiseless observation: radii from the formulas with the configured sigma
    MnrConfig quiet = cfg;
    quiet.sigma = 0.0;
    quiet.p_s = 0.0;
    const MnrData data = make_mnr_data(quiet);
    const ProblemSpec spec = build_mnr(cfg, data.observed);
    feasible_count += feasible(spec, {data.u_true, data.s_true, data.l_true});
  }
  CHECK(feasible_count == seeds);

  // with noise the shrunken radii leave a bounded near-violation
  for (int s = 0; s < 10; ++s) {
    const MnrConfig cfg = MnrConfig::with_derived_radii(8, 8, 4, 0.005, 0.05, 0.1, 2000 + s);
    const MnrData data = make_mnr_data(cfg);
    const ProblemSpec spec = build_mnr(cfg, data.observed);
    const auto z = spec.grid.forward({data.u_true, data.s_true, data.l_true});
    CHECK((z[3] - data.observed).norm() <= 1.25 * cfg.eps);
    CHECK(data.s_true.lpNorm<1>() <= 1.25 * cfg.eta_s);
    CHECK(z[2].lpNorm<Eigen::Infinity>() == 0.0);  // stripes exactly vertical
  }

  for (int s = 0; s < 10; ++s) {
    GsrConfig cfg = GsrConfig::with_derived_radius(40, 4, 0.3, 0.1, 3000 + s, 4000 + s);
    GsrConfig quiet = cfg;
    quiet.sigma = 0.0;
    const GsrData data = make_gsr_data(quiet);
    const ProblemSpec spec = build_gsr(cfg, data.graph, data.mask, data.observed);
    CHECK(feasible(spec, {data.signal_true}));
  }
}

TEST_CASE("metrics: fixed values and the infinite flag") {
  const VarShape cube = VarShape::cube(10, 10, 3);
  Eigen::VectorXd ref = Eigen::VectorXd::Zero(cube.len());
  Eigen::VectorXd est = ref;
  // per-band squared error 1 over 100 pixels: mse 0.01 per band
  for (Index b = 0; b < 3; ++b) est(b * 100) = 1.0;
  CHECK(mpsnr(est, ref, cube) == Catch::Approx(20.0).margin(1e-12));
  CHECK(std::isinf(mpsnr(ref, ref, cube)));

  Eigen::VectorXd a(2), b(2);
  a << 10.0, 0.0;
  b << 10.0, 1.0;
  // ||a|| = 10, ||b - a|| = 1
  CHECK(snr(b, a) == Catch::Approx(10.0).margin(1e-12));
  CHECK(std::isinf(snr(a, a)));

  Eigen::VectorXd u = Eigen::VectorXd::Zero(200);
  Eigen::VectorXd v = u;
  v(0) = 1.0;  // squared error 1 over 200 vertices
  CHECK(psnr(v, u) == Catch::Approx(10.0 * std::log10(200.0)).margin(1e-12));

  // band order invariance under identical permutation of both arguments
  auto rng = make_rng(81);
  const Eigen::VectorXd x = random_uniform_vector(cube.len(), rng);
  const Eigen::VectorXd y = random_uniform_vector(cube.len(), rng);
  Eigen::VectorXd xp(cube.len()), yp(cube.len());
  const std::vector<Index> perm = {2, 0, 1};
  for (Index b = 0; b < 3; ++b) {
    xp.segment(b * 100, 100) = x.segment(perm[static_cast<std::size_t>(b)] * 100, 100);
    yp.segment(b * 100, 100) = y.segment(perm[static_cast<std::size_t>(b)] * 100, 100);
  }
  CHECK(mpsnr(xp, yp, cube) == Catch::Approx(mpsnr(x, y, cube)).margin(1e-12));
}

TEST_CASE("problem grids satisfy the operator invariants") {
  const MnrConfig mc = MnrConfig::with_derived_radii(5, 4, 3, 0.005, 0.05, 0.1, 6);
  const ProblemSpec mnr = build_mnr(mc, make_mnr_data(mc).observed);
  const UnmixConfig uc = UnmixConfig::with_derived_radius(3, 3, 7, 3, 0.05, 7);
  const UnmixData ud = make_unmix_data(uc);
  const ProblemSpec unmix = build_unmix(uc, ud.endmembers, ud.observed);
  const GsrConfig gc = GsrConfig::with_derived_radius(30, 4, 0.3, 0.1, 8, 9);
  const GsrData gd = make_gsr_data(gc);
  const ProblemSpec gsr = build_gsr(gc, gd.graph, gd.mask, gd.observed);
  for (const ProblemSpec* spec : {&mnr, &unmix, &gsr})
    for (Index j = 0; j < spec->grid.num_dual(); ++j)
      for (Index i = 0; i < spec->grid.num_primal(); ++i) {
        if (!spec->grid.present(j, i)) continue;
        const LinOp& op = spec->grid.at(j, i);
        CHECK(adjoint_consistency_check(op, 100, 555 + 7 * j + i) <= 1e-10);
        CHECK(power_iteration_norm(op, 200) <= op.norm_bound() + 1e-6);
      }
}
