#pragma once

#include <cmath>
#include <utility>

#include "ppds/generators.hpp"
#include "ppds/solver.hpp"

namespace ppds {

// ---------------------------------------------------------------------------
// Mixed noise removal: recover a cube u together with a sparse component s
// and a stripe component l from v = u + s + l + noise, with an anisotropic
// spatio-spectral total variation on u, an l1 budget on s, vertical
// constancy of l, and an l2 data-fidelity ball.
// ---------------------------------------------------------------------------

struct MnrConfig {
  Index n1 = 16, n2 = 16, n3 = 8;
  double lambda = 0.005;
  double sigma = 0.05;
  double p_s = 0.1;
  double eta_s = 0.0;  // l1-ball radius for s
  double eps = 0.0;    // l2-ball radius for the data term
  std::uint64_t seed = 0;

  VarShape cube() const { return VarShape::cube(n1, n2, n3); }

  void validate() const {
    if (n1 < 1 || n2 < 1 || n3 < 1) throw StructuralError("MnrConfig: dims must be >= 1");
    if (!(lambda > 0.0)) throw DomainError("MnrConfig: lambda must be positive");
    if (!(p_s >= 0.0 && p_s < 1.0)) throw DomainError("MnrConfig: p_s must be in [0,1)");
    if (!(eta_s >= 0.0) || !(eps >= 0.0)) throw DomainError("MnrConfig: radii must be nonnegative");
  }

  /// Radii from the standard formulas: eta_s = 0.5*0.95*p_s*N and
  /// eps = 0.95*sigma*sqrt((1-p_s)*N).
  static MnrConfig with_derived_radii(Index n1, Index n2, Index n3, double lambda, double sigma,
                                      double p_s, std::uint64_t seed) {
    MnrConfig c;
    c.n1 = n1;
    c.n2 = n2;
    c.n3 = n3;
    c.lambda = lambda;
    c.sigma = sigma;
    c.p_s = p_s;
    c.seed = seed;
    const double n = static_cast<double>(n1) * static_cast<double>(n2) * static_cast<double>(n3);
    c.eta_s = 0.5 * 0.95 * p_s * n;
    c.eps = 0.95 * sigma * std::sqrt((1.0 - p_s) * n);
    return c;
  }
};

struct MnrData {
  Eigen::VectorXd u_true, s_true, l_true, observed;
};

/// Ground truth plus observation. The impulsive entries absorb whatever
/// they overwrite, so v - (u + s + l) is the Gaussian noise restricted to
/// the untouched entries.
inline MnrData make_mnr_data(const MnrConfig& cfg, double stripe_fraction = 0.2,
                             double stripe_amplitude = 0.1) {
  cfg.validate();
  MnrData d;
  d.u_true = gen_hsi_phantom(cfg.cube(), cfg.seed);
  d.l_true = gen_stripes(cfg.cube(), stripe_fraction, stripe_amplitude, cfg.seed + 1);
  const Eigen::VectorXd clean = d.u_true + d.l_true;
  const Eigen::VectorXd noisy = add_gaussian(clean, cfg.sigma, cfg.seed + 2);
  d.observed = add_salt_pepper(noisy, cfg.p_s, cfg.seed + 3);
  d.s_true = d.observed - noisy;
  return d;
}

inline ProblemSpec build_mnr(const MnrConfig& cfg, const Eigen::VectorXd& observed) {
  cfg.validate();
  const VarShape cube = cfg.cube();
  if (observed.size() != cube.len())
    throw StructuralError("build_mnr: observed cube does not match configured dims");
  OpGrid grid({cube, cube, cube}, {cube, cube, cube, cube});
  grid.set(0, 0, compose(diff_v(cube), diff_b(cube)));
  grid.set(1, 0, compose(diff_h(cube), diff_b(cube)));
  grid.set(2, 2, diff_v(cube));
  grid.set(3, 0, identity_op(cube));
  grid.set(3, 1, identity_op(cube));
  grid.set(3, 2, identity_op(cube));
  ProblemSpec spec{{ProxFn::zero(), ProxFn::ind_l1_ball(cfg.eta_s), ProxFn::weighted_l1(cfg.lambda)},
                   {ProxFn::l1(), ProxFn::l1(), ProxFn::ind_zero(),
                    ProxFn::ind_l2_ball(observed, cfg.eps)},
                   std::move(grid)};
  spec.validate();
  return spec;
}

// ---------------------------------------------------------------------------
// Unmixing: nonnegative abundances with a group-sparse (one group per
// endmember) penalty, observed through a block-diagonal endmember matrix
// inside an l2 data-fidelity ball. Abundances are stored endmember-major.
// ---------------------------------------------------------------------------

struct UnmixConfig {
  Index n1 = 16, n2 = 16;
  Index bands = 32;
  Index endmembers = 4;
  double sigma = 0.05;
  double eps = 0.0;
  std::uint64_t seed = 0;

  Index pixels() const { return n1 * n2; }

  void validate() const {
    if (n1 < 1 || n2 < 1 || bands < 1 || endmembers < 1)
      throw StructuralError("UnmixConfig: sizes must be >= 1");
    if (!(eps >= 0.0)) throw DomainError("UnmixConfig: eps must be nonnegative");
  }

  /// eps = 0.9*sigma*sqrt(N1*N2*N3) with N3 the band count.
  static UnmixConfig with_derived_radius(Index n1, Index n2, Index bands, Index endmembers,
                                         double sigma, std::uint64_t seed) {
    UnmixConfig c;
    c.n1 = n1;
    c.n2 = n2;
    c.bands = bands;
    c.endmembers = endmembers;
    c.sigma = sigma;
    c.seed = seed;
    const double n = static_cast<double>(n1) * static_cast<double>(n2) * static_cast<double>(bands);
    c.eps = 0.9 * sigma * std::sqrt(n);
    return c;
  }
};

struct UnmixData {
  Eigen::MatrixXd endmembers;     // bands x endmembers
  Eigen::VectorXd abund_true;     // endmember-major
  Eigen::VectorXd observed;       // pixel-major spectra
};

inline UnmixData make_unmix_data(const UnmixConfig& cfg) {
  cfg.validate();
  UnmixData d;
  d.endmembers = gen_endmembers(cfg.bands, cfg.endmembers, cfg.seed);
  d.abund_true = gen_abundances(cfg.pixels(), cfg.endmembers, cfg.seed + 1);
  const LinOp mix = compose(blockdiag_matrix_op(d.endmembers, cfg.pixels()),
                            transpose_reshape_op(cfg.pixels(), cfg.endmembers));
  d.observed = add_gaussian(mix.forward(d.abund_true), cfg.sigma, cfg.seed + 2);
  return d;
}

inline ProblemSpec build_unmix(const UnmixConfig& cfg, const Eigen::MatrixXd& endmembers,
                               const Eigen::VectorXd& observed) {
  cfg.validate();
  if (endmembers.rows() != cfg.bands || endmembers.cols() != cfg.endmembers)
    throw StructuralError("build_unmix: endmember matrix does not match configured sizes");
  const Index p = cfg.pixels();
  if (observed.size() != p * cfg.bands)
    throw StructuralError("build_unmix: observed image does not match configured sizes");
  const VarShape a_shape = VarShape::vec(p * cfg.endmembers);
  OpGrid grid({a_shape}, {VarShape::vec(p * cfg.bands), a_shape});
  grid.set(0, 0, compose(blockdiag_matrix_op(endmembers, p),
                         transpose_reshape_op(p, cfg.endmembers)));
  grid.set(1, 0, identity_op(a_shape));
  ProblemSpec spec{{ProxFn::group_l12_uniform(1.0, p, cfg.endmembers)},
                   {ProxFn::ind_l2_ball(observed, cfg.eps), ProxFn::ind_nonneg()},
                   std::move(grid)};
  spec.validate();
  return spec;
}

// ---------------------------------------------------------------------------
// Graph signal recovery: total variation over weighted difference blocks,
// sampled entries constrained to an l2 ball around the observation.
// ---------------------------------------------------------------------------

struct GsrConfig {
  Index num_vertices = 200;
  int knn = 6;
  double rate = 0.2;
  double sigma = 0.1;
  double eps = 0.0;
  int pieces = 5;
  std::uint64_t graph_seed = 0;
  std::uint64_t signal_seed = 1;

  Index num_sampled() const {
    return std::max<Index>(
        1, static_cast<Index>(std::llround(rate * static_cast<double>(num_vertices))));
  }

  void validate() const {
    if (num_vertices < 1) throw StructuralError("GsrConfig: need at least one vertex");
    if (!(rate > 0.0 && rate <= 1.0)) throw DomainError("GsrConfig: rate must be in (0,1]");
    if (!(eps >= 0.0)) throw DomainError("GsrConfig: eps must be nonnegative");
  }

  /// eps = 0.9*sigma*sqrt(M) with M the sampled count.
  static GsrConfig with_derived_radius(Index num_vertices, int knn, double rate, double sigma,
                                       std::uint64_t graph_seed, std::uint64_t signal_seed) {
    GsrConfig c;
    c.num_vertices = num_vertices;
    c.knn = knn;
    c.rate = rate;
    c.sigma = sigma;
    c.graph_seed = graph_seed;
    c.signal_seed = signal_seed;
    c.eps = 0.9 * sigma * std::sqrt(static_cast<double>(c.num_sampled()));
    return c;
  }
};

struct GsrData {
  GraphSpec graph;
  Eigen::VectorXd signal_true;
  std::vector<bool> mask;
  Eigen::VectorXd observed;  // sampled entries only
};

inline GsrData make_gsr_data(const GsrConfig& cfg) {
  cfg.validate();
  GraphSpec graph = gen_graph(cfg.num_vertices, cfg.knn, cfg.graph_seed);
  Eigen::VectorXd signal = gen_graph_signal(graph, cfg.pieces, cfg.signal_seed);
  std::vector<bool> mask = sampling_mask(cfg.num_vertices, cfg.rate, cfg.signal_seed + 1);
  const LinOp phi = sampling_op(mask);
  Eigen::VectorXd observed =
      add_gaussian(phi.forward(signal), cfg.sigma, cfg.signal_seed + 2);
  return GsrData{std::move(graph), std::move(signal), std::move(mask), std::move(observed)};
}

inline ProblemSpec build_gsr(const GsrConfig& cfg, const GraphSpec& graph,
                             const std::vector<bool>& mask, const Eigen::VectorXd& observed) {
  cfg.validate();
  if (static_cast<Index>(mask.size()) != graph.num_vertices())
    throw StructuralError("build_gsr: mask length does not match graph");
  const LinOp dg = graph_diff(graph);
  const LinOp phi = sampling_op(mask);
  if (observed.size() != phi.out_shape().len())
    throw StructuralError("build_gsr: observed length does not match mask");
  const VarShape u_shape = VarShape::vec(graph.num_vertices());
  OpGrid grid({u_shape}, {dg.out_shape(), phi.out_shape()});
  grid.set(0, 0, dg);
  grid.set(1, 0, phi);
  // Per-vertex difference blocks become the groups; isolated vertices
  // contribute empty groups, which the group prox skips.
  std::vector<Index> groups = graph.out_degrees();
  ProblemSpec spec{{ProxFn::zero()},
                   {ProxFn::group_l12(1.0, std::move(groups)),
                    ProxFn::ind_l2_ball(observed, cfg.eps)},
                   std::move(grid)};
  spec.validate();
  return spec;
}

// ---------------------------------------------------------------------------
// Quality metrics. Exact matches return the infinite flag, which the CSV
// layer serializes as an empty field.
// ---------------------------------------------------------------------------

/// Mean over bands of 10 log10(N1*N2 / ||err_band||^2).
inline double mpsnr(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference,
                    const VarShape& cube) {
  if (cube.rank() != 3) throw StructuralError("mpsnr: need a 3-d shape");
  if (estimate.size() != cube.len() || reference.size() != cube.len())
    throw StructuralError("mpsnr: shape mismatch");
  const Index n1 = cube.dim(0), n2 = cube.dim(1), n3 = cube.dim(2);
  const Index band_len = n1 * n2;
  double acc = 0.0;
  for (Index k = 0; k < n3; ++k) {
    const double err =
        (estimate.segment(k * band_len, band_len) - reference.segment(k * band_len, band_len))
            .squaredNorm();
    if (err == 0.0) return kInf;
    acc += 10.0 * std::log10(static_cast<double>(band_len) / err);
  }
  return acc / static_cast<double>(n3);
}

/// 10 log10(||reference|| / ||estimate - reference||), unsquared ratio.
inline double snr(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference) {
  if (estimate.size() != reference.size()) throw StructuralError("snr: shape mismatch");
  const double err = (estimate - reference).norm();
  if (err == 0.0) return kInf;
  return 10.0 * std::log10(reference.norm() / err);
}

/// 10 log10(N / ||estimate - reference||^2).
inline double psnr(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference) {
  if (estimate.size() != reference.size()) throw StructuralError("psnr: shape mismatch");
  const double err = (estimate - reference).squaredNorm();
  if (err == 0.0) return kInf;
  return 10.0 * std::log10(static_cast<double>(estimate.size()) / err);
}

}  // namespace ppds
