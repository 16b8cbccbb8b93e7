#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ppds/diff_ops.hpp"
#include "ppds/random.hpp"
#include "ppds/shape.hpp"

namespace ppds {

/// Piecewise-constant spatial regions (Voronoi cells of random centers)
/// with a smooth spectrum per region; values stay in [0, 1].
inline Eigen::VectorXd gen_hsi_phantom(const VarShape& cube, std::uint64_t seed) {
  if (cube.rank() != 3) throw StructuralError("gen_hsi_phantom: need a 3-d shape");
  const Index n1 = cube.dim(0), n2 = cube.dim(1), n3 = cube.dim(2);
  if (n1 < 1 || n2 < 1 || n3 < 1) throw StructuralError("gen_hsi_phantom: dims must be >= 1");
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const int regions = 5;
  std::vector<double> cx(regions), cy(regions), base(regions), amp(regions), freq(regions),
      phase(regions), tilt(regions);
  for (int r = 0; r < regions; ++r) {
    cx[r] = uni(rng);
    cy[r] = uni(rng);
    base[r] = 0.35 + 0.3 * uni(rng);
    amp[r] = 0.05 + 0.15 * uni(rng);
    freq[r] = 1.0 + 2.0 * uni(rng);
    phase[r] = 2.0 * M_PI * uni(rng);
    tilt[r] = 0.2 * (uni(rng) - 0.5);
  }
  Eigen::VectorXd out(cube.len());
  for (Index j = 0; j < n2; ++j)
    for (Index i = 0; i < n1; ++i) {
      const double px = n1 > 1 ? double(i) / double(n1 - 1) : 0.5;
      const double py = n2 > 1 ? double(j) / double(n2 - 1) : 0.5;
      int best = 0;
      double bd = 1e30;
      for (int r = 0; r < regions; ++r) {
        const double d = (px - cx[r]) * (px - cx[r]) + (py - cy[r]) * (py - cy[r]);
        if (d < bd) {
          bd = d;
          best = r;
        }
      }
      for (Index k = 0; k < n3; ++k) {
        const double s = n3 > 1 ? double(k) / double(n3 - 1) : 0.5;
        double v = base[best] + amp[best] * std::sin(2.0 * M_PI * freq[best] * s + phase[best]) +
                   tilt[best] * s;
        v = std::clamp(v, 0.0, 1.0);
        out(i + n1 * (j + n2 * k)) = v;
      }
    }
  return out;
}

/// Stripe component: constant along the first (vertical) axis, nonzero on
/// a random fraction of the (column, band) lines.
inline Eigen::VectorXd gen_stripes(const VarShape& cube, double column_fraction, double amplitude,
                                   std::uint64_t seed) {
  if (cube.rank() != 3) throw StructuralError("gen_stripes: need a 3-d shape");
  if (!(column_fraction >= 0.0 && column_fraction <= 1.0))
    throw DomainError("gen_stripes: fraction must be in [0,1]");
  const Index n1 = cube.dim(0), n2 = cube.dim(1), n3 = cube.dim(2);
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(cube.len());
  for (Index k = 0; k < n3; ++k)
    for (Index j = 0; j < n2; ++j) {
      const bool hit = uni(rng) < column_fraction;
      const double level = hit ? amplitude * 2.0 * (uni(rng) - 0.5) : 0.0;
      if (!hit) continue;
      for (Index i = 0; i < n1; ++i) out(i + n1 * (j + n2 * k)) = level;
    }
  return out;
}

/// k-nearest-neighbor graph of random points in the unit square with
/// Gaussian-kernel weights; the support is symmetrized and the diagonal
/// stays empty.
inline GraphSpec gen_graph(Index num_vertices, int k, std::uint64_t seed) {
  if (num_vertices < 1) throw StructuralError("gen_graph: need at least one vertex");
  if (k < 1) throw StructuralError("gen_graph: k must be >= 1");
  if (static_cast<Index>(k) >= num_vertices)
    throw StructuralError("gen_graph: k must be smaller than the vertex count");
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<double> px(static_cast<std::size_t>(num_vertices)),
      py(static_cast<std::size_t>(num_vertices));
  for (Index v = 0; v < num_vertices; ++v) {
    px[static_cast<std::size_t>(v)] = uni(rng);
    py[static_cast<std::size_t>(v)] = uni(rng);
  }
  std::vector<std::vector<Index>> nbr(static_cast<std::size_t>(num_vertices));
  double mean_d = 0.0;
  Index pairs = 0;
  for (Index v = 0; v < num_vertices; ++v) {
    std::vector<std::pair<double, Index>> d;
    d.reserve(static_cast<std::size_t>(num_vertices) - 1);
    for (Index u = 0; u < num_vertices; ++u) {
      if (u == v) continue;
      const double dx = px[static_cast<std::size_t>(v)] - px[static_cast<std::size_t>(u)];
      const double dy = py[static_cast<std::size_t>(v)] - py[static_cast<std::size_t>(u)];
      d.push_back({std::sqrt(dx * dx + dy * dy), u});
    }
    std::partial_sort(d.begin(), d.begin() + k, d.end());
    for (int t = 0; t < k; ++t) {
      nbr[static_cast<std::size_t>(v)].push_back(d[static_cast<std::size_t>(t)].second);
      mean_d += d[static_cast<std::size_t>(t)].first;
      ++pairs;
    }
  }
  const double kernel = std::max(mean_d / static_cast<double>(pairs), 1e-12);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(num_vertices, num_vertices);
  for (Index v = 0; v < num_vertices; ++v)
    for (Index u : nbr[static_cast<std::size_t>(v)]) {
      const double dx = px[static_cast<std::size_t>(v)] - px[static_cast<std::size_t>(u)];
      const double dy = py[static_cast<std::size_t>(v)] - py[static_cast<std::size_t>(u)];
      const double dist2 = dx * dx + dy * dy;
      const double val = std::exp(-dist2 / (2.0 * kernel * kernel));
      w(v, u) = std::max(w(v, u), val);
      w(u, v) = std::max(w(u, v), val);  // symmetric support
    }
  return GraphSpec::from_weight_matrix(w);
}

/// Piecewise-smooth signal: constant base per vertex cluster (grown from
/// random seeds by breadth-first search) plus a mild taper with hop depth.
inline Eigen::VectorXd gen_graph_signal(const GraphSpec& g, int pieces, std::uint64_t seed) {
  if (pieces < 1) throw StructuralError("gen_graph_signal: pieces must be >= 1");
  const Index n = g.num_vertices();
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<std::vector<Index>> adj(static_cast<std::size_t>(n));
  for (const GraphEdge& e : g.edges()) adj[static_cast<std::size_t>(e.i)].push_back(e.j);
  std::vector<int> owner(static_cast<std::size_t>(n), -1);
  std::vector<Index> depth(static_cast<std::size_t>(n), 0);
  std::vector<Index> frontier;
  const int clusters = static_cast<int>(std::min<Index>(pieces, n));
  std::vector<double> base(static_cast<std::size_t>(clusters));
  for (int c = 0; c < clusters; ++c) {
    base[static_cast<std::size_t>(c)] = 0.15 + 0.7 * uni(rng);
    Index s = static_cast<Index>(uni(rng) * static_cast<double>(n));
    s = std::min(s, n - 1);
    while (owner[static_cast<std::size_t>(s)] >= 0) s = (s + 1) % n;
    owner[static_cast<std::size_t>(s)] = c;
    frontier.push_back(s);
  }
  std::size_t head = 0;
  while (head < frontier.size()) {
    const Index v = frontier[head++];
    for (Index u : adj[static_cast<std::size_t>(v)]) {
      if (owner[static_cast<std::size_t>(u)] >= 0) continue;
      owner[static_cast<std::size_t>(u)] = owner[static_cast<std::size_t>(v)];
      depth[static_cast<std::size_t>(u)] = depth[static_cast<std::size_t>(v)] + 1;
      frontier.push_back(u);
    }
  }
  Eigen::VectorXd x(n);
  for (Index v = 0; v < n; ++v) {
    const int c = std::max(owner[static_cast<std::size_t>(v)], 0);
    const double taper = 0.04 * std::cos(0.35 * static_cast<double>(depth[static_cast<std::size_t>(v)]));
    x(v) = std::clamp(base[static_cast<std::size_t>(c)] + taper, 0.0, 1.0);
  }
  return x;
}

/// Smooth nonnegative spectra, one column per endmember, each normalized
/// to unit maximum.
inline Eigen::MatrixXd gen_endmembers(Index bands, Index count, std::uint64_t seed) {
  if (bands < 1 || count < 1) throw StructuralError("gen_endmembers: sizes must be >= 1");
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Eigen::MatrixXd e(bands, count);
  for (Index c = 0; c < count; ++c) {
    const double f = 0.8 + 1.8 * uni(rng);
    const double ph = 2.0 * M_PI * uni(rng);
    const double bump = 0.15 + 0.7 * uni(rng);
    const double width = 0.05 + 0.15 * uni(rng);
    for (Index b = 0; b < bands; ++b) {
      const double s = bands > 1 ? double(b) / double(bands - 1) : 0.5;
      double v = 0.45 + 0.35 * std::sin(2.0 * M_PI * f * s + ph) +
                 0.6 * std::exp(-(s - bump) * (s - bump) / (2.0 * width * width));
      e(b, c) = std::max(v, 0.02);
    }
    e.col(c) /= e.col(c).maxCoeff();
  }
  return e;
}

/// Sparse nonnegative abundances with per-pixel sum at most one, stored
/// endmember-major: entry e*pixels + p is the abundance of endmember e at
/// pixel p (one contiguous group per endmember).
inline Eigen::VectorXd gen_abundances(Index pixels, Index endmembers, std::uint64_t seed) {
  if (pixels < 1 || endmembers < 1) throw StructuralError("gen_abundances: sizes must be >= 1");
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(endmembers) - 1);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(pixels * endmembers);
  for (Index p = 0; p < pixels; ++p) {
    const int active = 1 + (uni(rng) < 0.5 ? 1 : 0);
    const double total = 0.55 + 0.4 * uni(rng);
    double weights[2] = {uni(rng) + 0.05, uni(rng) + 0.05};
    int e0 = pick(rng);
    int e1 = pick(rng);
    if (active == 1) {
      a(static_cast<Index>(e0) * pixels + p) = total;
    } else {
      if (e1 == e0) e1 = (e0 + 1) % static_cast<int>(endmembers);
      const double s = weights[0] + weights[1];
      a(static_cast<Index>(e0) * pixels + p) = total * weights[0] / s;
      a(static_cast<Index>(e1) * pixels + p) = total * weights[1] / s;
    }
  }
  return a;
}

inline Eigen::VectorXd add_gaussian(const Eigen::VectorXd& x, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw DomainError("add_gaussian: sigma must be nonnegative");
  if (sigma == 0.0) return x;
  auto rng = make_rng(seed);
  return x + sigma * random_normal_vector(x.size(), rng);
}

/// Chooses round(p*n) distinct entries and sets each to 0 or 1 with equal
/// probability.
inline Eigen::VectorXd add_salt_pepper(const Eigen::VectorXd& x, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p < 1.0)) throw DomainError("add_salt_pepper: ratio must be in [0,1)");
  if (p == 0.0) return x;
  const Index n = x.size();
  const Index count = static_cast<Index>(std::llround(p * static_cast<double>(n)));
  if (count == 0) return x;
  auto rng = make_rng(seed);
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  for (Index k = 0; k < count; ++k) {
    std::uniform_int_distribution<Index> pick(k, n - 1);
    std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  std::bernoulli_distribution coin(0.5);
  Eigen::VectorXd out = x;
  for (Index k = 0; k < count; ++k) out(idx[static_cast<std::size_t>(k)]) = coin(rng) ? 1.0 : 0.0;
  return out;
}

/// Deterministic sampling pattern with round(rate*n) selected entries
/// (at least one).
inline std::vector<bool> sampling_mask(Index n, double rate, std::uint64_t seed) {
  if (!(rate > 0.0 && rate <= 1.0)) throw DomainError("sampling_mask: rate must be in (0,1]");
  const Index count = std::max<Index>(1, static_cast<Index>(std::llround(rate * static_cast<double>(n))));
  auto rng = make_rng(seed);
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  for (Index k = 0; k < count; ++k) {
    std::uniform_int_distribution<Index> pick(k, n - 1);
    std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  std::vector<bool> mask(static_cast<std::size_t>(n), false);
  for (Index k = 0; k < count; ++k) mask[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])] = true;
  return mask;
}

}  // namespace ppds
