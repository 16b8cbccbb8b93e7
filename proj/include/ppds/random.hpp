#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>

namespace ppds {

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline Eigen::VectorXd random_normal_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index k = 0; k < n; ++k) v(k) = dist(rng);
  return v;
}

inline Eigen::VectorXd random_normal_vector(Eigen::Index n, std::uint64_t seed) {
  auto rng = make_rng(seed);
  return random_normal_vector(n, rng);
}

inline Eigen::VectorXd random_uniform_vector(Eigen::Index n, std::mt19937_64& rng,
                                             double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Eigen::VectorXd v(n);
  for (Eigen::Index k = 0; k < n; ++k) v(k) = dist(rng);
  return v;
}

}  // namespace ppds
