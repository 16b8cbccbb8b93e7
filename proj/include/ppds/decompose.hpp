#pragma once

#include <Eigen/Core>
#include <Eigen/SVD>
#include <cmath>
#include <utility>

#include "ppds/errors.hpp"

namespace ppds {

/// Splits A into B*C with ||B|| = sigma1(A)^(1-beta) and
/// ||C|| = sigma1(A)^beta via the singular value decomposition
/// B = U S^(1-beta), C = S^beta V^T (the free unitary factor between the
/// two halves is fixed to the identity). Singular values below
/// sigma1 * 1e-15 are truncated.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> lemma1_decompose(const Eigen::MatrixXd& a,
                                                                    double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw DomainError("lemma1_decompose: beta must be in [0,1]");
  if (!a.allFinite()) throw NumericError("lemma1_decompose: non-finite entries");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double sigma1 = sv.size() > 0 ? sv(0) : 0.0;
  if (sigma1 == 0.0) throw DegenerateError("lemma1_decompose: zero matrix");
  Eigen::Index r = 0;
  while (r < sv.size() && sv(r) > sigma1 * 1e-15) ++r;
  Eigen::VectorXd left(r), right(r);
  for (Eigen::Index k = 0; k < r; ++k) {
    left(k) = std::pow(sv(k), 1.0 - beta);
    right(k) = std::pow(sv(k), beta);
  }
  Eigen::MatrixXd b = svd.matrixU().leftCols(r) * left.asDiagonal();
  Eigen::MatrixXd c = right.asDiagonal() * svd.matrixV().leftCols(r).transpose();
  return {std::move(b), std::move(c)};
}

}  // namespace ppds
