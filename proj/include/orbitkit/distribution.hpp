#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "orbitkit/fields.hpp"
#include "orbitkit/space.hpp"

namespace orbitkit {

/// Singular values below rel_tol * (largest singular value) count as zero.
inline constexpr double kRankTolerance = 1e-8;

inline int numerical_rank(const Matrix& m, double rel_tol = kRankTolerance) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > rel_tol * sv(0)) ++r;
  }
  return r;
}

/// Spanning vectors Y(x) of a characteristic distribution at one point, with
/// the fields that produced them and a least-norm coefficient solver.
struct DistributionBasis {
  Vector anchor;
  Matrix vectors;
  std::vector<std::string> source_labels;
  std::vector<VectorField> sources;
  int rank = 0;

  struct Representation {
    L1Coefficients coefficients;
    double residual = 0.0;
  };

  /// Least-norm coefficients c with vectors * c closest to v.
  Representation solve(const Vector& v) const {
    if (vectors.cols() == 0) return {{}, v.norm()};
    Eigen::JacobiSVD<Matrix> svd(vectors, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv(0) > 0.0) svd.setThreshold(kRankTolerance);
    const Vector c = sv(0) > 0.0 ? Vector(svd.solve(v)) : Vector::Zero(vectors.cols());
    return {L1Coefficients::from_dense(c), (vectors * c - v).norm()};
  }

  /// ||v - P v|| / ||v|| with P the orthogonal projector onto the span; zero
  /// for (numerically) zero v.
  double relative_residual(const Vector& v) const {
    const double nv = v.norm();
    if (nv < 1e-12) return 0.0;
    return solve(v).residual / nv;
  }

  double condition_number() const {
    if (vectors.cols() == 0) return 1.0;
    Eigen::JacobiSVD<Matrix> svd(vectors);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    return smin > 0.0 ? sv(0) / smin : HUGE_VAL;
  }

  /// Finite stand-in for the symmetric unconditional basis hypothesis: the
  /// spanning vectors are independent and the solver is well conditioned.
  bool basis_well_conditioned() const {
    return rank == static_cast<int>(vectors.cols()) && condition_number() < 1e6;
  }
};

inline DistributionBasis make_basis(const Vector& anchor, std::vector<VectorField> sources) {
  DistributionBasis b;
  b.anchor = anchor;
  b.vectors = Matrix(anchor.size(), static_cast<Eigen::Index>(sources.size()));
  for (std::size_t i = 0; i < sources.size(); ++i) {
    b.vectors.col(static_cast<Eigen::Index>(i)) = sources[i].eval(anchor);
    b.source_labels.push_back(sources[i].label());
  }
  b.sources = std::move(sources);
  b.rank = numerical_rank(b.vectors);
  return b;
}

/// Nested distributions D^1 ⊆ D^2 ⊆ ... generated by iterated brackets.
struct BracketChain {
  Vector anchor;
  std::vector<DistributionBasis> generations;
  std::vector<int> rank_profile;
  /// Generation at which the rank reached the chart dimension, 0 if never.
  int saturated_at = 0;
};

}  // namespace orbitkit
