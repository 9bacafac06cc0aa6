#pragma once

// PCA used to shrink unrolled poses before SOM clustering.

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "posehar/pose.hpp"

namespace posehar {

/// Unrolled pose without the root: (x1,y1,x3,y3,...,x14,y14).
inline constexpr int kFeatureDim = 2 * kNumLandmarks - 2;

using FeatureVector = Eigen::Matrix<double, kFeatureDim, 1>;

/// Absent landmarks enter as 0, the root-relative origin.
FeatureVector unroll(const Pose::Coords& coords, const LandmarkSet& missing = {});
inline FeatureVector unroll(const Pose& pose) { return unroll(pose.coords(), {}); }

/// Inverse of unroll: the root goes back to (0,0).
Pose::Coords reroll(const FeatureVector& v);

template <typename Scalar>
struct BasicPcaModel {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Vector mean;
  /// One orthonormal principal axis per column, by descending variance.
  Matrix components;
  /// Variance along each retained axis.
  Vector eigenvalues;
  Scalar total_variance = 0;

  int dim() const noexcept { return static_cast<int>(mean.size()); }
  int rank() const noexcept { return static_cast<int>(components.cols()); }

  template <typename Derived>
  Vector project(const Eigen::MatrixBase<Derived>& v) const {
    return components.transpose() * (v - mean);
  }

  template <typename Derived>
  Vector reconstruct(const Eigen::MatrixBase<Derived>& reduced) const {
    return mean + components * reduced;
  }

  /// Projects every row of `data`.
  template <typename Derived>
  Matrix project_rows(const Eigen::MatrixBase<Derived>& data) const {
    return (data.rowwise() - mean.transpose()) * components;
  }
};

using PcaModel = BasicPcaModel<double>;

/// Flips each column so that its largest-magnitude entry (first one on ties) is positive.
template <typename Derived>
void canonicalize_signs(Eigen::MatrixBase<Derived>& axes) {
  for (Eigen::Index c = 0; c < axes.cols(); ++c) {
    Eigen::Index best = 0;
    for (Eigen::Index r = 1; r < axes.rows(); ++r)
      if (std::abs(axes(r, c)) > std::abs(axes(best, c))) best = r;
    if (axes(best, c) < 0) axes.col(c) = -axes.col(c);
  }
}

/// Fits a rank-`m` PCA on the rows of `data` via the sample covariance (1/(n-1)).
/// Requires at least m+1 rows and m < dimension; throws InsufficientData otherwise.
template <typename Derived>
BasicPcaModel<typename Derived::Scalar> fit_pca(const Eigen::MatrixBase<Derived>& data, int m) {
  using Scalar = typename Derived::Scalar;
  using Model = BasicPcaModel<Scalar>;
  using Matrix = typename Model::Matrix;

  const Eigen::Index n = data.rows();
  const Eigen::Index dim = data.cols();
  if (m < 1 || m >= dim)
    throw Error(Errc::InsufficientData,
                "PCA rank " + std::to_string(m) + " must lie in [1, " + std::to_string(dim) + ")");
  if (n < m + 1)
    throw Error(Errc::InsufficientData, "PCA of rank " + std::to_string(m) + " needs at least " +
                                            std::to_string(m + 1) + " rows, got " +
                                            std::to_string(n));

  Model model;
  model.mean = data.colwise().mean().transpose();
  const Matrix centered = data.rowwise() - model.mean.transpose();
  const Matrix cov = (centered.transpose() * centered) / static_cast<Scalar>(n - 1);

  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
  // Ascending order from the solver; keep the top m, largest first.
  model.components = solver.eigenvectors().rightCols(m).rowwise().reverse();
  model.eigenvalues = solver.eigenvalues().tail(m).reverse();
  canonicalize_signs(model.components);
  model.total_variance = cov.trace();
  return model;
}

}  // namespace posehar
