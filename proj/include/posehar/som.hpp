#pragma once

// Self-organizing map on an m-dimensional square lattice of q^m units.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "posehar/error.hpp"
#include "posehar/random.hpp"

namespace posehar {

enum class SomInit { Linear, Random };

struct SomConfig {
  int q = 4;
  /// Lattice dimensionality; equals the PCA rank of the inputs.
  int m = 3;
  int epochs = 20;
  double lr0 = 0.5;
  /// Initial neighbourhood radius in lattice steps; <= 0 selects q/2.
  double radius0 = 0.0;
  SomInit init = SomInit::Linear;
  std::uint64_t seed = 0;

  double initial_radius() const { return radius0 > 0 ? radius0 : 0.5 * q; }
  int units() const;
  void validate() const;
};

template <typename Scalar>
struct BasicSomResult {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  /// One unit weight per row, q^m rows.
  Matrix units;
  /// Best-matching unit of each input row.
  std::vector<int> assignment;
  /// Units after initialization, before any update.
  Matrix initial_units;
};

using SomResult = BasicSomResult<double>;

/// Integer lattice coordinates of unit `index` (first coordinate varies fastest).
std::vector<int> lattice_coords(int index, int q, int m);

/// Index of the nearest unit (row of `units`) to `x`; ties go to the lowest index.
template <typename UnitsDerived, typename PointDerived>
int best_matching_unit(const Eigen::MatrixBase<UnitsDerived>& units,
                       const Eigen::MatrixBase<PointDerived>& x) {
  int best = 0;
  auto best_d = std::numeric_limits<typename UnitsDerived::Scalar>::infinity();
  for (Eigen::Index u = 0; u < units.rows(); ++u) {
    const auto d = (units.row(u) - x.transpose()).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(u);
    }
  }
  return best;
}

/// Mean Euclidean distance from each row of `data` to its best-matching unit.
template <typename UnitsDerived, typename DataDerived>
typename DataDerived::Scalar quantization_error(const Eigen::MatrixBase<UnitsDerived>& units,
                                                const Eigen::MatrixBase<DataDerived>& data) {
  typename DataDerived::Scalar total = 0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const int u = best_matching_unit(units, data.row(i).transpose());
    total += (units.row(u) - data.row(i)).norm();
  }
  return data.rows() > 0 ? total / static_cast<typename DataDerived::Scalar>(data.rows()) : 0;
}

namespace detail {

// Lattice spanning +-sqrt(lambda_k) along the slice's principal axes, centred on the mean.
template <typename Matrix>
Matrix linear_init(const Matrix& data, int q, int m) {
  using Scalar = typename Matrix::Scalar;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index dim = data.cols();
  const Vector mean = data.colwise().mean().transpose();
  Matrix axes = Matrix::Zero(dim, m);
  Vector spread = Vector::Zero(m);
  if (data.rows() > 1) {
    const Matrix centered = data.rowwise() - mean.transpose();
    const Matrix cov = (centered.transpose() * centered) / static_cast<Scalar>(data.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
    const int k = static_cast<int>(std::min<Eigen::Index>(m, dim));
    axes.leftCols(k) = solver.eigenvectors().rightCols(k).rowwise().reverse();
    for (int c = 0; c < k; ++c) {
      // deterministic orientation: largest-magnitude entry positive
      Eigen::Index r;
      axes.col(c).cwiseAbs().maxCoeff(&r);
      if (axes(r, c) < 0) axes.col(c) = -axes.col(c);
      spread(c) = std::sqrt(std::max<Scalar>(solver.eigenvalues()(dim - 1 - c), 0));
    }
  }
  const int n_units = static_cast<int>(std::lround(std::pow(q, m)));
  Matrix units(n_units, dim);
  for (int u = 0; u < n_units; ++u) {
    Vector w = mean;
    if (q > 1) {
      const auto g = lattice_coords(u, q, m);
      for (int c = 0; c < m; ++c) {
        const Scalar t = static_cast<Scalar>(2 * g[c]) / static_cast<Scalar>(q - 1) - 1;
        w += t * spread(c) * axes.col(c);
      }
    }
    units.row(u) = w.transpose();
  }
  return units;
}

template <typename Matrix>
Matrix random_init(const Matrix& data, int n_units, Rng& rng) {
  using Scalar = typename Matrix::Scalar;
  Matrix units(n_units, data.cols());
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    const Scalar lo = data.col(c).minCoeff();
    const Scalar hi = data.col(c).maxCoeff();
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int u = 0; u < n_units; ++u) units(u, c) = lo + static_cast<Scalar>(uni(rng)) * (hi - lo);
  }
  return units;
}

}  // namespace detail

/// Trains a SOM on the rows of `data`. Online phase: per step the BMU is found by
/// Euclidean distance and every unit moves by lr(t) * h(t) * (x - w) with a Gaussian
/// lattice neighbourhood h; lr and radius decay as exp(-t / total_steps). A final
/// zero-radius batch step moves every non-empty unit to the mean of its members.
template <typename Derived>
BasicSomResult<typename Derived::Scalar> train_som(const Eigen::MatrixBase<Derived>& data,
                                                   const SomConfig& cfg) {
  using Scalar = typename Derived::Scalar;
  using Matrix = typename BasicSomResult<Scalar>::Matrix;
  cfg.validate();
  if (data.rows() < 1) throw Error(Errc::InsufficientData, "SOM needs at least one input");

  const Matrix x = data;
  const int n_units = cfg.units();
  Rng rng(cfg.seed);

  BasicSomResult<Scalar> out;
  out.units = cfg.init == SomInit::Linear ? detail::linear_init(x, cfg.q, cfg.m)
                                          : detail::random_init(x, n_units, rng);
  out.initial_units = out.units;

  std::vector<std::vector<int>> grid(n_units);
  for (int u = 0; u < n_units; ++u) grid[u] = lattice_coords(u, cfg.q, cfg.m);

  const auto n = static_cast<std::size_t>(x.rows());
  const double total_steps = static_cast<double>(cfg.epochs) * static_cast<double>(n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Squared lattice distances take at most m(q-1)^2 + 1 distinct values.
  std::vector<double> weight_by_d2(static_cast<std::size_t>(cfg.m * (cfg.q - 1) * (cfg.q - 1) + 1));
  std::size_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      const double decay = std::exp(-static_cast<double>(step) / total_steps);
      const double lr = cfg.lr0 * decay;
      const double radius = cfg.initial_radius() * decay;
      const double denom = 2.0 * radius * radius;
      for (std::size_t d2 = 0; d2 < weight_by_d2.size(); ++d2)
        weight_by_d2[d2] = lr * std::exp(-static_cast<double>(d2) / denom);
      const int bmu = best_matching_unit(out.units, x.row(i).transpose());
      for (int u = 0; u < n_units; ++u) {
        int d2 = 0;
        for (int c = 0; c < cfg.m; ++c) {
          const int d = grid[u][c] - grid[bmu][c];
          d2 += d * d;
        }
        out.units.row(u) +=
            static_cast<Scalar>(weight_by_d2[static_cast<std::size_t>(d2)]) * (x.row(i) - out.units.row(u));
      }
      ++step;
    }
  }

  out.assignment.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.assignment[i] = best_matching_unit(out.units, x.row(i).transpose());

  Matrix sums = Matrix::Zero(n_units, x.cols());
  std::vector<int> counts(n_units, 0);
  for (std::size_t i = 0; i < n; ++i) {
    sums.row(out.assignment[i]) += x.row(i);
    ++counts[out.assignment[i]];
  }
  for (int u = 0; u < n_units; ++u)
    if (counts[u] > 0) out.units.row(u) = sums.row(u) / static_cast<Scalar>(counts[u]);
  for (std::size_t i = 0; i < n; ++i) out.assignment[i] = best_matching_unit(out.units, x.row(i).transpose());
  return out;
}

}  // namespace posehar
