#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>

#include "ictree/errors.hpp"
#include "ictree/rng.hpp"

namespace ictree {

/// Affine change of coordinates estimated by ICA: s = W (x - mean) with
/// mixing A = W^{-1}. log|det W| is cached because every density evaluation
/// needs it.
template <typename Scalar = double>
struct IcaTransform {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector mean;
  Matrix unmixing;  // W
  Matrix mixing;    // A = W^{-1}
  Scalar log_abs_det_unmixing = Scalar(0);
  bool converged = true;
  int iterations = 0;

  Eigen::Index dim() const { return mean.size(); }

  static IcaTransform identity(Vector mean_vec) {
    IcaTransform t;
    const Eigen::Index m = mean_vec.size();
    t.mean = std::move(mean_vec);
    t.unmixing = Matrix::Identity(m, m);
    t.mixing = Matrix::Identity(m, m);
    t.log_abs_det_unmixing = Scalar(0);
    return t;
  }
};

/// Subtracts the arithmetic column mean from every column.
template <typename Derived>
std::pair<typename Derived::PlainObject, Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>>
center(const Eigen::MatrixBase<Derived>& block) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean = block.colwise().mean().transpose();
  typename Derived::PlainObject centered = block.rowwise() - mean.transpose();
  return {std::move(centered), std::move(mean)};
}

/// Whitens a centered block via the eigendecomposition of its sample
/// covariance: K = Lambda^{-1/2} E^T, output = centered K^T. Throws
/// SingularCovariance when some eigenvalue falls below eps times the largest.
template <typename Derived>
std::pair<Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>,
          Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>>
whiten(const Eigen::MatrixBase<Derived>& centered, typename Derived::Scalar eps =
                                                       typename Derived::Scalar(1e-9)) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  const Eigen::Index n = centered.rows();
  const Eigen::Index m = centered.cols();
  if (n < 2) throw std::invalid_argument("whiten: need at least 2 rows");

  Matrix cov = (centered.transpose() * centered) / Scalar(n - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  const auto& evals = eig.eigenvalues();  // ascending
  const Scalar largest = evals(m - 1);
  if (!(largest > Scalar(0)) || evals(0) < eps * largest)
    throw SingularCovariance("whiten: covariance is rank deficient");

  Matrix k = evals.array().rsqrt().matrix().asDiagonal() * eig.eigenvectors().transpose();
  Matrix whitened = centered * k.transpose();
  return {std::move(whitened), std::move(k)};
}

/// FastICA with the log-cosh contrast (a = 1) and symmetric decorrelation.
/// The initial rotation is drawn from the seed; the fixed point stops when
/// every row direction moves by less than tol, or after max_iter sweeps
/// (reported through the converged flag, not an error). Requires
/// n_components == m and n > m.
template <typename Derived>
IcaTransform<typename Derived::Scalar> fast_ica(const Eigen::MatrixBase<Derived>& block,
                                                Eigen::Index n_components, int max_iter,
                                                typename Derived::Scalar tol,
                                                std::uint64_t seed) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  const Eigen::Index n = block.rows();
  const Eigen::Index m = block.cols();
  if (n_components != m)
    throw std::invalid_argument("fast_ica: n_components must equal the column count");
  if (n <= m) throw std::invalid_argument("fast_ica: need more rows than columns");

  auto [centered, mean] = center(block);
  auto [z, k] = whiten(centered);  // propagates SingularCovariance

  const auto sym_decorrelate = [m](const Matrix& w) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(w * w.transpose());
    if (!(eig.eigenvalues()(0) > Scalar(0)))
      throw SingularCovariance("fast_ica: degenerate iterate");
    Matrix inv_sqrt = eig.eigenvectors() *
                      eig.eigenvalues().array().rsqrt().matrix().asDiagonal() *
                      eig.eigenvectors().transpose();
    return Matrix(inv_sqrt * w);
  };

  Rng rng(derive_seed(seed, 0x1ca));
  Matrix w(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) w(i, j) = Scalar(rng.gaussian());
  w = sym_decorrelate(w);

  IcaTransform<Scalar> result;
  result.converged = false;
  int it = 0;
  for (; it < max_iter; ++it) {
    // w_i <- E[z g(w_i.z)] - E[g'(w_i.z)] w_i with g = tanh, g' = 1 - tanh^2
    Matrix g = (z * w.transpose()).array().tanh();
    Matrix w_next = (g.transpose() * z) / Scalar(n) -
                    (Scalar(1) - g.array().square()).colwise().mean().matrix().asDiagonal() * w;
    w_next = sym_decorrelate(w_next);

    Scalar delta(0);
    for (Eigen::Index i = 0; i < m; ++i)
      delta = std::max(delta, std::abs(Scalar(1) - std::abs(w_next.row(i).dot(w.row(i)))));
    w = std::move(w_next);
    if (delta < tol) {
      result.converged = true;
      ++it;
      break;
    }
  }

  result.mean = std::move(mean);
  result.unmixing = w * k;
  Eigen::PartialPivLU<Matrix> lu(result.unmixing);
  result.mixing = lu.inverse();
  result.log_abs_det_unmixing = lu.matrixLU().diagonal().array().abs().log().sum();
  result.iterations = it;
  return result;
}

/// s = W (x - mean); component j is the realization the leaf distributions
/// are fitted on.
template <typename Scalar>
typename IcaTransform<Scalar>::Vector transform(const IcaTransform<Scalar>& t,
                                                const typename IcaTransform<Scalar>::Vector& x) {
  return t.unmixing * (x - t.mean);
}

/// x = A s + mean; exact inverse of transform.
template <typename Scalar>
typename IcaTransform<Scalar>::Vector inverse_transform(
    const IcaTransform<Scalar>& t, const typename IcaTransform<Scalar>::Vector& s) {
  return t.mixing * s + t.mean;
}

/// Rowwise transform of a block: (X rowwise - mean) W^T.
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> transform_block(
    const IcaTransform<Scalar>& t, const Eigen::MatrixBase<Derived>& block) {
  return (block.rowwise() - t.mean.transpose()) * t.unmixing.transpose();
}

}  // namespace ictree
