#pragma once

#include <Eigen/Dense>

#include "blockgibbs/errors.hpp"

namespace blockgibbs {

/// Symmetric positive-definite matrix. Construction checks symmetry to a
/// 1e-12 relative tolerance, symmetrizes to absorb accumulation noise, and
/// verifies positive definiteness by attempting a Cholesky factorization.
class SpdMatrix {
public:
  explicit SpdMatrix(Eigen::MatrixXd m);

  int dim() const { return static_cast<int>(entries_.rows()); }
  const Eigen::MatrixXd& entries() const { return entries_; }

private:
  Eigen::MatrixXd entries_;
};

/// Cached factorization of an SPD matrix: the lower-triangular Cholesky
/// factor is the canonical representation; log-determinant and inverse are
/// kept alongside so repeated density evaluations are O(1) / O(D^2).
class DetFactorization {
public:
  explicit DetFactorization(const SpdMatrix& m);

  int dim() const { return static_cast<int>(matrix_.rows()); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  const Eigen::MatrixXd& inverse() const { return inverse_; }
  const Eigen::MatrixXd& cholesky_factor() const { return factor_; }
  double log_det() const { return log_det_; }

  /// v' * inverse * v without forming intermediates.
  double inverse_quadratic_form(const Eigen::VectorXd& v) const {
    return v.dot(inverse_ * v);
  }

  friend DetFactorization rank_one_update(const DetFactorization& f,
                                          const Eigen::VectorXd& v, double w);

private:
  DetFactorization() = default;

  Eigen::MatrixXd matrix_;
  Eigen::MatrixXd factor_;   // lower triangular, matrix_ = factor_ * factor_^T
  Eigen::MatrixXd inverse_;
  double log_det_ = 0.0;
};

/// Factorizes an SPD matrix, caching log-determinant and inverse.
/// Throws NotPositiveDefinite if the factorization fails.
DetFactorization factorize(const SpdMatrix& m);

/// Convenience overload: symmetry-checks and factorizes a raw matrix.
DetFactorization factorize(const Eigen::MatrixXd& m);

/// Factorization of m + w * v * v^T. The log-determinant moves by the matrix
/// determinant lemma, the inverse by Sherman-Morrison, and the triangular
/// factor by a Givens-style rank-one update, all in O(D^2). Negative w
/// performs a downdate; throws DowndateBrokePositivity when the result
/// would not be positive definite (1 + w * v' m^-1 v <= 0).
DetFactorization rank_one_update(const DetFactorization& f,
                                 const Eigen::VectorXd& v, double w);

/// Second-order expansion of |S + eps*Q| around eps = 0:
///   |S| * (1 + eps*tr(A) + eps^2/2 * (tr(A)^2 - tr(A^2))),  A = Q * S^-1.
/// Exact at eps = 0 and for rank-one Q at eps = 1; error is O(eps^3).
double approx_det_second_order(const DetFactorization& f,
                               const Eigen::MatrixXd& q, double eps);

/// Log of the parenthesized second-order factor above. Returns -infinity
/// when the truncated expansion goes nonpositive (perturbation too large
/// for the expansion to say anything useful).
double log_second_order_factor(const DetFactorization& f,
                               const Eigen::MatrixXd& q, double eps);

}  // namespace blockgibbs
