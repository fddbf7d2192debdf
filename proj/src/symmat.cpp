#include "blockgibbs/symmat.hpp"

#include <cmath>
#include <limits>

namespace blockgibbs {

SpdMatrix::SpdMatrix(Eigen::MatrixXd m) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw NotPositiveDefinite("factorize", "matrix must be square with dim >= 1");
  }
  const double scale = std::max(m.cwiseAbs().maxCoeff(), 1.0);
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    throw NotPositiveDefinite("factorize", "matrix is not symmetric");
  }
  entries_ = 0.5 * (m + m.transpose());
}

DetFactorization::DetFactorization(const SpdMatrix& m) : matrix_(m.entries()) {
  Eigen::LLT<Eigen::MatrixXd> llt(matrix_);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("factorize", "Cholesky factorization failed: matrix is singular or indefinite");
  }
  factor_ = llt.matrixL();
  log_det_ = 2.0 * factor_.diagonal().array().log().sum();
  inverse_ = llt.solve(Eigen::MatrixXd::Identity(dim(), dim()));
}

DetFactorization factorize(const SpdMatrix& m) { return DetFactorization(m); }

DetFactorization factorize(const Eigen::MatrixXd& m) {
  return DetFactorization(SpdMatrix(m));
}

DetFactorization rank_one_update(const DetFactorization& f,
                                 const Eigen::VectorXd& v, double w) {
  const int d = f.dim();
  const double beta = 1.0 + w * f.inverse_quadratic_form(v);
  if (!(beta > 0.0)) {
    throw DowndateBrokePositivity("1 + w * v' m^-1 v <= 0: update leaves the positive-definite cone");
  }

  DetFactorization out;
  out.matrix_ = f.matrix_ + w * v * v.transpose();
  out.log_det_ = f.log_det_ + std::log(beta);

  // Sherman-Morrison
  const Eigen::VectorXd iv = f.inverse_ * v;
  out.inverse_ = f.inverse_ - (w / beta) * iv * iv.transpose();

  // Rank-one Cholesky update/downdate on the lower factor; the sign of w
  // selects the hyperbolic (downdate) variant. Fails only when the result
  // is numerically indefinite, which beta > 0 has already excluded up to
  // roundoff.
  out.factor_ = f.factor_;
  const double sigma = w >= 0.0 ? 1.0 : -1.0;
  Eigen::VectorXd x = std::sqrt(std::abs(w)) * v;
  for (int k = 0; k < d; ++k) {
    const double lkk = out.factor_(k, k);
    const double r2 = lkk * lkk + sigma * x[k] * x[k];
    if (!(r2 > 0.0)) {
      throw DowndateBrokePositivity("rank-one downdate lost positive definiteness");
    }
    const double r = std::sqrt(r2);
    const double c = r / lkk;
    const double s = x[k] / lkk;
    out.factor_(k, k) = r;
    for (int i = k + 1; i < d; ++i) {
      out.factor_(i, k) = (out.factor_(i, k) + sigma * s * x[i]) / c;
      x[i] = c * x[i] - s * out.factor_(i, k);
    }
  }
  return out;
}

namespace {

// tr(A) and tr(A^2) for A = Q * S^-1.
void perturbation_traces(const DetFactorization& f, const Eigen::MatrixXd& q,
                         double& tr_a, double& tr_a2) {
  const Eigen::MatrixXd a = q * f.inverse();
  tr_a = a.trace();
  tr_a2 = (a * a).trace();
}

}  // namespace

double approx_det_second_order(const DetFactorization& f,
                               const Eigen::MatrixXd& q, double eps) {
  double tr_a, tr_a2;
  perturbation_traces(f, q, tr_a, tr_a2);
  const double factor =
      1.0 + eps * tr_a + 0.5 * eps * eps * (tr_a * tr_a - tr_a2);
  return std::exp(f.log_det()) * factor;
}

double log_second_order_factor(const DetFactorization& f,
                               const Eigen::MatrixXd& q, double eps) {
  double tr_a, tr_a2;
  perturbation_traces(f, q, tr_a, tr_a2);
  const double factor =
      1.0 + eps * tr_a + 0.5 * eps * eps * (tr_a * tr_a - tr_a2);
  if (!(factor > 0.0)) return -std::numeric_limits<double>::infinity();
  return std::log(factor);
}

}  // namespace blockgibbs
