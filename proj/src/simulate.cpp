#include "blockgibbs/simulate.hpp"

#include <cmath>

namespace blockgibbs {

Eigen::MatrixXd equidistant_means(int k, int dim, double distance) {
  if (dim < k - 1) {
    throw ConfigError("simulate", "equidistant means need dim >= K - 1");
  }
  // regular simplex in the first k-1 coordinates: unit vectors e_1..e_{k-1}
  // plus the symmetric corner (1 - sqrt(k))/(k - 1) * ones; all pairwise
  // distances are sqrt(2)
  Eigen::MatrixXd vertices = Eigen::MatrixXd::Zero(k, dim);
  if (k == 1) return vertices;
  for (int i = 0; i < k - 1; ++i) vertices(i, i) = 1.0;
  const double corner = (1.0 - std::sqrt(static_cast<double>(k))) / (k - 1.0);
  for (int j = 0; j < k - 1; ++j) vertices(k - 1, j) = corner;
  const Eigen::RowVectorXd centroid = vertices.colwise().mean();
  vertices.rowwise() -= centroid;
  const double edge = (vertices.row(0) - vertices.row(1)).norm();
  vertices *= distance / edge;
  return vertices;
}

Eigen::VectorXd equidistant_point(const Eigen::MatrixXd& means,
                                  const std::vector<int>& components) {
  if (components.size() < 2) {
    throw ConfigError("simulate", "equidistant point needs at least two components");
  }
  const int d = static_cast<int>(means.cols());
  const Eigen::VectorXd m0 = means.row(components[0]).transpose();
  const int r = static_cast<int>(components.size()) - 1;
  // x = m0 + V t within the affine hull; equidistance gives a linear system
  Eigen::MatrixXd v(d, r);
  for (int t = 0; t < r; ++t) {
    v.col(t) = means.row(components[t + 1]).transpose() - m0;
  }
  Eigen::MatrixXd a = v.transpose() * v;  // (m_i - m0)' V t = |m_i - m0|^2 / 2
  Eigen::VectorXd b(r);
  for (int t = 0; t < r; ++t) b[t] = 0.5 * v.col(t).squaredNorm();
  const Eigen::VectorXd t = a.ldlt().solve(b);
  return m0 + v * t;
}

SimulationResult simulate(const SimulationSpec& spec) {
  const int k = static_cast<int>(spec.n_per_component.size());
  if (k < 1 || spec.means.rows() != k ||
      static_cast<int>(spec.covs.size()) != k) {
    throw ConfigError("simulate", "component counts, means, and covariances must agree");
  }
  const int d = static_cast<int>(spec.means.cols());
  for (const auto& cov : spec.covs) {
    if (cov.dim() != d) {
      throw ConfigError("simulate", "covariance dimension does not match means");
    }
  }

  int total = 0;
  for (int n : spec.n_per_component) {
    if (n < 1) throw ConfigError("simulate", "each component needs n >= 1");
    total += n;
  }
  int outlier_total = 0;
  for (const auto& o : spec.outliers) outlier_total += o.count;

  Rng rng(spec.seed);
  Eigen::MatrixXd y(total + outlier_total, d);
  std::vector<int> labels(total + outlier_total, -1);
  Eigen::MatrixXd empirical_means(k, d);

  int row = 0;
  for (int c = 0; c < k; ++c) {
    const int n = spec.n_per_component[c];
    const Eigen::MatrixXd chol =
        Eigen::LLT<Eigen::MatrixXd>(spec.covs[c].entries()).matrixL();
    Eigen::MatrixXd draws(n, d);
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd z(d);
      for (int j = 0; j < d; ++j) z[j] = rng.normal();
      draws.row(i) = (spec.means.row(c).transpose() + chol * z).transpose();
    }
    if (spec.standardize) {
      if (n <= d) {
        throw ConfigError("simulate", "standardize requires n > dim per component");
      }
      const Eigen::RowVectorXd sample_mean = draws.colwise().mean();
      Eigen::MatrixXd centered = draws.rowwise() - sample_mean;
      const Eigen::MatrixXd sample_cov =
          centered.transpose() * centered / (n - 1.0);
      Eigen::LLT<Eigen::MatrixXd> sample_llt(sample_cov);
      if (sample_llt.info() != Eigen::Success) {
        throw ConfigError("simulate", "sample covariance is singular; cannot standardize");
      }
      const Eigen::MatrixXd whitener =
          Eigen::MatrixXd(sample_llt.matrixL()).inverse().transpose();
      draws = (centered * whitener * chol.transpose()).rowwise() +
              spec.means.row(c);
    }
    empirical_means.row(c) = draws.colwise().mean();
    for (int i = 0; i < n; ++i) {
      y.row(row) = draws.row(i);
      labels[row] = c;
      ++row;
    }
  }

  for (const auto& o : spec.outliers) {
    Eigen::VectorXd point;
    if (o.point) {
      point = *o.point;
      if (point.size() != d) {
        throw ConfigError("simulate", "outlier point dimension mismatch");
      }
    } else {
      // place relative to the empirical means so the planted geometry holds
      // for the dataset actually produced
      point = equidistant_point(empirical_means, o.between);
    }
    for (int i = 0; i < o.count; ++i) {
      y.row(row) = point.transpose();
      labels[row] = -1;
      ++row;
    }
  }

  SimulationResult out;
  out.y = std::move(y);
  out.labels = std::move(labels);
  out.empirical_means = std::move(empirical_means);
  return out;
}

}  // namespace blockgibbs
