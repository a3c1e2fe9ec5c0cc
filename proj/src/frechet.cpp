#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "cdptwin/error.hpp"
#include "cdptwin/metrics.hpp"

namespace cdptwin::metrics {
namespace {

constexpr double kNegativeEigenTolerance = 1e-6;

Eigen::VectorXd checked_eigenvalues(const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& solver, const char* what) {
  if (solver.info() != Eigen::Success) throw NumericalError(std::string(what) + ": eigendecomposition did not converge");
  Eigen::VectorXd values = solver.eigenvalues();
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values[i] < -kNegativeEigenTolerance) {
      throw NumericalError(std::string(what) + ": matrix is not positive semi-definite (eigenvalue " +
                           std::to_string(values[i]) + ")");
    }
    values[i] = std::max(values[i], 0.0);
  }
  return values;
}

}  // namespace

GaussianStats gaussian_stats(const std::vector<std::vector<double>>& features) {
  if (features.size() < 2) throw ParameterError("gaussian_stats: need at least two feature vectors");
  const auto d = static_cast<Eigen::Index>(features.front().size());
  if (d == 0) throw ParameterError("gaussian_stats: feature vectors are empty");

  Eigen::MatrixXd data(static_cast<Eigen::Index>(features.size()), d);
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (static_cast<Eigen::Index>(features[i].size()) != d) {
      throw ParameterError("gaussian_stats: feature vectors differ in dimension");
    }
    for (Eigen::Index j = 0; j < d; ++j) data(static_cast<Eigen::Index>(i), j) = features[i][static_cast<std::size_t>(j)];
  }

  GaussianStats stats;
  stats.n = features.size();
  stats.mean = data.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.rowwise() - stats.mean.transpose();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(stats.n - 1);
  stats.cov = 0.5 * (cov + cov.transpose());
  return stats;
}

double frechet_distance(const GaussianStats& p, const GaussianStats& q) {
  if (p.mean.size() != q.mean.size() || p.cov.rows() != p.mean.size() || q.cov.rows() != q.mean.size() ||
      p.cov.cols() != p.cov.rows() || q.cov.cols() != q.cov.rows()) {
    throw ParameterError("frechet_distance: dimension mismatch");
  }
  if (p.mean == q.mean && p.cov == q.cov) return 0.0;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> p_solver(p.cov);
  const Eigen::VectorXd p_values = checked_eigenvalues(p_solver, "frechet_distance");
  const Eigen::MatrixXd p_sqrt =
      p_solver.eigenvectors() * p_values.cwiseSqrt().asDiagonal() * p_solver.eigenvectors().transpose();

  checked_eigenvalues(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(q.cov, Eigen::EigenvaluesOnly), "frechet_distance");

  Eigen::MatrixXd product = p_sqrt * q.cov * p_sqrt;
  product = 0.5 * (product + product.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> product_solver(product, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd product_values = checked_eigenvalues(product_solver, "frechet_distance");

  const double mean_term = (p.mean - q.mean).squaredNorm();
  const double trace_term = p.cov.trace() + q.cov.trace() - 2.0 * product_values.cwiseSqrt().sum();
  return std::max(0.0, mean_term + trace_term);
}

}  // namespace cdptwin::metrics
