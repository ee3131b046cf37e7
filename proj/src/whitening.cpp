#include "isarec/whitening.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "isarec/error.hpp"

namespace isarec {

Eigen::MatrixXd WhiteningTransform::directions() const {
  Eigen::MatrixXd d = basis;
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    d.row(i) *= std::sqrt(eigenvalues[i] + epsilon);
  return d;
}

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& samples) {
  if (samples.cols() < 2)
    throw std::invalid_argument("covariance needs at least 2 samples");
  const Eigen::MatrixXd centered =
      samples.colwise() - samples.rowwise().mean();
  Eigen::MatrixXd cov(samples.rows(), samples.rows());
  cov.setZero();
  cov.selfadjointView<Eigen::Lower>().rankUpdate(centered);
  cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose();
  return cov / static_cast<double>(samples.cols() - 1);
}

WhiteningTransform fit_pca_whitening(const Eigen::MatrixXd& samples,
                                     int out_dim, double epsilon) {
  const Eigen::Index in_dim = samples.rows();
  if (samples.cols() < 2)
    throw InputError("whitening needs at least 2 samples, got " +
                     std::to_string(samples.cols()));
  if (out_dim < 1 || out_dim > in_dim)
    throw std::invalid_argument("whitening out_dim " + std::to_string(out_dim) +
                                " must be in [1, " + std::to_string(in_dim) +
                                "]");
  if (epsilon < 0) throw std::invalid_argument("whitening epsilon must be >= 0");

  WhiteningTransform t;
  t.epsilon = epsilon;
  t.mean = samples.rowwise().mean();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sample_covariance(samples));
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("covariance eigendecomposition failed");

  // Eigen returns ascending eigenvalues.
  t.eigenvalues.resize(out_dim);
  t.basis.resize(out_dim, in_dim);
  for (int i = 0; i < out_dim; ++i) {
    const Eigen::Index src = in_dim - 1 - i;
    const double lambda = std::max(eig.eigenvalues()[src], 0.0);
    if (lambda + epsilon <= 0)
      throw InputError("retained principal direction " + std::to_string(i) +
                       " has zero variance; lower out_dim or raise epsilon");
    Eigen::VectorXd v = eig.eigenvectors().col(src);
    Eigen::Index arg = 0;
    for (Eigen::Index j = 1; j < v.size(); ++j)
      if (std::abs(v[j]) > std::abs(v[arg])) arg = j;
    if (v[arg] < 0) v = -v;
    t.eigenvalues[i] = lambda;
    t.basis.row(i) = v.transpose() / std::sqrt(lambda + epsilon);
  }
  return t;
}

Eigen::VectorXd apply_whitening(const WhiteningTransform& t,
                                const Eigen::VectorXd& x) {
  if (x.size() != t.in_dim())
    throw std::invalid_argument("apply_whitening: expected length " +
                                std::to_string(t.in_dim()) + ", got " +
                                std::to_string(x.size()));
  return t.basis * (x - t.mean);
}

Eigen::MatrixXd apply_whitening(const WhiteningTransform& t,
                                const Eigen::MatrixXd& samples) {
  if (samples.rows() != t.in_dim())
    throw std::invalid_argument("apply_whitening: expected dimension " +
                                std::to_string(t.in_dim()) + ", got " +
                                std::to_string(samples.rows()));
  return t.basis * (samples.colwise() - t.mean);
}

}  // namespace isarec
