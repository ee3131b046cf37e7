#pragma once

#include <Eigen/Core>

namespace isarec {

// PCA whitening with dimensionality reduction. Data matrices hold one sample
// per column throughout the library.
struct WhiteningTransform {
  Eigen::VectorXd mean;         // in_dim
  Eigen::VectorXd eigenvalues;  // out_dim, descending
  // out_dim × in_dim; row i is the i-th principal direction scaled by
  // 1/sqrt(eigenvalue_i + epsilon).
  Eigen::MatrixXd basis;
  double epsilon = 0.0;

  int in_dim() const { return static_cast<int>(basis.cols()); }
  int out_dim() const { return static_cast<int>(basis.rows()); }

  // Unit-norm principal directions (rows), recovered from the scaled basis.
  Eigen::MatrixXd directions() const;
};

inline constexpr double kDefaultWhiteningEpsilon = 0.1;

// Covariance uses the unbiased 1/(N−1) normalization. Each retained
// direction's sign is fixed so that its largest-magnitude entry is positive
// (first such entry on ties).
WhiteningTransform fit_pca_whitening(const Eigen::MatrixXd& samples,
                                     int out_dim, double epsilon);

Eigen::VectorXd apply_whitening(const WhiteningTransform& t,
                                const Eigen::VectorXd& x);
Eigen::MatrixXd apply_whitening(const WhiteningTransform& t,
                                const Eigen::MatrixXd& samples);

// Unbiased sample covariance of column samples.
Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& samples);

}  // namespace isarec
