#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace isarec {

// exp(−gamma·‖x−y‖²)
double rbf_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                  double gamma);

struct BinarySvm {
  Eigen::MatrixXd support_vectors;  // one support vector per row
  Eigen::VectorXd dual_coefs;       // alpha_i · y_i
  double bias = 0.0;
  double gamma = 1.0;
  double C = 1.0;

  int dim() const { return static_cast<int>(support_vectors.cols()); }
};

inline constexpr double kDefaultKktTol = 1e-3;

// Full solver state for one training run; kept for verification.
struct BinarySvmFit {
  BinarySvm model;
  Eigen::VectorXd alpha;  // one per training sample
  std::vector<int> support_indices;
  double dual_objective = 0.0;  // sum(alpha) − ½ alphaᵀ Q alpha
  int iterations = 0;
};

// Soft-margin dual solved by SMO with maximal-violating-pair selection.
// X holds one sample per row; y holds +1/−1.
BinarySvmFit train_binary_svm_fit(const Eigen::MatrixXd& X,
                                  const std::vector<int>& y, double C,
                                  double gamma, double kkt_tol = kDefaultKktTol);
BinarySvm train_binary_svm(const Eigen::MatrixXd& X, const std::vector<int>& y,
                           double C, double gamma,
                           double kkt_tol = kDefaultKktTol);

double predict_binary(const BinarySvm& m, const Eigen::VectorXd& x);

// Dual objective sum(a) − ½ aᵀQa with Q_ij = y_i y_j K(x_i, x_j).
double svm_dual_objective(const Eigen::MatrixXd& X, const std::vector<int>& y,
                          const Eigen::VectorXd& alpha, double gamma);

// Largest amount by which any training point violates its KKT band
// (tolerance kkt_tol·(1+C)). Zero when every band holds.
double kkt_violation(const Eigen::MatrixXd& X, const std::vector<int>& y,
                     const BinarySvmFit& fit, double kkt_tol);

// One-vs-one: a machine per unordered class pair (a < b lexicographically),
// trained with a = +1 and b = −1.
struct SvmModel {
  std::vector<std::string> classes;  // lexicographic
  double C = 1.0;
  double gamma = 1.0;
  // Pair (a, b), a < b, in order (0,1), (0,2), ..., (1,2), ...
  std::vector<BinarySvm> machines;

  int pair_index(int a, int b) const;
};

SvmModel train_multiclass(const Eigen::MatrixXd& X,
                          const std::vector<std::string>& labels, double C,
                          double gamma, double kkt_tol = kDefaultKktTol);

// Majority vote; a zero decision value votes for the smaller class. Vote
// ties go to the larger summed |decision value| of the votes won, then to
// the lexicographically smaller class.
std::string predict(const SvmModel& model, const Eigen::VectorXd& x);

struct GridCell {
  double C;
  double gamma;
  double accuracy;
};

struct GridSearchResult {
  double best_C = 0.0;
  double best_gamma = 0.0;
  double cv_accuracy = 0.0;
  int folds_used = 0;
  // True when the smallest class forced fewer folds than requested.
  bool folds_reduced = false;
  std::vector<GridCell> grid;
};

struct GridSearchConfig {
  std::vector<double> c_values;
  std::vector<double> gamma_values;
  int folds = 5;
  std::uint64_t seed = 31;
  double kkt_tol = kDefaultKktTol;
  int threads = 1;
};

// 2^-5, 2^-3, ..., 2^15 and 2^-15, 2^-13, ..., 2^3.
std::vector<double> default_c_grid();
std::vector<double> default_gamma_grid();

// Fold index per sample: each class is shuffled with the seed and dealt
// round-robin over the folds.
std::vector<int> stratified_folds(const std::vector<std::string>& labels,
                                  int folds, std::uint64_t seed);

// Stratified k-fold CV accuracy of each (C, gamma). Ties on accuracy go to
// the smaller C, then the smaller gamma.
GridSearchResult grid_search(const Eigen::MatrixXd& X,
                             const std::vector<std::string>& labels,
                             const GridSearchConfig& cfg);

inline constexpr std::string_view kSvmMagic = "ISAREC-SVM v1";

void save_svm(const SvmModel& model, std::ostream& out);
void save_svm(const SvmModel& model, const std::filesystem::path& path);
SvmModel load_svm(std::istream& in);
SvmModel load_svm(const std::filesystem::path& path);

}  // namespace isarec
