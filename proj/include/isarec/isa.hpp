#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace isarec {

// One ISA layer: k orthonormal linear filters over n-dimensional whitened
// input, pooled in contiguous groups of `group_size` filters.
//
//   p_i(x) = sqrt( sum_{j in group i} (w_j . x)^2 + epsilon )
struct IsaLayer {
  Eigen::MatrixXd filters;  // k × n, rows orthonormal after training
  int group_size = 2;
  double epsilon = 1e-4;

  int filter_count() const { return static_cast<int>(filters.rows()); }
  int input_dim() const { return static_cast<int>(filters.cols()); }
  int subspace_count() const { return filter_count() / group_size; }
  void validate() const;
};

inline constexpr double kDefaultIsaEpsilon = 1e-4;

struct IsaTrainConfig {
  double step_size = 0.5;
  double step_decay = 0.999;
  int max_iters = 1000;
  double rel_tol = 1e-6;
  std::uint64_t seed = 1;
  double epsilon = kDefaultIsaEpsilon;

  void validate() const;
};

enum class StopReason { MaxIters, Converged, StepRejected };

struct TrainTrace {
  // objective[0] is the projected random initialization; one entry per
  // accepted step after that.
  std::vector<double> objective;
  StopReason stop = StopReason::MaxIters;
  int iterations = 0;
  int halvings = 0;
  // Largest ‖W·Wᵀ − I‖_max seen after any projection during training.
  double max_projection_defect = 0.0;
};

struct TrainedLayer {
  IsaLayer layer;
  TrainTrace trace;
};

// Pooled responses of one input (length m) or of every column of X (m × N).
Eigen::VectorXd activations(const IsaLayer& layer, const Eigen::VectorXd& x);
Eigen::MatrixXd activations(const IsaLayer& layer, const Eigen::MatrixXd& X);

// Mean over samples (columns) of the summed pooled responses.
double objective(const IsaLayer& layer, const Eigen::MatrixXd& X);

// d objective / d filters, k × n.
Eigen::MatrixXd gradient(const IsaLayer& layer, const Eigen::MatrixXd& X);

// Symmetric orthogonalization (W·Wᵀ)^{-1/2}·W. Throws DegenerateFilterError
// when W·Wᵀ is singular.
Eigen::MatrixXd project_orthonormal(const Eigen::MatrixXd& W);

// ‖W·Wᵀ − I‖_max
double orthonormality_defect(const Eigen::MatrixXd& W);

// Batch projected gradient descent from a seeded random orthonormal start.
// A step is kept only if the projected iterate does not raise the
// objective; otherwise the step is halved, up to 20 times per iteration.
TrainedLayer train_layer(const Eigen::MatrixXd& X, int filters,
                         int group_size, const IsaTrainConfig& cfg);

}  // namespace isarec
