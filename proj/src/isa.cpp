#include "isarec/isa.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

#include "isarec/error.hpp"

namespace isarec {

namespace {

constexpr int kMaxHalvings = 20;

void require_input(const IsaLayer& layer, Eigen::Index rows) {
  layer.validate();
  if (rows != layer.input_dim())
    throw std::invalid_argument("ISA layer expects input dimension " +
                                std::to_string(layer.input_dim()) + ", got " +
                                std::to_string(rows));
}

// Row i holds sum_{j in group i} (w_j . x_t)^2 for every column t.
Eigen::MatrixXd pooled_energy(const IsaLayer& layer,
                              const Eigen::MatrixXd& responses) {
  const int g = layer.group_size;
  const int m = layer.subspace_count();
  Eigen::MatrixXd energy(m, responses.cols());
  for (int i = 0; i < m; ++i)
    energy.row(i) = responses.middleRows(i * g, g).array().square().colwise().sum();
  return energy;
}

}  // namespace

void IsaLayer::validate() const {
  if (group_size < 1 || filters.rows() == 0 ||
      filters.rows() % group_size != 0)
    throw std::invalid_argument("ISA layer: filter count " +
                                std::to_string(filters.rows()) +
                                " must be a positive multiple of group size " +
                                std::to_string(group_size));
  if (!(epsilon >= 0))
    throw std::invalid_argument("ISA layer: epsilon must be >= 0");
}

void IsaTrainConfig::validate() const {
  if (!(step_size > 0)) throw std::invalid_argument("step_size must be > 0");
  if (!(step_decay > 0 && step_decay <= 1))
    throw std::invalid_argument("step_decay must lie in (0, 1]");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (!(rel_tol >= 0)) throw std::invalid_argument("rel_tol must be >= 0");
  if (!(epsilon > 0)) throw std::invalid_argument("ISA epsilon must be > 0");
}

Eigen::MatrixXd activations(const IsaLayer& layer, const Eigen::MatrixXd& X) {
  require_input(layer, X.rows());
  const Eigen::MatrixXd responses = layer.filters * X;
  return (pooled_energy(layer, responses).array() + layer.epsilon).sqrt();
}

Eigen::VectorXd activations(const IsaLayer& layer, const Eigen::VectorXd& x) {
  return activations(layer, Eigen::MatrixXd(x)).col(0);
}

double objective(const IsaLayer& layer, const Eigen::MatrixXd& X) {
  if (X.cols() == 0) throw std::invalid_argument("objective: empty sample set");
  return activations(layer, X).sum() / static_cast<double>(X.cols());
}

Eigen::MatrixXd gradient(const IsaLayer& layer, const Eigen::MatrixXd& X) {
  if (X.cols() == 0) throw std::invalid_argument("gradient: empty sample set");
  if (!(layer.epsilon > 0))
    throw std::invalid_argument("gradient: epsilon must be > 0");
  require_input(layer, X.rows());

  const int g = layer.group_size;
  Eigen::MatrixXd responses = layer.filters * X;
  const Eigen::ArrayXXd inv_pooled =
      (pooled_energy(layer, responses).array() + layer.epsilon).sqrt().inverse();
  for (int i = 0; i < layer.subspace_count(); ++i)
    for (int r = 0; r < g; ++r)
      responses.row(i * g + r).array() *= inv_pooled.row(i);
  return responses * X.transpose() / static_cast<double>(X.cols());
}

double orthonormality_defect(const Eigen::MatrixXd& W) {
  const Eigen::MatrixXd gram = W * W.transpose();
  return (gram - Eigen::MatrixXd::Identity(W.rows(), W.rows()))
      .cwiseAbs()
      .maxCoeff();
}

Eigen::MatrixXd project_orthonormal(const Eigen::MatrixXd& W) {
  if (W.rows() == 0 || W.rows() > W.cols())
    throw std::invalid_argument("project_orthonormal: need 1 <= k <= n");
  const Eigen::MatrixXd gram = W * W.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("project_orthonormal: eigendecomposition failed");
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double largest = lambda.maxCoeff();
  if (!(largest > 0) || lambda.minCoeff() <= 1e-12 * largest)
    throw DegenerateFilterError(
        "filter matrix is rank deficient; W*W^T is singular");
  const Eigen::MatrixXd& V = eig.eigenvectors();
  const Eigen::MatrixXd inv_sqrt =
      V * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * V.transpose();
  return inv_sqrt * W;
}

TrainedLayer train_layer(const Eigen::MatrixXd& X, int filters,
                         int group_size, const IsaTrainConfig& cfg) {
  cfg.validate();
  const auto n = X.rows();
  if (filters < 1 || group_size < 1 || filters % group_size != 0)
    throw std::invalid_argument("train_layer: filter count must be a positive "
                                "multiple of the group size");
  if (filters > n)
    throw std::invalid_argument("train_layer: more filters (" +
                                std::to_string(filters) +
                                ") than input dimensions (" +
                                std::to_string(n) + ")");
  if (X.cols() < filters)
    throw InputError("train_layer: need at least " + std::to_string(filters) +
                     " samples, got " + std::to_string(X.cols()));

  TrainedLayer out;
  TrainTrace& trace = out.trace;
  IsaLayer& layer = out.layer;
  layer.group_size = group_size;
  layer.epsilon = cfg.epsilon;

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd init(filters, n);
  for (Eigen::Index i = 0; i < init.rows(); ++i)
    for (Eigen::Index j = 0; j < init.cols(); ++j) init(i, j) = normal(rng);

  auto project = [&trace](const Eigen::MatrixXd& W) {
    Eigen::MatrixXd R = project_orthonormal(W);
    trace.max_projection_defect =
        std::max(trace.max_projection_defect, orthonormality_defect(R));
    return R;
  };

  layer.filters = project(init);
  double current = objective(layer, X);
  trace.objective.push_back(current);

  IsaLayer candidate = layer;
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    const Eigen::MatrixXd grad = gradient(layer, X);
    double eta = cfg.step_size * std::pow(cfg.step_decay, iter);
    bool accepted = false;
    double next = current;
    for (int h = 0; h <= kMaxHalvings; ++h) {
      candidate.filters = project(layer.filters - eta * grad);
      next = objective(candidate, X);
      if (next <= current) {
        accepted = true;
        break;
      }
      eta *= 0.5;
      ++trace.halvings;
    }
    if (!accepted) {
      trace.stop = StopReason::StepRejected;
      break;
    }
    std::swap(layer.filters, candidate.filters);
    const double change = (current - next) / current;
    current = next;
    trace.objective.push_back(current);
    trace.iterations = iter + 1;
    if (change < cfg.rel_tol) {
      trace.stop = StopReason::Converged;
      break;
    }
  }
  return out;
}

}  // namespace isarec
