#include "isarec/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

#include "isarec/error.hpp"
#include "isarec/parallel.hpp"
#include "text_format.hpp"

namespace isarec {

double rbf_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                  double gamma) {
  if (x.size() != y.size())
    throw std::invalid_argument("rbf_kernel: dimension mismatch");
  return std::exp(-gamma * (x - y).squaredNorm());
}

namespace {

constexpr double kTau = 1e-12;
constexpr long kMaxSmoIterations = 10'000'000;

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X, double gamma) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = std::exp(-gamma * (X.row(i) - X.row(j)).squaredNorm());
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

void check_labels(const Eigen::MatrixXd& X, const std::vector<int>& y) {
  if (static_cast<Eigen::Index>(y.size()) != X.rows())
    throw std::invalid_argument("SVM: label count != sample count");
  bool pos = false, neg = false;
  for (int v : y) {
    if (v == 1)
      pos = true;
    else if (v == -1)
      neg = true;
    else
      throw std::invalid_argument("SVM: labels must be +1 or -1");
  }
  if (!pos || !neg)
    throw InputError("SVM: training data must contain both classes");
}

}  // namespace

double svm_dual_objective(const Eigen::MatrixXd& X, const std::vector<int>& y,
                          const Eigen::VectorXd& alpha, double gamma) {
  const Eigen::MatrixXd K = kernel_matrix(X, gamma);
  Eigen::VectorXd ya(alpha.size());
  for (Eigen::Index i = 0; i < alpha.size(); ++i) ya[i] = y[i] * alpha[i];
  return alpha.sum() - 0.5 * ya.dot(K * ya);
}

BinarySvmFit train_binary_svm_fit(const Eigen::MatrixXd& X,
                                  const std::vector<int>& y, double C,
                                  double gamma, double kkt_tol) {
  check_labels(X, y);
  if (!(C > 0)) throw std::invalid_argument("SVM: C must be > 0");
  if (!(gamma >= 0)) throw std::invalid_argument("SVM: gamma must be >= 0");
  if (!(kkt_tol > 0)) throw std::invalid_argument("SVM: kkt_tol must be > 0");

  const Eigen::Index n = X.rows();
  const Eigen::MatrixXd K = kernel_matrix(X, gamma);
  auto Q = [&](Eigen::Index i, Eigen::Index j) { return y[i] * y[j] * K(i, j); };

  // Minimization form: f(a) = ½ aᵀQa − sum(a), gradient G = Qa − 1.
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd G = Eigen::VectorXd::Constant(n, -1.0);
  auto in_up = [&](Eigen::Index t) {
    return (y[t] == 1 && alpha[t] < C) || (y[t] == -1 && alpha[t] > 0);
  };
  auto in_low = [&](Eigen::Index t) {
    return (y[t] == 1 && alpha[t] > 0) || (y[t] == -1 && alpha[t] < C);
  };

  BinarySvmFit fit;
  long iter = 0;
  for (; iter < kMaxSmoIterations; ++iter) {
    // -y_t G_t is the negated prediction error; i maximizes it over the up
    // set and j minimizes it over the low set, which maximizes |E_i − E_j|.
    Eigen::Index i = -1, j = -1;
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      const double v = -y[t] * G[t];
      if (in_up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (in_low(t) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    if (i < 0 || j < 0 || gmax - gmin <= kkt_tol) break;

    const double old_ai = alpha[i];
    const double old_aj = alpha[j];
    if (y[i] != y[j]) {
      double quad = K(i, i) + K(j, j) - 2 * K(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > 0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      double quad = K(i, i) + K(j, j) - 2 * K(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
      } else if (alpha[j] < 0) {
        alpha[j] = 0;
        alpha[i] = sum;
      }
      if (sum > C) {
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = sum;
      }
    }
    const double dai = alpha[i] - old_ai;
    const double daj = alpha[j] - old_aj;
    for (Eigen::Index t = 0; t < n; ++t) G[t] += Q(t, i) * dai + Q(t, j) * daj;
  }
  if (iter == kMaxSmoIterations)
    throw std::runtime_error("SMO did not converge");

  // Bias: average over free vectors, else the midpoint of the feasible
  // interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double free_sum = 0;
  int free_count = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = y[t] * G[t];
    if (alpha[t] >= C) {
      if (y[t] == -1)
        ub = std::min(ub, yg);
      else
        lb = std::max(lb, yg);
    } else if (alpha[t] <= 0) {
      if (y[t] == 1)
        ub = std::min(ub, yg);
      else
        lb = std::max(lb, yg);
    } else {
      ++free_count;
      free_sum += yg;
    }
  }
  const double rho = free_count > 0 ? free_sum / free_count : (ub + lb) / 2;

  fit.alpha = alpha;
  fit.iterations = static_cast<int>(iter);
  for (Eigen::Index t = 0; t < n; ++t)
    if (alpha[t] > 0) fit.support_indices.push_back(static_cast<int>(t));
  BinarySvm& m = fit.model;
  m.C = C;
  m.gamma = gamma;
  m.bias = -rho;
  const auto nsv = static_cast<Eigen::Index>(fit.support_indices.size());
  m.support_vectors.resize(nsv, X.cols());
  m.dual_coefs.resize(nsv);
  for (Eigen::Index s = 0; s < nsv; ++s) {
    const int t = fit.support_indices[s];
    m.support_vectors.row(s) = X.row(t);
    m.dual_coefs[s] = alpha[t] * y[t];
  }
  // G + 1 = Qa, so the quadratic term is aᵀ(G + 1).
  fit.dual_objective = alpha.sum() - 0.5 * alpha.dot((G.array() + 1.0).matrix());
  return fit;
}

BinarySvm train_binary_svm(const Eigen::MatrixXd& X, const std::vector<int>& y,
                           double C, double gamma, double kkt_tol) {
  return train_binary_svm_fit(X, y, C, gamma, kkt_tol).model;
}

double predict_binary(const BinarySvm& m, const Eigen::VectorXd& x) {
  if (m.support_vectors.rows() > 0 && x.size() != m.dim())
    throw std::invalid_argument("predict_binary: dimension mismatch");
  double f = m.bias;
  for (Eigen::Index s = 0; s < m.support_vectors.rows(); ++s)
    f += m.dual_coefs[s] *
         std::exp(-m.gamma * (m.support_vectors.row(s).transpose() - x).squaredNorm());
  return f;
}

double kkt_violation(const Eigen::MatrixXd& X, const std::vector<int>& y,
                     const BinarySvmFit& fit, double kkt_tol) {
  const double C = fit.model.C;
  const double band = kkt_tol * (1 + C);
  double worst = 0;
  for (Eigen::Index t = 0; t < X.rows(); ++t) {
    const double margin = y[t] * predict_binary(fit.model, X.row(t).transpose());
    const double a = fit.alpha[t];
    double v = 0;
    if (a <= 0)
      v = (1 - band) - margin;
    else if (a >= C)
      v = margin - (1 + band);
    else
      v = std::abs(margin - 1) - band;
    worst = std::max(worst, v);
  }
  return worst;
}

int SvmModel::pair_index(int a, int b) const {
  const int k = static_cast<int>(classes.size());
  if (a < 0 || b <= a || b >= k)
    throw std::out_of_range("SvmModel::pair_index");
  // Pairs before row a: sum_{r<a} (k − 1 − r).
  return a * (2 * k - a - 1) / 2 + (b - a - 1);
}

SvmModel train_multiclass(const Eigen::MatrixXd& X,
                          const std::vector<std::string>& labels, double C,
                          double gamma, double kkt_tol) {
  if (static_cast<Eigen::Index>(labels.size()) != X.rows())
    throw std::invalid_argument("train_multiclass: label count != sample count");
  const std::set<std::string> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2)
    throw InputError("SVM training needs at least 2 classes");

  SvmModel model;
  model.classes.assign(distinct.begin(), distinct.end());
  model.C = C;
  model.gamma = gamma;
  const int k = static_cast<int>(model.classes.size());
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      std::vector<Eigen::Index> rows;
      std::vector<int> y;
      for (std::size_t t = 0; t < labels.size(); ++t) {
        if (labels[t] == model.classes[a]) {
          rows.push_back(static_cast<Eigen::Index>(t));
          y.push_back(1);
        } else if (labels[t] == model.classes[b]) {
          rows.push_back(static_cast<Eigen::Index>(t));
          y.push_back(-1);
        }
      }
      model.machines.push_back(
          train_binary_svm(X(rows, Eigen::all), y, C, gamma, kkt_tol));
    }
  }
  return model;
}

std::string predict(const SvmModel& model, const Eigen::VectorXd& x) {
  const int k = static_cast<int>(model.classes.size());
  if (k < 2 || static_cast<int>(model.machines.size()) != k * (k - 1) / 2)
    throw std::invalid_argument("predict: malformed SVM model");
  std::vector<int> votes(k, 0);
  std::vector<double> strength(k, 0.0);
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      const double f = predict_binary(model.machines[model.pair_index(a, b)], x);
      const int winner = f >= 0 ? a : b;
      ++votes[winner];
      strength[winner] += std::abs(f);
    }
  }
  int best = 0;
  for (int c = 1; c < k; ++c) {
    if (votes[c] > votes[best] ||
        (votes[c] == votes[best] && strength[c] > strength[best]))
      best = c;
  }
  return model.classes[best];
}

std::vector<double> default_c_grid() {
  std::vector<double> out;
  for (int e = -5; e <= 15; e += 2) out.push_back(std::ldexp(1.0, e));
  return out;
}

std::vector<double> default_gamma_grid() {
  std::vector<double> out;
  for (int e = -15; e <= 3; e += 2) out.push_back(std::ldexp(1.0, e));
  return out;
}

std::vector<int> stratified_folds(const std::vector<std::string>& labels,
                                  int folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("stratified_folds: folds must be >= 2");
  std::map<std::string, std::vector<int>> by_class;
  for (std::size_t t = 0; t < labels.size(); ++t)
    by_class[labels[t]].push_back(static_cast<int>(t));
  std::mt19937_64 rng(seed);
  std::vector<int> fold(labels.size(), 0);
  for (auto& [label, members] : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t p = 0; p < members.size(); ++p)
      fold[members[p]] = static_cast<int>(p % folds);
  }
  return fold;
}

GridSearchResult grid_search(const Eigen::MatrixXd& X,
                             const std::vector<std::string>& labels,
                             const GridSearchConfig& cfg) {
  if (cfg.c_values.empty() || cfg.gamma_values.empty())
    throw std::invalid_argument("grid_search: empty grid");
  if (cfg.folds < 2) throw std::invalid_argument("grid_search: folds must be >= 2");
  if (static_cast<Eigen::Index>(labels.size()) != X.rows())
    throw std::invalid_argument("grid_search: label count != sample count");

  std::map<std::string, int> counts;
  for (const auto& l : labels) ++counts[l];
  if (counts.size() < 2) throw InputError("grid search needs at least 2 classes");
  int smallest = std::numeric_limits<int>::max();
  for (const auto& [l, c] : counts) smallest = std::min(smallest, c);

  GridSearchResult result;
  result.folds_used = cfg.folds;
  if (smallest < cfg.folds) {
    if (smallest < 2)
      throw InputError("grid search: a class has fewer than 2 training "
                       "samples, so stratified folds are impossible");
    result.folds_used = smallest;
    result.folds_reduced = true;
  }
  const std::vector<int> fold =
      stratified_folds(labels, result.folds_used, cfg.seed);

  struct FoldData {
    std::vector<Eigen::Index> train, test;
    std::vector<std::string> train_labels;
  };
  std::vector<FoldData> parts(result.folds_used);
  for (std::size_t t = 0; t < labels.size(); ++t) {
    for (int f = 0; f < result.folds_used; ++f) {
      if (fold[t] == f) {
        parts[f].test.push_back(static_cast<Eigen::Index>(t));
      } else {
        parts[f].train.push_back(static_cast<Eigen::Index>(t));
        parts[f].train_labels.push_back(labels[t]);
      }
    }
  }

  for (double c : cfg.c_values)
    for (double g : cfg.gamma_values) result.grid.push_back({c, g, 0.0});

  parallel_for(result.grid.size(), cfg.threads, [&](std::size_t cell) {
    GridCell& gc = result.grid[cell];
    long correct = 0;
    for (const FoldData& part : parts) {
      const SvmModel m = train_multiclass(X(part.train, Eigen::all),
                                          part.train_labels, gc.C, gc.gamma,
                                          cfg.kkt_tol);
      for (Eigen::Index t : part.test)
        if (predict(m, X.row(t).transpose()) == labels[t]) ++correct;
    }
    gc.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
  });

  const GridCell* best = &result.grid.front();
  for (const GridCell& gc : result.grid) {
    if (gc.accuracy > best->accuracy ||
        (gc.accuracy == best->accuracy &&
         (gc.C < best->C || (gc.C == best->C && gc.gamma < best->gamma))))
      best = &gc;
  }
  result.best_C = best->C;
  result.best_gamma = best->gamma;
  result.cv_accuracy = best->accuracy;
  return result;
}

void save_svm(const SvmModel& model, std::ostream& out) {
  const int dim = model.machines.empty() ? 0 : model.machines.front().dim();
  out << kSvmMagic << '\n'
      << "[model] classes=" << model.classes.size()
      << " C=" << text::format_double(model.C)
      << " gamma=" << text::format_double(model.gamma) << " dim=" << dim << '\n';
  for (const auto& c : model.classes) out << c << '\n';
  const int k = static_cast<int>(model.classes.size());
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      const BinarySvm& m = model.machines[model.pair_index(a, b)];
      out << "[pair] a=" << a << " b=" << b
          << " n_sv=" << m.support_vectors.rows()
          << " bias=" << text::format_double(m.bias) << '\n';
      text::write_row(out, m.dual_coefs.transpose());
      text::write_matrix(out, m.support_vectors);
    }
  }
}

void save_svm(const SvmModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  save_svm(model, out);
}

SvmModel load_svm(std::istream& in) {
  const std::string magic = text::next_line(in, "SVM header");
  if (magic != kSvmMagic)
    throw InputError("unsupported SVM file version '" + magic + "'");
  const auto head = text::expect_section(in, "model");
  const auto k = head.integer("classes");
  const auto dim = head.integer("dim");
  if (k < 2 || dim < 0) throw InputError("SVM file: bad model header");
  SvmModel model;
  model.C = head.number("C");
  model.gamma = head.number("gamma");
  for (long long c = 0; c < k; ++c)
    model.classes.push_back(text::next_line(in, "SVM class list"));
  if (!std::is_sorted(model.classes.begin(), model.classes.end()))
    throw InputError("SVM file: class list is not sorted");
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      const auto s = text::expect_section(in, "pair");
      if (s.integer("a") != a || s.integer("b") != b)
        throw InputError("SVM file: pairs out of order");
      const auto nsv = s.integer("n_sv");
      if (nsv < 0) throw InputError("SVM file: negative support count");
      BinarySvm m;
      m.C = model.C;
      m.gamma = model.gamma;
      m.bias = s.number("bias");
      m.dual_coefs = text::read_row(in, nsv, "SVM dual coefficients").transpose();
      m.support_vectors = text::read_matrix(in, nsv, dim, "SVM support vectors");
      model.machines.push_back(std::move(m));
    }
  }
  return model;
}

SvmModel load_svm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open SVM file " + path.string());
  return load_svm(in);
}

}  // namespace isarec
