#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "isarec/classifier.hpp"
#include "isarec/error.hpp"
#include "test_util.hpp"

using namespace isarec;

namespace {

struct Fixture {
  Eigen::MatrixXd X;  // rows are samples
  std::vector<int> y;
};

Fixture random_fixture(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Fixture f{testutil::random_matrix(n, 2, seed + 1000), {}};
  for (int i = 0; i < n; ++i) f.y.push_back(i % 2 ? 1 : -1);
  std::shuffle(f.y.begin(), f.y.end(), rng);
  return f;
}

// 20 points split by the line x0 + x1 = 0 with a margin of at least 0.5.
Fixture separable20(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-3, 3);
  Fixture f{Eigen::MatrixXd(20, 2), {}};
  int i = 0;
  while (i < 20) {
    const double a = u(rng), b = u(rng);
    const int label = i % 2 ? 1 : -1;
    if (label * (a + b) < 0.5 * std::sqrt(2.0)) continue;
    f.X.row(i) << a, b;
    f.y.push_back(label);
    ++i;
  }
  return f;
}

// KKT check written against the naive kernel, independent of kkt_violation.
double independent_kkt_violation(const Fixture& f, const BinarySvmFit& fit, double tol) {
  const double C = fit.model.C, band = tol * (1 + C);
  double worst = 0;
  for (Eigen::Index t = 0; t < f.X.rows(); ++t) {
    double d = fit.model.bias;
    for (Eigen::Index s = 0; s < f.X.rows(); ++s)
      d += fit.alpha[s] * f.y[s] *
           testutil::naive_rbf(f.X.row(s).transpose(), f.X.row(t).transpose(), fit.model.gamma);
    const double m = f.y[t] * d, a = fit.alpha[t];
    if (a <= 0) worst = std::max(worst, (1 - band) - m);
    else if (a >= C) worst = std::max(worst, m - (1 + band));
    else worst = std::max(worst, std::abs(m - 1) - band);
  }
  return worst;
}

}  // namespace

TEST_CASE("rbf kernel") {
  const Eigen::VectorXd x = Eigen::Vector3d(1, 2, 3);
  CHECK(rbf_kernel(x, x, 3.0) == 1.0);
  CHECK(rbf_kernel(x, Eigen::VectorXd(Eigen::Vector3d(9, 9, 9)), 0.0) == 1.0);
  CHECK(rbf_kernel(x, Eigen::VectorXd(Eigen::Vector3d(1, 2, 4)), std::log(2.0)) ==
        doctest::Approx(0.5).epsilon(1e-15));
  for (int s = 0; s < 20; ++s) {
    const Eigen::VectorXd a = testutil::random_matrix(4, 1, s), b = testutil::random_matrix(4, 1, s + 50);
    const double k = rbf_kernel(a, b, 0.3);
    CHECK(k == rbf_kernel(b, a, 0.3));
    CHECK(k > 0);
    CHECK(k <= 1);
  }
  CHECK_THROWS(rbf_kernel(x, Eigen::VectorXd::Zero(2), 1.0));
}

TEST_CASE("two-point fixture matches the closed-form dual") {
  // Q = [[1, -k], [-k, 1]] with k = exp(-4 gamma); the dual maximum sits at
  // alpha_1 = alpha_2 = 1 / (1 - k), bias 0 by symmetry.
  Eigen::MatrixXd X(2, 1);
  X << -1, 1;
  const std::vector<int> y{-1, 1};
  const double gamma = 0.5, k = std::exp(-4 * gamma), alpha = 1 / (1 - k);
  const auto fit = train_binary_svm_fit(X, y, 1e6, gamma);
  CHECK(fit.alpha[0] == doctest::Approx(alpha).epsilon(1e-12));
  CHECK(fit.alpha[1] == doctest::Approx(alpha).epsilon(1e-12));
  CHECK(std::abs(predict_binary(fit.model, Eigen::VectorXd::Zero(1))) <= 1e-12);
  CHECK(fit.support_indices == std::vector<int>{0, 1});
  CHECK(fit.dual_objective == doctest::Approx(alpha).epsilon(1e-12));
}

TEST_CASE("dual objective matches brute-force QP on small fixtures") {
  int count = 0;
  for (int n = 2; n <= 6; ++n)
    for (std::uint64_t seed = 0; seed < 8; ++seed)
      for (double C : {0.1, 1.0, 10.0})
        for (double gamma : {0.2, 1.0, 3.0}) {
          const auto f = random_fixture(n, seed * 31 + static_cast<std::uint64_t>(n));
          const auto fit = train_binary_svm_fit(f.X, f.y, C, gamma);
          const double brute = testutil::brute_force_svm_dual(f.X, f.y, C, gamma);
          CHECK(std::abs(fit.dual_objective - brute) <= 1e-4);
          CHECK(fit.dual_objective ==
                doctest::Approx(svm_dual_objective(f.X, f.y, fit.alpha, gamma)).epsilon(1e-10));
          ++count;
        }
  CHECK(count == 5 * 8 * 9);
}

TEST_CASE("trained machines satisfy the KKT bands and dual feasibility") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto f = random_fixture(30, 500 + seed);
    for (double C : {0.5, 5.0, 50.0}) {
      const auto fit = train_binary_svm_fit(f.X, f.y, C, 1.0, 1e-3);
      CHECK(kkt_violation(f.X, f.y, fit, 1e-3) <= 0);
      CHECK(independent_kkt_violation(f, fit, 1e-3) <= 1e-12);
      double balance = 0;
      for (int i = 0; i < 30; ++i) {
        CHECK(fit.alpha[i] >= 0);
        CHECK(fit.alpha[i] <= C);
        balance += fit.alpha[i] * f.y[i];
      }
      CHECK(std::abs(balance) <= 1e-6);
      // free support vectors sit on their margin
      for (int i = 0; i < 30; ++i)
        if (fit.alpha[i] > 0 && fit.alpha[i] < C)
          CHECK(std::abs(predict_binary(fit.model, f.X.row(i).transpose()) - f.y[i]) <=
                1e-3 * (1 + C));
    }
  }
}

TEST_CASE("separable 20-point fixture is fit perfectly") {
  const auto f = separable20(3);
  const auto m = train_binary_svm(f.X, f.y, 10.0, 1.0);
  for (int i = 0; i < 20; ++i) CHECK(predict_binary(m, f.X.row(i).transpose()) * f.y[i] > 0);
}

TEST_CASE("predict_binary") {
  BinarySvm empty;
  empty.bias = -0.75;
  CHECK(predict_binary(empty, Eigen::VectorXd::Zero(3)) == -0.75);
  const auto f = random_fixture(10, 4);
  const auto m = train_binary_svm(f.X, f.y, 1.0, 1.0);
  const Eigen::VectorXd x = Eigen::Vector2d(0.3, -0.1);
  CHECK(predict_binary(m, x) == predict_binary(m, x));
  CHECK_THROWS(predict_binary(m, Eigen::VectorXd::Zero(3)));
}

TEST_CASE("binary training errors") {
  Eigen::MatrixXd X = testutil::random_matrix(3, 2, 1);
  CHECK_THROWS_AS(train_binary_svm(X, {1, 1, 1}, 1, 1), InputError);
  CHECK_THROWS(train_binary_svm(X, {1, -1, 1}, 0, 1));
  CHECK_THROWS(train_binary_svm(X, {1, -1, 2}, 1, 1));
}

TEST_CASE("one-vs-one machines") {
  std::vector<std::string> labels;
  Eigen::MatrixXd X = testutil::random_matrix(40, 3, 9);
  const std::vector<std::string> names{"c0", "c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8", "c9"};
  for (int i = 0; i < 40; ++i) labels.push_back(names[i % 10]);
  const auto m10 = train_multiclass(X, labels, 1, 1);
  CHECK(m10.machines.size() == 45);
  CHECK(m10.classes == names);
  CHECK(m10.pair_index(0, 1) == 0);
  CHECK(m10.pair_index(1, 2) == 9);
  CHECK(m10.pair_index(8, 9) == 44);

  // a pair machine equals a binary machine on the restricted data
  std::vector<Eigen::Index> rows;
  std::vector<int> y;
  for (int i = 0; i < 40; ++i) {
    if (labels[i] == "c2") rows.push_back(i), y.push_back(1);
    if (labels[i] == "c5") rows.push_back(i), y.push_back(-1);
  }
  const auto direct = train_binary_svm(X(rows, Eigen::all), y, 1, 1);
  const auto& pair = m10.machines[m10.pair_index(2, 5)];
  CHECK(pair.bias == direct.bias);
  CHECK(pair.dual_coefs == direct.dual_coefs);

  std::vector<std::string> two(labels.begin(), labels.end());
  for (auto& l : two) l = l < "c5" ? "lo" : "hi";
  const auto m2 = train_multiclass(X, two, 1, 1);
  CHECK(m2.machines.size() == 1);
  for (int i = 0; i < 5; ++i) {
    const Eigen::VectorXd x = X.row(i).transpose();
    CHECK(predict(m2, x) == (predict_binary(m2.machines[0], x) >= 0 ? "hi" : "lo"));
  }
  CHECK_THROWS_AS(train_multiclass(X, std::vector<std::string>(40, "a"), 1, 1), InputError);
}

TEST_CASE("vote tie rules") {
  SvmModel m;
  m.classes = {"a", "b", "c"};
  m.machines.resize(3);
  auto set = [&](int a, int b, double bias) { m.machines[m.pair_index(a, b)].bias = bias; };
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(2);

  // one vote each; c has the largest winning magnitude
  set(0, 1, 1.0), set(0, 2, -2.0), set(1, 2, 0.5);
  CHECK(predict(m, x) == "c");
  // one vote each with equal magnitudes: lexicographic
  set(0, 1, 1.0), set(0, 2, -1.0), set(1, 2, 1.0);
  CHECK(predict(m, x) == "a");
  // zero decision votes for the smaller class
  set(0, 1, 0.0), set(0, 2, 0.0), set(1, 2, 0.0);
  CHECK(predict(m, x) == "a");
  set(0, 1, -1.0), set(0, 2, -1.0), set(1, 2, 0.0);
  CHECK(predict(m, x) == "b");
}

TEST_CASE("multiclass prediction on training points and under reordering") {
  // three well separated clusters
  Eigen::MatrixXd X = testutil::random_matrix(30, 2, 21, 0.3);
  std::vector<std::string> labels;
  const std::vector<Eigen::Vector2d> centers{{0, 0}, {4, 0}, {0, 4}};
  const std::vector<std::string> names{"p", "q", "r"};
  for (int i = 0; i < 30; ++i) {
    X.row(i) += centers[i % 3].transpose();
    labels.push_back(names[i % 3]);
  }
  const auto m = train_multiclass(X, labels, 10, 0.5);
  for (int i = 0; i < 30; ++i) CHECK(predict(m, X.row(i).transpose()) == labels[i]);

  std::vector<int> order(30);
  std::iota(order.begin(), order.end(), 0);
  const Eigen::MatrixXd probes = testutil::random_matrix(50, 2, 22, 2.0);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    std::shuffle(order.begin(), order.end(), std::mt19937_64(seed));
    Eigen::MatrixXd Xs(30, 2);
    std::vector<std::string> ls;
    for (int i = 0; i < 30; ++i) {
      Xs.row(i) = X.row(order[i]);
      ls.push_back(labels[order[i]]);
    }
    const auto ms = train_multiclass(Xs, ls, 10, 0.5);
    for (Eigen::Index p = 0; p < probes.rows(); ++p)
      CHECK(predict(ms, probes.row(p).transpose()) == predict(m, probes.row(p).transpose()));
  }
}

TEST_CASE("stratified folds spread each class evenly") {
  std::vector<std::string> labels;
  for (int i = 0; i < 23; ++i) labels.push_back(i % 3 == 0 ? "x" : "y");
  const auto folds = stratified_folds(labels, 5, 7);
  CHECK(folds == stratified_folds(labels, 5, 7));
  for (const std::string cls : {"x", "y"}) {
    std::vector<int> per(5, 0);
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) ++per[folds[i]];
    CHECK(*std::max_element(per.begin(), per.end()) - *std::min_element(per.begin(), per.end()) <= 1);
  }
}

TEST_CASE("grid search") {
  Eigen::MatrixXd X = testutil::random_matrix(24, 2, 30, 0.5);
  std::vector<std::string> labels;
  for (int i = 0; i < 24; ++i) {
    if (i % 2) X(i, 0) += 2;
    labels.push_back(i % 2 ? "b" : "a");
  }
  GridSearchConfig cfg;

  SUBCASE("single cell") {
    cfg.c_values = {2.0};
    cfg.gamma_values = {0.5};
    const auto r = grid_search(X, labels, cfg);
    CHECK(r.best_C == 2.0);
    CHECK(r.best_gamma == 0.5);
    REQUIRE(r.grid.size() == 1);
    CHECK(r.cv_accuracy == r.grid[0].accuracy);
    CHECK(r.folds_used == 5);
    CHECK_FALSE(r.folds_reduced);
  }
  SUBCASE("duplicated entries score identically; ties go to small C then small gamma") {
    cfg.c_values = {1.0, 1.0, 4.0};
    cfg.gamma_values = {0.25, 0.25};
    cfg.threads = 3;
    const auto r = grid_search(X, labels, cfg);
    REQUIRE(r.grid.size() == 6);
    for (const auto& a : r.grid)
      for (const auto& b : r.grid)
        if (a.C == b.C && a.gamma == b.gamma) CHECK(a.accuracy == b.accuracy);
    double best = 0;
    for (const auto& c : r.grid) best = std::max(best, c.accuracy);
    CHECK(r.cv_accuracy == best);
    for (const auto& c : r.grid)
      if (c.accuracy == best) {
        CHECK(r.best_C <= c.C);
        if (r.best_C == c.C) CHECK(r.best_gamma <= c.gamma);
      }
  }
  SUBCASE("thread count does not change the result") {
    cfg.c_values = default_c_grid();
    cfg.gamma_values = default_gamma_grid();
    cfg.threads = 1;
    const auto a = grid_search(X, labels, cfg);
    cfg.threads = 4;
    const auto b = grid_search(X, labels, cfg);
    CHECK(a.best_C == b.best_C);
    CHECK(a.best_gamma == b.best_gamma);
    for (std::size_t i = 0; i < a.grid.size(); ++i) CHECK(a.grid[i].accuracy == b.grid[i].accuracy);
  }
  SUBCASE("small classes reduce the folds, singletons are rejected") {
    std::vector<std::string> few = labels;
    for (auto& l : few) l = "a";
    few[1] = few[3] = few[5] = "b";
    cfg.c_values = {1.0};
    cfg.gamma_values = {1.0};
    const auto r = grid_search(X, few, cfg);
    CHECK(r.folds_used == 3);
    CHECK(r.folds_reduced);
    few[3] = few[5] = "a";
    CHECK_THROWS_AS(grid_search(X, few, cfg), InputError);
  }
}

TEST_CASE("grid search picks the largest C when only it separates the data") {
  // Two interleaved 1-D classes; with a fixed narrow kernel, small C caps
  // every alpha and cannot reach the alternating labels.
  const int n = 40;
  Eigen::MatrixXd X(n, 1);
  std::vector<std::string> labels;
  for (int i = 0; i < n; ++i) {
    X(i, 0) = (i / 2) * 1.0 + (i % 2) * 0.02;
    labels.push_back((i / 2) % 2 ? "b" : "a");
  }
  GridSearchConfig cfg;
  cfg.c_values = {0.03125, 0.125, 1.0, 32.0};
  cfg.gamma_values = {1.0};
  const auto r = grid_search(X, labels, cfg);
  CHECK(r.best_C == 32.0);
}

TEST_CASE("SVM model file round-trip") {
  Eigen::MatrixXd X = testutil::random_matrix(30, 4, 40);
  std::vector<std::string> labels;
  for (int i = 0; i < 30; ++i) labels.push_back(std::string(1, static_cast<char>('a' + i % 3)));
  const auto m = train_multiclass(X, labels, 3.0, 0.7);
  std::stringstream s;
  save_svm(m, s);
  CHECK(s.str().rfind("ISAREC-SVM v1\n", 0) == 0);
  const auto back = load_svm(s);
  CHECK(back.classes == m.classes);
  const Eigen::MatrixXd probes = testutil::random_matrix(100, 4, 41);
  for (Eigen::Index p = 0; p < probes.rows(); ++p)
    for (std::size_t k = 0; k < m.machines.size(); ++k)
      CHECK(std::abs(predict_binary(back.machines[k], probes.row(p).transpose()) -
                     predict_binary(m.machines[k], probes.row(p).transpose())) <= 1e-12);

  std::string text = s.str();
  text.replace(0, 13, "ISAREC-SVM v7");
  std::istringstream bad(text);
  CHECK_THROWS_AS(load_svm(bad), InputError);
}
