#pragma once

// Helpers and independent reference implementations used by the tests.
// Nothing here calls into the code under test except where stated.

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace testutil {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("isarec_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Raw P5 writer, byte by byte, independent of the library's writer.
inline void write_raw_pgm(const std::filesystem::path& p, int w, int h, int maxval,
                          const std::vector<int>& samples) {
  std::ofstream out(p, std::ios::binary);
  out << "P5\n" << w << ' ' << h << '\n' << maxval << '\n';
  for (int s : samples) {
    if (maxval > 255) out.put(static_cast<char>((s >> 8) & 0xff));
    out.put(static_cast<char>(s & 0xff));
  }
}

inline Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed,
                                     double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// Classical Gram-Schmidt on the rows (twice, for stability).
inline Eigen::MatrixXd gram_schmidt_rows(Eigen::MatrixXd A) {
  for (int pass = 0; pass < 2; ++pass)
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      for (Eigen::Index j = 0; j < i; ++j) A.row(i) -= A.row(i).dot(A.row(j)) * A.row(j);
      A.row(i) /= A.row(i).norm();
    }
  return A;
}

// Sine of the largest principal angle between two row spaces of equal
// dimension: the spectral norm of the part of B's basis outside span(A).
inline double max_principal_angle_sin(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const Eigen::MatrixXd Qa = gram_schmidt_rows(A), Qb = gram_schmidt_rows(B);
  const Eigen::MatrixXd residual = Qb - Qb * Qa.transpose() * Qa;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(residual);
  return std::min(1.0, svd.singularValues()[0]);
}

inline double max_principal_angle_deg(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  return std::asin(max_principal_angle_sin(A, B)) * 180.0 / M_PI;
}

// Objective sum_i sqrt(sum_{j in group i} (w_j.x)^2 + eps), averaged over
// columns; written out with plain loops.
inline double naive_isa_objective(const Eigen::MatrixXd& W, int g, double eps,
                                  const Eigen::MatrixXd& X) {
  double total = 0;
  for (Eigen::Index t = 0; t < X.cols(); ++t)
    for (Eigen::Index start = 0; start < W.rows(); start += g) {
      double s = 0;
      for (int j = 0; j < g; ++j) {
        double r = 0;
        for (Eigen::Index c = 0; c < W.cols(); ++c) r += W(start + j, c) * X(c, t);
        s += r * r;
      }
      total += std::sqrt(s + eps);
    }
  return total / static_cast<double>(X.cols());
}

// Central finite-difference gradient of naive_isa_objective.
inline Eigen::MatrixXd fd_isa_gradient(Eigen::MatrixXd W, int g, double eps,
                                       const Eigen::MatrixXd& X, double h) {
  Eigen::MatrixXd G(W.rows(), W.cols());
  for (Eigen::Index i = 0; i < W.rows(); ++i)
    for (Eigen::Index j = 0; j < W.cols(); ++j) {
      const double keep = W(i, j);
      W(i, j) = keep + h;
      const double up = naive_isa_objective(W, g, eps, X);
      W(i, j) = keep - h;
      const double down = naive_isa_objective(W, g, eps, X);
      W(i, j) = keep;
      G(i, j) = (up - down) / (2 * h);
    }
  return G;
}

inline double naive_rbf(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double gamma) {
  double d = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return std::exp(-gamma * d);
}

// Brute-force solution of the soft-margin SVM dual
//   max sum(a) - 1/2 a'Qa,  0 <= a <= C,  y'a = 0
// by enumerating, for each point, whether it sits at 0, at C, or free, and
// solving the equality-constrained stationarity system on the free set. The
// concave optimum is the stationary point of the face that contains it, so
// the best feasible candidate is the global maximum. Suitable for n <= 8.
inline double brute_force_svm_dual(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                   double C, double gamma, Eigen::VectorXd* best_alpha = nullptr) {
  const int n = static_cast<int>(X.rows());
  Eigen::MatrixXd Q(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      Q(i, j) = y[i] * y[j] * naive_rbf(X.row(i).transpose(), X.row(j).transpose(), gamma);
  Eigen::VectorXd yv(n);
  for (int i = 0; i < n; ++i) yv[i] = y[i];

  double best = -std::numeric_limits<double>::infinity();
  int combos = 1;
  for (int i = 0; i < n; ++i) combos *= 3;
  for (int code = 0; code < combos; ++code) {
    std::vector<int> state(n);  // 0: at zero, 1: at C, 2: free
    for (int i = 0, c = code; i < n; ++i, c /= 3) state[i] = c % 3;
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    std::vector<int> free;
    for (int i = 0; i < n; ++i) {
      if (state[i] == 1) a[i] = C;
      if (state[i] == 2) free.push_back(i);
    }
    const int f = static_cast<int>(free.size());
    if (f > 0) {
      // [Q_FF  y_F][a_F]   [1 - Q_F,B a_B]
      // [y_F'   0 ][ b ] = [  -y_B' a_B  ]
      Eigen::MatrixXd K = Eigen::MatrixXd::Zero(f + 1, f + 1);
      Eigen::VectorXd rhs(f + 1);
      for (int r = 0; r < f; ++r) {
        for (int c = 0; c < f; ++c) K(r, c) = Q(free[r], free[c]);
        K(r, f) = yv[free[r]];
        K(f, r) = yv[free[r]];
        rhs[r] = 1.0 - Q.row(free[r]).dot(a);
      }
      rhs[f] = -yv.dot(a);
      Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
      if (!lu.isInvertible()) continue;
      const Eigen::VectorXd sol = lu.solve(rhs);
      for (int r = 0; r < f; ++r) a[free[r]] = sol[r];
    }
    if (std::abs(yv.dot(a)) > 1e-9) continue;
    bool ok = true;
    for (int i = 0; i < n; ++i) ok = ok && a[i] >= -1e-9 && a[i] <= C + 1e-9;
    if (!ok) continue;
    const double obj = a.sum() - 0.5 * a.dot(Q * a);
    if (obj > best) {
      best = obj;
      if (best_alpha) *best_alpha = a;
    }
  }
  return best;
}

}  // namespace testutil
