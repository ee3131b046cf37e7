#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "isarec/error.hpp"
#include "isarec/synthetic.hpp"
#include "isarec/vocabulary.hpp"
#include "test_util.hpp"

using namespace isarec;

namespace {

int brute_nearest(const Eigen::MatrixXd& C, const Eigen::VectorXd& x) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < C.rows(); ++i) {
    double d = 0;
    for (Eigen::Index j = 0; j < C.cols(); ++j) d += (C(i, j) - x[j]) * (C(i, j) - x[j]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

IsaNetwork small_network() {
  PretrainConfig cfg;
  cfg.geometry = make_geometry({4, 4, 2, 2, 2, 1}, {2, 2, 2, 2, 2, 1});
  cfg.geometry.layer2.stride_x = 6;
  cfg.geometry.layer2.stride_y = 6;
  cfg.geometry.layer2.stride_t = 3;
  cfg.layer1_samples = 400;
  cfg.layer2_samples = 200;
  cfg.whiten1_dim = 16;
  cfg.layer1_filters = 8;
  cfg.whiten2_dim = 12;
  cfg.layer2_filters = 8;
  cfg.train.max_iters = 10;
  std::vector<VideoClip> clips;
  clips.push_back(make_bar_clip("a", Modality::Grayscale, 1, {}, 18, 12, 6, 1));
  return pretrain_network(std::span<const VideoClip>(clips), cfg).network;
}

}  // namespace

TEST_CASE("k-means: {0,1,10,11} with two words") {
  Eigen::MatrixXd X(1, 4);
  X << 0, 1, 10, 11;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto c = kmeans_fit(X, 2, seed, 300, 1e-6).vocabulary.centroids;
    std::vector<double> v{c(0, 0), c(1, 0)};
    std::sort(v.begin(), v.end());
    CHECK(v[0] == 0.5);
    CHECK(v[1] == 10.5);
  }
}

TEST_CASE("k-means: as many words as points") {
  const Eigen::MatrixXd X = testutil::random_matrix(3, 12, 4);
  const auto fit = kmeans_fit(X, 12, 9, 300, 1e-6);
  CHECK(fit.wcss.back() == 0.0);
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    CHECK((fit.vocabulary.centroids.row(assign(fit.vocabulary, X.col(j))).transpose() - X.col(j))
              .norm() == 0.0);
}

TEST_CASE("k-means: three separated blobs") {
  const Eigen::Matrix<double, 2, 3> means = (Eigen::Matrix<double, 2, 3>() << 0, 10, 0, 0, 0, 10).finished();
  Eigen::MatrixXd X = testutil::random_matrix(2, 200, 31, 0.5);
  for (Eigen::Index j = 0; j < X.cols(); ++j) X.col(j) += means.col(j % 3);
  const auto C = kmeans_fit(X, 3, 2, 300, 1e-6).vocabulary.centroids;
  for (int b = 0; b < 3; ++b) {
    double best = 1e9;
    for (int i = 0; i < 3; ++i) best = std::min(best, (C.row(i).transpose() - means.col(b)).norm());
    // sample means of ~67 points with sd 0.5 sit well inside 0.2
    CHECK(best <= 0.2);
  }
}

TEST_CASE("k-means: WCSS never increases and fits are deterministic") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Eigen::MatrixXd X = testutil::random_matrix(4, 150, 100 + seed);
    const auto a = kmeans_fit(X, 7, seed, 300, 1e-6);
    for (std::size_t i = 1; i < a.wcss.size(); ++i) CHECK(a.wcss[i] <= a.wcss[i - 1] * (1 + 1e-12));
    const auto b = kmeans_fit(X, 7, seed, 300, 1e-6);
    CHECK(a.vocabulary.centroids == b.vocabulary.centroids);
  }
}

TEST_CASE("k-means: empty clusters are re-seeded") {
  // duplicated points leave k-means++ few distinct choices
  Eigen::MatrixXd X(1, 8);
  X << 0, 0, 0, 0, 5, 5, 9, 9.5;
  const auto fit = kmeans_fit(X, 4, 1, 100, 1e-9);
  CHECK(fit.wcss.back() <= 0.125 + 1e-12);
}

TEST_CASE("k-means errors") {
  CHECK_THROWS_AS(kmeans_fit(testutil::random_matrix(2, 3, 1), 4, 1, 10, 1e-6), InputError);
  CHECK_THROWS_AS(kmeans_fit(Eigen::MatrixXd::Zero(2, 5), 2, 1, 10, 1e-6), InputError);
}

TEST_CASE("assign: spec examples and brute force") {
  Vocabulary v;
  v.centroids = testutil::random_matrix(10, 3, 5);
  CHECK(assign(v, v.centroids.row(7).transpose()) == 7);

  Vocabulary tie;
  tie.centroids = Eigen::MatrixXd::Constant(6, 1, 100.0);
  tie.centroids(2, 0) = -1;
  tie.centroids(5, 0) = 1;
  CHECK(assign(tie, Eigen::VectorXd::Zero(1)) == 2);

  const Eigen::MatrixXd Q = testutil::random_matrix(3, 1000, 6);
  const auto all = assign_all(v, Q);
  for (Eigen::Index j = 0; j < Q.cols(); ++j) CHECK(all[j] == brute_nearest(v.centroids, Q.col(j)));
  CHECK_THROWS(assign(v, Eigen::VectorXd::Zero(2)));
}

TEST_CASE("histograms: one-hot, normalization and permutation covariance") {
  Vocabulary v;
  v.centroids = testutil::random_matrix(5, 3, 7);
  const auto one = make_histogram(v, v.centroids.row(3).transpose(), "c", Modality::Grayscale);
  CHECK(one.weights == Eigen::VectorXd::Unit(5, 3));

  const Eigen::MatrixXd D = testutil::random_matrix(3, 77, 8);
  const auto h = make_histogram(v, D, "c", Modality::Depth);
  CHECK(std::abs(h.weights.sum() - 1) <= 1e-9);
  CHECK(h.weights.minCoeff() >= 0);

  std::vector<int> perm{4, 2, 0, 1, 3};
  Vocabulary p;
  p.centroids.resize(5, 3);
  for (int i = 0; i < 5; ++i) p.centroids.row(i) = v.centroids.row(perm[i]);
  const auto hp = make_histogram(p, D, "c", Modality::Depth);
  for (int i = 0; i < 5; ++i) CHECK(hp.weights[i] == h.weights[perm[i]]);

  CHECK_THROWS_AS(make_histogram(v, Eigen::MatrixXd(3, 0), "c", Modality::Grayscale), InputError);
}

TEST_CASE("encode_clip: tiling the content leaves the histogram unchanged") {
  const IsaNetwork net = small_network();
  const auto& b2 = net.geometry.layer2;
  REQUIRE(b2.sx == 6);
  // one layer-2 block of content, then the same content tiled 3x2 in space
  VideoClip one = make_bar_clip("one", Modality::Grayscale, 1, {}, 6, 6, 3, 3);
  VideoClip tiled = one;
  tiled.width = 18;
  tiled.height = 12;
  for (auto& f : tiled.frames) f = f.replicate(2, 3).eval();

  Vocabulary v;
  Eigen::MatrixXd D = clip_descriptors(net, one);
  REQUIRE(D.cols() == 1);
  v.centroids = testutil::random_matrix(6, D.rows(), 3);
  v.centroids.row(4) = D.col(0).transpose();
  const auto h1 = encode_clip(net, v, one);
  CHECK(h1.weights == Eigen::VectorXd::Unit(6, 4));
  const auto h2 = encode_clip(net, v, tiled);
  CHECK(clip_descriptors(net, tiled).cols() == 6);
  CHECK((h2.weights - h1.weights).cwiseAbs().maxCoeff() <= 1e-12);

  VideoClip tiny = make_bar_clip("tiny", Modality::Grayscale, 1, {}, 5, 6, 3, 3);
  CHECK_THROWS_AS(encode_clip(net, v, tiny), InputError);
}

TEST_CASE("vocabulary file and histogram CSV round-trip") {
  testutil::TempDir dir("vocab");
  Vocabulary v;
  v.centroids = testutil::random_matrix(4, 3, 12);
  save_vocabulary(v, dir / "v.txt");
  CHECK(testutil::read_text(dir / "v.txt").rfind("ISAREC-VOCAB v1\nk=4 d=3\n", 0) == 0);
  CHECK(load_vocabulary(dir / "v.txt").centroids == v.centroids);

  testutil::write_text(dir / "bad.txt", "ISAREC-VOCAB v9\nk=1 d=1\n0\n");
  CHECK_THROWS_AS(load_vocabulary(dir / "bad.txt"), InputError);

  std::vector<BowHistogram> hs(2);
  hs[0] = {"a", Modality::Grayscale, Eigen::Vector3d(0.25, 0.5, 0.25)};
  hs[1] = {"b", Modality::Depth, Eigen::Vector3d(1.0 / 3, 1.0 / 3, 1.0 / 3)};
  write_histograms(hs, dir / "h.csv");
  CHECK(testutil::read_text(dir / "h.csv").rfind("clip_id,modality,w0,w1,w2\n", 0) == 0);
  const auto back = read_histograms(dir / "h.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[1].clip_id == "b");
  CHECK(back[1].modality == Modality::Depth);
  CHECK(back[1].weights == hs[1].weights);
}
