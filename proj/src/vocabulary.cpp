#include "isarec/vocabulary.hpp"

#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>

#include "isarec/error.hpp"
#include "text_format.hpp"

namespace isarec {

namespace {

struct Nearest {
  int index;
  double dist2;
};

Nearest nearest(const Eigen::MatrixXd& centroids,
                const Eigen::Ref<const Eigen::VectorXd>& x) {
  Nearest best{0, std::numeric_limits<double>::infinity()};
  for (Eigen::Index i = 0; i < centroids.rows(); ++i) {
    const double d = (centroids.row(i).transpose() - x).squaredNorm();
    if (d < best.dist2) best = {static_cast<int>(i), d};
  }
  return best;
}

Eigen::MatrixXd seed_plus_plus(const Eigen::MatrixXd& features, int words,
                               std::mt19937_64& rng) {
  const Eigen::Index n = features.cols();
  Eigen::MatrixXd centroids(words, features.rows());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centroids.row(0) = features.col(first(rng)).transpose();

  Eigen::VectorXd d2(n);
  for (Eigen::Index j = 0; j < n; ++j)
    d2[j] = (features.col(j) - centroids.row(0).transpose()).squaredNorm();

  for (int c = 1; c < words; ++c) {
    const double total = d2.sum();
    if (!(total > 0))
      throw InputError("k-means: fewer distinct points than " +
                       std::to_string(words) + " words");
    std::uniform_real_distribution<double> u(0.0, total);
    const double target = u(rng);
    Eigen::Index pick = -1;
    double cum = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (d2[j] <= 0) continue;
      pick = j;
      cum += d2[j];
      if (cum > target) break;
    }
    centroids.row(c) = features.col(pick).transpose();
    for (Eigen::Index j = 0; j < n; ++j)
      d2[j] = std::min(
          d2[j], (features.col(j) - centroids.row(c).transpose()).squaredNorm());
  }
  return centroids;
}

}  // namespace

int assign(const Vocabulary& vocab, const Eigen::VectorXd& feature) {
  if (feature.size() != vocab.dim())
    throw std::invalid_argument("assign: feature dimension " +
                                std::to_string(feature.size()) +
                                " != vocabulary dimension " +
                                std::to_string(vocab.dim()));
  return nearest(vocab.centroids, feature).index;
}

std::vector<int> assign_all(const Vocabulary& vocab,
                            const Eigen::MatrixXd& features) {
  if (features.rows() != vocab.dim())
    throw std::invalid_argument("assign: feature dimension mismatch");
  std::vector<int> out(features.cols());
  for (Eigen::Index j = 0; j < features.cols(); ++j)
    out[j] = nearest(vocab.centroids, features.col(j)).index;
  return out;
}

KMeansFit kmeans_fit(const Eigen::MatrixXd& features, int words,
                     std::uint64_t seed, int max_iter, double tol) {
  const Eigen::Index n = features.cols();
  if (words < 1) throw std::invalid_argument("k-means: words must be >= 1");
  if (n < words)
    throw InputError("k-means: " + std::to_string(n) +
                     " features cannot form " + std::to_string(words) +
                     " clusters");
  if (max_iter < 1) throw std::invalid_argument("k-means: max_iter must be >= 1");

  std::mt19937_64 rng(seed);
  KMeansFit fit;
  Eigen::MatrixXd& centroids = fit.vocabulary.centroids;
  centroids = seed_plus_plus(features, words, rng);

  std::vector<int> labels(n);
  Eigen::VectorXd dist2(n);
  auto assign_step = [&] {
    double wcss = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const Nearest best = nearest(centroids, features.col(j));
      labels[j] = best.index;
      dist2[j] = best.dist2;
      wcss += best.dist2;
    }
    return wcss;
  };

  fit.wcss.push_back(assign_step());
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(words, features.rows());
    std::vector<Eigen::Index> counts(words, 0);
    for (Eigen::Index j = 0; j < n; ++j) {
      sums.row(labels[j]) += features.col(j).transpose();
      ++counts[labels[j]];
    }
    Eigen::MatrixXd next = centroids;
    for (int c = 0; c < words; ++c)
      if (counts[c] > 0) next.row(c) = sums.row(c) / static_cast<double>(counts[c]);
    for (int c = 0; c < words; ++c) {
      if (counts[c] > 0) continue;
      Eigen::Index far = 0;
      dist2.maxCoeff(&far);
      next.row(c) = features.col(far).transpose();
      dist2[far] = -1;  // do not hand the same point to two empty clusters
    }
    const double movement = (next - centroids).rowwise().norm().maxCoeff();
    centroids = std::move(next);

    const double wcss = assign_step();
    const double prev = fit.wcss.back();
    if (wcss > prev + 1e-9 * prev + 1e-12)
      throw std::logic_error("k-means: WCSS increased from " +
                             text::format_double(prev) + " to " +
                             text::format_double(wcss));
    fit.wcss.push_back(wcss);
    fit.iterations = it;
    if (movement < tol) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

BowHistogram make_histogram(const Vocabulary& vocab,
                            const Eigen::MatrixXd& descriptors,
                            std::string clip_id, Modality modality) {
  if (descriptors.cols() == 0)
    throw InputError("clip '" + clip_id + "' produced no descriptors");
  BowHistogram h;
  h.clip_id = std::move(clip_id);
  h.modality = modality;
  h.weights = Eigen::VectorXd::Zero(vocab.size());
  for (int w : assign_all(vocab, descriptors)) h.weights[w] += 1.0;
  h.weights /= static_cast<double>(descriptors.cols());
  return h;
}

Eigen::MatrixXd clip_descriptors(const IsaNetwork& net, const VideoClip& clip) {
  const BlockGeometry& g = net.geometry.layer2;
  if (!fits_block(clip, g))
    throw InputError("clip '" + clip.clip_id +
                     "' is too small for one layer-2 block");
  const auto origins =
      dense_origins(clip.width, clip.height, clip.frame_count(), g);
  Eigen::MatrixXd raw(g.dim(), static_cast<Eigen::Index>(origins.size()));
  for (std::size_t i = 0; i < origins.size(); ++i)
    raw.col(static_cast<Eigen::Index>(i)) =
        extract_block(clip, origins[i], g.sx, g.sy, g.st);
  return extract_stacked_batch(net, raw);
}

BowHistogram encode_clip(const IsaNetwork& net, const Vocabulary& vocab,
                         const VideoClip& clip) {
  return make_histogram(vocab, clip_descriptors(net, clip), clip.clip_id,
                        clip.modality);
}

void save_vocabulary(const Vocabulary& vocab, std::ostream& out) {
  out << kVocabularyMagic << '\n'
      << "k=" << vocab.size() << " d=" << vocab.dim() << '\n';
  text::write_matrix(out, vocab.centroids);
}

void save_vocabulary(const Vocabulary& vocab,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  save_vocabulary(vocab, out);
}

Vocabulary load_vocabulary(std::istream& in) {
  const std::string magic = text::next_line(in, "vocabulary header");
  if (magic != kVocabularyMagic)
    throw InputError("unsupported vocabulary file version '" + magic + "'");
  // "k=.. d=.." parses like the fields of a section line.
  const auto dims = text::parse_section("[vocab] " +
                                        text::next_line(in, "vocabulary size"));
  const auto k = dims.integer("k");
  const auto d = dims.integer("d");
  if (k < 1 || d < 1) throw InputError("vocabulary: bad dimensions");
  Vocabulary v;
  v.centroids = text::read_matrix(in, k, d, "vocabulary");
  return v;
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open vocabulary file " + path.string());
  return load_vocabulary(in);
}

void write_histograms(const std::vector<BowHistogram>& hists,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  const Eigen::Index k = hists.empty() ? 0 : hists.front().weights.size();
  out << "clip_id,modality";
  for (Eigen::Index i = 0; i < k; ++i) out << ",w" << i;
  out << '\n';
  for (const auto& h : hists) {
    if (h.weights.size() != k)
      throw std::invalid_argument("write_histograms: mixed histogram lengths");
    out << h.clip_id << ',' << modality_name(h.modality);
    for (Eigen::Index i = 0; i < k; ++i)
      out << ',' << text::format_double(h.weights[i]);
    out << '\n';
  }
}

std::vector<BowHistogram> read_histograms(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open histogram file " + path.string());
  const auto header = text::split(text::next_line(in, "histogram header"), ',');
  if (header.size() < 3 || header[0] != "clip_id" || header[1] != "modality")
    throw InputError(path.string() + ": bad histogram header");
  const std::size_t k = header.size() - 2;
  for (std::size_t i = 0; i < k; ++i)
    if (header[i + 2] != "w" + std::to_string(i))
      throw InputError(path.string() + ": bad histogram column " + header[i + 2]);

  std::vector<BowHistogram> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = text::split(line, ',');
    if (f.size() != k + 2)
      throw InputError(path.string() + ": wrong field count in row for '" +
                       f[0] + "'");
    BowHistogram h;
    h.clip_id = f[0];
    h.modality = parse_modality(f[1]);
    h.weights.resize(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i)
      h.weights[static_cast<Eigen::Index>(i)] = text::parse_double(f[i + 2]);
    out.push_back(std::move(h));
  }
  return out;
}

}  // namespace isarec
