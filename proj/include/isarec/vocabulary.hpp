#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "isarec/network.hpp"
#include "isarec/video_io.hpp"

namespace isarec {

struct Vocabulary {
  Eigen::MatrixXd centroids;  // k_v × d, one visual word per row

  int size() const { return static_cast<int>(centroids.rows()); }
  int dim() const { return static_cast<int>(centroids.cols()); }
};

struct KMeansConfig {
  int words = 100;
  int max_iter = 300;
  double tol = 1e-6;
  std::uint64_t seed = 21;
};

struct KMeansFit {
  Vocabulary vocabulary;
  // Within-cluster sum of squares after each assignment step.
  std::vector<double> wcss;
  int iterations = 0;
  bool converged = false;
};

// k-means++ seeding followed by Lloyd iterations over column samples.
// Stops when no centroid moves by tol or more, or after max_iter updates.
// An empty cluster is re-seeded with the point farthest from its assigned
// centroid. Throws std::logic_error if the WCSS ever increases.
KMeansFit kmeans_fit(const Eigen::MatrixXd& features, int words,
                     std::uint64_t seed, int max_iter, double tol);

// Nearest centroid by Euclidean distance, ties to the lowest index.
int assign(const Vocabulary& vocab, const Eigen::VectorXd& feature);
std::vector<int> assign_all(const Vocabulary& vocab,
                            const Eigen::MatrixXd& features);

struct BowHistogram {
  std::string clip_id;
  Modality modality = Modality::Grayscale;
  Eigen::VectorXd weights;  // L1-normalized
};

// Hard-assignment histogram of descriptor columns, L1-normalized.
BowHistogram make_histogram(const Vocabulary& vocab,
                            const Eigen::MatrixXd& descriptors,
                            std::string clip_id, Modality modality);

// Stacked features of every dense layer-2 block of the clip (columns).
Eigen::MatrixXd clip_descriptors(const IsaNetwork& net, const VideoClip& clip);

BowHistogram encode_clip(const IsaNetwork& net, const Vocabulary& vocab,
                         const VideoClip& clip);

inline constexpr std::string_view kVocabularyMagic = "ISAREC-VOCAB v1";

void save_vocabulary(const Vocabulary& vocab, std::ostream& out);
void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path);
Vocabulary load_vocabulary(std::istream& in);
Vocabulary load_vocabulary(const std::filesystem::path& path);

// CSV with header clip_id,modality,w0,...,w{k-1}.
void write_histograms(const std::vector<BowHistogram>& hists,
                      const std::filesystem::path& path);
std::vector<BowHistogram> read_histograms(const std::filesystem::path& path);

}  // namespace isarec
