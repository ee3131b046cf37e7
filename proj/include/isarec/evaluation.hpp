#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "isarec/classifier.hpp"
#include "isarec/network.hpp"
#include "isarec/video_io.hpp"
#include "isarec/vocabulary.hpp"

namespace isarec {

struct Split {
  std::string test_subject;
  std::vector<std::string> train_clips;
  std::vector<std::string> test_clips;
};

// One split per distinct subject, ordered by subject name.
std::vector<Split> lopo_splits(const DatasetManifest& manifest);

// [gray / 2, depth / 2]: stays L1-normalized, length 2·k_v.
Eigen::VectorXd fuse_histograms(const BowHistogram& gray,
                                const BowHistogram& depth);

// Concatenates descriptor columns, keeping a seeded uniform subset of at
// most `limit` columns (in their original order) when there are more.
Eigen::MatrixXd subsample_descriptors(const std::vector<Eigen::MatrixXd>& parts,
                                      std::size_t limit, std::uint64_t seed);

enum class FeatureSet { Gray, Depth, Fused };
std::string_view feature_set_name(FeatureSet f);
FeatureSet parse_feature_set(std::string_view name);
std::vector<Modality> modalities_of(FeatureSet f);

// Where the evaluation touched a clip's data. Pretrain, Vocabulary,
// GridSearch and TrainSvm are fitting stages.
enum class Stage { Pretrain, Vocabulary, Encode, GridSearch, TrainSvm, Predict };
std::string_view stage_name(Stage s);
bool is_fitting(Stage s);

struct AccessEvent {
  std::string split;  // test subject of the split
  Stage stage;
  std::string clip_id;
  Modality modality;
};

// Called for every clip read; may be invoked from worker threads.
using AccessObserver = std::function<void(const AccessEvent&)>;

enum class PretrainSet { TrainFold, All };

struct EvaluationConfig {
  FeatureSet features = FeatureSet::Gray;
  int frame_width = 80;
  int frame_height = 60;
  PretrainConfig pretrain;
  KMeansConfig kmeans;
  std::size_t max_vocab_descriptors = 200000;
  std::uint64_t descriptor_seed = 41;
  GridSearchConfig grid;
  PretrainSet pretrain_set = PretrainSet::TrainFold;
  // Restrict to the splits testing these subjects; empty means all.
  std::vector<std::string> only_subjects;
  int threads = 1;
};

struct SplitResult {
  std::string test_subject;
  int n_test = 0;
  int n_correct = 0;
  double best_C = 0;
  double best_gamma = 0;
  double cv_accuracy = 0;
  int folds_used = 0;
  // Indexed like EvaluationReport::classes; rows = truth, cols = prediction.
  std::vector<std::vector<long>> confusion;
  // (clip_id, truth, prediction) in test order.
  std::vector<std::array<std::string, 3>> predictions;

  // nullopt when the class is absent from this test fold.
  std::optional<double> class_accuracy(std::size_t c) const;
};

struct EvaluationReport {
  FeatureSet features = FeatureSet::Gray;
  std::vector<std::string> classes;
  std::vector<SplitResult> splits;
  std::vector<std::vector<long>> confusion;
  double overall_accuracy = 0;
  // Mean over the splits whose test fold contains the class.
  std::map<std::string, std::optional<double>> per_class;
  // Clips too small for one layer-2 block; excluded from every split.
  std::vector<std::string> skipped;
};

// Loads every clip of the manifest (resized to the configured frame size)
// and runs the full leave-one-person-out protocol.
EvaluationReport run_evaluation(const DatasetManifest& manifest,
                                const EvaluationConfig& cfg,
                                const AccessObserver& observer = {});

// Reference numbers printed beside computed values.
struct ReferenceRow {
  std::string name;
  std::vector<std::string> aliases;
  double percent;
};
const std::vector<ReferenceRow>& reference_modalities();
const std::vector<ReferenceRow>& reference_activities();

// Writes accuracy.txt, confusion.csv and per_split.csv.
void render_reports(const EvaluationReport& report,
                    const std::filesystem::path& out_dir);

// "87.5%"; "n/a" for nullopt.
std::string format_percent(std::optional<double> fraction);

}  // namespace isarec
