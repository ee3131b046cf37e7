#include "isarec/evaluation.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "isarec/error.hpp"
#include "isarec/parallel.hpp"

namespace isarec {

std::vector<Split> lopo_splits(const DatasetManifest& manifest) {
  std::map<std::string, Split> by_subject;
  for (const auto& e : manifest.entries) by_subject[e.subject].test_subject = e.subject;
  if (by_subject.size() < 2)
    throw InputError("leave-one-person-out needs at least 2 subjects, found " +
                     std::to_string(by_subject.size()));
  for (const auto& e : manifest.entries) {
    for (auto& [subject, split] : by_subject) {
      if (subject == e.subject)
        split.test_clips.push_back(e.clip_id);
      else
        split.train_clips.push_back(e.clip_id);
    }
  }
  std::vector<Split> out;
  for (auto& [subject, split] : by_subject) out.push_back(std::move(split));
  return out;
}

Eigen::VectorXd fuse_histograms(const BowHistogram& gray,
                                const BowHistogram& depth) {
  if (gray.clip_id != depth.clip_id)
    throw std::invalid_argument("fuse_histograms: clip '" + gray.clip_id +
                                "' paired with '" + depth.clip_id + "'");
  Eigen::VectorXd out(gray.weights.size() + depth.weights.size());
  out << gray.weights / 2.0, depth.weights / 2.0;
  return out;
}

std::string_view feature_set_name(FeatureSet f) {
  switch (f) {
    case FeatureSet::Gray: return "gray";
    case FeatureSet::Depth: return "depth";
    case FeatureSet::Fused: return "fused";
  }
  return "?";
}

FeatureSet parse_feature_set(std::string_view name) {
  if (name == "gray" || name == "grayscale") return FeatureSet::Gray;
  if (name == "depth") return FeatureSet::Depth;
  if (name == "fused") return FeatureSet::Fused;
  throw InputError("unknown modality '" + std::string(name) +
                   "' (expected gray, depth or fused)");
}

std::vector<Modality> modalities_of(FeatureSet f) {
  switch (f) {
    case FeatureSet::Gray: return {Modality::Grayscale};
    case FeatureSet::Depth: return {Modality::Depth};
    case FeatureSet::Fused: return {Modality::Grayscale, Modality::Depth};
  }
  return {};
}

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::Pretrain: return "pretrain";
    case Stage::Vocabulary: return "vocabulary";
    case Stage::Encode: return "encode";
    case Stage::GridSearch: return "grid-search";
    case Stage::TrainSvm: return "train-svm";
    case Stage::Predict: return "predict";
  }
  return "?";
}

bool is_fitting(Stage s) {
  return s == Stage::Pretrain || s == Stage::Vocabulary ||
         s == Stage::GridSearch || s == Stage::TrainSvm;
}

Eigen::MatrixXd subsample_descriptors(const std::vector<Eigen::MatrixXd>& parts,
                                  std::size_t limit, std::uint64_t seed) {
  std::size_t total = 0;
  for (const auto& p : parts) total += static_cast<std::size_t>(p.cols());
  std::vector<std::pair<std::size_t, Eigen::Index>> where;
  where.reserve(total);
  for (std::size_t i = 0; i < parts.size(); ++i)
    for (Eigen::Index c = 0; c < parts[i].cols(); ++c) where.emplace_back(i, c);
  if (total > limit) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < limit; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, total - 1);
      std::swap(where[i], where[pick(rng)]);
    }
    where.resize(limit);
    std::sort(where.begin(), where.end());
  }
  const Eigen::Index rows = parts.empty() ? 0 : parts.front().rows();
  Eigen::MatrixXd out(rows, static_cast<Eigen::Index>(where.size()));
  for (std::size_t k = 0; k < where.size(); ++k)
    out.col(static_cast<Eigen::Index>(k)) = parts[where[k].first].col(where[k].second);
  return out;
}

std::optional<double> SplitResult::class_accuracy(std::size_t c) const {
  const long total = std::accumulate(confusion[c].begin(), confusion[c].end(), 0L);
  if (total == 0) return std::nullopt;
  return static_cast<double>(confusion[c][c]) / static_cast<double>(total);
}

namespace {

// Loaded clips of one modality, indexed like the manifest entries.
using ClipTable = std::map<Modality, std::vector<VideoClip>>;

struct SplitContext {
  const DatasetManifest& manifest;
  const EvaluationConfig& cfg;
  const ClipTable& clips;
  const std::map<std::string, std::size_t>& index;
  const std::vector<std::string>& classes;
  const AccessObserver& observer;
  int grid_threads;
};

SplitResult run_split(const Split& split, const SplitContext& ctx) {
  const EvaluationConfig& cfg = ctx.cfg;
  auto touch = [&](Stage stage, const std::string& id, Modality m) {
    if (ctx.observer) ctx.observer({split.test_subject, stage, id, m});
  };

  std::vector<std::string> all_ids = split.train_clips;
  all_ids.insert(all_ids.end(), split.test_clips.begin(), split.test_clips.end());
  const std::vector<std::string>& pretrain_ids =
      cfg.pretrain_set == PretrainSet::All ? all_ids : split.train_clips;

  // histograms[m][clip_id]
  std::map<Modality, std::map<std::string, BowHistogram>> histograms;
  for (Modality m : modalities_of(cfg.features)) {
    const std::vector<VideoClip>& table = ctx.clips.at(m);

    std::vector<const VideoClip*> pretrain_clips;
    for (const auto& id : pretrain_ids) {
      touch(Stage::Pretrain, id, m);
      pretrain_clips.push_back(&table[ctx.index.at(id)]);
    }
    const IsaNetwork net =
        pretrain_network(std::span<const VideoClip* const>(pretrain_clips),
                         cfg.pretrain)
            .network;

    std::map<std::string, Eigen::MatrixXd> descriptors;
    std::vector<Eigen::MatrixXd> vocab_parts;
    for (const auto& id : split.train_clips) {
      touch(Stage::Vocabulary, id, m);
      auto d = clip_descriptors(net, table[ctx.index.at(id)]);
      vocab_parts.push_back(d);
      descriptors.emplace(id, std::move(d));
    }
    const Eigen::MatrixXd pool = subsample_descriptors(
        vocab_parts, cfg.max_vocab_descriptors, cfg.descriptor_seed);
    vocab_parts.clear();
    const Vocabulary vocab = kmeans_fit(pool, cfg.kmeans.words, cfg.kmeans.seed,
                                        cfg.kmeans.max_iter, cfg.kmeans.tol)
                                 .vocabulary;

    for (const auto& id : all_ids) {
      touch(Stage::Encode, id, m);
      auto it = descriptors.find(id);
      const Eigen::MatrixXd d = it != descriptors.end()
                                    ? std::move(it->second)
                                    : clip_descriptors(net, table[ctx.index.at(id)]);
      histograms[m].emplace(id, make_histogram(vocab, d, id, m));
    }
  }

  auto feature = [&](const std::string& id) -> Eigen::VectorXd {
    switch (cfg.features) {
      case FeatureSet::Gray: return histograms[Modality::Grayscale].at(id).weights;
      case FeatureSet::Depth: return histograms[Modality::Depth].at(id).weights;
      case FeatureSet::Fused:
        return fuse_histograms(histograms[Modality::Grayscale].at(id),
                               histograms[Modality::Depth].at(id));
    }
    return {};
  };
  auto label_of = [&](const std::string& id) {
    return ctx.manifest.entries[ctx.index.at(id)].label;
  };
  const Modality audit_modality = modalities_of(cfg.features).front();

  const Eigen::Index dim = feature(split.train_clips.front()).size();
  Eigen::MatrixXd X(static_cast<Eigen::Index>(split.train_clips.size()), dim);
  std::vector<std::string> labels;
  for (std::size_t t = 0; t < split.train_clips.size(); ++t) {
    const auto& id = split.train_clips[t];
    touch(Stage::GridSearch, id, audit_modality);
    X.row(static_cast<Eigen::Index>(t)) = feature(id).transpose();
    labels.push_back(label_of(id));
  }
  GridSearchConfig grid = cfg.grid;
  grid.threads = ctx.grid_threads;
  const GridSearchResult gs = grid_search(X, labels, grid);
  for (const auto& id : split.train_clips) touch(Stage::TrainSvm, id, audit_modality);
  const SvmModel model =
      train_multiclass(X, labels, gs.best_C, gs.best_gamma, cfg.grid.kkt_tol);

  SplitResult r;
  r.test_subject = split.test_subject;
  r.best_C = gs.best_C;
  r.best_gamma = gs.best_gamma;
  r.cv_accuracy = gs.cv_accuracy;
  r.folds_used = gs.folds_used;
  const std::size_t k = ctx.classes.size();
  r.confusion.assign(k, std::vector<long>(k, 0));
  auto class_index = [&](const std::string& label) {
    return static_cast<std::size_t>(
        std::lower_bound(ctx.classes.begin(), ctx.classes.end(), label) -
        ctx.classes.begin());
  };
  for (const auto& id : split.test_clips) {
    touch(Stage::Predict, id, audit_modality);
    const std::string truth = label_of(id);
    const std::string guess = predict(model, feature(id));
    ++r.confusion[class_index(truth)][class_index(guess)];
    ++r.n_test;
    if (truth == guess) ++r.n_correct;
    r.predictions.push_back({id, truth, guess});
  }
  return r;
}

}  // namespace

EvaluationReport run_evaluation(const DatasetManifest& manifest,
                                const EvaluationConfig& cfg,
                                const AccessObserver& observer) {
  cfg.pretrain.validate();
  const auto mods = modalities_of(cfg.features);

  ClipTable clips;
  for (Modality m : mods) {
    auto& table = clips[m];
    table.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) {
      VideoClip c = load_clip(manifest.clip_dir(e, m), m, e.clip_id);
      if (c.width != cfg.frame_width || c.height != cfg.frame_height)
        c = resize_clip(c, cfg.frame_width, cfg.frame_height);
      table.push_back(std::move(c));
    }
  }

  EvaluationReport report;
  report.features = cfg.features;
  DatasetManifest active{manifest.root, {}};
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    bool fits = true;
    for (Modality m : mods)
      fits = fits && fits_block(clips[m][i], cfg.pretrain.geometry.layer2);
    if (fits)
      active.entries.push_back(manifest.entries[i]);
    else
      report.skipped.push_back(manifest.entries[i].clip_id);
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i)
    index.emplace(manifest.entries[i].clip_id, i);

  std::set<std::string> class_set;
  for (const auto& e : active.entries) class_set.insert(e.label);
  report.classes.assign(class_set.begin(), class_set.end());

  std::vector<Split> splits = lopo_splits(active);
  if (!cfg.only_subjects.empty()) {
    for (const auto& s : cfg.only_subjects) {
      if (std::none_of(splits.begin(), splits.end(),
                       [&](const Split& sp) { return sp.test_subject == s; }))
        throw InputError("no split tests subject '" + s + "'");
    }
    std::erase_if(splits, [&](const Split& sp) {
      return std::find(cfg.only_subjects.begin(), cfg.only_subjects.end(),
                       sp.test_subject) == cfg.only_subjects.end();
    });
  }

  const int threads = std::max(cfg.threads, 1);
  const int split_threads = std::min<int>(threads, static_cast<int>(splits.size()));
  const SplitContext ctx{manifest, cfg, clips, index, report.classes, observer,
                         std::max(1, threads / std::max(split_threads, 1))};
  report.splits.resize(splits.size());
  parallel_for(splits.size(), split_threads, [&](std::size_t i) {
    report.splits[i] = run_split(splits[i], ctx);
  });

  const std::size_t k = report.classes.size();
  report.confusion.assign(k, std::vector<long>(k, 0));
  long correct = 0, total = 0;
  for (const auto& s : report.splits)
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b) report.confusion[a][b] += s.confusion[a][b];
  for (std::size_t a = 0; a < k; ++a) {
    correct += report.confusion[a][a];
    for (std::size_t b = 0; b < k; ++b) total += report.confusion[a][b];
  }
  report.overall_accuracy =
      total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;

  for (std::size_t c = 0; c < k; ++c) {
    double sum = 0;
    int n = 0;
    for (const auto& s : report.splits) {
      if (auto acc = s.class_accuracy(c)) {
        sum += *acc;
        ++n;
      }
    }
    report.per_class[report.classes[c]] =
        n > 0 ? std::optional<double>(sum / n) : std::nullopt;
  }
  return report;
}

}  // namespace isarec
