#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "isarec/error.hpp"
#include "isarec/evaluation.hpp"

namespace isarec::cli {

namespace fs = std::filesystem;

namespace {

void prepare_output(const PipelineConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec || !fs::is_directory(cfg.output_dir))
    throw InputError("cannot create output directory " + cfg.output_dir.string());
  std::ofstream out(cfg.output_dir / "resolved_config", std::ios::binary);
  if (!out) throw InputError("cannot write resolved_config");
  out << cfg.to_text();
}

DatasetManifest open_dataset(const PipelineConfig& cfg) {
  if (cfg.dataset_root.empty())
    throw InputError("no dataset root given (--dataset-root or pipeline.dataset_root)");
  if (!fs::is_directory(cfg.dataset_root))
    throw InputError("dataset root " + cfg.dataset_root.string() + " does not exist");
  return load_manifest(cfg.manifest_path());
}

bool held_out(const PipelineConfig& cfg, const ManifestEntry& e) {
  const auto& s = cfg.eval.only_subjects;
  return std::find(s.begin(), s.end(), e.subject) != s.end();
}

void check_held_out_subjects(const PipelineConfig& cfg, const DatasetManifest& m) {
  for (const auto& s : cfg.eval.only_subjects)
    if (std::none_of(m.entries.begin(), m.entries.end(),
                     [&](const ManifestEntry& e) { return e.subject == s; }))
      throw InputError("subject '" + s + "' is not in the manifest");
}

VideoClip load_resized(const PipelineConfig& cfg, const DatasetManifest& m,
                       const ManifestEntry& e, Modality mod) {
  VideoClip c = load_clip(m.clip_dir(e, mod), mod, e.clip_id);
  if (c.width != cfg.eval.frame_width || c.height != cfg.eval.frame_height)
    c = resize_clip(c, cfg.eval.frame_width, cfg.eval.frame_height);
  return c;
}

fs::path default_path(const PipelineConfig& cfg, const char* stem, Modality m,
                      const char* ext) {
  return cfg.output_dir / (std::string(stem) + "_" + std::string(modality_name(m)) + ext);
}

// A path flag only makes sense when a single modality is selected.
fs::path model_path(const PipelineConfig& cfg, const std::optional<fs::path>& flag,
                    const char* stem, Modality m, const char* ext) {
  if (flag) {
    if (cfg.eval.features == FeatureSet::Fused)
      throw InputError(std::string("--") + stem +
                       " cannot be combined with the fused modality");
    return *flag;
  }
  return default_path(cfg, stem, m, ext);
}

void pretrain_modality(const PipelineConfig& cfg, const DatasetManifest& m,
                       Modality mod, const fs::path& out) {
  std::vector<VideoClip> clips;
  for (const auto& e : m.entries) {
    if (held_out(cfg, e)) continue;
    VideoClip c = load_resized(cfg, m, e, mod);
    if (fits_block(c, cfg.eval.pretrain.geometry.layer2)) clips.push_back(std::move(c));
  }
  if (clips.empty()) throw InputError("no usable clips to pretrain on");
  const PretrainResult r = pretrain_network(std::span<const VideoClip>(clips), cfg.eval.pretrain);
  save_network(r.network, out);
  std::cerr << "pretrain " << modality_name(mod) << ": " << clips.size()
            << " clips, layer-1 objective " << r.layer1_trace.objective.front() << " -> "
            << r.layer1_trace.objective.back() << ", layer-2 objective "
            << r.layer2_trace.objective.front() << " -> " << r.layer2_trace.objective.back()
            << "; wrote " << out.string() << '\n';
}

struct Skipped {
  std::string clip_id;
  Modality modality;
  std::string reason;
};

void encode_modality(const PipelineConfig& cfg, const DatasetManifest& m, Modality mod,
                     const ModelPaths& paths, std::vector<Skipped>& skipped) {
  const IsaNetwork net = load_network(model_path(cfg, paths.network, "network", mod, ".net"));
  const auto& l2 = net.geometry.layer2;

  std::vector<VideoClip> clips;
  for (const auto& e : m.entries) {
    VideoClip c = load_resized(cfg, m, e, mod);
    if (!fits_block(c, l2)) {
      char reason[160];
      std::snprintf(reason, sizeof reason,
                    "%dx%dx%d clip smaller than %dx%dx%d layer-2 block", c.width,
                    c.height, c.frame_count(), l2.sx, l2.sy, l2.st);
      skipped.push_back({e.clip_id, mod, reason});
      continue;
    }
    clips.push_back(std::move(c));
  }

  std::vector<Eigen::MatrixXd> descriptors;
  for (const auto& c : clips) descriptors.push_back(clip_descriptors(net, c));

  Vocabulary vocab;
  if (paths.vocab) {
    vocab = load_vocabulary(model_path(cfg, paths.vocab, "vocab", mod, ".txt"));
  } else {
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < clips.size(); ++i)
      if (!held_out(cfg, m.at(clips[i].clip_id))) train.push_back(i);
    std::vector<Eigen::MatrixXd> parts;
    for (auto i : train) parts.push_back(descriptors[i]);
    const Eigen::MatrixXd pool = subsample_descriptors(
        parts, cfg.eval.max_vocab_descriptors, cfg.eval.descriptor_seed);
    if (pool.cols() == 0) throw InputError("no training descriptors for the vocabulary");
    const auto& km = cfg.eval.kmeans;
    vocab = kmeans_fit(pool, km.words, km.seed, km.max_iter, km.tol).vocabulary;
    const fs::path out = default_path(cfg, "vocab", mod, ".txt");
    save_vocabulary(vocab, out);
    std::cerr << "vocabulary " << modality_name(mod) << ": " << vocab.size()
              << " words from " << pool.cols() << " descriptors; wrote " << out.string()
              << '\n';
  }

  std::vector<BowHistogram> hists;
  for (std::size_t i = 0; i < clips.size(); ++i)
    hists.push_back(make_histogram(vocab, descriptors[i], clips[i].clip_id, mod));
  const fs::path out = model_path(cfg, paths.histograms, "histograms", mod, ".csv");
  write_histograms(hists, out);
  std::cerr << "encode " << modality_name(mod) << ": " << hists.size()
            << " histograms; wrote " << out.string() << '\n';
}

void write_grid(const GridSearchResult& gs, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "C,gamma,cv_accuracy\n";
  for (const auto& c : gs.grid) {
    char line[96];
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.6f\n", c.C, c.gamma, c.accuracy);
    out << line;
  }
}

}  // namespace

void cmd_pretrain(const PipelineConfig& cfg, const ModelPaths& paths) {
  prepare_output(cfg);
  const DatasetManifest m = open_dataset(cfg);
  check_held_out_subjects(cfg, m);
  for (Modality mod : modalities_of(cfg.eval.features))
    pretrain_modality(cfg, m, mod, model_path(cfg, paths.network, "network", mod, ".net"));
}

void cmd_encode(const PipelineConfig& cfg, const ModelPaths& paths) {
  prepare_output(cfg);
  const DatasetManifest m = open_dataset(cfg);
  check_held_out_subjects(cfg, m);
  std::vector<Skipped> skipped;
  for (Modality mod : modalities_of(cfg.eval.features))
    encode_modality(cfg, m, mod, paths, skipped);

  std::ofstream out(cfg.output_dir / "skipped.csv", std::ios::binary);
  if (!out) throw InputError("cannot write skipped.csv");
  out << "clip_id,modality,reason\n";
  for (const auto& s : skipped)
    out << s.clip_id << ',' << modality_name(s.modality) << ',' << s.reason << '\n';
  if (!skipped.empty())
    std::cerr << skipped.size() << " clip(s) skipped; see skipped.csv\n";
}

void cmd_train_svm(const PipelineConfig& cfg, const ModelPaths& paths) {
  prepare_output(cfg);
  const DatasetManifest m = open_dataset(cfg);
  check_held_out_subjects(cfg, m);

  // clip_id -> feature; only clips present for every selected modality
  std::map<Modality, std::map<std::string, BowHistogram>> by_mod;
  for (Modality mod : modalities_of(cfg.eval.features))
    for (auto& h : read_histograms(model_path(cfg, paths.histograms, "histograms", mod, ".csv")))
      by_mod[mod].emplace(h.clip_id, std::move(h));

  std::vector<Eigen::VectorXd> rows;
  std::vector<std::string> labels;
  for (const auto& e : m.entries) {
    if (held_out(cfg, e)) continue;
    Eigen::VectorXd x;
    if (cfg.eval.features == FeatureSet::Fused) {
      auto g = by_mod[Modality::Grayscale].find(e.clip_id);
      auto d = by_mod[Modality::Depth].find(e.clip_id);
      if (g == by_mod[Modality::Grayscale].end() || d == by_mod[Modality::Depth].end())
        continue;
      x = fuse_histograms(g->second, d->second);
    } else {
      auto& table = by_mod.begin()->second;
      auto it = table.find(e.clip_id);
      if (it == table.end()) continue;
      x = it->second.weights;
    }
    if (!rows.empty() && x.size() != rows.front().size())
      throw InputError("histograms of different lengths");
    rows.push_back(std::move(x));
    labels.push_back(e.label);
  }
  if (rows.empty()) throw InputError("no training histograms matched the manifest");
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    X.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();

  GridSearchConfig grid = cfg.eval.grid;
  grid.threads = cfg.eval.threads;
  const GridSearchResult gs = grid_search(X, labels, grid);
  const SvmModel model = train_multiclass(X, labels, gs.best_C, gs.best_gamma, grid.kkt_tol);

  const std::string name(feature_set_name(cfg.eval.features));
  const fs::path out = cfg.output_dir / ("svm_" + name + ".txt");
  save_svm(model, out);
  write_grid(gs, cfg.output_dir / "grid.csv");
  std::cerr << "train-svm " << name << ": " << rows.size() << " clips, C=" << gs.best_C
            << " gamma=" << gs.best_gamma << " cv accuracy=" << gs.cv_accuracy << " ("
            << gs.folds_used << " folds" << (gs.folds_reduced ? ", reduced" : "")
            << "); wrote " << out.string() << '\n';
}

void cmd_evaluate(const PipelineConfig& cfg) {
  prepare_output(cfg);
  const DatasetManifest m = open_dataset(cfg);
  const EvaluationReport report = run_evaluation(m, cfg.eval);
  render_reports(report, cfg.output_dir);
  std::cerr << "evaluate " << feature_set_name(report.features) << ": "
            << report.splits.size() << " splits, overall accuracy "
            << format_percent(report.overall_accuracy) << '\n';
}

void cmd_pipeline(const PipelineConfig& cfg) {
  const ModelPaths none;
  cmd_pretrain(cfg, none);
  cmd_encode(cfg, none);
  cmd_train_svm(cfg, none);
  cmd_evaluate(cfg);
}

void cmd_make_synthetic(const fs::path& root, const SyntheticDatasetConfig& synth) {
  const DatasetManifest m = write_synthetic_dataset(root, synth);
  std::ofstream out(root / "resolved_config", std::ios::binary);
  out << "[synthetic]\nsubjects = " << synth.subjects
      << "\nclips_per_subject = " << synth.clips_per_subject << "\nwidth = " << synth.width
      << "\nheight = " << synth.height << "\nframes = " << synth.frames
      << "\nseed = " << synth.seed << '\n';
  std::cerr << "wrote " << m.entries.size() << " clips under " << root.string() << '\n';
}

}  // namespace isarec::cli
