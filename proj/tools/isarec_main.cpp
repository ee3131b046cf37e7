// isarec: pretrain / encode / train-svm / evaluate / pipeline / make-synthetic.
//
// Settings resolve in this order, later winning: built-in defaults, the
// --config file, --set key=value overrides, then the dedicated flags.

#include <cstdlib>
#include <iostream>
#include <stdexcept>

#include <CLI11.hpp>

#include "commands.hpp"
#include "isarec/error.hpp"

namespace {

constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;

struct Common {
  std::string config_file;
  std::string dataset_root, manifest, modality, out, pretrain_set;
  std::vector<std::string> splits, overrides;
  int threads = 0;
  std::string network, vocab, histograms;
};

void add_common(CLI::App* cmd, Common& c, bool model_flags) {
  cmd->add_option("--config", c.config_file, "config file (key = value under [section])");
  cmd->add_option("--dataset-root", c.dataset_root, "directory holding the manifest and frames");
  cmd->add_option("--manifest", c.manifest, "manifest file name inside the dataset root");
  cmd->add_option("--modality", c.modality, "gray, depth or fused");
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--threads", c.threads, "worker cap (default: $ISAREC_THREADS, else 1)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--splits", c.splits, "test subjects to evaluate (others are skipped)")
      ->delimiter(',');
  cmd->add_option("--pretrain-set", c.pretrain_set, "train_fold or all");
  cmd->add_option("--set", c.overrides, "override any config key: section.key=value");
  if (model_flags) {
    cmd->add_option("--network", c.network, "network model file");
    cmd->add_option("--vocab", c.vocab, "vocabulary file (fit and written when absent)");
    cmd->add_option("--histograms", c.histograms, "histogram CSV");
  }
}

isarec::PipelineConfig resolve(const Common& c) {
  using isarec::InputError;
  isarec::PipelineConfig cfg = c.config_file.empty()
                                   ? isarec::PipelineConfig()
                                   : isarec::PipelineConfig::from_file(c.config_file);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InputError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!c.dataset_root.empty()) cfg.set("pipeline.dataset_root", c.dataset_root);
  if (!c.manifest.empty()) cfg.set("pipeline.manifest", c.manifest);
  if (!c.modality.empty()) cfg.set("pipeline.modality", c.modality);
  if (!c.out.empty()) cfg.set("pipeline.output_dir", c.out);
  if (!c.pretrain_set.empty()) cfg.set("pipeline.pretrain_set", c.pretrain_set);
  if (!c.splits.empty()) {
    std::string joined;
    for (const auto& s : c.splits) joined += (joined.empty() ? "" : ",") + s;
    cfg.set("pipeline.splits", joined);
  }
  if (c.threads > 0) {
    cfg.set("pipeline.threads", std::to_string(c.threads));
  } else if (const char* env = std::getenv("ISAREC_THREADS"); env && *env) {
    cfg.set("pipeline.threads", env);
  }
  return cfg;
}

isarec::cli::ModelPaths model_paths(const Common& c) {
  isarec::cli::ModelPaths p;
  if (!c.network.empty()) p.network = c.network;
  if (!c.vocab.empty()) p.vocab = c.vocab;
  if (!c.histograms.empty()) p.histograms = c.histograms;
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RGBD activity recognition with stacked ISA features"};
  app.require_subcommand(1);

  Common common;
  auto* pretrain = app.add_subcommand("pretrain", "train the two-layer ISA network");
  auto* encode = app.add_subcommand("encode", "fit a vocabulary if needed and encode clips");
  auto* train_svm = app.add_subcommand("train-svm", "grid-search and train the SVM");
  auto* evaluate = app.add_subcommand("evaluate", "leave-one-person-out evaluation and reports");
  auto* pipeline = app.add_subcommand("pipeline", "pretrain, encode, train-svm, evaluate");
  for (auto* cmd : {pretrain, encode, train_svm})
    add_common(cmd, common, true);
  for (auto* cmd : {evaluate, pipeline}) add_common(cmd, common, false);

  auto* synth = app.add_subcommand("make-synthetic", "write the moving-bar test dataset");
  std::string synth_out;
  isarec::SyntheticDatasetConfig synth_cfg;
  synth->add_option("--out", synth_out, "dataset root to create")->required();
  synth->add_option("--subjects", synth_cfg.subjects, "number of subjects");
  synth->add_option("--clips", synth_cfg.clips_per_subject, "clips per subject");
  synth->add_option("--frames", synth_cfg.frames, "frames per clip");
  synth->add_option("--seed", synth_cfg.seed, "generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (synth->parsed()) {
      isarec::cli::cmd_make_synthetic(synth_out, synth_cfg);
      return 0;
    }
    const isarec::PipelineConfig cfg = resolve(common);
    if (pretrain->parsed()) isarec::cli::cmd_pretrain(cfg, model_paths(common));
    if (encode->parsed()) isarec::cli::cmd_encode(cfg, model_paths(common));
    if (train_svm->parsed()) isarec::cli::cmd_train_svm(cfg, model_paths(common));
    if (evaluate->parsed()) isarec::cli::cmd_evaluate(cfg);
    if (pipeline->parsed()) isarec::cli::cmd_pipeline(cfg);
    return 0;
  } catch (const isarec::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}
