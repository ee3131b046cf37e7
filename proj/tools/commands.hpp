#pragma once

#include "isarec/config.hpp"
#include "isarec/synthetic.hpp"

#include <filesystem>
#include <optional>

namespace isarec::cli {

struct ModelPaths {
  std::optional<std::filesystem::path> network;
  std::optional<std::filesystem::path> vocab;
  std::optional<std::filesystem::path> histograms;
};

// Each command writes <out>/resolved_config first. The subjects listed in
// the pipeline.splits key are held out of every fitting step of the
// standalone commands.
void cmd_pretrain(const PipelineConfig& cfg, const ModelPaths& paths);
void cmd_encode(const PipelineConfig& cfg, const ModelPaths& paths);
void cmd_train_svm(const PipelineConfig& cfg, const ModelPaths& paths);
void cmd_evaluate(const PipelineConfig& cfg);
void cmd_pipeline(const PipelineConfig& cfg);
void cmd_make_synthetic(const std::filesystem::path& root,
                        const SyntheticDatasetConfig& synth);

}  // namespace isarec::cli
