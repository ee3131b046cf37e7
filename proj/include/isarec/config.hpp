#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "isarec/evaluation.hpp"

namespace isarec {

// Everything a CLI run needs. Text form: flat `key = value` lines under
// `[section]` headers named after the modules; `#` starts a comment.
struct PipelineConfig {
  std::filesystem::path dataset_root;
  std::string manifest = "manifest.csv";
  std::filesystem::path output_dir = "isarec_out";
  EvaluationConfig eval;

  PipelineConfig();

  std::filesystem::path manifest_path() const { return dataset_root / manifest; }

  // "section.key"; throws InputError for unknown keys or bad values.
  void set(const std::string& dotted_key, const std::string& value);
  std::string get(const std::string& dotted_key) const;
  std::vector<std::string> keys() const;

  std::string to_text() const;
  static PipelineConfig from_text(const std::string& text);
  static PipelineConfig from_file(const std::filesystem::path& path);
};

}  // namespace isarec
