#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace isarec {

enum class Modality { Grayscale, Depth };

// "gray" / "depth"; the spelling used in files and on the command line.
std::string_view modality_name(Modality m);
Modality parse_modality(std::string_view name);

// One image, indexed (row, col) = (y, x). Pixel values lie in [0,1].
using Frame = Eigen::MatrixXd;

struct VideoClip {
  std::string clip_id;
  Modality modality = Modality::Grayscale;
  int width = 0;
  int height = 0;
  std::vector<Frame> frames;

  int frame_count() const { return static_cast<int>(frames.size()); }
};

struct ManifestEntry {
  std::string clip_id;
  std::string gray_path;
  std::optional<std::string> depth_path;
  std::string label;
  std::string subject;
};

struct DatasetManifest {
  // Directory the relative frame paths are resolved against.
  std::filesystem::path root;
  std::vector<ManifestEntry> entries;

  const ManifestEntry& at(std::string_view clip_id) const;
  std::filesystem::path clip_dir(const ManifestEntry& e, Modality m) const;
};

inline constexpr std::string_view kManifestHeader =
    "clip_id,gray_path,depth_path,label,subject";

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest,
                   const std::filesystem::path& path);

// Binary PGM (P5) with maxval 255 or 65535. Samples are scaled by 1/maxval.
Frame read_pgm(const std::filesystem::path& path, int* maxval_out = nullptr);
void write_pgm(const Frame& frame, int maxval,
               const std::filesystem::path& path);

// Reads frame_000001.pgm, frame_000002.pgm, ... from `dir`. The sequence
// must start at 1 and be consecutive.
VideoClip load_clip(const std::filesystem::path& dir, Modality modality,
                    std::string clip_id = {});

// Writes the clip as frame_%06d.pgm; maxval 255 for grayscale, 65535 for
// depth.
void save_clip(const VideoClip& clip, const std::filesystem::path& dir);

// Bilinear resampling with pixel-center alignment, each frame independently.
VideoClip resize_clip(const VideoClip& clip, int out_w, int out_h);
Frame resize_frame(const Frame& frame, int out_w, int out_h);

}  // namespace isarec
