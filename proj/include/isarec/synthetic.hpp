#pragma once

// Seeded synthetic data: moving-bar clips for end-to-end runs, and small
// patch sets with known structure for checking the learning stages.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "isarec/video_io.hpp"

namespace isarec {

// Per-subject appearance of the moving-bar videos.
struct BarStyle {
  int bar_width = 4;
  double speed = 1.5;      // pixels per frame
  double contrast = 0.7;
  double noise = 0.03;     // std-dev of additive pixel noise
  int bar_count = 3;
};

// Vertical bars translating left (direction −1) or right (+1), wrapping at
// the border. Grayscale: bright bars on a dim background; depth: near bars in
// front of a far wall. Values lie in [0,1].
VideoClip make_bar_clip(std::string clip_id, Modality modality, int direction,
                        const BarStyle& style, int width, int height,
                        int frames, std::uint64_t seed);

struct SyntheticDatasetConfig {
  int subjects = 4;
  int clips_per_subject = 10;  // split evenly between the two activities
  int width = 80;
  int height = 60;
  int frames = 30;
  std::uint64_t seed = 7;
};

// Style drawn for subject `index`; subjects differ in bar width, speed,
// contrast and noise.
BarStyle subject_style(int index, std::uint64_t seed);

// Writes gray/<clip>/ and depth/<clip>/ frame directories and manifest.csv
// under `root`; labels "left" / "right", subjects "A", "B", ...
DatasetManifest write_synthetic_dataset(const std::filesystem::path& root,
                                        const SyntheticDatasetConfig& cfg);

// Samples drawn as sparse combinations of two planted orthogonal 2-D
// subspaces of R^4. Inside an active subspace the direction is uniform, so
// only the subspace (not a basis of it) is identifiable.
struct PlantedSubspaces {
  Eigen::MatrixXd samples;               // 4 × n
  std::vector<Eigen::MatrixXd> planted;  // two 2 × 4 orthonormal bases
};
PlantedSubspaces make_planted_subspaces(int n, std::uint64_t seed);

// Pairs of size × size patches cut from images of smooth parallel bars
// (random orientation, period and phase); `shifted` is the same image cut
// one pixel to the right. Columns flattened row-major.
struct ShiftedPatches {
  Eigen::MatrixXd original;
  Eigen::MatrixXd shifted;
};
ShiftedPatches make_bar_patches(int n, int size, std::uint64_t seed);

}  // namespace isarec
