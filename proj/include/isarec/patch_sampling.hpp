#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "isarec/video_io.hpp"

namespace isarec {

// Block extent (sx × sy × st) plus the strides used for dense extraction.
struct BlockGeometry {
  int sx = 1, sy = 1, st = 1;
  int stride_x = 1, stride_y = 1, stride_t = 1;

  int dim() const { return sx * sy * st; }
  void validate() const;
  bool operator==(const BlockGeometry&) const = default;
};

struct Origin {
  int x = 0, y = 0, t = 0;
  auto operator<=>(const Origin&) const = default;
};

struct Patch {
  Eigen::VectorXd values;
  Origin origin;
  std::string source_clip;
};

inline constexpr double kContrastEpsilon = 1e-8;

// Frame-major, then row-major within a frame:
// index i·(sx·sy) + r·sx + c holds frame i, row r, column c.
Eigen::VectorXd flatten_block(std::span<const Frame> block);

// Inverse of flatten_block for a sx × sy × st block.
std::vector<Frame> unflatten_block(const Eigen::VectorXd& values, int sx,
                                   int sy, int st);

// Flattened sx × sy × st block of `clip` starting at `origin`.
Eigen::VectorXd extract_block(const VideoClip& clip, Origin origin, int sx,
                              int sy, int st);

// n blocks at origins drawn uniformly from every in-bounds origin.
std::vector<Patch> sample_random_blocks(const VideoClip& clip,
                                        const BlockGeometry& geom,
                                        std::size_t n, std::uint64_t seed);

// Stride-aligned in-bounds origins, ordered t-major, then y, then x.
std::vector<Origin> dense_origins(int width, int height, int frames,
                                  const BlockGeometry& geom);
std::vector<Patch> dense_blocks(const VideoClip& clip,
                                const BlockGeometry& geom);

bool fits_block(const VideoClip& clip, const BlockGeometry& geom);

// (v − mean) / sqrt(var + kContrastEpsilon), population variance.
Patch contrast_normalize(const Patch& patch);
void contrast_normalize_inplace(Eigen::Ref<Eigen::VectorXd> values);

}  // namespace isarec
