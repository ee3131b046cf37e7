#include "isarec/patch_sampling.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "isarec/error.hpp"

namespace isarec {

void BlockGeometry::validate() const {
  if (sx < 1 || sy < 1 || st < 1 || stride_x < 1 || stride_y < 1 ||
      stride_t < 1)
    throw std::invalid_argument("block geometry values must all be >= 1");
}

Eigen::VectorXd flatten_block(std::span<const Frame> block) {
  if (block.empty()) return {};
  const Eigen::Index h = block[0].rows();
  const Eigen::Index w = block[0].cols();
  Eigen::VectorXd out(static_cast<Eigen::Index>(block.size()) * h * w);
  Eigen::Index k = 0;
  for (const auto& f : block) {
    if (f.rows() != h || f.cols() != w)
      throw std::invalid_argument("flatten_block: frames differ in size");
    for (Eigen::Index r = 0; r < h; ++r)
      for (Eigen::Index c = 0; c < w; ++c) out[k++] = f(r, c);
  }
  return out;
}

std::vector<Frame> unflatten_block(const Eigen::VectorXd& values, int sx,
                                   int sy, int st) {
  if (values.size() != static_cast<Eigen::Index>(sx) * sy * st)
    throw std::invalid_argument("unflatten_block: length mismatch");
  std::vector<Frame> block(st, Frame(sy, sx));
  Eigen::Index k = 0;
  for (auto& f : block)
    for (int r = 0; r < sy; ++r)
      for (int c = 0; c < sx; ++c) f(r, c) = values[k++];
  return block;
}

bool fits_block(const VideoClip& clip, const BlockGeometry& geom) {
  return clip.width >= geom.sx && clip.height >= geom.sy &&
         clip.frame_count() >= geom.st;
}

namespace {

void require_fit(const VideoClip& clip, const BlockGeometry& geom) {
  geom.validate();
  if (!fits_block(clip, geom))
    throw InputError("clip '" + clip.clip_id + "' (" +
                     std::to_string(clip.width) + "x" +
                     std::to_string(clip.height) + "x" +
                     std::to_string(clip.frame_count()) +
                     ") is smaller than the " + std::to_string(geom.sx) + "x" +
                     std::to_string(geom.sy) + "x" + std::to_string(geom.st) +
                     " block");
}

}  // namespace

Eigen::VectorXd extract_block(const VideoClip& clip, Origin o, int sx, int sy,
                              int st) {
  if (o.x < 0 || o.y < 0 || o.t < 0 || o.x + sx > clip.width ||
      o.y + sy > clip.height || o.t + st > clip.frame_count())
    throw std::out_of_range("extract_block: block outside the clip");
  Eigen::VectorXd out(static_cast<Eigen::Index>(sx) * sy * st);
  Eigen::Index k = 0;
  for (int t = 0; t < st; ++t) {
    const Frame& f = clip.frames[o.t + t];
    for (int r = 0; r < sy; ++r)
      for (int c = 0; c < sx; ++c) out[k++] = f(o.y + r, o.x + c);
  }
  return out;
}

std::vector<Patch> sample_random_blocks(const VideoClip& clip,
                                        const BlockGeometry& geom,
                                        std::size_t n, std::uint64_t seed) {
  require_fit(clip, geom);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dx(0, clip.width - geom.sx);
  std::uniform_int_distribution<int> dy(0, clip.height - geom.sy);
  std::uniform_int_distribution<int> dt(0, clip.frame_count() - geom.st);
  std::vector<Patch> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Origin o;
    o.x = dx(rng);
    o.y = dy(rng);
    o.t = dt(rng);
    out.push_back({extract_block(clip, o, geom.sx, geom.sy, geom.st), o,
                   clip.clip_id});
  }
  return out;
}

std::vector<Origin> dense_origins(int width, int height, int frames,
                                  const BlockGeometry& geom) {
  geom.validate();
  std::vector<Origin> out;
  for (int t = 0; t + geom.st <= frames; t += geom.stride_t)
    for (int y = 0; y + geom.sy <= height; y += geom.stride_y)
      for (int x = 0; x + geom.sx <= width; x += geom.stride_x)
        out.push_back({x, y, t});
  return out;
}

std::vector<Patch> dense_blocks(const VideoClip& clip,
                                const BlockGeometry& geom) {
  require_fit(clip, geom);
  std::vector<Patch> out;
  for (const Origin& o :
       dense_origins(clip.width, clip.height, clip.frame_count(), geom))
    out.push_back({extract_block(clip, o, geom.sx, geom.sy, geom.st), o,
                   clip.clip_id});
  return out;
}

void contrast_normalize_inplace(Eigen::Ref<Eigen::VectorXd> values) {
  if (values.size() == 0) return;
  const double mean = values.mean();
  values.array() -= mean;
  const double var = values.squaredNorm() / static_cast<double>(values.size());
  values /= std::sqrt(var + kContrastEpsilon);
}

Patch contrast_normalize(const Patch& patch) {
  Patch out = patch;
  contrast_normalize_inplace(out.values);
  return out;
}

}  // namespace isarec
