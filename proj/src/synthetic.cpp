#include "isarec/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/QR>

#include "isarec/error.hpp"
#include "isarec/random.hpp"

namespace isarec {

namespace fs = std::filesystem;

VideoClip make_bar_clip(std::string clip_id, Modality modality, int direction,
                        const BarStyle& style, int width, int height,
                        int frames, std::uint64_t seed) {
  if (direction != 1 && direction != -1)
    throw std::invalid_argument("make_bar_clip: direction must be +1 or -1");
  if (width < 1 || height < 1 || frames < 1 || style.bar_width < 1 ||
      style.bar_count < 1)
    throw std::invalid_argument("make_bar_clip: bad size");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(0.0, width);
  std::normal_distribution<double> noise(0.0, style.noise);
  std::vector<double> start(style.bar_count);
  for (auto& s : start) s = pos(rng);

  const bool depth = modality == Modality::Depth;
  const double background = depth ? 0.8 : 0.2;
  const double bar_level = depth ? 0.8 - style.contrast * 0.6 : 0.2 + style.contrast * 0.7;

  VideoClip clip;
  clip.clip_id = std::move(clip_id);
  clip.modality = modality;
  clip.width = width;
  clip.height = height;
  for (int t = 0; t < frames; ++t) {
    Frame f(height, width);
    for (int x = 0; x < width; ++x) {
      double cover = 0;
      for (double s : start) {
        const double left = s + direction * style.speed * t;
        // distance along the wrapped axis from the bar's left edge
        double d = std::fmod(x - left, static_cast<double>(width));
        if (d < 0) d += width;
        // a one-pixel ramp on each edge keeps sub-pixel motion visible
        cover = std::max(cover, std::clamp(std::min(d + 1.0, style.bar_width - d), 0.0, 1.0));
      }
      f.col(x).setConstant(background + cover * (bar_level - background));
    }
    for (Eigen::Index i = 0; i < f.size(); ++i)
      f.data()[i] = std::clamp(f.data()[i] + noise(rng), 0.0, 1.0);
    clip.frames.push_back(std::move(f));
  }
  return clip;
}

BarStyle subject_style(int index, std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, 1000 + static_cast<std::uint64_t>(index)));
  std::uniform_int_distribution<int> width(3, 6);
  std::uniform_real_distribution<double> speed(1.0, 2.0);
  std::uniform_real_distribution<double> contrast(0.5, 0.9);
  std::uniform_real_distribution<double> noise(0.02, 0.05);
  BarStyle s;
  s.bar_width = width(rng);
  s.speed = speed(rng);
  s.contrast = contrast(rng);
  s.noise = noise(rng);
  return s;
}

DatasetManifest write_synthetic_dataset(const fs::path& root,
                                        const SyntheticDatasetConfig& cfg) {
  if (cfg.subjects < 1 || cfg.subjects > 26 || cfg.clips_per_subject < 2)
    throw InputError("synthetic dataset needs 1..26 subjects and >= 2 clips each");
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw InputError("cannot create " + root.string());

  DatasetManifest manifest;
  manifest.root = root;
  for (int s = 0; s < cfg.subjects; ++s) {
    const std::string subject(1, static_cast<char>('A' + s));
    const BarStyle style = subject_style(s, cfg.seed);
    for (int c = 0; c < cfg.clips_per_subject; ++c) {
      const int direction = c % 2 == 0 ? -1 : 1;
      char id[32];
      std::snprintf(id, sizeof id, "%s%02d", subject.c_str(), c);
      const auto stream = static_cast<std::uint64_t>(s * 1000 + c);
      ManifestEntry e{id, "gray/" + std::string(id), "depth/" + std::string(id),
                      direction < 0 ? "left" : "right", subject};
      // gray and depth share bar positions, so they see the same scene
      const std::uint64_t clip_seed = derive_seed(cfg.seed, stream);
      save_clip(make_bar_clip(id, Modality::Grayscale, direction, style, cfg.width,
                              cfg.height, cfg.frames, clip_seed),
                root / e.gray_path);
      save_clip(make_bar_clip(id, Modality::Depth, direction, style, cfg.width,
                              cfg.height, cfg.frames, clip_seed),
                root / *e.depth_path);
      manifest.entries.push_back(std::move(e));
    }
  }
  save_manifest(manifest, root / "manifest.csv");
  return manifest;
}

PlantedSubspaces make_planted_subspaces(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("make_planted_subspaces: n must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> angle(0.0, 2 * std::numbers::pi);
  std::exponential_distribution<double> amplitude(1.0);
  std::bernoulli_distribution active(0.3);

  Eigen::MatrixXd A(4, 4);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = normal(rng);
  const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(A).householderQ();

  PlantedSubspaces out;
  out.planted = {Q.topRows(2), Q.bottomRows(2)};
  out.samples = Eigen::MatrixXd::Zero(4, n);
  for (int j = 0; j < n; ++j) {
    for (const auto& B : out.planted) {
      if (!active(rng)) continue;
      const double a = amplitude(rng), th = angle(rng);
      out.samples.col(j) += a * (std::cos(th) * B.row(0) + std::sin(th) * B.row(1)).transpose();
    }
  }
  return out;
}

ShiftedPatches make_bar_patches(int n, int size, std::uint64_t seed) {
  if (n < 1 || size < 2) throw std::invalid_argument("make_bar_patches: bad size");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::uniform_real_distribution<double> period(3.0, 8.0);
  std::uniform_real_distribution<double> phase(0.0, 2 * std::numbers::pi);
  std::uniform_real_distribution<double> amp(0.5, 1.5);

  ShiftedPatches out{Eigen::MatrixXd(size * size, n), Eigen::MatrixXd(size * size, n)};
  for (int j = 0; j < n; ++j) {
    const double th = angle(rng), k = 2 * std::numbers::pi / period(rng);
    const double ph = phase(rng), a = amp(rng);
    const double kx = k * std::cos(th), ky = k * std::sin(th);
    for (int r = 0; r < size; ++r)
      for (int c = 0; c < size; ++c) {
        out.original(r * size + c, j) = a * std::cos(kx * c + ky * r + ph);
        out.shifted(r * size + c, j) = a * std::cos(kx * (c + 1) + ky * r + ph);
      }
  }
  return out;
}

}  // namespace isarec
