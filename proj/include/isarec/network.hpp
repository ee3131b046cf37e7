#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "isarec/isa.hpp"
#include "isarec/patch_sampling.hpp"
#include "isarec/video_io.hpp"
#include "isarec/whitening.hpp"

namespace isarec {

// Placement grid of layer-1 sub-blocks inside one layer-2 block.
struct SubBlockGrid {
  int nx = 2, ny = 2, nt = 2;
  int stride_x = 4, stride_y = 4, stride_t = 4;

  int count() const { return nx * ny * nt; }
  bool operator==(const SubBlockGrid&) const = default;
};

struct NetworkGeometry {
  // Extent of one layer-1 block (its strides are used only when layer-1
  // features are extracted densely on their own).
  BlockGeometry layer1{16, 16, 10, 8, 8, 5};
  // Extent of one layer-2 block and the strides of dense clip encoding.
  BlockGeometry layer2{20, 20, 14, 10, 10, 7};
  SubBlockGrid grid;

  // Layer-2 extent must equal layer-1 extent + (n − 1)·grid stride per axis.
  void validate() const;
  // Sub-block origins relative to the layer-2 block, t-major, then y, then x.
  std::vector<Origin> placements() const;
  bool operator==(const NetworkGeometry&) const = default;
};

// Geometry with the layer-2 extent derived from layer 1 and the grid;
// layer-2 strides default to half the extent (rounded up).
NetworkGeometry make_geometry(const BlockGeometry& layer1,
                              const SubBlockGrid& grid);

struct IsaNetwork {
  NetworkGeometry geometry;
  WhiteningTransform whiten1;
  IsaLayer layer1;
  WhiteningTransform whiten2;
  IsaLayer layer2;

  int layer1_output_dim() const { return layer1.subspace_count(); }
  int output_dim() const { return layer2.subspace_count(); }
  void validate() const;
};

// Layer-1 feature of one raw (un-normalized) block:
// activations(layer1, whiten1(contrast_normalize(block))).
Eigen::VectorXd extract_layer1(const IsaNetwork& net, const Patch& patch);

// Layer-1 features of many raw blocks stored as columns.
Eigen::MatrixXd extract_layer1_batch(const IsaNetwork& net,
                                     Eigen::MatrixXd blocks);

// Concatenated layer-1 features of every sub-block placement of each raw
// layer-2 block (columns). Rows: placement-major, m1 values per placement.
Eigen::MatrixXd stacked_inputs(const IsaNetwork& net,
                               const Eigen::MatrixXd& layer2_blocks);

Eigen::VectorXd extract_stacked(const IsaNetwork& net, const Patch& patch);
Eigen::MatrixXd extract_stacked_batch(const IsaNetwork& net,
                                      const Eigen::MatrixXd& layer2_blocks);

struct PretrainConfig {
  NetworkGeometry geometry;
  std::size_t layer1_samples = 10000;
  std::size_t layer2_samples = 5000;
  std::uint64_t sample_seed = 11;
  int whiten1_dim = 300;
  int whiten2_dim = 200;
  double whiten_epsilon = kDefaultWhiteningEpsilon;
  int layer1_filters = 300;
  int layer1_group = 2;
  int layer2_filters = 200;
  int layer2_group = 2;
  IsaTrainConfig train;

  void validate() const;
};

struct PretrainResult {
  IsaNetwork network;
  TrainTrace layer1_trace;
  TrainTrace layer2_trace;
};

// Greedy layer-wise pretraining from unlabeled clips of one modality.
PretrainResult pretrain_network(std::span<const VideoClip* const> clips,
                                const PretrainConfig& cfg);
PretrainResult pretrain_network(std::span<const VideoClip> clips,
                                const PretrainConfig& cfg);

inline constexpr std::string_view kNetworkMagic = "ISAREC-NET v1";

void save_network(const IsaNetwork& net, std::ostream& out);
void save_network(const IsaNetwork& net, const std::filesystem::path& path);
IsaNetwork load_network(std::istream& in);
IsaNetwork load_network(const std::filesystem::path& path);

}  // namespace isarec
