#include "isarec/network.hpp"

#include <array>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "isarec/error.hpp"
#include "isarec/random.hpp"
#include "text_format.hpp"

namespace isarec {

namespace {

// Layer-2 blocks are expanded into sub-blocks this many at a time.
constexpr Eigen::Index kStackChunk = 256;

void check_axis(int outer, int inner, int n, int stride, const char* axis) {
  if (n < 1 || stride < 1)
    throw std::invalid_argument(std::string("sub-block grid along ") + axis +
                                " must have count and stride >= 1");
  if (outer != inner + (n - 1) * stride)
    throw std::invalid_argument(
        std::string("layer-2 block extent along ") + axis + " is " +
        std::to_string(outer) + " but the sub-block grid covers " +
        std::to_string(inner + (n - 1) * stride));
}

}  // namespace

void NetworkGeometry::validate() const {
  layer1.validate();
  layer2.validate();
  check_axis(layer2.sx, layer1.sx, grid.nx, grid.stride_x, "x");
  check_axis(layer2.sy, layer1.sy, grid.ny, grid.stride_y, "y");
  check_axis(layer2.st, layer1.st, grid.nt, grid.stride_t, "t");
}

std::vector<Origin> NetworkGeometry::placements() const {
  std::vector<Origin> out;
  out.reserve(grid.count());
  for (int t = 0; t < grid.nt; ++t)
    for (int y = 0; y < grid.ny; ++y)
      for (int x = 0; x < grid.nx; ++x)
        out.push_back({x * grid.stride_x, y * grid.stride_y, t * grid.stride_t});
  return out;
}

NetworkGeometry make_geometry(const BlockGeometry& layer1,
                              const SubBlockGrid& grid) {
  NetworkGeometry g;
  g.layer1 = layer1;
  g.grid = grid;
  g.layer2.sx = layer1.sx + (grid.nx - 1) * grid.stride_x;
  g.layer2.sy = layer1.sy + (grid.ny - 1) * grid.stride_y;
  g.layer2.st = layer1.st + (grid.nt - 1) * grid.stride_t;
  g.layer2.stride_x = (g.layer2.sx + 1) / 2;
  g.layer2.stride_y = (g.layer2.sy + 1) / 2;
  g.layer2.stride_t = (g.layer2.st + 1) / 2;
  return g;
}

void IsaNetwork::validate() const {
  geometry.validate();
  layer1.validate();
  layer2.validate();
  if (whiten1.in_dim() != geometry.layer1.dim())
    throw std::invalid_argument("network: whiten1 input does not match the "
                                "layer-1 block size");
  if (whiten1.out_dim() != layer1.input_dim())
    throw std::invalid_argument("network: whiten1 output != layer1 input");
  if (whiten2.in_dim() != geometry.grid.count() * layer1.subspace_count())
    throw std::invalid_argument("network: whiten2 input != placements x m1");
  if (whiten2.out_dim() != layer2.input_dim())
    throw std::invalid_argument("network: whiten2 output != layer2 input");
}

Eigen::MatrixXd extract_layer1_batch(const IsaNetwork& net,
                                     Eigen::MatrixXd blocks) {
  if (blocks.rows() != net.geometry.layer1.dim())
    throw std::invalid_argument("layer-1 block length " +
                                std::to_string(blocks.rows()) +
                                " does not match the network geometry (" +
                                std::to_string(net.geometry.layer1.dim()) + ")");
  for (Eigen::Index c = 0; c < blocks.cols(); ++c)
    contrast_normalize_inplace(blocks.col(c));
  return activations(net.layer1, apply_whitening(net.whiten1, blocks));
}

Eigen::VectorXd extract_layer1(const IsaNetwork& net, const Patch& patch) {
  return extract_layer1_batch(net, Eigen::MatrixXd(patch.values)).col(0);
}

Eigen::MatrixXd stacked_inputs(const IsaNetwork& net,
                               const Eigen::MatrixXd& layer2_blocks) {
  const NetworkGeometry& g = net.geometry;
  if (layer2_blocks.rows() != g.layer2.dim())
    throw std::invalid_argument("layer-2 block length " +
                                std::to_string(layer2_blocks.rows()) +
                                " does not match the network geometry (" +
                                std::to_string(g.layer2.dim()) + ")");
  const auto places = g.placements();
  const Eigen::Index count = static_cast<Eigen::Index>(places.size());
  const Eigen::Index m1 = net.layer1.subspace_count();
  const BlockGeometry& b1 = g.layer1;
  const BlockGeometry& b2 = g.layer2;
  const Eigen::Index n = layer2_blocks.cols();

  Eigen::MatrixXd out(count * m1, n);
  for (Eigen::Index start = 0; start < n; start += kStackChunk) {
    const Eigen::Index len = std::min(kStackChunk, n - start);
    Eigen::MatrixXd subs(b1.dim(), len * count);
    for (Eigen::Index b = 0; b < len; ++b) {
      const auto src = layer2_blocks.col(start + b);
      for (Eigen::Index p = 0; p < count; ++p) {
        const Origin& o = places[p];
        auto dst = subs.col(b * count + p);
        Eigen::Index k = 0;
        for (int t = 0; t < b1.st; ++t)
          for (int r = 0; r < b1.sy; ++r) {
            const Eigen::Index row0 =
                static_cast<Eigen::Index>(o.t + t) * b2.sx * b2.sy +
                static_cast<Eigen::Index>(o.y + r) * b2.sx + o.x;
            dst.segment(k, b1.sx) = src.segment(row0, b1.sx);
            k += b1.sx;
          }
      }
    }
    const Eigen::MatrixXd feats = extract_layer1_batch(net, std::move(subs));
    // Column-major storage puts each block's placements back to back.
    out.middleCols(start, len) =
        Eigen::Map<const Eigen::MatrixXd>(feats.data(), count * m1, len);
  }
  return out;
}

Eigen::MatrixXd extract_stacked_batch(const IsaNetwork& net,
                                      const Eigen::MatrixXd& layer2_blocks) {
  return activations(net.layer2,
                     apply_whitening(net.whiten2,
                                     stacked_inputs(net, layer2_blocks)));
}

Eigen::VectorXd extract_stacked(const IsaNetwork& net, const Patch& patch) {
  return extract_stacked_batch(net, Eigen::MatrixXd(patch.values)).col(0);
}

void PretrainConfig::validate() const {
  geometry.validate();
  train.validate();
  if (whiten1_dim < 1 || whiten1_dim > geometry.layer1.dim())
    throw std::invalid_argument("whiten1 dimension must lie in [1, " +
                                std::to_string(geometry.layer1.dim()) + "]");
  if (layer1_filters > whiten1_dim)
    throw std::invalid_argument("layer-1 filters exceed whiten1 dimension");
  if (layer1_group < 1 || layer1_filters % layer1_group != 0)
    throw std::invalid_argument("layer-1 filters must be a multiple of the "
                                "group size");
  const int stacked_dim =
      geometry.grid.count() * (layer1_filters / layer1_group);
  if (whiten2_dim < 1 || whiten2_dim > stacked_dim)
    throw std::invalid_argument("whiten2 dimension must lie in [1, " +
                                std::to_string(stacked_dim) + "]");
  if (layer2_filters > whiten2_dim)
    throw std::invalid_argument("layer-2 filters exceed whiten2 dimension");
  if (layer2_group < 1 || layer2_filters % layer2_group != 0)
    throw std::invalid_argument("layer-2 filters must be a multiple of the "
                                "group size");
}

namespace {

// Splits `total` samples across `clips` as evenly as possible.
std::size_t share(std::size_t total, std::size_t clips, std::size_t i) {
  return total / clips + (i < total % clips ? 1 : 0);
}

}  // namespace

PretrainResult pretrain_network(std::span<const VideoClip* const> clips,
                                const PretrainConfig& cfg) {
  cfg.validate();
  if (clips.empty()) throw InputError("pretraining needs at least one clip");
  const NetworkGeometry& geom = cfg.geometry;
  for (const VideoClip* clip : clips)
    if (!fits_block(*clip, geom.layer2))
      throw InputError("clip '" + clip->clip_id +
                       "' is too small for the layer-2 block");

  PretrainResult result;
  IsaNetwork& net = result.network;
  net.geometry = geom;

  // Layer 1.
  Eigen::MatrixXd x1(geom.layer1.dim(), cfg.layer1_samples);
  Eigen::Index col = 0;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    const auto patches =
        sample_random_blocks(*clips[i], geom.layer1,
                             share(cfg.layer1_samples, clips.size(), i),
                             derive_seed(cfg.sample_seed, 2 * i));
    for (const Patch& p : patches) {
      x1.col(col) = p.values;
      contrast_normalize_inplace(x1.col(col));
      ++col;
    }
  }
  net.whiten1 = fit_pca_whitening(x1, cfg.whiten1_dim, cfg.whiten_epsilon);
  const Eigen::MatrixXd z1 = apply_whitening(net.whiten1, x1);
  x1.resize(0, 0);
  TrainedLayer l1 =
      train_layer(z1, cfg.layer1_filters, cfg.layer1_group, cfg.train);
  net.layer1 = std::move(l1.layer);
  result.layer1_trace = std::move(l1.trace);

  // Layer 2 sees layer-1 features of the sub-block placements; layer 1 is
  // frozen from here on.
  const Eigen::Index stacked_dim =
      geom.grid.count() * net.layer1.subspace_count();
  Eigen::MatrixXd x2(stacked_dim, cfg.layer2_samples);
  col = 0;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    const auto patches =
        sample_random_blocks(*clips[i], geom.layer2,
                             share(cfg.layer2_samples, clips.size(), i),
                             derive_seed(cfg.sample_seed, 2 * i + 1));
    if (patches.empty()) continue;
    Eigen::MatrixXd raw(geom.layer2.dim(),
                        static_cast<Eigen::Index>(patches.size()));
    for (std::size_t p = 0; p < patches.size(); ++p)
      raw.col(static_cast<Eigen::Index>(p)) = patches[p].values;
    x2.middleCols(col, raw.cols()) = stacked_inputs(net, raw);
    col += raw.cols();
  }
  net.whiten2 = fit_pca_whitening(x2, cfg.whiten2_dim, cfg.whiten_epsilon);
  const Eigen::MatrixXd z2 = apply_whitening(net.whiten2, x2);
  IsaTrainConfig train2 = cfg.train;
  train2.seed = derive_seed(cfg.train.seed, 1);
  TrainedLayer l2 =
      train_layer(z2, cfg.layer2_filters, cfg.layer2_group, train2);
  net.layer2 = std::move(l2.layer);
  result.layer2_trace = std::move(l2.trace);
  return result;
}

PretrainResult pretrain_network(std::span<const VideoClip> clips,
                                const PretrainConfig& cfg) {
  std::vector<const VideoClip*> ptrs;
  ptrs.reserve(clips.size());
  for (const auto& c : clips) ptrs.push_back(&c);
  return pretrain_network(std::span<const VideoClip* const>(ptrs), cfg);
}

// Serialization.

namespace {

std::string triple(int a, int b, int c) {
  return std::to_string(a) + "," + std::to_string(b) + "," + std::to_string(c);
}

std::array<int, 3> parse_triple(const std::string& s) {
  const auto parts = text::split(s, ',');
  if (parts.size() != 3) throw InputError("expected a,b,c triple, got " + s);
  return {static_cast<int>(text::parse_int(parts[0])),
          static_cast<int>(text::parse_int(parts[1])),
          static_cast<int>(text::parse_int(parts[2]))};
}

void write_whitening(std::ostream& out, const char* name,
                     const WhiteningTransform& t) {
  out << '[' << name << "] in=" << t.in_dim() << " out=" << t.out_dim()
      << " eps=" << text::format_double(t.epsilon) << '\n';
  text::write_row(out, t.mean.transpose());
  text::write_row(out, t.eigenvalues.transpose());
  text::write_matrix(out, t.basis);
}

WhiteningTransform read_whitening(std::istream& in, const char* name) {
  const auto s = text::expect_section(in, name);
  const auto in_dim = s.integer("in");
  const auto out_dim = s.integer("out");
  if (in_dim < 1 || out_dim < 1 || out_dim > in_dim)
    throw InputError(std::string("bad dimensions in [") + name + "]");
  WhiteningTransform t;
  t.epsilon = s.number("eps");
  t.mean = text::read_row(in, in_dim, name).transpose();
  t.eigenvalues = text::read_row(in, out_dim, name).transpose();
  t.basis = text::read_matrix(in, out_dim, in_dim, name);
  return t;
}

void write_layer(std::ostream& out, const char* name, const IsaLayer& l) {
  out << '[' << name << "] k=" << l.filter_count() << " n=" << l.input_dim()
      << " g=" << l.group_size << " eps=" << text::format_double(l.epsilon)
      << '\n';
  text::write_matrix(out, l.filters);
}

IsaLayer read_layer(std::istream& in, const char* name) {
  const auto s = text::expect_section(in, name);
  const auto k = s.integer("k");
  const auto n = s.integer("n");
  if (k < 1 || n < 1)
    throw InputError(std::string("bad dimensions in [") + name + "]");
  IsaLayer l;
  l.group_size = static_cast<int>(s.integer("g"));
  l.epsilon = s.number("eps");
  l.filters = text::read_matrix(in, k, n, name);
  return l;
}

}  // namespace

void save_network(const IsaNetwork& net, std::ostream& out) {
  const NetworkGeometry& g = net.geometry;
  out << kNetworkMagic << '\n';
  write_whitening(out, "whiten1", net.whiten1);
  write_layer(out, "layer1", net.layer1);
  write_whitening(out, "whiten2", net.whiten2);
  write_layer(out, "layer2", net.layer2);
  out << "[geometry] layer1=" << triple(g.layer1.sx, g.layer1.sy, g.layer1.st)
      << " layer1_stride="
      << triple(g.layer1.stride_x, g.layer1.stride_y, g.layer1.stride_t)
      << " layer2=" << triple(g.layer2.sx, g.layer2.sy, g.layer2.st)
      << " layer2_stride="
      << triple(g.layer2.stride_x, g.layer2.stride_y, g.layer2.stride_t)
      << " grid=" << triple(g.grid.nx, g.grid.ny, g.grid.nt)
      << " grid_stride="
      << triple(g.grid.stride_x, g.grid.stride_y, g.grid.stride_t) << '\n';
}

void save_network(const IsaNetwork& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  save_network(net, out);
}

IsaNetwork load_network(std::istream& in) {
  const std::string magic = text::next_line(in, "network header");
  if (magic != kNetworkMagic)
    throw InputError("unsupported network file version '" + magic + "'");
  IsaNetwork net;
  net.whiten1 = read_whitening(in, "whiten1");
  net.layer1 = read_layer(in, "layer1");
  net.whiten2 = read_whitening(in, "whiten2");
  net.layer2 = read_layer(in, "layer2");
  const auto s = text::expect_section(in, "geometry");
  NetworkGeometry& g = net.geometry;
  const auto l1 = parse_triple(s.get("layer1"));
  const auto l1s = parse_triple(s.get("layer1_stride"));
  const auto l2 = parse_triple(s.get("layer2"));
  const auto l2s = parse_triple(s.get("layer2_stride"));
  const auto gr = parse_triple(s.get("grid"));
  const auto grs = parse_triple(s.get("grid_stride"));
  g.layer1 = {l1[0], l1[1], l1[2], l1s[0], l1s[1], l1s[2]};
  g.layer2 = {l2[0], l2[1], l2[2], l2s[0], l2s[1], l2s[2]};
  g.grid = {gr[0], gr[1], gr[2], grs[0], grs[1], grs[2]};
  try {
    net.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("inconsistent network file: ") + e.what());
  }
  return net;
}

IsaNetwork load_network(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open network file " + path.string());
  return load_network(in);
}

}  // namespace isarec
