#include "isarec/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "isarec/error.hpp"
#include "text_format.hpp"

namespace isarec {

namespace {

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const PipelineConfig&)> get;
  std::function<void(PipelineConfig&, const std::string&)> set;
};

int positive_int(const std::string& v) {
  const long long n = text::parse_int(v);
  if (n < 1 || n > 1'000'000'000)
    throw InputError("expected a positive integer, got '" + v + "'");
  return static_cast<int>(n);
}

// Full unsigned 64-bit range; the num() formatter writes seeds back verbatim.
std::uint64_t parse_seed(const std::string& v) {
  std::uint64_t n = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
    throw InputError("seed must be a non-negative integer, got '" + v + "'");
  return n;
}

double positive_double(const std::string& v) {
  const double d = text::parse_double(v);
  if (!(d > 0) || !std::isfinite(d))
    throw InputError("expected a positive number, got '" + v + "'");
  return d;
}

double nonneg_double(const std::string& v) {
  const double d = text::parse_double(v);
  if (!(d >= 0) || !std::isfinite(d))
    throw InputError("expected a non-negative number, got '" + v + "'");
  return d;
}

std::vector<std::string> list_items(const std::string& v) {
  std::vector<std::string> out;
  if (text::trim(v).empty()) return out;
  for (const auto& item : text::split(v, ',')) out.push_back(text::trim(item));
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

// Accepts plain numbers and powers of two written "2^k".
std::vector<double> parse_grid(const std::string& v) {
  std::vector<double> out;
  for (const auto& item : list_items(v)) {
    if (item.rfind("2^", 0) == 0)
      out.push_back(std::ldexp(1.0, static_cast<int>(text::parse_int(item.substr(2)))));
    else
      out.push_back(positive_double(item));
    if (!(out.back() > 0)) throw InputError("grid values must be positive");
  }
  if (out.empty()) throw InputError("grid must not be empty");
  return out;
}

std::string format_grid(const std::vector<double>& g) {
  std::vector<std::string> items;
  for (double d : g) items.push_back(text::format_double(d));
  return join(items);
}

std::array<int, 3> parse_triple(const std::string& v) {
  const auto items = list_items(v);
  if (items.size() != 3) throw InputError("expected x,y,t triple, got '" + v + "'");
  return {positive_int(items[0]), positive_int(items[1]), positive_int(items[2])};
}

std::string triple(int a, int b, int c) {
  return std::to_string(a) + "," + std::to_string(b) + "," + std::to_string(c);
}

// The layer-2 extent follows from layer 1 and the placement grid.
void derive_layer2(NetworkGeometry& g) {
  g.layer2.sx = g.layer1.sx + (g.grid.nx - 1) * g.grid.stride_x;
  g.layer2.sy = g.layer1.sy + (g.grid.ny - 1) * g.grid.stride_y;
  g.layer2.st = g.layer1.st + (g.grid.nt - 1) * g.grid.stride_t;
}

template <class T>
std::string num(T v) {
  if constexpr (std::is_floating_point_v<T>)
    return text::format_double(v);
  else
    return std::to_string(v);
}

const std::vector<Field>& registry() {
  using C = PipelineConfig;
  using S = const std::string&;
  static const std::vector<Field> fields = {
      {"pipeline", "dataset_root", [](const C& c) { return c.dataset_root.string(); },
       [](C& c, S v) { c.dataset_root = v; }},
      {"pipeline", "manifest", [](const C& c) { return c.manifest; },
       [](C& c, S v) {
         if (v.empty()) throw InputError("manifest must not be empty");
         c.manifest = v;
       }},
      {"pipeline", "modality",
       [](const C& c) { return std::string(feature_set_name(c.eval.features)); },
       [](C& c, S v) { c.eval.features = parse_feature_set(v); }},
      {"pipeline", "output_dir", [](const C& c) { return c.output_dir.string(); },
       [](C& c, S v) {
         if (v.empty()) throw InputError("output_dir must not be empty");
         c.output_dir = v;
       }},
      {"pipeline", "threads", [](const C& c) { return num(c.eval.threads); },
       [](C& c, S v) { c.eval.threads = positive_int(v); }},
      {"pipeline", "pretrain_set",
       [](const C& c) {
         return std::string(c.eval.pretrain_set == PretrainSet::All ? "all"
                                                                    : "train_fold");
       },
       [](C& c, S v) {
         if (v == "train_fold") c.eval.pretrain_set = PretrainSet::TrainFold;
         else if (v == "all") c.eval.pretrain_set = PretrainSet::All;
         else throw InputError("pretrain_set must be train_fold or all, got '" + v + "'");
       }},
      {"pipeline", "splits", [](const C& c) { return join(c.eval.only_subjects); },
       [](C& c, S v) { c.eval.only_subjects = list_items(v); }},

      {"video_io", "frame_width", [](const C& c) { return num(c.eval.frame_width); },
       [](C& c, S v) { c.eval.frame_width = positive_int(v); }},
      {"video_io", "frame_height", [](const C& c) { return num(c.eval.frame_height); },
       [](C& c, S v) { c.eval.frame_height = positive_int(v); }},

      {"patch_sampling", "layer1_block",
       [](const C& c) {
         const auto& b = c.eval.pretrain.geometry.layer1;
         return triple(b.sx, b.sy, b.st);
       },
       [](C& c, S v) {
         auto& g = c.eval.pretrain.geometry;
         const auto t = parse_triple(v);
         g.layer1.sx = t[0], g.layer1.sy = t[1], g.layer1.st = t[2];
         derive_layer2(g);
       }},
      {"patch_sampling", "layer1_stride",
       [](const C& c) {
         const auto& b = c.eval.pretrain.geometry.layer1;
         return triple(b.stride_x, b.stride_y, b.stride_t);
       },
       [](C& c, S v) {
         auto& b = c.eval.pretrain.geometry.layer1;
         const auto t = parse_triple(v);
         b.stride_x = t[0], b.stride_y = t[1], b.stride_t = t[2];
       }},
      {"patch_sampling", "grid",
       [](const C& c) {
         const auto& g = c.eval.pretrain.geometry.grid;
         return triple(g.nx, g.ny, g.nt);
       },
       [](C& c, S v) {
         auto& g = c.eval.pretrain.geometry;
         const auto t = parse_triple(v);
         g.grid.nx = t[0], g.grid.ny = t[1], g.grid.nt = t[2];
         derive_layer2(g);
       }},
      {"patch_sampling", "grid_stride",
       [](const C& c) {
         const auto& g = c.eval.pretrain.geometry.grid;
         return triple(g.stride_x, g.stride_y, g.stride_t);
       },
       [](C& c, S v) {
         auto& g = c.eval.pretrain.geometry;
         const auto t = parse_triple(v);
         g.grid.stride_x = t[0], g.grid.stride_y = t[1], g.grid.stride_t = t[2];
         derive_layer2(g);
       }},
      {"patch_sampling", "layer2_stride",
       [](const C& c) {
         const auto& b = c.eval.pretrain.geometry.layer2;
         return triple(b.stride_x, b.stride_y, b.stride_t);
       },
       [](C& c, S v) {
         auto& b = c.eval.pretrain.geometry.layer2;
         const auto t = parse_triple(v);
         b.stride_x = t[0], b.stride_y = t[1], b.stride_t = t[2];
       }},
      {"patch_sampling", "layer1_samples",
       [](const C& c) { return num(c.eval.pretrain.layer1_samples); },
       [](C& c, S v) { c.eval.pretrain.layer1_samples = positive_int(v); }},
      {"patch_sampling", "layer2_samples",
       [](const C& c) { return num(c.eval.pretrain.layer2_samples); },
       [](C& c, S v) { c.eval.pretrain.layer2_samples = positive_int(v); }},
      {"patch_sampling", "seed", [](const C& c) { return num(c.eval.pretrain.sample_seed); },
       [](C& c, S v) { c.eval.pretrain.sample_seed = parse_seed(v); }},

      {"whitening", "layer1_dim", [](const C& c) { return num(c.eval.pretrain.whiten1_dim); },
       [](C& c, S v) { c.eval.pretrain.whiten1_dim = positive_int(v); }},
      {"whitening", "layer2_dim", [](const C& c) { return num(c.eval.pretrain.whiten2_dim); },
       [](C& c, S v) { c.eval.pretrain.whiten2_dim = positive_int(v); }},
      {"whitening", "epsilon", [](const C& c) { return num(c.eval.pretrain.whiten_epsilon); },
       [](C& c, S v) { c.eval.pretrain.whiten_epsilon = nonneg_double(v); }},

      {"isa", "layer1_filters", [](const C& c) { return num(c.eval.pretrain.layer1_filters); },
       [](C& c, S v) { c.eval.pretrain.layer1_filters = positive_int(v); }},
      {"isa", "layer1_group", [](const C& c) { return num(c.eval.pretrain.layer1_group); },
       [](C& c, S v) { c.eval.pretrain.layer1_group = positive_int(v); }},
      {"isa", "layer2_filters", [](const C& c) { return num(c.eval.pretrain.layer2_filters); },
       [](C& c, S v) { c.eval.pretrain.layer2_filters = positive_int(v); }},
      {"isa", "layer2_group", [](const C& c) { return num(c.eval.pretrain.layer2_group); },
       [](C& c, S v) { c.eval.pretrain.layer2_group = positive_int(v); }},
      {"isa", "epsilon", [](const C& c) { return num(c.eval.pretrain.train.epsilon); },
       [](C& c, S v) { c.eval.pretrain.train.epsilon = positive_double(v); }},
      {"isa", "step_size", [](const C& c) { return num(c.eval.pretrain.train.step_size); },
       [](C& c, S v) { c.eval.pretrain.train.step_size = positive_double(v); }},
      {"isa", "step_decay", [](const C& c) { return num(c.eval.pretrain.train.step_decay); },
       [](C& c, S v) { c.eval.pretrain.train.step_decay = positive_double(v); }},
      {"isa", "max_iters", [](const C& c) { return num(c.eval.pretrain.train.max_iters); },
       [](C& c, S v) { c.eval.pretrain.train.max_iters = positive_int(v); }},
      {"isa", "rel_tol", [](const C& c) { return num(c.eval.pretrain.train.rel_tol); },
       [](C& c, S v) { c.eval.pretrain.train.rel_tol = nonneg_double(v); }},
      {"isa", "seed", [](const C& c) { return num(c.eval.pretrain.train.seed); },
       [](C& c, S v) { c.eval.pretrain.train.seed = parse_seed(v); }},

      {"vocabulary", "words", [](const C& c) { return num(c.eval.kmeans.words); },
       [](C& c, S v) { c.eval.kmeans.words = positive_int(v); }},
      {"vocabulary", "max_iter", [](const C& c) { return num(c.eval.kmeans.max_iter); },
       [](C& c, S v) { c.eval.kmeans.max_iter = positive_int(v); }},
      {"vocabulary", "tol", [](const C& c) { return num(c.eval.kmeans.tol); },
       [](C& c, S v) { c.eval.kmeans.tol = nonneg_double(v); }},
      {"vocabulary", "max_descriptors",
       [](const C& c) { return num(c.eval.max_vocab_descriptors); },
       [](C& c, S v) { c.eval.max_vocab_descriptors = positive_int(v); }},
      {"vocabulary", "seed", [](const C& c) { return num(c.eval.kmeans.seed); },
       [](C& c, S v) { c.eval.kmeans.seed = parse_seed(v); }},
      {"vocabulary", "descriptor_seed", [](const C& c) { return num(c.eval.descriptor_seed); },
       [](C& c, S v) { c.eval.descriptor_seed = parse_seed(v); }},

      {"classifier", "c_grid", [](const C& c) { return format_grid(c.eval.grid.c_values); },
       [](C& c, S v) { c.eval.grid.c_values = parse_grid(v); }},
      {"classifier", "gamma_grid",
       [](const C& c) { return format_grid(c.eval.grid.gamma_values); },
       [](C& c, S v) { c.eval.grid.gamma_values = parse_grid(v); }},
      {"classifier", "folds", [](const C& c) { return num(c.eval.grid.folds); },
       [](C& c, S v) {
         const int f = positive_int(v);
         if (f < 2) throw InputError("folds must be at least 2");
         c.eval.grid.folds = f;
       }},
      {"classifier", "kkt_tol", [](const C& c) { return num(c.eval.grid.kkt_tol); },
       [](C& c, S v) { c.eval.grid.kkt_tol = positive_double(v); }},
      {"classifier", "seed", [](const C& c) { return num(c.eval.grid.seed); },
       [](C& c, S v) { c.eval.grid.seed = parse_seed(v); }},
  };
  return fields;
}

const Field& find_field(const std::string& dotted) {
  const auto dot = dotted.find('.');
  if (dot != std::string::npos) {
    const std::string section = dotted.substr(0, dot);
    const std::string key = dotted.substr(dot + 1);
    for (const auto& f : registry())
      if (f.section == section && f.key == key) return f;
  }
  throw InputError("unknown config key '" + dotted + "'");
}

}  // namespace

PipelineConfig::PipelineConfig() {
  eval.grid.c_values = default_c_grid();
  eval.grid.gamma_values = default_gamma_grid();
}

void PipelineConfig::set(const std::string& dotted_key, const std::string& value) {
  try {
    find_field(dotted_key).set(*this, text::trim(value));
  } catch (const InputError& e) {
    const std::string what = e.what();
    if (what.rfind("unknown config key", 0) == 0) throw;
    throw InputError(dotted_key + ": " + what);
  }
}

std::string PipelineConfig::get(const std::string& dotted_key) const {
  return find_field(dotted_key).get(*this);
}

std::vector<std::string> PipelineConfig::keys() const {
  std::vector<std::string> out;
  for (const auto& f : registry()) out.push_back(f.section + "." + f.key);
  return out;
}

std::string PipelineConfig::to_text() const {
  std::ostringstream out;
  std::string section;
  for (const auto& f : registry()) {
    if (f.section != section) {
      if (!section.empty()) out << '\n';
      section = f.section;
      out << '[' << section << "]\n";
    }
    out << f.key << " = " << f.get(*this) << '\n';
  }
  return out.str();
}

PipelineConfig PipelineConfig::from_text(const std::string& text) {
  PipelineConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    line = text::trim(line);
    if (line.empty()) continue;
    const std::string where = "config line " + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw InputError(where + "unterminated section header");
      section = text::trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError(where + "expected key = value");
    if (section.empty()) throw InputError(where + "key outside any [section]");
    try {
      cfg.set(section + "." + text::trim(std::string_view(line).substr(0, eq)),
              line.substr(eq + 1));
    } catch (const InputError& e) {
      throw InputError(where + e.what());
    }
  }
  return cfg;
}

PipelineConfig PipelineConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str());
}

}  // namespace isarec
