#include "isarec/video_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "isarec/error.hpp"

namespace isarec {

namespace fs = std::filesystem;

std::string_view modality_name(Modality m) {
  return m == Modality::Grayscale ? "gray" : "depth";
}

Modality parse_modality(std::string_view name) {
  if (name == "gray" || name == "grayscale") return Modality::Grayscale;
  if (name == "depth") return Modality::Depth;
  throw InputError("unknown modality '" + std::string(name) + "'");
}

const ManifestEntry& DatasetManifest::at(std::string_view clip_id) const {
  for (const auto& e : entries)
    if (e.clip_id == clip_id) return e;
  throw InputError("clip '" + std::string(clip_id) + "' is not in the manifest");
}

fs::path DatasetManifest::clip_dir(const ManifestEntry& e, Modality m) const {
  if (m == Modality::Grayscale) return root / e.gray_path;
  if (!e.depth_path)
    throw InputError("clip '" + e.clip_id + "' has no depth frames");
  return root / *e.depth_path;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  // getline drops a trailing empty field
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open manifest " + path.string());

  DatasetManifest manifest;
  manifest.root = path.parent_path();

  std::string line;
  if (!std::getline(in, line))
    throw InputError("manifest " + path.string() + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kManifestHeader)
    throw InputError("manifest header must be '" + std::string(kManifestHeader) +
                     "'");

  std::set<std::string> seen;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (f.size() != 5)
      throw InputError(where + ": expected 5 fields, got " +
                       std::to_string(f.size()));
    ManifestEntry e{f[0], f[1], std::nullopt, f[3], f[4]};
    if (!f[2].empty()) e.depth_path = f[2];
    if (e.clip_id.empty()) throw InputError(where + ": empty clip_id");
    if (e.label.empty()) throw InputError(where + ": empty label");
    if (e.subject.empty()) throw InputError(where + ": empty subject");
    if (!seen.insert(e.clip_id).second)
      throw InputError(where + ": duplicate clip_id '" + e.clip_id + "'");
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write manifest " + path.string());
  out << kManifestHeader << '\n';
  for (const auto& e : manifest.entries)
    out << e.clip_id << ',' << e.gray_path << ',' << e.depth_path.value_or("")
        << ',' << e.label << ',' << e.subject << '\n';
}

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

int pgm_int(std::istream& in, const fs::path& path) {
  const std::string tok = pgm_token(in);
  try {
    std::size_t used = 0;
    int v = std::stoi(tok, &used);
    if (used == tok.size()) return v;
  } catch (const std::exception&) {
  }
  throw InputError(path.string() + ": bad PGM header field '" + tok + "'");
}

}  // namespace

Frame read_pgm(const fs::path& path, int* maxval_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  if (pgm_token(in) != "P5")
    throw InputError(path.string() + ": not a binary PGM (P5)");
  const int w = pgm_int(in, path);
  const int h = pgm_int(in, path);
  const int maxval = pgm_int(in, path);
  if (w < 1 || h < 1) throw InputError(path.string() + ": bad dimensions");
  if (maxval != 255 && maxval != 65535)
    throw InputError(path.string() + ": unsupported maxval " +
                     std::to_string(maxval));

  const int bytes = maxval == 255 ? 1 : 2;
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * bytes);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size()))
    throw InputError(path.string() + ": truncated pixel data");

  Frame frame(h, w);
  const double scale = 1.0 / maxval;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      const unsigned v =
          bytes == 1 ? raw[i] : (unsigned{raw[2 * i]} << 8) | raw[2 * i + 1];
      frame(r, c) = std::min(1.0, v * scale);
    }
  }
  if (maxval_out) *maxval_out = maxval;
  return frame;
}

void write_pgm(const Frame& frame, int maxval, const fs::path& path) {
  if (maxval != 255 && maxval != 65535)
    throw std::invalid_argument("write_pgm: maxval must be 255 or 65535");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "P5\n" << frame.cols() << ' ' << frame.rows() << '\n' << maxval << '\n';
  std::string raw;
  raw.reserve(static_cast<std::size_t>(frame.size()) * (maxval == 255 ? 1 : 2));
  for (Eigen::Index r = 0; r < frame.rows(); ++r) {
    for (Eigen::Index c = 0; c < frame.cols(); ++c) {
      const double v = std::clamp(frame(r, c), 0.0, 1.0);
      const auto q = static_cast<unsigned>(std::lround(v * maxval));
      if (maxval == 255) {
        raw.push_back(static_cast<char>(q));
      } else {
        raw.push_back(static_cast<char>(q >> 8));
        raw.push_back(static_cast<char>(q & 0xff));
      }
    }
  }
  out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
}

namespace {

std::string frame_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06d.pgm", index);
  return buf;
}

// Parses "frame_NNNNNN.pgm"; returns 0 for anything else.
int frame_index(const std::string& name) {
  if (name.size() != 16 || name.rfind("frame_", 0) != 0 ||
      name.substr(12) != ".pgm")
    return 0;
  int v = 0;
  for (int i = 6; i < 12; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(name[i]))) return 0;
    v = v * 10 + (name[i] - '0');
  }
  return v;
}

}  // namespace

VideoClip load_clip(const fs::path& dir, Modality modality,
                    std::string clip_id) {
  if (!fs::is_directory(dir))
    throw InputError("frame directory " + dir.string() + " does not exist");

  std::vector<int> indices;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (int idx = frame_index(entry.path().filename().string()); idx > 0)
      indices.push_back(idx);
  }
  std::sort(indices.begin(), indices.end());
  if (indices.empty())
    throw InputError(dir.string() + ": no frame_NNNNNN.pgm files");
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] != static_cast<int>(i) + 1)
      throw InputError(dir.string() + ": frame index " +
                       std::to_string(i + 1) + " missing (non-consecutive)");
  }

  VideoClip clip;
  clip.clip_id = clip_id.empty() ? dir.filename().string() : std::move(clip_id);
  clip.modality = modality;
  for (int idx : indices) {
    Frame f = read_pgm(dir / frame_name(idx));
    if (clip.frames.empty()) {
      clip.width = static_cast<int>(f.cols());
      clip.height = static_cast<int>(f.rows());
    } else if (f.cols() != clip.width || f.rows() != clip.height) {
      throw InputError(dir.string() + ": frame " + std::to_string(idx) +
                       " has inconsistent dimensions");
    }
    clip.frames.push_back(std::move(f));
  }
  return clip;
}

void save_clip(const VideoClip& clip, const fs::path& dir) {
  fs::create_directories(dir);
  const int maxval = clip.modality == Modality::Grayscale ? 255 : 65535;
  for (int i = 0; i < clip.frame_count(); ++i)
    write_pgm(clip.frames[i], maxval, dir / frame_name(i + 1));
}

namespace {

struct Tap {
  int lo, hi;
  double frac;
};

std::vector<Tap> bilinear_taps(int in, int out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(in) / out;
  for (int i = 0; i < out; ++i) {
    double src = (i + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const int lo = static_cast<int>(std::floor(src));
    taps[i] = {lo, std::min(lo + 1, in - 1), src - lo};
  }
  return taps;
}

}  // namespace

Frame resize_frame(const Frame& frame, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1)
    throw std::invalid_argument("resize: output size must be positive");
  const auto xs = bilinear_taps(static_cast<int>(frame.cols()), out_w);
  const auto ys = bilinear_taps(static_cast<int>(frame.rows()), out_h);
  Frame out(out_h, out_w);
  for (int r = 0; r < out_h; ++r) {
    const Tap& ty = ys[r];
    for (int c = 0; c < out_w; ++c) {
      const Tap& tx = xs[c];
      const double top = frame(ty.lo, tx.lo) * (1 - tx.frac) +
                         frame(ty.lo, tx.hi) * tx.frac;
      const double bottom = frame(ty.hi, tx.lo) * (1 - tx.frac) +
                            frame(ty.hi, tx.hi) * tx.frac;
      out(r, c) = std::clamp(top * (1 - ty.frac) + bottom * ty.frac, 0.0, 1.0);
    }
  }
  return out;
}

VideoClip resize_clip(const VideoClip& clip, int out_w, int out_h) {
  VideoClip out;
  out.clip_id = clip.clip_id;
  out.modality = clip.modality;
  out.width = out_w;
  out.height = out_h;
  out.frames.reserve(clip.frames.size());
  for (const auto& f : clip.frames)
    out.frames.push_back(resize_frame(f, out_w, out_h));
  return out;
}

}  // namespace isarec
