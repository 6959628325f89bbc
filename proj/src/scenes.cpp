#include "edgeguard/scenes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "edgeguard/array_io.hpp"
#include "edgeguard/rng.hpp"

namespace edgeguard {
namespace {

struct Rgb {
  int r, g, b;
};

Rgb class_color(int cls) {
  static constexpr Rgb palette[] = {
      {110, 110, 120}, {200, 60, 50}, {50, 160, 70}, {60, 80, 200}, {220, 200, 60},
      {170, 70, 190},  {60, 190, 200}, {240, 140, 40}, {140, 100, 60}, {230, 230, 230},
  };
  if (cls >= 1 && cls <= 10) return palette[cls - 1];
  // deterministic fallback for larger class counts
  const auto h = derive_seed(static_cast<std::uint64_t>(cls), 77);
  return {static_cast<int>(40 + h % 180), static_cast<int>(40 + (h >> 8) % 180),
          static_cast<int>(40 + (h >> 16) % 180)};
}

struct Shape {
  bool ellipse;
  int cx, cy, rx, ry;
  int cls;
  double depth;
  double slope_y, slope_x;  // depth change per pixel
  Rgb color;

  bool covers(int y, int x) const {
    const long dy = y - cy;
    const long dx = x - cx;
    if (!ellipse) return std::abs(dy) <= ry && std::abs(dx) <= rx;
    return dx * dx * static_cast<long>(ry) * ry + dy * dy * static_cast<long>(rx) * rx <=
           static_cast<long>(rx) * rx * ry * ry;
  }
  double depth_at(int y, int x) const { return depth + slope_y * (y - cy) + slope_x * (x - cx); }
};

int clamp_level(long v) { return static_cast<int>(std::clamp<long>(v, 0, 255)); }

}  // namespace

void SceneSpec::validate() const {
  if (height < 2 || width < 2) throw InvalidArgument("scene must be at least 2x2");
  if (num_classes < 2) throw InvalidArgument("scene needs at least two classes");
  if (num_shapes < 0) throw InvalidArgument("num_shapes must be non-negative");
  if (!(depth_min >= kMinDepth && depth_max <= kMaxDepth && depth_min < depth_max)) {
    throw InvalidArgument("scene depth range must be a sub-range of [0.1, 100]");
  }
  if (texture_amplitude < 0 || texture_amplitude > 64) throw InvalidArgument("texture amplitude out of range");
}

Sample generate_sample(const SceneSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, 0x5ce9e));
  const int h = spec.height;
  const int w = spec.width;
  const double far = spec.depth_max;
  const double bg_near = spec.depth_min + 0.5 * (spec.depth_max - spec.depth_min);
  // Shapes live in [depth_min, band_top], strictly in front of the background.
  const double band_top = spec.depth_min + 0.45 * (spec.depth_max - spec.depth_min);
  const int shape_classes = spec.num_classes - 1;
  const double band = (band_top - spec.depth_min) / shape_classes;

  std::vector<Shape> shapes;
  const int min_r = std::max(2, std::min(h, w) / 16);
  const int max_r = std::max(min_r, std::min(h, w) / 4);
  for (int s = 0; s < spec.num_shapes; ++s) {
    Shape sh{};
    sh.ellipse = rng.uniform_int(0, 1) == 1;
    sh.cx = static_cast<int>(rng.uniform_int(0, w - 1));
    sh.cy = static_cast<int>(rng.uniform_int(0, h - 1));
    sh.rx = static_cast<int>(rng.uniform_int(min_r, max_r));
    sh.ry = static_cast<int>(rng.uniform_int(min_r, max_r));
    sh.cls = static_cast<int>(rng.uniform_int(2, spec.num_classes));
    const double lo = spec.depth_min + band * (sh.cls - 2);
    sh.depth = lo + band * (0.2 + 0.6 * rng.uniform());
    const bool sloped = rng.uniform_int(0, 1) == 1;
    const double max_slope = 0.2 * band / std::max(sh.rx, sh.ry);
    sh.slope_y = sloped ? rng.uniform(-max_slope, max_slope) : 0.0;
    sh.slope_x = sloped ? rng.uniform(-max_slope, max_slope) : 0.0;
    const Rgb base = class_color(sh.cls);
    sh.color = {clamp_level(base.r + rng.uniform_int(-12, 12)), clamp_level(base.g + rng.uniform_int(-12, 12)),
                clamp_level(base.b + rng.uniform_int(-12, 12))};
    shapes.push_back(sh);
  }
  const Rgb bg = class_color(1);

  Grid<float> image(h, w, 3, 0.0f);
  Grid<float> depth(h, w, 1, 0.0f);
  Grid<std::uint16_t> labels(h, w, 1, 1);
  for (int y = 0; y < h; ++y) {
    const double bg_depth = far - (far - bg_near) * static_cast<double>(y) / (h - 1);
    for (int x = 0; x < w; ++x) {
      double d = bg_depth;
      int cls = 1;
      Rgb color = bg;
      for (const Shape& sh : shapes) {
        if (!sh.covers(y, x)) continue;
        const double sd = std::clamp(sh.depth_at(y, x), spec.depth_min, band_top);
        if (sd < d) {
          d = sd;
          cls = sh.cls;
          color = sh.color;
        }
      }
      const long texture = rng.uniform_int(-spec.texture_amplitude, spec.texture_amplitude);
      // Haze toward a light gray with distance, rounded to whole levels.
      const double haze = 0.6 * (d - spec.depth_min) / (spec.depth_max - spec.depth_min);
      const int channels[3] = {color.r, color.g, color.b};
      for (int c = 0; c < 3; ++c) {
        const long level = std::lround(channels[c] * (1.0 - haze) + 150.0 * haze) + texture;
        image.at(y, x, c) = static_cast<float>(clamp_level(level) / 255.0);
      }
      depth.at(y, x) = static_cast<float>(d);
      labels.at(y, x) = static_cast<std::uint16_t>(cls);
    }
  }
  return Sample{spec.seed, ImageTensor(std::move(image)), DepthMap(std::move(depth)),
                SegLabelMap(std::move(labels), spec.num_classes)};
}

std::string split_name(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw InvalidArgument("unknown split '" + name + "' (expected train, val or test)");
}

std::uint64_t split_seed(Split split, std::uint64_t base_seed, std::uint64_t k) {
  constexpr std::uint64_t kRange = 1'000'000'000ULL;
  if (base_seed + k >= kRange) throw InvalidArgument("seed exceeds the per-split seed range");
  return static_cast<std::uint64_t>(split) * kRange + base_seed + k;
}

std::vector<Sample> generate_split(const SceneSpec& spec, int n, Split split) {
  if (n < 1) throw InvalidArgument("split size must be at least 1");
  std::vector<Sample> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) {
    SceneSpec s = spec;
    s.seed = split_seed(split, spec.seed, static_cast<std::uint64_t>(k));
    out.push_back(generate_sample(s));
  }
  return out;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << "# edgeguard manifest v1\n";
  out << "classes " << manifest.num_classes << "\n";
  for (const auto& e : manifest.entries) {
    out << "sample " << e.split << ' ' << e.seed << ' ' << e.image << ' ' << e.depth << ' ' << e.labels
        << '\n';
  }
  if (!out) throw IoError("write failed on " + path.string());
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  Manifest m;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "classes") {
      ls >> m.num_classes;
    } else if (tag == "sample") {
      ManifestEntry e;
      ls >> e.split >> e.seed >> e.image >> e.depth >> e.labels;
      if (!ls || e.labels.empty()) {
        throw FormatError("malformed manifest row at " + path.string() + ":" + std::to_string(line_no));
      }
      m.entries.push_back(std::move(e));
    } else {
      throw FormatError("unknown manifest tag '" + tag + "' at line " + std::to_string(line_no));
    }
  }
  if (m.num_classes < 1) throw FormatError("manifest lacks a class count");
  return m;
}

std::filesystem::path resolve_manifest(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) return path / kManifestName;
  return path;
}

Sample load_sample(const std::filesystem::path& dir, const ManifestEntry& e) {
  Sample s{e.seed, load_image(dir / e.image), load_depth(dir / e.depth), load_labels(dir / e.labels)};
  if (s.image.height() != s.depth_gt.height() || s.image.width() != s.depth_gt.width() ||
      s.image.height() != s.labels_gt.height() || s.image.width() != s.labels_gt.width()) {
    throw ShapeError("sample " + std::to_string(e.seed) + " has mismatched array shapes");
  }
  return s;
}

std::vector<Sample> load_dataset(const std::filesystem::path& manifest_path) {
  const auto path = resolve_manifest(manifest_path);
  const Manifest m = read_manifest(path);
  std::vector<Sample> out;
  out.reserve(m.entries.size());
  for (const auto& e : m.entries) out.push_back(load_sample(path.parent_path(), e));
  return out;
}

ManifestEntry save_sample(const Sample& sample, const std::string& split, const std::filesystem::path& dir) {
  const std::string stem = split + "_" + std::to_string(sample.seed);
  ManifestEntry e{split, sample.seed, stem + "_image.egarr", stem + "_depth.egarr", stem + "_labels.egarr"};
  save_image(sample.image, dir / e.image);
  save_depth(sample.depth_gt, dir / e.depth);
  save_labels(sample.labels_gt, dir / e.labels);
  return e;
}

}  // namespace edgeguard
