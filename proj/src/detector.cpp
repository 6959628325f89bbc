#include "edgeguard/detector.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "edgeguard/similarity.hpp"

namespace edgeguard {

std::string metric_name(Metric m) { return m == Metric::ssim ? "ssim" : "mae"; }

Metric parse_metric(const std::string& s) {
  if (s == "ssim") return Metric::ssim;
  if (s == "mae") return Metric::mae;
  throw InvalidArgument("unknown consistency metric '" + s + "'");
}

std::string edge_mode_name(EdgeMode m) { return m == EdgeMode::continuous ? "continuous" : "binary"; }

EdgeMode parse_edge_mode(const std::string& s) {
  if (s == "continuous") return EdgeMode::continuous;
  if (s == "binary") return EdgeMode::binary;
  throw InvalidArgument("unknown edge mode '" + s + "'");
}

std::string vote_mode_name(VoteMode m) {
  switch (m) {
    case VoteMode::majority: return "majority";
    case VoteMode::single_mx: return "single_mx";
    case VoteMode::single_xd: return "single_xd";
    case VoteMode::single_md: return "single_md";
  }
  return "majority";
}

VoteMode parse_vote_mode(const std::string& s) {
  if (s == "majority") return VoteMode::majority;
  if (s == "single_mx") return VoteMode::single_mx;
  if (s == "single_xd") return VoteMode::single_xd;
  if (s == "single_md") return VoteMode::single_md;
  throw InvalidArgument("unknown vote mode '" + s + "'");
}

void DetectorConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidArgument("gamma must lie in [0, 1]");
  if (!(target_fpr >= 0.0 && target_fpr <= 1.0)) throw InvalidArgument("target FPR must lie in [0, 1]");
  if (!(top_fraction > 0.0 && top_fraction < 1.0)) throw InvalidArgument("top fraction must lie in (0, 1)");
}

ConsistencyTriple score_edges(const EdgeField& ex, const EdgeField& ed, const EdgeField& em,
                              const DetectorConfig& cfg) {
  const EdgeField x = cfg.edge_mode == EdgeMode::binary && !ex.binary ? binarize_edges(ex, cfg.top_fraction) : ex;
  const EdgeField d = cfg.edge_mode == EdgeMode::binary && !ed.binary ? binarize_edges(ed, cfg.top_fraction) : ed;
  auto metric = [&](const EdgeField& a, const EdgeField& b) {
    return cfg.metric == Metric::ssim ? ssim_global(a, b, SsimConfig::detector_form()) : mae_consistency(a, b);
  };
  return {metric(em, x), metric(x, d), metric(em, d)};
}

ConsistencyTriple score(const ImageTensor& image, const DepthMap& depth, const SegLabelMap& labels,
                        const DetectorConfig& cfg) {
  if (image.height() != depth.height() || image.width() != depth.width() || image.height() != labels.height() ||
      image.width() != labels.width()) {
    throw ShapeError("image, depth and labels differ in shape");
  }
  return score_edges(rgb_edges(image), depth_edges(depth), seglabel_edges(labels), cfg);
}

std::array<double, 3> thresholds_for_gamma(std::span<const ConsistencyTriple> clean, double gamma) {
  if (clean.empty()) throw InvalidArgument("no clean consistencies");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidArgument("gamma must lie in [0, 1]");
  const std::size_t n = clean.size();
  const auto k = static_cast<std::size_t>(std::floor(gamma * static_cast<double>(n) + 1e-9));
  std::array<double, 3> theta{};
  for (int pair = 0; pair < 3; ++pair) {
    std::vector<double> v;
    v.reserve(n);
    for (const auto& t : clean) v.push_back(t[pair]);
    std::sort(v.begin(), v.end());
    theta[pair] = k < n ? v[k] : std::nextafter(v.back(), std::numeric_limits<double>::infinity());
  }
  return theta;
}

std::array<int, 3> votes(const ConsistencyTriple& c, const std::array<double, 3>& theta) {
  return {c.mx < theta[0] ? 1 : 0, c.xd < theta[1] ? 1 : 0, c.md < theta[2] ? 1 : 0};
}

int decide(const std::array<int, 3>& v, VoteMode mode) {
  switch (mode) {
    case VoteMode::majority: return v[0] + v[1] + v[2] >= 2 ? 1 : 0;
    case VoteMode::single_mx: return v[0];
    case VoteMode::single_xd: return v[1];
    case VoteMode::single_md: return v[2];
  }
  return 0;
}

double flag_rate(std::span<const ConsistencyTriple> triples, const std::array<double, 3>& theta, VoteMode mode) {
  if (triples.empty()) return 0.0;
  std::size_t flagged = 0;
  for (const auto& t : triples) flagged += static_cast<std::size_t>(decide(votes(t, theta), mode));
  return static_cast<double>(flagged) / static_cast<double>(triples.size());
}

namespace {

bool all_equal(std::span<const ConsistencyTriple> triples, int pair) {
  for (const auto& t : triples) {
    if (t[pair] != triples.front()[pair]) return false;
  }
  return true;
}

}  // namespace

ThresholdSet calibrate(std::span<const ConsistencyTriple> clean, const DetectorConfig& cfg) {
  cfg.validate();
  if (clean.size() < 20) throw InvalidArgument("calibration needs at least 20 clean samples");
  for (int pair = 0; pair < 3; ++pair) {
    const bool used = cfg.vote_mode == VoteMode::majority || static_cast<int>(cfg.vote_mode) - 1 == pair;
    if (used && all_equal(clean, pair)) {
      throw InvalidArgument(std::string("degenerate calibration: all clean ") + kPairNames[pair] +
                            " consistencies are equal");
    }
  }
  const std::size_t n = clean.size();
  auto fpr_at = [&](std::size_t k) {
    return flag_rate(clean, thresholds_for_gamma(clean, static_cast<double>(k) / static_cast<double>(n)),
                     cfg.vote_mode);
  };
  // Flag rate is non-decreasing in k; find the largest k within target.
  std::size_t lo = 0, hi = n;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo + 1) / 2;
    if (fpr_at(mid) <= cfg.target_fpr) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  ThresholdSet t;
  t.gamma = static_cast<double>(lo) / static_cast<double>(n);
  t.theta = thresholds_for_gamma(clean, t.gamma);
  t.n = n;
  t.achieved_fpr = flag_rate(clean, t.theta, cfg.vote_mode);
  t.config = cfg;
  return t;
}

DetectionResult detect(const ConsistencyTriple& c, const ThresholdSet& thresholds) {
  DetectionResult r;
  r.consistencies = c;
  r.votes = votes(c, thresholds.theta);
  r.decision = decide(r.votes, thresholds.config.vote_mode);
  return r;
}

DetectionResult detect(const ImageTensor& image, const DepthMap& depth, const SegLabelMap& labels,
                       const ThresholdSet& thresholds) {
  return detect(score(image, depth, labels, thresholds.config), thresholds);
}

void write_thresholds(const ThresholdSet& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write thresholds to " + path.string());
  char buf[256];
  out << "# edgeguard thresholds v1\n";
  out << "metric " << metric_name(t.config.metric) << "\n";
  out << "edge_mode " << edge_mode_name(t.config.edge_mode) << "\n";
  out << "vote_mode " << vote_mode_name(t.config.vote_mode) << "\n";
  std::snprintf(buf, sizeof(buf), "top_fraction %.17g\ntarget_fpr %.17g\n", t.config.top_fraction,
                t.config.target_fpr);
  out << buf;
  out << "# pair theta gamma n achieved_fpr\n";
  for (int pair = 0; pair < 3; ++pair) {
    std::snprintf(buf, sizeof(buf), "pair %s %.17g %.17g %zu %.17g\n", kPairNames[pair], t.theta[pair], t.gamma,
                  t.n, t.achieved_fpr);
    out << buf;
  }
  if (!out) throw IoError("write failed on " + path.string());
}

ThresholdSet read_thresholds(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open thresholds " + path.string());
  ThresholdSet t;
  int seen = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "metric") {
      std::string v;
      ls >> v;
      t.config.metric = parse_metric(v);
    } else if (key == "edge_mode") {
      std::string v;
      ls >> v;
      t.config.edge_mode = parse_edge_mode(v);
    } else if (key == "vote_mode") {
      std::string v;
      ls >> v;
      t.config.vote_mode = parse_vote_mode(v);
    } else if (key == "top_fraction") {
      ls >> t.config.top_fraction;
    } else if (key == "target_fpr") {
      ls >> t.config.target_fpr;
    } else if (key == "pair") {
      std::string name;
      double theta = 0.0;
      ls >> name >> theta >> t.gamma >> t.n >> t.achieved_fpr;
      const auto it = std::find_if(kPairNames.begin(), kPairNames.end(), [&](const char* p) { return name == p; });
      if (it == kPairNames.end()) throw FormatError("unknown pair '" + name + "' in threshold file");
      t.theta[static_cast<std::size_t>(it - kPairNames.begin())] = theta;
      ++seen;
    } else {
      throw FormatError("unknown key '" + key + "' in threshold file");
    }
    if (!ls) throw FormatError("malformed threshold line: " + line);
  }
  if (seen != 3) throw FormatError("threshold file must list three pairs");
  t.config.gamma = t.gamma;
  return t;
}

}  // namespace edgeguard
