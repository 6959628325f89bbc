#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "edgeguard/array.hpp"
#include "edgeguard/edges.hpp"

namespace edgeguard {

enum class Metric { ssim, mae };
enum class EdgeMode { continuous, binary };
enum class VoteMode { majority, single_mx, single_xd, single_md };

/// Pair order used everywhere: (m, x), (x, d), (m, d).
inline constexpr std::array<const char*, 3> kPairNames = {"mx", "xd", "md"};

std::string metric_name(Metric m);
Metric parse_metric(const std::string& s);
std::string edge_mode_name(EdgeMode m);
EdgeMode parse_edge_mode(const std::string& s);
std::string vote_mode_name(VoteMode m);
VoteMode parse_vote_mode(const std::string& s);

struct DetectorConfig {
  Metric metric = Metric::ssim;
  EdgeMode edge_mode = EdgeMode::continuous;
  VoteMode vote_mode = VoteMode::majority;
  double gamma = 0.05;       // used only when thresholds are built for a fixed gamma
  double target_fpr = 0.05;
  double top_fraction = 0.05;  // binary edge mode

  void validate() const;
};

struct ConsistencyTriple {
  double mx = 0.0;
  double xd = 0.0;
  double md = 0.0;

  double operator[](int pair) const { return pair == 0 ? mx : pair == 1 ? xd : md; }
  double& operator[](int pair) { return pair == 0 ? mx : pair == 1 ? xd : md; }
  bool operator==(const ConsistencyTriple&) const = default;
};

struct ThresholdSet {
  std::array<double, 3> theta{};
  double gamma = 0.0;
  std::size_t n = 0;
  double achieved_fpr = 0.0;
  DetectorConfig config;
};

struct DetectionResult {
  ConsistencyTriple consistencies;
  std::array<int, 3> votes{};
  int decision = 0;
};

/// Consistency of the three edge fields: image x, depth d, labels m.
ConsistencyTriple score_edges(const EdgeField& ex, const EdgeField& ed, const EdgeField& em,
                              const DetectorConfig& cfg);
ConsistencyTriple score(const ImageTensor& image, const DepthMap& depth, const SegLabelMap& labels,
                        const DetectorConfig& cfg);

/// Theta per pair = the (floor(gamma N) + 1)-th smallest clean consistency,
/// or just above the maximum when gamma N = N.
std::array<double, 3> thresholds_for_gamma(std::span<const ConsistencyTriple> clean, double gamma);

std::array<int, 3> votes(const ConsistencyTriple& c, const std::array<double, 3>& theta);
int decide(const std::array<int, 3>& votes, VoteMode mode);

/// Fraction of triples flagged under the given thresholds and vote mode.
double flag_rate(std::span<const ConsistencyTriple> triples, const std::array<double, 3>& theta, VoteMode mode);

/// Shared-gamma calibration: the largest gamma in {0, 1/N, ..., 1} whose
/// vote-mode clean FPR does not exceed the target.
ThresholdSet calibrate(std::span<const ConsistencyTriple> clean, const DetectorConfig& cfg);

DetectionResult detect(const ConsistencyTriple& c, const ThresholdSet& thresholds);
DetectionResult detect(const ImageTensor& image, const DepthMap& depth, const SegLabelMap& labels,
                       const ThresholdSet& thresholds);

/// Plain-text threshold file; values are written with 17 significant digits.
void write_thresholds(const ThresholdSet& t, const std::filesystem::path& path);
ThresholdSet read_thresholds(const std::filesystem::path& path);

}  // namespace edgeguard
