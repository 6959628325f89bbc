#pragma once

#include <array>
#include <span>
#include <vector>

#include "edgeguard/array.hpp"
#include "edgeguard/detector.hpp"

namespace edgeguard {

/// Mean IoU over the classes present in gt or pred.
double miou(const SegLabelMap& pred, const SegLabelMap& gt, int num_classes);

struct DepthMetrics {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;
  double delta1 = 0.0;  // max ratio < 1.25
  double delta2 = 0.0;  // < 1.25^2
  double delta3 = 0.0;  // < 1.25^3
};

DepthMetrics depth_metrics(const Plane& pred, const Plane& gt);
DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt);

struct Rates {
  double tpr = 0.0;
  double fpr = 0.0;
};

Rates tpr_at_fpr(std::span<const int> clean_decisions, std::span<const int> perturbed_decisions);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // score threshold, or gamma for vote-mode curves
};

/// Flagging rule "score < t" swept over every distinct score plus +inf.
std::vector<RocPoint> roc_points(std::span<const double> clean, std::span<const double> perturbed);
/// Vote-mode curve obtained by sweeping the shared gamma over {0, 1/N, ..., 1}.
std::vector<RocPoint> roc_points(std::span<const ConsistencyTriple> clean,
                                 std::span<const ConsistencyTriple> perturbed, VoteMode mode);
double auc(std::span<const RocPoint> roc);

inline constexpr int kHistBins = 50;
inline constexpr double kHistLo = -1.0;
inline constexpr double kHistHi = 1.0;

/// Fixed 50-bin layout over [-1, 1]; values outside land in the end bins.
std::array<std::size_t, kHistBins> histogram(std::span<const double> values);
double hist_bin_lo(int bin);

}  // namespace edgeguard
