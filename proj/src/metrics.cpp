#include "edgeguard/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace edgeguard {

double miou(const SegLabelMap& pred, const SegLabelMap& gt, int num_classes) {
  if (pred.height() != gt.height() || pred.width() != gt.width()) {
    throw ShapeError("prediction and ground truth differ in shape");
  }
  if (num_classes < 1) throw InvalidArgument("num_classes must be positive");
  std::vector<std::size_t> tp(num_classes + 1, 0), fp(num_classes + 1, 0), fn(num_classes + 1, 0);
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      const int p = pred.at(y, x);
      const int g = gt.at(y, x);
      if (p < 1 || p > num_classes || g < 1 || g > num_classes) throw RangeError("class id out of range");
      if (p == g) {
        ++tp[p];
      } else {
        ++fp[p];
        ++fn[g];
      }
    }
  }
  double sum = 0.0;
  int present = 0;
  for (int s = 1; s <= num_classes; ++s) {
    const std::size_t denom = tp[s] + fp[s] + fn[s];
    if (denom == 0) continue;
    sum += static_cast<double>(tp[s]) / static_cast<double>(denom);
    ++present;
  }
  return present == 0 ? 1.0 : sum / present;
}

DepthMetrics depth_metrics(const Plane& pred, const Plane& gt) {
  if (!pred.same_shape(gt)) throw ShapeError("prediction and ground truth differ in shape");
  if (gt.size() == 0) throw InvalidArgument("empty depth map");
  DepthMetrics m;
  double se = 0.0, sle = 0.0;
  std::size_t d1 = 0, d2 = 0, d3 = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const double d = pred[i];
    const double t = gt[i];
    if (!(t > 0.0) || !(d > 0.0)) throw RangeError("depth values must be positive");
    const double diff = d - t;
    m.abs_rel += std::abs(diff) / t;
    m.sq_rel += diff * diff / t;
    se += diff * diff;
    const double ld = std::log(d) - std::log(t);
    sle += ld * ld;
    const double ratio = std::max(d / t, t / d);
    if (ratio < 1.25) ++d1;
    if (ratio < 1.25 * 1.25) ++d2;
    if (ratio < 1.25 * 1.25 * 1.25) ++d3;
  }
  const auto n = static_cast<double>(gt.size());
  m.abs_rel /= n;
  m.sq_rel /= n;
  m.rmse = std::sqrt(se / n);
  m.rmse_log = std::sqrt(sle / n);
  m.delta1 = static_cast<double>(d1) / n;
  m.delta2 = static_cast<double>(d2) / n;
  m.delta3 = static_cast<double>(d3) / n;
  return m;
}

DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt) {
  return depth_metrics(pred.to_doubles(), gt.to_doubles());
}

namespace {

double flagged_fraction(std::span<const int> decisions) {
  if (decisions.empty()) throw InvalidArgument("empty decision list");
  std::size_t k = 0;
  for (int d : decisions) k += d != 0 ? 1 : 0;
  return static_cast<double>(k) / static_cast<double>(decisions.size());
}

}  // namespace

Rates tpr_at_fpr(std::span<const int> clean_decisions, std::span<const int> perturbed_decisions) {
  return {flagged_fraction(perturbed_decisions), flagged_fraction(clean_decisions)};
}

std::vector<RocPoint> roc_points(std::span<const double> clean, std::span<const double> perturbed) {
  if (clean.empty() || perturbed.empty()) throw InvalidArgument("ROC needs nonempty score sets");
  std::vector<double> c(clean.begin(), clean.end());
  std::vector<double> p(perturbed.begin(), perturbed.end());
  std::sort(c.begin(), c.end());
  std::sort(p.begin(), p.end());
  std::vector<double> thresholds(c);
  thresholds.insert(thresholds.end(), p.begin(), p.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  thresholds.push_back(std::numeric_limits<double>::infinity());

  std::vector<RocPoint> roc;
  roc.reserve(thresholds.size());
  for (double t : thresholds) {
    const auto nc = std::lower_bound(c.begin(), c.end(), t) - c.begin();
    const auto np = std::lower_bound(p.begin(), p.end(), t) - p.begin();
    roc.push_back({static_cast<double>(nc) / static_cast<double>(c.size()),
                   static_cast<double>(np) / static_cast<double>(p.size()), t});
  }
  return roc;
}

std::vector<RocPoint> roc_points(std::span<const ConsistencyTriple> clean,
                                 std::span<const ConsistencyTriple> perturbed, VoteMode mode) {
  if (clean.empty() || perturbed.empty()) throw InvalidArgument("ROC needs nonempty score sets");
  const std::size_t n = clean.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<RocPoint> roc;
  roc.reserve(n + 3);
  roc.push_back({0.0, 0.0, -inf});
  for (std::size_t k = 0; k <= n; ++k) {
    const double gamma = static_cast<double>(k) / static_cast<double>(n);
    const auto theta = thresholds_for_gamma(clean, gamma);
    roc.push_back({flag_rate(clean, theta, mode), flag_rate(perturbed, theta, mode), gamma});
  }
  roc.push_back({1.0, 1.0, inf});
  return roc;
}

double auc(std::span<const RocPoint> roc) {
  double area = 0.0;
  for (std::size_t i = 1; i < roc.size(); ++i) {
    area += (roc[i].fpr - roc[i - 1].fpr) * (roc[i].tpr + roc[i - 1].tpr) / 2.0;
  }
  return area;
}

double hist_bin_lo(int bin) { return kHistLo + (kHistHi - kHistLo) * bin / kHistBins; }

std::array<std::size_t, kHistBins> histogram(std::span<const double> values) {
  std::array<std::size_t, kHistBins> counts{};
  for (double v : values) {
    if (std::isnan(v)) continue;
    auto bin = static_cast<long>(std::floor((v - kHistLo) / (kHistHi - kHistLo) * kHistBins));
    bin = std::clamp(bin, 0L, static_cast<long>(kHistBins - 1));
    ++counts[static_cast<std::size_t>(bin)];
  }
  return counts;
}

}  // namespace edgeguard
