#include "edgeguard/losses.hpp"

#include <algorithm>
#include <cmath>

#include "edgeguard/edges.hpp"
#include "edgeguard/similarity.hpp"
#include "edgeguard/toynet.hpp"

namespace edgeguard {

std::vector<double> class_weights(const SegLabelMap& gt) {
  const int s = gt.num_classes();
  std::vector<double> counts(s, 0.0);
  for (auto v : gt.grid().values()) counts[v - 1] += 1.0;
  const double n = static_cast<double>(gt.grid().size());
  std::vector<double> w(s, kClassWeightCap);
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < s; ++c) {
    if (counts[c] > 0.0) {
      sum += n / counts[c];
      ++present;
    }
  }
  if (present == 0) return w;
  const double mean = sum / present;
  for (int c = 0; c < s; ++c) {
    if (counts[c] > 0.0) w[c] = std::min((n / counts[c]) / mean, kClassWeightCap);
  }
  return w;
}

SegLoss seg_loss(const Grid<double>& probs, const SegLabelMap& gt) {
  if (!probs.same_extent(gt.grid()) || probs.channels() != gt.num_classes()) {
    throw ShapeError("segmentation loss inputs differ in shape");
  }
  const int s = probs.channels();
  const auto w = class_weights(gt);
  SegLoss out{0.0, Grid<double>(probs.height(), probs.width(), s, 0.0)};
  double wsum = 0.0;
  for (std::size_t p = 0; p < probs.pixels(); ++p) wsum += w[gt.grid()[p] - 1];
  for (std::size_t p = 0; p < probs.pixels(); ++p) {
    const int label = gt.grid()[p] - 1;
    const double wi = w[label] / wsum;
    out.value -= wi * std::log(std::max(probs[p * s + label], 1e-300));
    for (int k = 0; k < s; ++k) {
      out.grad_logits[p * s + k] = wi * (probs[p * s + k] - (k == label ? 1.0 : 0.0));
    }
  }
  return out;
}

double seg_loss_value(const SegProbMap& probs, const SegLabelMap& gt) {
  return seg_loss(probs.to_doubles(), gt).value;
}

DepthLoss depth_loss(const Plane& sigma, const Plane& depth_gt) {
  if (!sigma.same_shape(depth_gt)) throw ShapeError("depth loss inputs differ in shape");
  const double n = static_cast<double>(sigma.size());
  DepthLoss out{0.0, Plane(sigma.height(), sigma.width(), 1, 0.0)};
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    const double eta = ToyNet::kDepthA * sigma[i] + ToyNet::kDepthB;
    // log d = -log eta
    const double diff = -std::log(eta) - std::log(depth_gt[i]);
    out.value += std::abs(diff) / n;
    const double sgn = (diff > 0.0) - (diff < 0.0);
    out.grad_sigma[i] = sgn * (-ToyNet::kDepthA / eta) / n;
  }
  return out;
}

double depth_loss_value(const DepthMap& depth, const DepthMap& depth_gt) {
  if (!depth.grid().same_shape(depth_gt.grid())) throw ShapeError("depth loss inputs differ in shape");
  const double n = static_cast<double>(depth.grid().size());
  double total = 0.0;
  for (std::size_t i = 0; i < depth.grid().size(); ++i) {
    total += std::abs(std::log(static_cast<double>(depth.grid()[i])) -
                      std::log(static_cast<double>(depth_gt.grid()[i])));
  }
  return total / n;
}

EclLoss ecl_loss_inverse_depth(const Grid<double>& probs, const Plane& eta, const Grid<double>& image,
                               bool want_image_grad) {
  if (!probs.same_extent(eta) || !probs.same_extent(image)) {
    throw ShapeError("edge-consistency loss inputs differ in shape");
  }
  const int h = probs.height();
  const int w = probs.width();
  const SsimConfig cfg = SsimConfig::loss_form();
  const double seg_scale = 1.0 / probs.channels();
  const double img_scale = 1.0 / image.channels();

  const EdgeField ey = difference_edges(probs, seg_scale);
  const EdgeField ex = difference_edges(image, img_scale);
  const Plane eta_n = normalize_inverse_depth(eta);
  const EdgeField ed = difference_edges(eta_n, 1.0);

  const double n = static_cast<double>(h) * w;
  const Plane upstream(h, w, 1, -1.0 / (6.0 * n));
  double ssim_sum = 0.0;
  EdgeField gy{Plane(h, w, 1, 0.0), Plane(h, w, 1, 0.0)};
  EdgeField gx{Plane(h, w, 1, 0.0), Plane(h, w, 1, 0.0)};
  EdgeField gd{Plane(h, w, 1, 0.0), Plane(h, w, 1, 0.0)};
  struct Pair {
    const EdgeField* a;
    const EdgeField* b;
    EdgeField* ga;
    EdgeField* gb;
  };
  const Pair pairs[3] = {{&ey, &ex, &gy, &gx}, {&ex, &ed, &gx, &gd}, {&ey, &ed, &gy, &gd}};
  for (const Pair& pr : pairs) {
    for (int dir = 0; dir < 2; ++dir) {
      const Plane map = ssim_map(pr.a->plane(dir), pr.b->plane(dir), cfg);
      for (double v : map.values()) ssim_sum += v;
      ssim_map_backward(pr.a->plane(dir), pr.b->plane(dir), cfg, upstream, pr.ga->plane(dir),
                        pr.gb->plane(dir));
    }
  }

  EclLoss out;
  out.value = 1.0 - ssim_sum / (6.0 * n);
  out.grad_probs = difference_edges_backward(probs, seg_scale, gy.plane_h, gy.plane_w);
  if (want_image_grad) out.grad_image = difference_edges_backward(image, img_scale, gx.plane_h, gx.plane_w);

  // Through eta_n = eta / mean(eta).
  const Plane g_eta_n = difference_edges_backward(eta_n, 1.0, gd.plane_h, gd.plane_w);
  double mean = 0.0;
  for (double v : eta.values()) mean += v;
  mean /= n;
  double dot = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) dot += g_eta_n[i] * eta[i];
  out.grad_inverse_depth = Plane(h, w, 1, 0.0);
  for (std::size_t i = 0; i < eta.size(); ++i) {
    out.grad_inverse_depth[i] = g_eta_n[i] / mean - dot / (mean * mean * n);
  }
  return out;
}

EclLoss ecl_loss(const Grid<double>& probs, const Plane& sigma, const Grid<double>& image,
                 bool want_image_grad) {
  Plane eta = sigma;
  for (double& v : eta.storage()) v = ToyNet::kDepthA * v + ToyNet::kDepthB;
  EclLoss out = ecl_loss_inverse_depth(probs, eta, image, want_image_grad);
  out.grad_sigma = out.grad_inverse_depth;
  for (double& g : out.grad_sigma.storage()) g *= ToyNet::kDepthA;
  return out;
}

double ecl_loss_value(const SegProbMap& probs, const DepthMap& depth, const ImageTensor& image) {
  Plane eta = depth.to_doubles();
  for (double& v : eta.storage()) v = 1.0 / v;
  return ecl_loss_inverse_depth(probs.to_doubles(), eta, image.to_doubles(), false).value;
}

}  // namespace edgeguard
