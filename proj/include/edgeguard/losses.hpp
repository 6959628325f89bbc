#pragma once

#include <vector>

#include "edgeguard/array.hpp"

namespace edgeguard {

inline constexpr double kClassWeightCap = 10.0;

/// Inverse-frequency class weights from the ground truth, normalized so the
/// weights of present classes average 1, then capped at kClassWeightCap.
/// Absent classes get the cap (they never contribute to the loss).
std::vector<double> class_weights(const SegLabelMap& labels_gt);

struct SegLoss {
  double value = 0.0;
  Grid<double> grad_logits;
};

/// Class-balanced cross-entropy, sum_i w_i CE_i / sum_i w_i, with its
/// gradient with respect to the softmax logits.
SegLoss seg_loss(const Grid<double>& probs, const SegLabelMap& labels_gt);
double seg_loss_value(const SegProbMap& probs, const SegLabelMap& labels_gt);

struct DepthLoss {
  double value = 0.0;
  Plane grad_sigma;
};

/// mean_i |log d_i - log d*_i| where d = 1 / (a sigma + b); gradient is with
/// respect to sigma.
DepthLoss depth_loss(const Plane& sigma, const Plane& depth_gt);
double depth_loss_value(const DepthMap& depth, const DepthMap& depth_gt);

struct EclLoss {
  double value = 0.0;
  Grid<double> grad_probs;  // H x W x |S|
  Plane grad_inverse_depth; // d/d(1 / depth)
  Plane grad_sigma;         // through inverse depth = a * sigma + b
  Grid<double> grad_image;  // only filled when requested
};

/// Edge-consistency loss: 1 minus the mean 3x3 SSIM over pixels, both
/// gradient directions and the pairs (probs, image), (image, depth),
/// (probs, depth). Edge fields are the differentiable ones (soft
/// segmentation edges, mean-normalized inverse-depth edges).
EclLoss ecl_loss(const Grid<double>& probs, const Plane& sigma, const Grid<double>& image,
                 bool want_image_grad = false);

/// Same loss evaluated from decoded outputs (inverse depth = 1 / depth).
double ecl_loss_value(const SegProbMap& probs, const DepthMap& depth, const ImageTensor& image);

/// Value and inverse-depth gradient for arbitrary positive inverse depth.
EclLoss ecl_loss_inverse_depth(const Grid<double>& probs, const Plane& inverse_depth,
                               const Grid<double>& image, bool want_image_grad);

}  // namespace edgeguard
