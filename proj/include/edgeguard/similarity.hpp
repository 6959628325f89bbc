#pragma once

#include <vector>

#include "edgeguard/array.hpp"
#include "edgeguard/edges.hpp"

namespace edgeguard {

enum class WindowKind {
  uniform3,    // 3x3 box, used by the training loss
  gaussian11,  // 11x11 Gaussian, sigma 1.5, used by the detector
};

struct SsimConfig {
  WindowKind window = WindowKind::gaussian11;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;

  double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
  double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }
  void validate() const;

  static SsimConfig loss_form() { return {WindowKind::uniform3, 0.01, 0.03, 1.0}; }
  static SsimConfig detector_form() { return {WindowKind::gaussian11, 0.01, 0.03, 1.0}; }
};

/// Normalized 1-D kernel; the 2-D window is its outer product.
std::vector<double> window_kernel(WindowKind kind);

/// Windowed weighted mean with reflect (mirror, edge not repeated) padding.
Plane window_mean(const Plane& p, const std::vector<double>& kernel);
/// Adjoint of window_mean.
Plane window_mean_adjoint(const Plane& g, const std::vector<double>& kernel);

/// Local SSIM at every pixel.
Plane ssim_map(const Plane& a, const Plane& b, const SsimConfig& cfg);

/// Given dL/d(ssim_map), adds dL/da and dL/db into grad_a and grad_b.
void ssim_map_backward(const Plane& a, const Plane& b, const SsimConfig& cfg, const Plane& grad_map,
                       Plane& grad_a, Plane& grad_b);

/// Mean local SSIM over both planes. Non-binary planes of each pair are
/// divided by max(max a, max b, 1e-6) first so the dynamic range is 1.
double ssim_global(const EdgeField& a, const EdgeField& b,
                   const SsimConfig& cfg = SsimConfig::detector_form());

/// -mean|a - b| over both planes; higher means more consistent.
double mae_consistency(const EdgeField& a, const EdgeField& b);

}  // namespace edgeguard
