#pragma once

#include "edgeguard/array.hpp"

namespace edgeguard {

/// Two-plane edge magnitudes. plane_h[i] compares pixel i with its lower
/// neighbour, plane_w[i] with its right neighbour. The trailing row of
/// plane_h and trailing column of plane_w are zero.
struct EdgeField {
  Plane plane_h;
  Plane plane_w;
  bool binary = false;

  int height() const { return plane_h.height(); }
  int width() const { return plane_h.width(); }
  const Plane& plane(int direction) const { return direction == 0 ? plane_h : plane_w; }
  Plane& plane(int direction) { return direction == 0 ? plane_h : plane_w; }
};

/// scale * sum over channels of |forward difference|, per direction.
EdgeField difference_edges(const Grid<double>& values, double scale);

/// Adjoint of difference_edges: accumulates d(loss)/d(values) given
/// d(loss)/d(plane_h) and d(loss)/d(plane_w). sign(0) is taken as 0.
Grid<double> difference_edges_backward(const Grid<double>& values, double scale,
                                       const Plane& grad_h, const Plane& grad_w);

/// RGB (or gray) edges: mean over channels of |forward difference|.
EdgeField rgb_edges(const ImageTensor& image);
EdgeField rgb_edges(const Grid<double>& image);

/// Soft segmentation edges from class probabilities, scaled by 1/|S|.
EdgeField segprob_edges(const SegProbMap& probs);
EdgeField segprob_edges(const Grid<double>& probs);

/// eta / mean(eta) where eta is inverse depth.
Plane normalize_inverse_depth(const Plane& inverse_depth);

/// Edges of the mean-normalized inverse depth.
EdgeField depth_edges(const DepthMap& depth);
EdgeField depth_edges(const Plane& depth);
EdgeField inverse_depth_edges(const Plane& inverse_depth);

/// Binary label-boundary edges: 1 where neighbouring class ids differ.
EdgeField seglabel_edges(const SegLabelMap& labels);

/// Per plane, values strictly above the (1 - top_fraction) order statistic
/// become 1 and everything else 0. An all-equal plane maps to zeros.
EdgeField binarize_edges(const EdgeField& edges, double top_fraction);

}  // namespace edgeguard
