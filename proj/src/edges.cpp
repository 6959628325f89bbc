#include "edgeguard/edges.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace edgeguard {
namespace {

double sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

EdgeField difference_edges(const Grid<double>& v, double scale) {
  const int h = v.height();
  const int w = v.width();
  const int c = v.channels();
  EdgeField e{Plane(h, w, 1, 0.0), Plane(h, w, 1, 0.0), false};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (y + 1 < h) {
        double s = 0.0;
        for (int k = 0; k < c; ++k) s += std::abs(v.at(y + 1, x, k) - v.at(y, x, k));
        e.plane_h.at(y, x) = scale * s;
      }
      if (x + 1 < w) {
        double s = 0.0;
        for (int k = 0; k < c; ++k) s += std::abs(v.at(y, x + 1, k) - v.at(y, x, k));
        e.plane_w.at(y, x) = scale * s;
      }
    }
  }
  return e;
}

Grid<double> difference_edges_backward(const Grid<double>& v, double scale, const Plane& grad_h,
                                       const Plane& grad_w) {
  const int h = v.height();
  const int w = v.width();
  const int c = v.channels();
  Grid<double> g(h, w, c, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (y + 1 < h) {
        const double gh = scale * grad_h.at(y, x);
        if (gh != 0.0) {
          for (int k = 0; k < c; ++k) {
            const double s = gh * sign(v.at(y + 1, x, k) - v.at(y, x, k));
            g.at(y + 1, x, k) += s;
            g.at(y, x, k) -= s;
          }
        }
      }
      if (x + 1 < w) {
        const double gw = scale * grad_w.at(y, x);
        if (gw != 0.0) {
          for (int k = 0; k < c; ++k) {
            const double s = gw * sign(v.at(y, x + 1, k) - v.at(y, x, k));
            g.at(y, x + 1, k) += s;
            g.at(y, x, k) -= s;
          }
        }
      }
    }
  }
  return g;
}

EdgeField rgb_edges(const Grid<double>& image) {
  return difference_edges(image, 1.0 / image.channels());
}

EdgeField rgb_edges(const ImageTensor& image) { return rgb_edges(image.to_doubles()); }

EdgeField segprob_edges(const Grid<double>& probs) {
  return difference_edges(probs, 1.0 / probs.channels());
}

EdgeField segprob_edges(const SegProbMap& probs) { return segprob_edges(probs.to_doubles()); }

Plane normalize_inverse_depth(const Plane& eta) {
  double sum = 0.0;
  for (double v : eta.values()) sum += v;
  const double mean = sum / static_cast<double>(eta.size());
  Plane out = eta;
  for (double& v : out.storage()) v /= mean;
  return out;
}

EdgeField inverse_depth_edges(const Plane& inverse_depth) {
  return difference_edges(normalize_inverse_depth(inverse_depth), 1.0);
}

EdgeField depth_edges(const Plane& depth) {
  Plane eta = depth;
  for (double& v : eta.storage()) v = 1.0 / v;
  return inverse_depth_edges(eta);
}

EdgeField depth_edges(const DepthMap& depth) { return depth_edges(depth.to_doubles()); }

EdgeField seglabel_edges(const SegLabelMap& labels) {
  const int h = labels.height();
  const int w = labels.width();
  EdgeField e{Plane(h, w, 1, 0.0), Plane(h, w, 1, 0.0), true};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (y + 1 < h && labels.at(y + 1, x) != labels.at(y, x)) e.plane_h.at(y, x) = 1.0;
      if (x + 1 < w && labels.at(y, x + 1) != labels.at(y, x)) e.plane_w.at(y, x) = 1.0;
    }
  }
  return e;
}

namespace {

Plane binarize_plane(const Plane& p, double top_fraction) {
  Plane out(p.height(), p.width(), 1, 0.0);
  const std::size_t n = p.size();
  if (n == 0) return out;
  const auto keep = static_cast<std::size_t>(std::llround(top_fraction * static_cast<double>(n)));
  if (keep == 0) return out;
  std::vector<double> sorted(p.values().begin(), p.values().end());
  std::sort(sorted.begin(), sorted.end());
  if (keep >= n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = p[i] > sorted.front() ? 1.0 : 0.0;
    return out;
  }
  const double cut = sorted[n - keep - 1];
  for (std::size_t i = 0; i < n; ++i) out[i] = p[i] > cut ? 1.0 : 0.0;
  return out;
}

}  // namespace

EdgeField binarize_edges(const EdgeField& edges, double top_fraction) {
  if (!(top_fraction > 0.0 && top_fraction < 1.0)) {
    throw InvalidArgument("top_fraction must lie in (0, 1)");
  }
  if (edges.binary) throw InvalidArgument("edge field is already binary");
  return EdgeField{binarize_plane(edges.plane_h, top_fraction),
                   binarize_plane(edges.plane_w, top_fraction), true};
}

}  // namespace edgeguard
