#include "edgeguard/similarity.hpp"

#include <algorithm>
#include <cmath>

namespace edgeguard {
namespace {

int mirror(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

// One separable pass along rows (axis 0) or columns (axis 1).
Plane filter_axis(const Plane& in, const std::vector<double>& k, int axis, bool adjoint) {
  const int h = in.height();
  const int w = in.width();
  const int r = static_cast<int>(k.size()) / 2;
  Plane out(h, w, 1, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int t = -r; t <= r; ++t) {
        const int sy = axis == 0 ? mirror(y + t, h) : y;
        const int sx = axis == 1 ? mirror(x + t, w) : x;
        if (adjoint) {
          out.at(sy, sx) += k[t + r] * in.at(y, x);
        } else {
          out.at(y, x) += k[t + r] * in.at(sy, sx);
        }
      }
    }
  }
  return out;
}

void require_same(const Plane& a, const Plane& b) {
  if (!a.same_shape(b)) throw ShapeError("SSIM inputs differ in shape");
}

struct Moments {
  Plane mu_a, mu_b, saa, sbb, sab;
};

Moments moments(const Plane& a, const Plane& b, const std::vector<double>& k) {
  Plane aa = a, bb = b, ab = a;
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  return {window_mean(a, k), window_mean(b, k), window_mean(aa, k), window_mean(bb, k),
          window_mean(ab, k)};
}

}  // namespace

void SsimConfig::validate() const {
  if (!(dynamic_range > 0.0)) throw InvalidArgument("SSIM dynamic range must be positive");
  if (!(k1 > 0.0 && k2 > 0.0)) throw InvalidArgument("SSIM stabilizers must be positive");
}

std::vector<double> window_kernel(WindowKind kind) {
  if (kind == WindowKind::uniform3) return {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  constexpr double sigma = 1.5;
  std::vector<double> k(11);
  double sum = 0.0;
  for (int i = 0; i < 11; ++i) {
    const double d = i - 5;
    k[i] = std::exp(-(d * d) / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

Plane window_mean(const Plane& p, const std::vector<double>& kernel) {
  return filter_axis(filter_axis(p, kernel, 1, false), kernel, 0, false);
}

Plane window_mean_adjoint(const Plane& g, const std::vector<double>& kernel) {
  return filter_axis(filter_axis(g, kernel, 0, true), kernel, 1, true);
}

Plane ssim_map(const Plane& a, const Plane& b, const SsimConfig& cfg) {
  require_same(a, b);
  cfg.validate();
  const auto k = window_kernel(cfg.window);
  const Moments m = moments(a, b, k);
  const double c1 = cfg.c1();
  const double c2 = cfg.c2();
  Plane out(a.height(), a.width(), 1, 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double ma = m.mu_a[i];
    const double mb = m.mu_b[i];
    const double va = m.saa[i] - ma * ma;
    const double vb = m.sbb[i] - mb * mb;
    const double cov = m.sab[i] - ma * mb;
    out[i] = ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return out;
}

void ssim_map_backward(const Plane& a, const Plane& b, const SsimConfig& cfg, const Plane& grad_map,
                       Plane& grad_a, Plane& grad_b) {
  require_same(a, b);
  const auto k = window_kernel(cfg.window);
  const Moments m = moments(a, b, k);
  const double c1 = cfg.c1();
  const double c2 = cfg.c2();
  const int h = a.height();
  const int w = a.width();
  // Upstream gradients with respect to the five windowed moments.
  Plane g_mua(h, w, 1, 0.0), g_mub(h, w, 1, 0.0), g_saa(h, w, 1, 0.0), g_sbb(h, w, 1, 0.0),
      g_sab(h, w, 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double g = grad_map[i];
    if (g == 0.0) continue;
    const double ma = m.mu_a[i];
    const double mb = m.mu_b[i];
    const double va = m.saa[i] - ma * ma;
    const double vb = m.sbb[i] - mb * mb;
    const double cov = m.sab[i] - ma * mb;
    const double a1 = 2.0 * ma * mb + c1;
    const double a2 = 2.0 * cov + c2;
    const double b1 = ma * ma + mb * mb + c1;
    const double b2 = va + vb + c2;
    const double s = (a1 * a2) / (b1 * b2);
    const double inv = 1.0 / (b1 * b2);
    // d/d mu_a through a1 (2 mb), a2 (-2 mb), b1 (2 ma), b2 (-2 ma)
    g_mua[i] = g * ((2.0 * mb * a2 - 2.0 * mb * a1) * inv - s * (2.0 * ma / b1 - 2.0 * ma / b2));
    g_mub[i] = g * ((2.0 * ma * a2 - 2.0 * ma * a1) * inv - s * (2.0 * mb / b1 - 2.0 * mb / b2));
    g_saa[i] = g * (-s / b2);
    g_sbb[i] = g * (-s / b2);
    g_sab[i] = g * (2.0 * a1 * inv);
  }
  const Plane t_mua = window_mean_adjoint(g_mua, k);
  const Plane t_mub = window_mean_adjoint(g_mub, k);
  const Plane t_saa = window_mean_adjoint(g_saa, k);
  const Plane t_sbb = window_mean_adjoint(g_sbb, k);
  const Plane t_sab = window_mean_adjoint(g_sab, k);
  for (std::size_t j = 0; j < a.size(); ++j) {
    grad_a[j] += t_mua[j] + 2.0 * a[j] * t_saa[j] + b[j] * t_sab[j];
    grad_b[j] += t_mub[j] + 2.0 * b[j] * t_sbb[j] + a[j] * t_sab[j];
  }
}

namespace {

double plane_max(const Plane& p) {
  double m = 0.0;
  for (double v : p.values()) m = std::max(m, v);
  return m;
}

double mean_of(const Plane& p) {
  double s = 0.0;
  for (double v : p.values()) s += v;
  return p.size() == 0 ? 0.0 : s / static_cast<double>(p.size());
}

}  // namespace

double ssim_global(const EdgeField& a, const EdgeField& b, const SsimConfig& cfg) {
  if (!a.plane_h.same_shape(b.plane_h) || !a.plane_w.same_shape(b.plane_w)) {
    throw ShapeError("edge fields differ in shape");
  }
  double total = 0.0;
  for (int n = 0; n < 2; ++n) {
    Plane pa = a.plane(n);
    Plane pb = b.plane(n);
    const double scale = std::max({plane_max(pa), plane_max(pb), 1e-6});
    if (!a.binary) for (double& v : pa.storage()) v /= scale;
    if (!b.binary) for (double& v : pb.storage()) v /= scale;
    total += mean_of(ssim_map(pa, pb, cfg));
  }
  return total / 2.0;
}

double mae_consistency(const EdgeField& a, const EdgeField& b) {
  if (!a.plane_h.same_shape(b.plane_h) || !a.plane_w.same_shape(b.plane_w)) {
    throw ShapeError("edge fields differ in shape");
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (int n = 0; n < 2; ++n) {
    const Plane& pa = a.plane(n);
    const Plane& pb = b.plane(n);
    for (std::size_t i = 0; i < pa.size(); ++i) sum += std::abs(pa[i] - pb[i]);
    count += pa.size();
  }
  return count == 0 ? 0.0 : -sum / static_cast<double>(count);
}

}  // namespace edgeguard
