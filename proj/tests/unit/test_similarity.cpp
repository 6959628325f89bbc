#include <cmath>

#include "doctest.h"
#include "edgeguard/edges.hpp"
#include "edgeguard/similarity.hpp"
#include "test_util.hpp"

using namespace edgeguard;

TEST_CASE("ssim map identities") {
  Rng rng(1);
  for (const SsimConfig cfg : {SsimConfig::loss_form(), SsimConfig::detector_form()}) {
    const Plane a = test::random_grid(12, 13, 1, rng);
    const Plane self = ssim_map(a, a, cfg);
    for (double v : self.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

    const Plane z = ssim_map(Plane(12, 13, 1, 0.0), Plane(12, 13, 1, 1.0), cfg);
    const double expect = cfg.c1() / (1.0 + cfg.c1());
    for (double v : z.values()) CHECK(v == doctest::Approx(expect).epsilon(1e-12));

    const Plane b = test::random_grid(12, 13, 1, rng);
    const Plane ab = ssim_map(a, b, cfg), ba = ssim_map(b, a, cfg);
    for (std::size_t i = 0; i < ab.size(); ++i) {
      CHECK(ab[i] == ba[i]);
      CHECK(ab[i] >= -1.0);
      CHECK(ab[i] <= 1.0);
    }
  }
  CHECK_THROWS_AS(ssim_map(Plane(2, 2, 1, 0.0), Plane(2, 3, 1, 0.0), SsimConfig::loss_form()), ShapeError);
}

TEST_CASE("window kernels") {
  const auto u = window_kernel(WindowKind::uniform3);
  CHECK(u.size() == 3);
  const auto g = window_kernel(WindowKind::gaussian11);
  CHECK(g.size() == 11);
  double s = 0.0;
  for (double v : g) s += v;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(g[4] / g[5] == doctest::Approx(std::exp(-1.0 / (2 * 1.5 * 1.5))));
}

TEST_CASE("window mean adjoint satisfies the dot-product test") {
  Rng rng(3);
  for (WindowKind k : {WindowKind::uniform3, WindowKind::gaussian11}) {
    const auto kern = window_kernel(k);
    const Plane x = test::random_grid(7, 12, 1, rng, -1, 1);
    const Plane y = test::random_grid(7, 12, 1, rng, -1, 1);
    const Plane ax = window_mean(x, kern);
    const Plane aty = window_mean_adjoint(y, kern);
    double l = 0.0, r = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      l += ax[i] * y[i];
      r += x[i] * aty[i];
    }
    CHECK(l == doctest::Approx(r).epsilon(1e-12));
  }
}

TEST_CASE("ssim backward matches central differences") {
  Rng rng(7);
  for (const SsimConfig cfg : {SsimConfig::loss_form(), SsimConfig::detector_form()}) {
    const Plane a = test::random_grid(6, 7, 1, rng);
    const Plane b = test::random_grid(6, 7, 1, rng);
    const Plane w = test::random_grid(6, 7, 1, rng, -1, 1);
    auto f = [&](const Plane& pa, const Plane& pb) {
      const Plane m = ssim_map(pa, pb, cfg);
      double s = 0.0;
      for (std::size_t i = 0; i < m.size(); ++i) s += w[i] * m[i];
      return s;
    };
    Plane ga(6, 7, 1, 0.0), gb(6, 7, 1, 0.0);
    ssim_map_backward(a, b, cfg, w, ga, gb);
    const double h = 1e-6;
    for (std::size_t i = 0; i < a.size(); ++i) {
      Plane ap = a, am = a, bp = b, bm = b;
      ap[i] += h;
      am[i] -= h;
      bp[i] += h;
      bm[i] -= h;
      const double na = (f(ap, b) - f(am, b)) / (2 * h);
      const double nb = (f(a, bp) - f(a, bm)) / (2 * h);
      CHECK(ga[i] == doctest::Approx(na).epsilon(1e-5).scale(1e-3));
      CHECK(gb[i] == doctest::Approx(nb).epsilon(1e-5).scale(1e-3));
    }
  }
}

TEST_CASE("global ssim and mae") {
  Rng rng(9);
  const EdgeField a{test::random_grid(16, 16, 1, rng, 0, 3), test::random_grid(16, 16, 1, rng, 0, 3), false};
  const EdgeField b{test::random_grid(16, 16, 1, rng), test::random_grid(16, 16, 1, rng), false};
  CHECK(std::abs(ssim_global(a, a) - 1.0) <= 1e-9);
  CHECK(ssim_global(a, b) == ssim_global(b, a));
  const EdgeField zero{Plane(16, 16, 1, 0.0), Plane(16, 16, 1, 0.0), false};
  const EdgeField one{Plane(16, 16, 1, 1.0), Plane(16, 16, 1, 1.0), false};
  CHECK(ssim_global(zero, zero) == doctest::Approx(1.0).epsilon(1e-12));
  const double c1 = SsimConfig::detector_form().c1();
  CHECK(std::abs(ssim_global(zero, one) - c1 / (1.0 + c1)) <= 1e-9);

  CHECK(mae_consistency(a, a) == 0.0);
  CHECK(mae_consistency(zero, one) == -1.0);
  double s = 0.0;
  for (std::size_t i = 0; i < a.plane_h.size(); ++i) {
    s += std::abs(a.plane_h[i] - b.plane_h[i]);
    s += std::abs(a.plane_w[i] - b.plane_w[i]);
  }
  CHECK(mae_consistency(a, b) == doctest::Approx(-s / (2.0 * 256)).epsilon(1e-14));
  CHECK(mae_consistency(a, b) == mae_consistency(b, a));
}
