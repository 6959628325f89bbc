#include "doctest.h"
#include "edgeguard/edges.hpp"
#include "test_util.hpp"

using namespace edgeguard;

namespace {

bool all_zero(const EdgeField& e) {
  for (double v : e.plane_h.values())
    if (v != 0.0) return false;
  for (double v : e.plane_w.values())
    if (v != 0.0) return false;
  return true;
}

bool trailing_zero(const EdgeField& e) {
  const int h = e.plane_h.height(), w = e.plane_h.width();
  for (int x = 0; x < w; ++x)
    if (e.plane_h.at(h - 1, x) != 0.0) return false;
  for (int y = 0; y < h; ++y)
    if (e.plane_w.at(y, w - 1) != 0.0) return false;
  return true;
}

}  // namespace

TEST_CASE("rgb edges of hand examples") {
  CHECK(all_zero(rgb_edges(Grid<double>(4, 4, 3, 0.3))));
  const EdgeField e = rgb_edges(Grid<double>(2, 2, 1, std::vector<double>{0, 1, 0, 1}));
  CHECK(e.plane_w.at(0, 0) == 1.0);
  CHECK(e.plane_w.at(0, 1) == 0.0);
  CHECK(e.plane_w.at(1, 0) == 1.0);
  CHECK(all_zero(EdgeField{e.plane_h, e.plane_h, false}));
  const EdgeField c = rgb_edges(Grid<double>(1, 2, 3, std::vector<double>{0, 0, 0, 0.3, 0.6, 0.9}));
  CHECK(c.plane_w.at(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
}

TEST_CASE("rgb edges are translation invariant and bounded") {
  Rng rng(2);
  const Grid<double> g = test::random_grid(9, 8, 3, rng, 0.0, 0.5);
  Grid<double> shifted = g;
  for (double& v : shifted.storage()) v += 0.25;
  const EdgeField a = rgb_edges(g), b = rgb_edges(shifted);
  for (std::size_t i = 0; i < a.plane_h.size(); ++i) {
    CHECK(a.plane_h[i] == doctest::Approx(b.plane_h[i]).epsilon(1e-12));
    CHECK(a.plane_w[i] == doctest::Approx(b.plane_w[i]).epsilon(1e-12));
    CHECK(a.plane_h[i] <= 1.0);
  }
  CHECK(trailing_zero(a));
}

TEST_CASE("segprob edges") {
  CHECK(all_zero(segprob_edges(Grid<double>(3, 3, 2, 0.5))));
  const EdgeField e = segprob_edges(Grid<double>(1, 2, 2, std::vector<double>{1, 0, 0, 1}));
  CHECK(e.plane_w.at(0, 0) == 1.0);

  Rng rng(4);
  for (int k = 0; k < 20; ++k) {
    const SegLabelMap m = test::random_labels(6, 7, 4, rng);
    const EdgeField soft = segprob_edges(m.one_hot());
    const EdgeField hard = seglabel_edges(m);
    for (std::size_t i = 0; i < soft.plane_h.size(); ++i) {
      CHECK(soft.plane_h[i] == doctest::Approx(2.0 / 4.0 * hard.plane_h[i]));
      CHECK(soft.plane_w[i] == doctest::Approx(2.0 / 4.0 * hard.plane_w[i]));
    }
  }
}

TEST_CASE("depth edges") {
  CHECK(all_zero(depth_edges(Plane(5, 5, 1, 7.0))));
  const EdgeField e = depth_edges(Plane(1, 2, 1, std::vector<double>{1, 2}));
  CHECK(e.plane_w.at(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

  Rng rng(8);
  const Plane d = test::random_grid(8, 8, 1, rng, 1.0, 30.0);
  const EdgeField base = depth_edges(d);
  for (double c : {0.5, 3.0, 10.0}) {
    Plane s = d;
    for (double& v : s.storage()) v *= c;
    const EdgeField scaled = depth_edges(s);
    for (std::size_t i = 0; i < base.plane_h.size(); ++i) {
      CHECK(scaled.plane_h[i] == doctest::Approx(base.plane_h[i]).epsilon(1e-12));
      CHECK(scaled.plane_w[i] == doctest::Approx(base.plane_w[i]).epsilon(1e-12));
    }
  }
  CHECK(trailing_zero(base));
}

TEST_CASE("seglabel edges") {
  CHECK(all_zero(seglabel_edges(SegLabelMap(Grid<std::uint16_t>(3, 3, 1, 2), 3))));
  const EdgeField e = seglabel_edges(SegLabelMap(Grid<std::uint16_t>(1, 2, 1, std::vector<std::uint16_t>{3, 7}), 7));
  CHECK(e.binary);
  CHECK(e.plane_w.at(0, 0) == 1.0);

  Grid<std::uint16_t> two(4, 6, 1, 1);
  for (int y = 0; y < 4; ++y)
    for (int x = 3; x < 6; ++x) two.at(y, x) = 2;
  const EdgeField v = seglabel_edges(SegLabelMap(two, 2));
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 6; ++x) {
      CHECK(v.plane_w.at(y, x) == (x == 2 ? 1.0 : 0.0));
      CHECK(v.plane_h.at(y, x) == 0.0);
    }
  }
}

TEST_CASE("binarize edges keeps the top fraction") {
  Plane p(10, 10, 1, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<double>((i * 37) % 100);
  const EdgeField b = binarize_edges(EdgeField{p, p, false}, 0.05);
  CHECK(b.binary);
  double ones = 0.0;
  for (double v : b.plane_h.values()) ones += v;
  CHECK(ones == 5.0);

  const EdgeField z = binarize_edges(EdgeField{Plane(4, 4, 1, 0.0), Plane(4, 4, 1, 0.0), false}, 0.05);
  CHECK(all_zero(z));

  Rng rng(6);
  const Plane r = test::random_grid(23, 17, 1, rng);
  const EdgeField rb = binarize_edges(EdgeField{r, r, false}, 0.05);
  double count = 0.0;
  for (double v : rb.plane_w.values()) count += v;
  CHECK(std::abs(count - 0.05 * 23 * 17) <= 1.0);

  CHECK_THROWS_AS(binarize_edges(rb, 0.05), InvalidArgument);
  CHECK_THROWS_AS(binarize_edges(EdgeField{r, r, false}, 0.0), InvalidArgument);
  CHECK_THROWS_AS(binarize_edges(EdgeField{r, r, false}, 1.0), InvalidArgument);
}
