#include "doctest.h"
#include "edgeguard/detector.hpp"
#include "edgeguard/edges.hpp"
#include "test_util.hpp"

using namespace edgeguard;

namespace {

std::vector<ConsistencyTriple> ladder(int n) {
  std::vector<ConsistencyTriple> v;
  for (int k = 1; k <= n; ++k) v.push_back({0.01 * k, 0.01 * k, 0.01 * k});
  return v;
}

}  // namespace

TEST_CASE("identical fields score one under SSIM and zero under MAE") {
  Rng rng(1);
  const Plane a = test::random_grid(12, 12, 1, rng);
  const EdgeField e{a, a, false};
  DetectorConfig cfg;
  const ConsistencyTriple s = score_edges(e, e, e, cfg);
  CHECK(s.mx == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.xd == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.md == doctest::Approx(1.0).epsilon(1e-12));
  cfg.metric = Metric::mae;
  CHECK(score_edges(e, e, e, cfg) == ConsistencyTriple{0.0, 0.0, 0.0});
}

TEST_CASE("order-statistic thresholds") {
  const auto clean = ladder(100);
  const auto theta = thresholds_for_gamma(clean, 0.05);
  CHECK(theta[0] == doctest::Approx(0.06));
  DetectorConfig cfg;
  cfg.vote_mode = VoteMode::single_mx;
  CHECK(flag_rate(clean, theta, cfg.vote_mode) == doctest::Approx(0.05));
  const auto zero = thresholds_for_gamma(clean, 0.0);
  CHECK(flag_rate(clean, zero, VoteMode::majority) == 0.0);
  CHECK(flag_rate(clean, thresholds_for_gamma(clean, 1.0), VoteMode::majority) == 1.0);
}

TEST_CASE("detect rules") {
  ThresholdSet t;
  t.theta = {0.4, 0.3, 0.5};
  DetectionResult r = detect(ConsistencyTriple{0.5, 0.2, 0.6}, t);
  CHECK(r.votes == std::array<int, 3>{0, 1, 0});
  CHECK(r.decision == 0);
  r = detect(ConsistencyTriple{0.3, 0.2, 0.6}, t);
  CHECK(r.votes == std::array<int, 3>{1, 1, 0});
  CHECK(r.decision == 1);
  // Equality is not flagged.
  r = detect(ConsistencyTriple{0.4, 0.3, 0.5}, t);
  CHECK(r.votes == std::array<int, 3>{0, 0, 0});
}

TEST_CASE("vote modes over all combinations") {
  for (int bits = 0; bits < 8; ++bits) {
    const std::array<int, 3> v{bits & 1, (bits >> 1) & 1, (bits >> 2) & 1};
    CHECK(decide(v, VoteMode::majority) == (v[0] + v[1] + v[2] >= 2 ? 1 : 0));
    CHECK(decide(v, VoteMode::single_mx) == v[0]);
    CHECK(decide(v, VoteMode::single_xd) == v[1]);
    CHECK(decide(v, VoteMode::single_md) == v[2]);
  }
  for (int k = 0; k < 3; ++k) {
    std::array<int, 3> v{1, 1, 1};
    v[k] = 0;
    CHECK(decide(v, VoteMode::majority) == 1);
  }
}

TEST_CASE("raising a threshold never unflags") {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const ConsistencyTriple c{rng.uniform(), rng.uniform(), rng.uniform()};
    std::array<double, 3> t{rng.uniform(), rng.uniform(), rng.uniform()};
    const auto before = votes(c, t);
    for (double& v : t) v += rng.uniform(0.0, 0.3);
    const auto after = votes(c, t);
    for (int k = 0; k < 3; ++k) CHECK(after[k] >= before[k]);
  }
}

TEST_CASE("calibration meets the FPR contract") {
  Rng rng(5);
  std::vector<ConsistencyTriple> clean;
  for (int i = 0; i < 500; ++i) clean.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
  for (VoteMode mode : {VoteMode::majority, VoteMode::single_mx, VoteMode::single_md}) {
    DetectorConfig cfg;
    cfg.vote_mode = mode;
    const ThresholdSet t = calibrate(clean, cfg);
    CHECK(t.achieved_fpr <= 0.05);
    CHECK(t.achieved_fpr >= 0.05 - 1.0 / 500 - 0.01);
    CHECK(t.achieved_fpr == flag_rate(clean, t.theta, mode));
    CHECK(t.n == 500);
  }
}

TEST_CASE("calibration errors") {
  DetectorConfig cfg;
  CHECK_THROWS_AS(calibrate(ladder(19), cfg), InvalidArgument);
  std::vector<ConsistencyTriple> flat(30, ConsistencyTriple{0.5, 0.5, 0.5});
  CHECK_THROWS_AS(calibrate(flat, cfg), InvalidArgument);
  cfg.target_fpr = 1.5;
  CHECK_THROWS_AS(calibrate(ladder(30), cfg), InvalidArgument);
}

TEST_CASE("threshold file round trip") {
  test::TempDir dir;
  DetectorConfig cfg;
  cfg.metric = Metric::mae;
  cfg.edge_mode = EdgeMode::binary;
  cfg.vote_mode = VoteMode::single_xd;
  std::vector<ConsistencyTriple> clean;
  Rng rng(8);
  for (int i = 0; i < 40; ++i) clean.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
  const ThresholdSet t = calibrate(clean, cfg);
  write_thresholds(t, dir.path / "t.txt");
  const ThresholdSet back = read_thresholds(dir.path / "t.txt");
  CHECK(back.theta == t.theta);
  CHECK(back.gamma == t.gamma);
  CHECK(back.n == t.n);
  CHECK(back.achieved_fpr == t.achieved_fpr);
  CHECK(back.config.metric == Metric::mae);
  CHECK(back.config.edge_mode == EdgeMode::binary);
  CHECK(back.config.vote_mode == VoteMode::single_xd);
}

TEST_CASE("score rejects shape mismatch") {
  const ImageTensor img(Grid<float>(4, 4, 3, 0.5f));
  const DepthMap d(Grid<float>(4, 5, 1, 2.0f));
  const SegLabelMap m(Grid<std::uint16_t>(4, 4, 1, 1), 2);
  CHECK_THROWS_AS(score(img, d, m, DetectorConfig{}), ShapeError);
}
