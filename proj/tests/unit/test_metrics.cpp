#include <cmath>

#include "doctest.h"
#include "edgeguard/metrics.hpp"
#include "edgeguard/selftest.hpp"
#include "test_util.hpp"

using namespace edgeguard;

TEST_CASE("miou examples") {
  Rng rng(1);
  const SegLabelMap a = test::random_labels(8, 8, 4, rng);
  CHECK(miou(a, a, 4) == 1.0);
  const SegLabelMap gt(Grid<std::uint16_t>(2, 2, 1, std::vector<std::uint16_t>{1, 1, 2, 2}), 2);
  const SegLabelMap pr(Grid<std::uint16_t>(2, 2, 1, std::vector<std::uint16_t>{1, 2, 2, 2}), 2);
  CHECK(miou(pr, gt, 2) == doctest::Approx(7.0 / 12.0).epsilon(1e-15));
  const SegLabelMap ones(Grid<std::uint16_t>(3, 3, 1, 1), 2), twos(Grid<std::uint16_t>(3, 3, 1, 2), 2);
  CHECK(miou(ones, twos, 2) == 0.0);
}

TEST_CASE("depth metric examples") {
  const DepthMetrics same = depth_metrics(Plane(4, 4, 1, 3.0), Plane(4, 4, 1, 3.0));
  CHECK(same.abs_rel == 0.0);
  CHECK(same.rmse == 0.0);
  CHECK(same.delta1 == 1.0);
  const DepthMetrics r = depth_metrics(Plane(4, 4, 1, 1.3), Plane(4, 4, 1, 1.0));
  CHECK(r.delta1 == 0.0);
  CHECK(r.delta2 == 1.0);
  const DepthMetrics two = depth_metrics(Plane(4, 4, 1, 2.0), Plane(4, 4, 1, 1.0));
  CHECK(two.abs_rel == doctest::Approx(1.0));
  CHECK(two.sq_rel == doctest::Approx(1.0));
  CHECK(two.rmse == doctest::Approx(1.0));
  CHECK(two.rmse_log == doctest::Approx(std::log(2.0)));
}

TEST_CASE("metric oracles agree") {
  for (const auto& r : metric_oracles(50, 3)) {
    INFO(r.name << ": " << r.detail);
    CHECK(r.pass);
  }
}

TEST_CASE("tpr at fpr") {
  std::vector<int> clean(100, 0), pert(40, 1);
  for (int i = 0; i < 5; ++i) clean[i] = 1;
  const Rates r = tpr_at_fpr(clean, pert);
  CHECK(r.tpr == 1.0);
  CHECK(r.fpr == 0.05);
  const std::vector<int> none(10, 0);
  CHECK(tpr_at_fpr(none, none).tpr == 0.0);
  CHECK(tpr_at_fpr(none, none).fpr == 0.0);
}

TEST_CASE("roc curves") {
  const std::vector<double> clean{0.8, 0.9, 0.95}, pert{0.1, 0.2};
  const auto roc = roc_points(clean, pert);
  bool corner = false;
  for (const auto& p : roc) corner |= p.fpr == 0.0 && p.tpr == 1.0;
  CHECK(corner);
  CHECK(auc(roc) == doctest::Approx(1.0));

  const std::vector<double> one{0.5};
  const auto deg = roc_points(one, one);
  CHECK(deg.size() == 2);
  CHECK(deg.front().fpr == 0.0);
  CHECK(deg.back().tpr == 1.0);

  Rng rng(4);
  std::vector<double> a, b;
  for (int i = 0; i < 500; ++i) a.push_back(rng.uniform());
  for (int i = 0; i < 500; ++i) b.push_back(rng.uniform());
  const auto diag = roc_points(a, b);
  CHECK(std::abs(auc(diag) - 0.5) < 0.1);
  for (std::size_t i = 1; i < diag.size(); ++i) {
    CHECK(diag[i].fpr >= diag[i - 1].fpr);
    CHECK(diag[i].tpr >= diag[i - 1].tpr);
  }
  CHECK(diag.front().fpr == 0.0);
  CHECK(diag.front().tpr == 0.0);
  CHECK(diag.back().fpr == 1.0);
  CHECK(diag.back().tpr == 1.0);
}

TEST_CASE("vote-mode roc is monotone with both corners") {
  Rng rng(6);
  std::vector<ConsistencyTriple> clean, pert;
  for (int i = 0; i < 60; ++i) clean.push_back({rng.uniform(0.3, 1), rng.uniform(0.3, 1), rng.uniform(0.3, 1)});
  for (int i = 0; i < 60; ++i) pert.push_back({rng.uniform(0, 0.7), rng.uniform(0, 0.7), rng.uniform(0, 0.7)});
  const auto roc = roc_points(clean, pert, VoteMode::majority);
  CHECK(roc.front().fpr == 0.0);
  CHECK(roc.front().tpr == 0.0);
  CHECK(roc.back().fpr == 1.0);
  CHECK(roc.back().tpr == 1.0);
  for (std::size_t i = 1; i < roc.size(); ++i) {
    CHECK(roc[i].fpr >= roc[i - 1].fpr);
    CHECK(roc[i].tpr >= roc[i - 1].tpr);
  }
  CHECK(auc(roc) > 0.8);
}

TEST_CASE("histogram layout") {
  const std::vector<double> v{-1.0, -0.99, 0.0, 0.999, 1.0, 2.0, -3.0};
  const auto h = histogram(v);
  CHECK(h[0] == 3);
  CHECK(h[25] == 1);
  CHECK(h[49] == 3);
  CHECK(hist_bin_lo(0) == -1.0);
  CHECK(hist_bin_lo(50) == 1.0);
}
