#include <cmath>

#include "doctest.h"
#include "edgeguard/losses.hpp"
#include "edgeguard/scenes.hpp"
#include "edgeguard/selftest.hpp"
#include "edgeguard/toynet.hpp"
#include "edgeguard/training.hpp"
#include "test_util.hpp"

using namespace edgeguard;

TEST_CASE("network layout") {
  const ToyNet net = ToyNet::initialized(5, 1);
  CHECK(net.params().size() == 3 * 3 * 3 * 16 + 16 + 3 * 3 * 16 * 16 + 16 + 16 * 5 + 5 + 16 + 1);
  CHECK(net.encoder_size() == 3 * 3 * 3 * 16 + 16 + 3 * 3 * 16 * 16 + 16);
  CHECK(net.all_finite());
  CHECK(ToyNet::initialized(5, 1) == net);
}

TEST_CASE("forward outputs satisfy output invariants") {
  Rng rng(2);
  const ToyNet net = ToyNet::initialized(4, 7);
  const ImageTensor img = ImageTensor::from_doubles(test::random_grid(10, 9, 3, rng));
  const NetOutputs o = forward(net, img);
  CHECK(o.probs.num_classes() == 4);
  for (float d : o.depth.grid().values()) {
    CHECK(d >= 0.1f);
    CHECK(d <= 100.0f);
  }
  for (std::size_t i = 0; i < o.cache.depth.size(); ++i) {
    const double s = o.cache.sigma[i];
    CHECK(o.cache.depth[i] == doctest::Approx(1.0 / (9.99 * s + 0.01)));
  }
}

TEST_CASE("checkpoint round trip is exact") {
  test::TempDir dir;
  ToyNet net = ToyNet::initialized(3, 11);
  net.params()[5] = 1.0 / 3.0;
  net.save(dir.path / "ckpt");
  CHECK(ToyNet::load(dir.path / "ckpt") == net);
}

TEST_CASE("class weights") {
  Grid<std::uint16_t> g(1, 4, 1, std::vector<std::uint16_t>{1, 1, 1, 2});
  const auto w = class_weights(SegLabelMap(g, 3));
  // Inverse frequencies 4/3 and 4, normalized to mean 1 over present classes.
  CHECK(w[0] == doctest::Approx(0.5));
  CHECK(w[1] == doctest::Approx(1.5));
  CHECK(w[2] == kClassWeightCap);
}

TEST_CASE("depth loss of a perfect prediction is zero") {
  Plane sigma(3, 3, 1, 0.25);
  Plane gt(3, 3, 1, 1.0 / (9.99 * 0.25 + 0.01));
  CHECK(depth_loss(sigma, gt).value < 1e-12);
}

TEST_CASE("ECL of identical modalities is near zero") {
  // All three fields share edges only up to scale, so a constant scene is fully consistent.
  const Grid<double> probs(6, 6, 2, 0.5);
  const Plane sigma(6, 6, 1, 0.3);
  const Grid<double> img(6, 6, 3, 0.4);
  CHECK(std::abs(ecl_loss(probs, sigma, img).value) < 1e-12);
}

TEST_CASE("lambda zero-limit blocks encoder updates") {
  Rng rng(4);
  const ToyNet net = ToyNet::initialized(5, 2);
  const Grid<double> img = test::random_grid(6, 6, 3, rng);
  const SegLabelMap labels = test::random_labels(6, 6, 5, rng);
  const Plane depth = test::random_grid(6, 6, 1, rng, 1, 40);
  std::vector<double> g1(net.params().size(), 0.0), gs(net.params().size(), 0.0);
  total_loss(net, img, labels, depth, 0.003, 1.0, &g1);
  total_loss(net, img, labels, depth, 0.003, 0.25, &gs);
  for (std::size_t i = 0; i < net.params().size(); ++i) {
    const double expect = i < net.encoder_size() ? 0.25 * g1[i] : g1[i];
    CHECK(gs[i] == doctest::Approx(expect).epsilon(1e-12).scale(1e-15));
  }
}

TEST_CASE("gradient checks pass on a few instances") {
  for (const auto& r : gradient_checks(3, 99)) {
    INFO(r.name << ": " << r.detail);
    CHECK(r.pass);
  }
}

TEST_CASE("training with zero learning rate leaves parameters unchanged") {
  SceneSpec spec;
  spec.height = spec.width = 12;
  const auto split = generate_split(spec, 1);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 1;
  const ToyNet net = ToyNet::initialized(5, 1);
  CHECK(train(net, split, cfg).net == net);
}

TEST_CASE("short training lowers the segmentation loss and is deterministic") {
  SceneSpec spec;
  spec.height = spec.width = 16;
  spec.seed = 2;
  const auto split = generate_split(spec, 24);
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.epochs = 4;
  cfg.seed = 5;
  const TrainResult a = train(ToyNet::initialized(5, 1), split, cfg);
  const TrainResult b = train(ToyNet::initialized(5, 1), split, cfg);
  CHECK(a.net == b.net);
  CHECK(a.log.back().mean.seg < a.log.front().mean.seg);
  CHECK(a.net.all_finite());
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  cfg.lambda = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = TrainConfig{};
  cfg.mu = -1;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

TEST_CASE("loss mode names parse back") {
  for (const char* name : {"S", "D", "SD", "SD+ECL(0.01)", "SD+ECL(1)"}) {
    CHECK(AdvObjective::parse(name).name() == name);
  }
  CHECK_THROWS_AS(AdvObjective::parse("SDX"), InvalidArgument);
}
