#include <cmath>

#include "doctest.h"
#include "edgeguard/perturb.hpp"
#include "edgeguard/scenes.hpp"
#include "test_util.hpp"

using namespace edgeguard;

namespace {

struct Fixture {
  ToyNet net = ToyNet::initialized(5, 3);
  Sample sample;
  Fixture() {
    SceneSpec spec;
    spec.height = spec.width = 16;
    spec.seed = 4;
    sample = generate_sample(spec);
  }
};

}  // namespace

TEST_CASE("sign rule") {
  CHECK(sign_of(0.3) == 1.0);
  CHECK(sign_of(-0.2) == -1.0);
  CHECK(sign_of(0.0) == 0.0);
  CHECK(epsilon_from_levels(8) == 8.0 / 255.0);
}

TEST_CASE("fgsm has exact RMS and bounded entries") {
  Fixture f;
  const double eps = epsilon_from_levels(8);
  const Grid<double> r = fgsm(f.net, f.sample.image.to_doubles(), f.sample.labels_gt, f.sample.depth_gt.to_doubles(),
                              eps, AdvObjective{});
  std::size_t zeros = 0;
  for (double v : r.values()) {
    CHECK(std::abs(v) <= eps);
    zeros += v == 0.0 ? 1 : 0;
  }
  if (zeros == 0) CHECK(std::abs(rms(r) - eps) <= 1e-15);
}

TEST_CASE("fgsm ascends the adversarial loss") {
  Fixture f;
  const Grid<double> x = f.sample.image.to_doubles();
  const Plane d = f.sample.depth_gt.to_doubles();
  const double before = adv_loss(f.net, x, f.sample.labels_gt, d, AdvObjective{});
  const Grid<double> r = fgsm(f.net, x, f.sample.labels_gt, d, epsilon_from_levels(2), AdvObjective{});
  const double after = adv_loss(f.net, apply_perturbation(x, r), f.sample.labels_gt, d, AdvObjective{});
  CHECK(after >= before);
}

TEST_CASE("one BIM step with alpha = eps equals fgsm") {
  Fixture f;
  const Grid<double> x = f.sample.image.to_doubles();
  const Plane d = f.sample.depth_gt.to_doubles();
  AttackSpec spec;
  spec.kind = PerturbKind::bim;
  spec.epsilon_levels = 4;
  spec.steps = 1;
  spec.alpha = spec.epsilon();
  const Grid<double> it = iterative_attack(f.net, x, f.sample.labels_gt, d, spec);
  const Grid<double> one = fgsm(f.net, x, f.sample.labels_gt, d, spec.epsilon(), spec.objective);
  const Grid<double> clipped = apply_perturbation(x, one);
  for (std::size_t i = 0; i < it.size(); ++i) CHECK(it[i] == doctest::Approx(clipped[i] - x[i]).epsilon(1e-15));
}

TEST_CASE("iterative attacks stay in the eps ball and are reproducible") {
  Fixture f;
  const Grid<double> x = f.sample.image.to_doubles();
  const Plane d = f.sample.depth_gt.to_doubles();
  for (PerturbKind kind : {PerturbKind::bim, PerturbKind::pgd}) {
    AttackSpec spec;
    spec.kind = kind;
    spec.epsilon_levels = 8;
    spec.steps = 3;
    spec.seed = 12;
    const Grid<double> r = iterative_attack(f.net, x, f.sample.labels_gt, d, spec);
    CHECK(max_abs(r) <= spec.epsilon() + 1e-15);
    for (std::size_t i = 0; i < r.size(); ++i) {
      CHECK(x[i] + r[i] >= 0.0);
      CHECK(x[i] + r[i] <= 1.0);
    }
    CHECK(iterative_attack(f.net, x, f.sample.labels_gt, d, spec) == r);
  }
}

TEST_CASE("gaussian noise RMS") {
  Rng rng(1);
  const double eps = epsilon_from_levels(16);
  const Grid<double> r = gaussian_noise(64, 64, 3, eps, rng);
  CHECK(std::abs(rms(r) - eps) <= 0.05 * eps);
}

TEST_CASE("salt and pepper hits the target RMS") {
  Grid<double> gray(32, 32, 3, 0.5);
  Rng rng(2);
  const double eps = epsilon_from_levels(32);
  const SaltPepper sp = salt_pepper_noise(gray, eps, rng);
  CHECK(!sp.unattainable);
  CHECK(sp.flip_fraction == doctest::Approx(eps * eps / 0.25).epsilon(0.05));
  CHECK(std::abs(rms(sp.r) - eps) <= 0.02 * eps);
  for (double v : sp.r.values()) CHECK((v == 0.0 || std::abs(std::abs(v) - 0.5) < 1e-12));

  SceneSpec spec;
  for (const Sample& s : generate_split(spec, 100, Split::val)) {
    const SaltPepper p = salt_pepper_noise(s.image.to_doubles(), epsilon_from_levels(16), rng);
    CHECK(std::abs(rms(p.r) - epsilon_from_levels(16)) <= 0.02 * epsilon_from_levels(16));
  }
}

TEST_CASE("salt and pepper flags unattainable strength") {
  Grid<double> gray(4, 4, 3, 0.5);
  Rng rng(3);
  const SaltPepper sp = salt_pepper_noise(gray, 0.9, rng);
  CHECK(sp.unattainable);
  CHECK(sp.flip_fraction == 1.0);
}

TEST_CASE("seeded perturbations are reproducible") {
  Fixture f;
  const Grid<double> x = f.sample.image.to_doubles();
  const Plane d = f.sample.depth_gt.to_doubles();
  for (PerturbKind kind : {PerturbKind::gaussian, PerturbKind::salt_pepper, PerturbKind::pgd}) {
    AttackSpec spec;
    spec.kind = kind;
    spec.epsilon_levels = 4;
    spec.steps = 2;
    spec.seed = 77;
    CHECK(make_perturbation(f.net, x, f.sample.labels_gt, d, spec).r ==
          make_perturbation(f.net, x, f.sample.labels_gt, d, spec).r);
  }
}

TEST_CASE("attack spec validation") {
  AttackSpec spec;
  spec.epsilon_levels = 0;
  CHECK_THROWS_AS(spec.validate(), InvalidArgument);
  spec.epsilon_levels = 300;
  CHECK_THROWS_AS(spec.validate(), InvalidArgument);
  CHECK_THROWS_AS(parse_kind("cw"), InvalidArgument);
  CHECK(parse_kind("salt_pepper") == PerturbKind::salt_pepper);
}
