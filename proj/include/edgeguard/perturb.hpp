#pragma once

#include <cstdint>
#include <string>

#include "edgeguard/array.hpp"
#include "edgeguard/rng.hpp"
#include "edgeguard/training.hpp"

namespace edgeguard {

enum class PerturbKind { gaussian, salt_pepper, fgsm, bim, pgd };

std::string kind_name(PerturbKind kind);
PerturbKind parse_kind(const std::string& name);
bool is_adversarial(PerturbKind kind);

/// Strength in 8-bit levels; epsilon = levels / 255.
inline double epsilon_from_levels(double levels) { return levels / 255.0; }

struct AttackSpec {
  PerturbKind kind = PerturbKind::fgsm;
  double epsilon_levels = 8;
  AdvObjective objective{};
  int steps = 10;
  double alpha = 0.0;  // step size; <= 0 means epsilon / 4
  bool random_start = true;  // pgd only
  std::uint64_t seed = 0;

  double epsilon() const { return epsilon_from_levels(epsilon_levels); }
  double step_size() const { return alpha > 0.0 ? alpha : epsilon() / 4.0; }
  void validate() const;
};

/// Root-mean-square of a perturbation, sqrt(mean r^2).
double rms(const Grid<double>& r);
double max_abs(const Grid<double>& r);

/// x + r clipped to [0, 1].
Grid<double> apply_perturbation(const Grid<double>& image, const Grid<double>& r);
ImageTensor apply_perturbation(const ImageTensor& image, const Grid<double>& r);

/// I.i.d. N(0, epsilon^2) per element, truncated to [-1, 1].
Grid<double> gaussian_noise(int height, int width, int channels, double epsilon, Rng& rng);

struct SaltPepper {
  Grid<double> r;
  bool unattainable = false;  // true when even flipping every pixel falls short
  double flip_fraction = 0.0;
};

/// Sets a random subset of pixels (all channels) to 0 or 1. The subset size
/// is bisected so the empirical RMS lands as close to epsilon as possible.
SaltPepper salt_pepper_noise(const Grid<double>& image, double epsilon, Rng& rng);

inline double sign_of(double v) { return (v > 0.0) - (v < 0.0); }

/// epsilon * sign(grad J_adv); zero-gradient elements stay zero.
Grid<double> fgsm(const ToyNet& net, const Grid<double>& image, const SegLabelMap& labels_gt,
                  const Plane& depth_gt, double epsilon, const AdvObjective& objective);

/// BIM / PGD: x <- clip01(project_eps(x + alpha * sign(grad))) for `steps`
/// iterations; PGD starts from x + U(-eps, eps). Returns final x - image.
Grid<double> iterative_attack(const ToyNet& net, const Grid<double>& image, const SegLabelMap& labels_gt,
                              const Plane& depth_gt, const AttackSpec& spec);

struct Perturbation {
  Grid<double> r;
  bool warning = false;
};

/// Dispatches on spec.kind. Noise kinds ignore the network.
Perturbation make_perturbation(const ToyNet& net, const Grid<double>& image, const SegLabelMap& labels_gt,
                               const Plane& depth_gt, const AttackSpec& spec);

}  // namespace edgeguard
