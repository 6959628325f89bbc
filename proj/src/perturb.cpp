#include "edgeguard/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace edgeguard {

std::string kind_name(PerturbKind kind) {
  switch (kind) {
    case PerturbKind::gaussian: return "gaussian";
    case PerturbKind::salt_pepper: return "salt_pepper";
    case PerturbKind::fgsm: return "fgsm";
    case PerturbKind::bim: return "bim";
    case PerturbKind::pgd: return "pgd";
  }
  return "fgsm";
}

PerturbKind parse_kind(const std::string& name) {
  if (name == "gaussian") return PerturbKind::gaussian;
  if (name == "salt_pepper" || name == "sp") return PerturbKind::salt_pepper;
  if (name == "fgsm") return PerturbKind::fgsm;
  if (name == "bim") return PerturbKind::bim;
  if (name == "pgd") return PerturbKind::pgd;
  throw InvalidArgument("unknown perturbation kind '" + name + "'");
}

bool is_adversarial(PerturbKind kind) {
  return kind == PerturbKind::fgsm || kind == PerturbKind::bim || kind == PerturbKind::pgd;
}

void AttackSpec::validate() const {
  const double eps = epsilon();
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("epsilon must lie in (0, 1)");
  if (steps < 1) throw InvalidArgument("steps must be >= 1");
  if (!(step_size() > 0.0)) throw InvalidArgument("step size must be positive");
  objective.validate();
}

double rms(const Grid<double>& r) {
  if (r.size() == 0) return 0.0;
  double s = 0.0;
  for (double v : r.values()) s += v * v;
  return std::sqrt(s / static_cast<double>(r.size()));
}

double max_abs(const Grid<double>& r) {
  double m = 0.0;
  for (double v : r.values()) m = std::max(m, std::abs(v));
  return m;
}

Grid<double> apply_perturbation(const Grid<double>& image, const Grid<double>& r) {
  if (!image.same_shape(r)) throw ShapeError("perturbation shape differs from the image");
  Grid<double> out = image;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(image[i] + r[i], 0.0, 1.0);
  return out;
}

ImageTensor apply_perturbation(const ImageTensor& image, const Grid<double>& r) {
  return ImageTensor::from_doubles(apply_perturbation(image.to_doubles(), r));
}

Grid<double> gaussian_noise(int height, int width, int channels, double epsilon, Rng& rng) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("epsilon must lie in (0, 1)");
  Grid<double> r(height, width, channels, 0.0);
  for (double& v : r.storage()) v = std::clamp(epsilon * rng.normal(), -1.0, 1.0);
  return r;
}

SaltPepper salt_pepper_noise(const Grid<double>& image, double epsilon, Rng& rng) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("epsilon must lie in (0, 1)");
  const std::size_t pixels = image.pixels();
  const int c = image.channels();
  // A fixed random priority and salt/pepper choice per pixel; the first k
  // pixels in priority order are flipped.
  std::vector<double> priority(pixels);
  std::vector<unsigned char> salt(pixels);
  for (std::size_t p = 0; p < pixels; ++p) {
    priority[p] = rng.uniform();
    salt[p] = static_cast<unsigned char>(rng.uniform_int(0, 1));
  }
  std::vector<std::size_t> order(pixels);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return priority[a] < priority[b]; });

  // Cumulative squared perturbation after flipping the first k pixels.
  std::vector<double> cumulative(pixels + 1, 0.0);
  for (std::size_t k = 0; k < pixels; ++k) {
    const std::size_t p = order[k];
    double sq = 0.0;
    for (int ch = 0; ch < c; ++ch) {
      const double d = (salt[p] ? 1.0 : 0.0) - image[p * c + ch];
      sq += d * d;
    }
    cumulative[k + 1] = cumulative[k] + sq;
  }
  const double n = static_cast<double>(image.size());
  const double target = epsilon * epsilon * n;
  // Smallest k whose cumulative energy reaches the target, then the closer
  // of k-1 and k.
  std::size_t lo = 0, hi = pixels;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (cumulative[mid] >= target) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  std::size_t k = lo;
  SaltPepper out;
  if (cumulative[pixels] < target) {
    k = pixels;
    out.unattainable = std::sqrt(cumulative[pixels] / n) < 0.98 * epsilon;
  } else if (k > 0 && std::abs(std::sqrt(cumulative[k - 1] / n) - epsilon) <
                          std::abs(std::sqrt(cumulative[k] / n) - epsilon)) {
    --k;
  }
  out.r = Grid<double>(image.height(), image.width(), c, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t p = order[i];
    for (int ch = 0; ch < c; ++ch) out.r[p * c + ch] = (salt[p] ? 1.0 : 0.0) - image[p * c + ch];
  }
  out.flip_fraction = static_cast<double>(k) / static_cast<double>(pixels);
  return out;
}

Grid<double> fgsm(const ToyNet& net, const Grid<double>& image, const SegLabelMap& labels_gt,
                  const Plane& depth_gt, double epsilon, const AdvObjective& objective) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("epsilon must lie in (0, 1)");
  AdvGradient g = adv_gradient(net, image, labels_gt, depth_gt, objective);
  for (double& v : g.grad.storage()) v = epsilon * sign_of(v);
  return std::move(g.grad);
}

Grid<double> iterative_attack(const ToyNet& net, const Grid<double>& image, const SegLabelMap& labels_gt,
                              const Plane& depth_gt, const AttackSpec& spec) {
  spec.validate();
  if (spec.kind != PerturbKind::bim && spec.kind != PerturbKind::pgd) {
    throw InvalidArgument("iterative_attack needs kind bim or pgd");
  }
  const double eps = spec.epsilon();
  const double alpha = spec.step_size();
  Grid<double> x = image;
  if (spec.kind == PerturbKind::pgd && spec.random_start) {
    Rng rng(derive_seed(spec.seed, 0x9d));
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(image[i] + rng.uniform(-eps, eps), 0.0, 1.0);
  }
  for (int step = 0; step < spec.steps; ++step) {
    const AdvGradient g = adv_gradient(net, x, labels_gt, depth_gt, spec.objective);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double moved = x[i] + alpha * sign_of(g.grad[i]);
      x[i] = std::clamp(std::clamp(moved, image[i] - eps, image[i] + eps), 0.0, 1.0);
    }
  }
  for (std::size_t i = 0; i < x.size(); ++i) x[i] -= image[i];
  return x;
}

Perturbation make_perturbation(const ToyNet& net, const Grid<double>& image, const SegLabelMap& labels_gt,
                               const Plane& depth_gt, const AttackSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, 0x3b));
  switch (spec.kind) {
    case PerturbKind::gaussian:
      return {gaussian_noise(image.height(), image.width(), image.channels(), spec.epsilon(), rng), false};
    case PerturbKind::salt_pepper: {
      SaltPepper sp = salt_pepper_noise(image, spec.epsilon(), rng);
      return {std::move(sp.r), sp.unattainable};
    }
    case PerturbKind::fgsm:
      return {fgsm(net, image, labels_gt, depth_gt, spec.epsilon(), spec.objective), false};
    case PerturbKind::bim:
    case PerturbKind::pgd:
      return {iterative_attack(net, image, labels_gt, depth_gt, spec), false};
  }
  throw InvalidArgument("unknown perturbation kind");
}

}  // namespace edgeguard
