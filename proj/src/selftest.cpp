#include "edgeguard/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include "edgeguard/losses.hpp"
#include "edgeguard/metrics.hpp"
#include "edgeguard/rng.hpp"
#include "edgeguard/toynet.hpp"
#include "edgeguard/training.hpp"

namespace edgeguard {

double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
}

namespace {

constexpr double kStep = 1e-5;
constexpr double kGradTol = 1e-3;
constexpr int kSize = 8;
constexpr int kClasses = 5;
constexpr double kEncoderFraction = 0.1;

struct Instance {
  ToyNet net;
  Grid<double> image;
  SegLabelMap labels;
  Plane depth;
};

Instance make_instance(std::uint64_t seed) {
  Rng rng(seed);
  Instance in{ToyNet::initialized(kClasses, derive_seed(seed, 1)), Grid<double>(kSize, kSize, 3, 0.0), {}, {}};
  // Perturb every parameter so biases and heads are generic, not at their init values.
  for (double& p : in.net.params()) p += 0.05 * rng.normal();
  for (double& v : in.image.storage()) v = rng.uniform(0.05, 0.95);
  Grid<std::uint16_t> lab(kSize, kSize, 1, 1);
  for (auto& v : lab.storage()) v = static_cast<std::uint16_t>(rng.uniform_int(1, kClasses));
  in.labels = SegLabelMap(lab, kClasses);
  in.depth = Plane(kSize, kSize, 1, 0.0);
  for (double& v : in.depth.storage()) v = rng.uniform(1.0, 50.0);
  return in;
}

std::vector<double> numeric_gradient(std::vector<double>& x, const std::function<double()>& f,
                                     const std::vector<std::size_t>& indices) {
  std::vector<double> g;
  g.reserve(indices.size());
  for (std::size_t i : indices) {
    const double keep = x[i];
    x[i] = keep + kStep;
    const double fp = f();
    x[i] = keep - kStep;
    const double fm = f();
    x[i] = keep;
    g.push_back((fp - fm) / (2.0 * kStep));
  }
  return g;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

std::vector<double> pick(const std::vector<double>& v, const std::vector<std::size_t>& idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(v[i]);
  return out;
}

Grid<double> softmax(const Grid<double>& logits) {
  Grid<double> p = logits;
  const int c = logits.channels();
  for (std::size_t px = 0; px < logits.pixels(); ++px) {
    double m = logits[px * c];
    for (int s = 1; s < c; ++s) m = std::max(m, logits[px * c + s]);
    double sum = 0.0;
    for (int s = 0; s < c; ++s) sum += p[px * c + s] = std::exp(logits[px * c + s] - m);
    for (int s = 0; s < c; ++s) p[px * c + s] /= sum;
  }
  return p;
}

struct Tracker {
  std::string name;
  double worst = 0.0;
  int count = 0;
  void add(double err) {
    worst = std::max(worst, std::isnan(err) ? INFINITY : err);
    ++count;
  }
  CheckResult result() const {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%d instances, max relative error %.3e", count, worst);
    return {name, worst <= kGradTol, worst, kGradTol, buf};
  }
};

}  // namespace

std::vector<CheckResult> gradient_checks(int instances, std::uint64_t seed) {
  Tracker seg{"grad J_seg (logits)"}, dep{"grad J_depth (sigma)"}, con_p{"grad J_con (probs)"},
      con_s{"grad J_con (sigma)"}, con_x{"grad J_con (image)"}, tot{"grad J_tot (parameters, lambda=1)"},
      tot_l{"grad J_tot (parameters, lambda=0.1)"};
  const std::vector<AdvObjective> modes{{LossMode::S, 0.0},
                                        {LossMode::D, 0.0},
                                        {LossMode::SD, 0.0},
                                        {LossMode::SD_ECL, 0.01},
                                        {LossMode::SD_ECL, 1.0}};
  std::vector<Tracker> adv;
  for (const auto& m : modes) adv.push_back({"grad J_adv " + m.name() + " (image)"});

  for (int k = 0; k < instances; ++k) {
    Instance in = make_instance(derive_seed(seed, static_cast<std::uint64_t>(k)));
    const ForwardCache c = forward(in.net, in.image);

    {
      std::vector<double> logits(c.logits.values().begin(), c.logits.values().end());
      auto f = [&] {
        return seg_loss(softmax(Grid<double>(kSize, kSize, kClasses, logits)), in.labels).value;
      };
      const SegLoss s = seg_loss(c.probs, in.labels);
      seg.add(relative_error(s.grad_logits.storage(), numeric_gradient(logits, f, all_indices(logits.size()))));
    }
    {
      std::vector<double> sigma(c.sigma.values().begin(), c.sigma.values().end());
      auto f = [&] { return depth_loss(Plane(kSize, kSize, 1, sigma), in.depth).value; };
      const DepthLoss d = depth_loss(c.sigma, in.depth);
      dep.add(relative_error(d.grad_sigma.storage(), numeric_gradient(sigma, f, all_indices(sigma.size()))));
    }
    {
      // Free inputs away from ties: network outputs can have neighbors equal
      // to within the step, where |d| is not differentiable.
      Rng rng(derive_seed(seed, 0x1000 + static_cast<std::uint64_t>(k)));
      std::vector<double> probs(c.probs.size()), sigma(c.sigma.size());
      for (double& v : probs) v = rng.uniform(0.05, 0.95);
      for (double& v : sigma) v = rng.uniform(0.05, 0.95);
      std::vector<double> image(in.image.values().begin(), in.image.values().end());
      const Grid<double> p0(kSize, kSize, kClasses, probs);
      const Plane s0(kSize, kSize, 1, sigma);
      auto f = [&] {
        return ecl_loss(Grid<double>(kSize, kSize, kClasses, probs), Plane(kSize, kSize, 1, sigma),
                        Grid<double>(kSize, kSize, 3, image), false)
            .value;
      };
      const EclLoss e = ecl_loss(p0, s0, in.image, true);
      con_p.add(relative_error(e.grad_probs.storage(), numeric_gradient(probs, f, all_indices(probs.size()))));
      con_s.add(relative_error(e.grad_sigma.storage(), numeric_gradient(sigma, f, all_indices(sigma.size()))));
      con_x.add(relative_error(e.grad_image.storage(), numeric_gradient(image, f, all_indices(image.size()))));
    }
    {
      const double mu = 0.5;  // large enough that the ECL path is visible in the sum
      std::vector<double> grad(in.net.params().size(), 0.0);
      total_loss(in.net, in.image, in.labels, in.depth, mu, 1.0, &grad);
      auto f = [&] { return total_loss(in.net, in.image, in.labels, in.depth, mu, 1.0, nullptr).total; };
      // Every head parameter plus a seeded subset of the encoder.
      std::vector<std::size_t> idx;
      Rng prng(derive_seed(seed, 0x2000 + static_cast<std::uint64_t>(k)));
      for (std::size_t i = 0; i < in.net.encoder_size(); ++i) {
        if (prng.uniform() < kEncoderFraction) idx.push_back(i);
      }
      for (std::size_t i = in.net.encoder_size(); i < grad.size(); ++i) idx.push_back(i);
      const std::vector<double> num = numeric_gradient(in.net.params(), f, idx);
      tot.add(relative_error(pick(grad, idx), num));

      std::vector<double> scaled(grad.size(), 0.0);
      total_loss(in.net, in.image, in.labels, in.depth, mu, 0.1, &scaled);
      std::vector<double> expect = num;
      for (std::size_t j = 0; j < idx.size(); ++j) {
        if (idx[j] < in.net.encoder_size()) expect[j] *= 0.1;
      }
      tot_l.add(relative_error(pick(scaled, idx), expect));
    }
    for (std::size_t m = 0; m < modes.size(); ++m) {
      std::vector<double> image(in.image.values().begin(), in.image.values().end());
      auto f = [&] { return adv_loss(in.net, Grid<double>(kSize, kSize, 3, image), in.labels, in.depth, modes[m]); };
      const AdvGradient g = adv_gradient(in.net, in.image, in.labels, in.depth, modes[m]);
      adv[m].add(relative_error(g.grad.storage(), numeric_gradient(image, f, all_indices(image.size()))));
    }
  }

  std::vector<CheckResult> out{seg.result(), dep.result(), con_p.result(), con_s.result(),
                               con_x.result(), tot.result(), tot_l.result()};
  for (const auto& t : adv) out.push_back(t.result());
  return out;
}

namespace {

double naive_miou(const SegLabelMap& pred, const SegLabelMap& gt, int classes) {
  double sum = 0.0;
  int present = 0;
  for (int s = 1; s <= classes; ++s) {
    int inter = 0, uni = 0;
    for (int y = 0; y < gt.height(); ++y) {
      for (int x = 0; x < gt.width(); ++x) {
        const bool p = pred.at(y, x) == s;
        const bool g = gt.at(y, x) == s;
        inter += (p && g) ? 1 : 0;
        uni += (p || g) ? 1 : 0;
      }
    }
    if (uni == 0) continue;
    sum += static_cast<double>(inter) / uni;
    ++present;
  }
  return present == 0 ? 1.0 : sum / present;
}

DepthMetrics naive_depth(const Plane& d, const Plane& t) {
  DepthMetrics m;
  const int h = d.height(), w = d.width();
  double se = 0.0, sle = 0.0;
  double c1 = 0.0, c2 = 0.0, c3 = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double p = d.at(y, x), g = t.at(y, x);
      m.abs_rel += std::abs(p - g) / g;
      m.sq_rel += (p - g) * (p - g) / g;
      se += (p - g) * (p - g);
      sle += (std::log(p) - std::log(g)) * (std::log(p) - std::log(g));
      const double r = p / g > g / p ? p / g : g / p;
      c1 += r < 1.25 ? 1 : 0;
      c2 += r < 1.5625 ? 1 : 0;
      c3 += r < 1.953125 ? 1 : 0;
    }
  }
  const double n = static_cast<double>(h) * w;
  m.abs_rel /= n;
  m.sq_rel /= n;
  m.rmse = std::sqrt(se / n);
  m.rmse_log = std::sqrt(sle / n);
  m.delta1 = c1 / n;
  m.delta2 = c2 / n;
  m.delta3 = c3 / n;
  return m;
}

bool same(const DepthMetrics& a, const DepthMetrics& b) {
  return a.abs_rel == b.abs_rel && a.sq_rel == b.sq_rel && a.rmse == b.rmse && a.rmse_log == b.rmse_log &&
         a.delta1 == b.delta1 && a.delta2 == b.delta2 && a.delta3 == b.delta3;
}

}  // namespace

std::vector<CheckResult> metric_oracles(int cases, std::uint64_t seed) {
  std::vector<CheckResult> out;
  Rng rng(derive_seed(seed, 0x0e));
  int miou_mismatch = 0, depth_mismatch = 0, chain_bad = 0;
  for (int k = 0; k < cases; ++k) {
    const int classes = static_cast<int>(rng.uniform_int(2, 6));
    Grid<std::uint16_t> a(8, 8, 1, 1), b(8, 8, 1, 1);
    for (auto& v : a.storage()) v = static_cast<std::uint16_t>(rng.uniform_int(1, classes));
    for (auto& v : b.storage()) v = static_cast<std::uint16_t>(rng.uniform_int(1, classes));
    const SegLabelMap pa(a, classes), pb(b, classes);
    if (miou(pa, pb, classes) != naive_miou(pa, pb, classes)) ++miou_mismatch;

    Plane d(8, 8, 1, 0.0), t(8, 8, 1, 0.0);
    for (double& v : d.storage()) v = rng.uniform(0.1, 100.0);
    for (double& v : t.storage()) v = rng.uniform(0.1, 100.0);
    for (std::size_t i = 0; i < 16; ++i) d[i] = t[i] * rng.uniform(0.7, 1.4);
    const DepthMetrics m = depth_metrics(d, t);
    if (!same(m, naive_depth(d, t))) ++depth_mismatch;
    if (!(m.delta1 <= m.delta2 && m.delta2 <= m.delta3)) ++chain_bad;
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%d random 8x8 cases, %d mismatches", cases, miou_mismatch);
  out.push_back({"miou vs brute force", miou_mismatch == 0, static_cast<double>(miou_mismatch), 0.0, buf});
  std::snprintf(buf, sizeof(buf), "%d random 8x8 cases, %d mismatches, %d delta-chain violations", cases,
                depth_mismatch, chain_bad);
  out.push_back({"depth metrics vs brute force", depth_mismatch == 0 && chain_bad == 0,
                 static_cast<double>(depth_mismatch + chain_bad), 0.0, buf});

  const SegLabelMap gt(Grid<std::uint16_t>(2, 2, 1, std::vector<std::uint16_t>{1, 1, 2, 2}), 2);
  const SegLabelMap pr(Grid<std::uint16_t>(2, 2, 1, std::vector<std::uint16_t>{1, 2, 2, 2}), 2);
  const double hand = std::abs(miou(pr, gt, 2) - 7.0 / 12.0);
  std::snprintf(buf, sizeof(buf), "|miou - 7/12| = %.3e", hand);
  out.push_back({"miou hand example", hand <= 1e-12, hand, 1e-12, buf});

  const DepthMetrics two = depth_metrics(Plane(4, 4, 1, 2.0), Plane(4, 4, 1, 1.0));
  const double err = std::max({std::abs(two.abs_rel - 1.0), std::abs(two.sq_rel - 1.0), std::abs(two.rmse - 1.0),
                               std::abs(two.rmse_log - std::log(2.0))});
  std::snprintf(buf, sizeof(buf), "pred = 2 gt, max closed-form error %.3e", err);
  out.push_back({"depth closed form", err <= 1e-12, err, 1e-12, buf});

  const DepthMetrics r13 = depth_metrics(Plane(3, 3, 1, 1.3), Plane(3, 3, 1, 1.0));
  const bool ok13 = r13.delta1 == 0.0 && r13.delta2 == 1.0 && r13.delta3 == 1.0;
  out.push_back({"depth delta thresholds", ok13, ok13 ? 0.0 : 1.0, 0.0, "pred = 1.3 gt: delta1 = 0, delta2 = 1"});
  return out;
}

std::vector<CheckResult> run_selftest(std::uint64_t seed) {
  std::vector<CheckResult> out = gradient_checks(20, seed);
  const auto m = metric_oracles(50, seed);
  out.insert(out.end(), m.begin(), m.end());
  return out;
}

}  // namespace edgeguard
