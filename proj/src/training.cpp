#include "edgeguard/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "edgeguard/losses.hpp"
#include "edgeguard/rng.hpp"

namespace edgeguard {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw InvalidArgument("learning rate must be >= 0");
  if (epochs < 0) throw InvalidArgument("epochs must be >= 0");
  if (batch_size < 1) throw InvalidArgument("batch size must be >= 1");
  if (!(mu >= 0.0)) throw InvalidArgument("mu must be >= 0");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw InvalidArgument("lambda must lie in (0, 1]");
}

LossTerms total_loss(const ToyNet& net, const Grid<double>& image, const SegLabelMap& labels_gt,
                     const Plane& depth_gt, double mu, double lambda, std::vector<double>* grad) {
  const ForwardCache c = forward(net, image);
  const SegLoss seg = seg_loss(c.probs, labels_gt);
  const DepthLoss dep = depth_loss(c.sigma, depth_gt);
  LossTerms t;
  t.seg = seg.value;
  t.depth = dep.value;
  Grid<double> g_logits = seg.grad_logits;
  Plane g_sigma = dep.grad_sigma;
  if (mu > 0.0) {
    const EclLoss con = ecl_loss(c.probs, c.sigma, c.input, false);
    t.con = con.value;
    Grid<double> g_probs = con.grad_probs;
    for (double& v : g_probs.storage()) v *= mu;
    const Grid<double> g_from_con = softmax_backward(c.probs, g_probs);
    for (std::size_t i = 0; i < g_logits.size(); ++i) g_logits[i] += g_from_con[i];
    for (std::size_t i = 0; i < g_sigma.size(); ++i) g_sigma[i] += mu * con.grad_sigma[i];
  }
  t.total = t.seg + t.depth + mu * t.con;
  if (grad) backward(net, c, g_logits, g_sigma, lambda, grad, nullptr);
  return t;
}

TrainResult train(ToyNet net, std::span<const Sample> split, const TrainConfig& cfg,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  cfg.validate();
  if (split.empty()) throw InvalidArgument("training split is empty");
  std::vector<Grid<double>> images;
  std::vector<Plane> depths;
  images.reserve(split.size());
  depths.reserve(split.size());
  for (const Sample& s : split) {
    if (s.labels_gt.num_classes() != net.num_classes()) throw ShapeError("class count differs from the network");
    images.push_back(s.image.to_doubles());
    depths.push_back(s.depth_gt.to_doubles());
  }

  Rng rng(derive_seed(cfg.seed, 0x7a1));
  std::vector<std::size_t> order(split.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grad(net.params().size());
  TrainResult result{net, {}, {}};
  bool have_initial = false;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with the portable integer draw.
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
    }
    LossTerms sum;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      LossTerms batch;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t idx = order[k];
        const LossTerms t = total_loss(result.net, images[idx], split[idx].labels_gt, depths[idx], cfg.mu,
                                       cfg.lambda, &grad);
        batch.seg += t.seg;
        batch.depth += t.depth;
        batch.con += t.con;
        batch.total += t.total;
      }
      const double count = static_cast<double>(end - start);
      const double batch_total = batch.total / count;
      if (!have_initial) {
        result.initial = {batch.seg / count, batch.depth / count, batch.con / count, batch_total};
        have_initial = true;
      } else if (!(batch_total <= 10.0 * result.initial.total)) {
        throw NumericError("training diverged: batch loss " + std::to_string(batch_total) +
                           " exceeds 10x the initial " + std::to_string(result.initial.total));
      }
      auto& p = result.net.params();
      const double step = cfg.learning_rate / count;
      for (std::size_t i = 0; i < p.size(); ++i) p[i] -= step * grad[i];
      if (!result.net.all_finite()) throw NumericError("non-finite parameters after an SGD step");
      sum.seg += batch.seg;
      sum.depth += batch.depth;
      sum.con += batch.con;
      sum.total += batch.total;
    }
    const double n = static_cast<double>(order.size());
    EpochLog entry{epoch + 1, {sum.seg / n, sum.depth / n, sum.con / n, sum.total / n}};
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  return result;
}

void AdvObjective::validate() const {
  if (mode == LossMode::SD_ECL && !(mu_tilde >= 0.0)) throw InvalidArgument("mu_tilde must be >= 0");
}

std::string AdvObjective::name() const {
  switch (mode) {
    case LossMode::S: return "S";
    case LossMode::D: return "D";
    case LossMode::SD: return "SD";
    case LossMode::SD_ECL: {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "SD+ECL(%g)", mu_tilde);
      return buf;
    }
  }
  return "SD";
}

AdvObjective AdvObjective::parse(const std::string& text) {
  if (text == "S") return {LossMode::S, 0.0};
  if (text == "D") return {LossMode::D, 0.0};
  if (text == "SD") return {LossMode::SD, 0.0};
  const std::string prefix = "SD+ECL(";
  if (text.rfind(prefix, 0) == 0 && text.back() == ')') {
    const std::string num = text.substr(prefix.size(), text.size() - prefix.size() - 1);
    std::size_t used = 0;
    double mu = 0.0;
    try {
      mu = std::stod(num, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == num.size() && used > 0) {
      AdvObjective o{LossMode::SD_ECL, mu};
      o.validate();
      return o;
    }
  }
  throw InvalidArgument("unknown loss mode '" + text + "' (expected S, D, SD or SD+ECL(<mu>))");
}

namespace {

struct AdvParts {
  double loss = 0.0;
  Grid<double> g_logits;
  Plane g_sigma;
  Grid<double> g_image_direct;
};

AdvParts adv_parts(const ForwardCache& c, const SegLabelMap& labels_gt, const Plane& depth_gt,
                   const AdvObjective& obj, bool with_grad) {
  obj.validate();
  AdvParts parts;
  const bool use_seg = obj.mode != LossMode::D;
  const bool use_depth = obj.mode != LossMode::S;
  if (use_seg) {
    SegLoss s = seg_loss(c.probs, labels_gt);
    parts.loss += s.value;
    parts.g_logits = std::move(s.grad_logits);
  }
  if (use_depth) {
    DepthLoss d = depth_loss(c.sigma, depth_gt);
    parts.loss += d.value;
    parts.g_sigma = std::move(d.grad_sigma);
  }
  if (obj.mode == LossMode::SD_ECL && obj.mu_tilde > 0.0) {
    const EclLoss con = ecl_loss(c.probs, c.sigma, c.input, with_grad);
    parts.loss -= obj.mu_tilde * con.value;
    if (with_grad) {
      Grid<double> g_probs = con.grad_probs;
      for (double& v : g_probs.storage()) v *= -obj.mu_tilde;
      const Grid<double> g = softmax_backward(c.probs, g_probs);
      for (std::size_t i = 0; i < g.size(); ++i) parts.g_logits[i] += g[i];
      for (std::size_t i = 0; i < parts.g_sigma.size(); ++i) parts.g_sigma[i] -= obj.mu_tilde * con.grad_sigma[i];
      parts.g_image_direct = con.grad_image;
      for (double& v : parts.g_image_direct.storage()) v *= -obj.mu_tilde;
    }
  }
  return parts;
}

}  // namespace

AdvGradient adv_gradient(const ToyNet& net, const Grid<double>& image, const SegLabelMap& labels_gt,
                         const Plane& depth_gt, const AdvObjective& objective) {
  const ForwardCache c = forward(net, image);
  AdvParts parts = adv_parts(c, labels_gt, depth_gt, objective, true);
  AdvGradient out;
  out.loss = parts.loss;
  backward(net, c, parts.g_logits, parts.g_sigma, 1.0, nullptr, &out.grad);
  if (parts.g_image_direct.size() != 0) {
    for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] += parts.g_image_direct[i];
  }
  for (double v : out.grad.values()) {
    if (!std::isfinite(v)) throw NumericError("non-finite adversarial gradient");
  }
  return out;
}

double adv_loss(const ToyNet& net, const Grid<double>& image, const SegLabelMap& labels_gt,
                const Plane& depth_gt, const AdvObjective& objective) {
  return adv_parts(forward(net, image), labels_gt, depth_gt, objective, false).loss;
}

}  // namespace edgeguard
