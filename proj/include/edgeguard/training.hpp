#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "edgeguard/scenes.hpp"
#include "edgeguard/toynet.hpp"

namespace edgeguard {

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 40;
  int batch_size = 8;
  double mu = 0.003;     // edge-consistency weight
  double lambda = 0.1;   // encoder gradient scale
  std::uint64_t seed = 0;

  void validate() const;
};

struct LossTerms {
  double seg = 0.0;
  double depth = 0.0;
  double con = 0.0;
  double total = 0.0;
};

/// J_tot = J_seg + J_depth + mu * J_con for one sample. If grad is non-null
/// the parameter gradient is accumulated into it, with the encoder part
/// scaled by lambda.
LossTerms total_loss(const ToyNet& net, const Grid<double>& image, const SegLabelMap& labels_gt,
                     const Plane& depth_gt, double mu, double lambda, std::vector<double>* grad);

struct EpochLog {
  int epoch = 0;
  LossTerms mean;
};

struct TrainResult {
  ToyNet net;
  std::vector<EpochLog> log;
  LossTerms initial;  // first-batch losses, reference for the divergence guard
};

/// Plain minibatch SGD over a shuffled split; deterministic given the seed.
/// Throws NumericError when a batch loss exceeds 10x the first batch's.
TrainResult train(ToyNet net, std::span<const Sample> split, const TrainConfig& cfg,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

enum class LossMode { S, D, SD, SD_ECL };

struct AdvObjective {
  LossMode mode = LossMode::SD;
  double mu_tilde = 0.0;  // only used by SD_ECL

  void validate() const;
  std::string name() const;  // "S", "D", "SD", "SD+ECL(0.01)"
  static AdvObjective parse(const std::string& text);
};

struct AdvGradient {
  double loss = 0.0;
  Grid<double> grad;  // d J_adv / d image
};

/// J_adv: S = J_seg, D = J_depth, SD = J_seg + J_depth,
/// SD+ECL = J_seg + J_depth - mu_tilde * J_con, differentiated with respect
/// to the input pixels (including the direct image-edge path of J_con).
AdvGradient adv_gradient(const ToyNet& net, const Grid<double>& image, const SegLabelMap& labels_gt,
                         const Plane& depth_gt, const AdvObjective& objective);
double adv_loss(const ToyNet& net, const Grid<double>& image, const SegLabelMap& labels_gt,
                const Plane& depth_gt, const AdvObjective& objective);

}  // namespace edgeguard
