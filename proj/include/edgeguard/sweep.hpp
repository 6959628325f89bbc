#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "edgeguard/detector.hpp"
#include "edgeguard/metrics.hpp"
#include "edgeguard/perturb.hpp"
#include "edgeguard/scenes.hpp"
#include "edgeguard/toynet.hpp"

namespace edgeguard {

/// Outputs and scores of one (possibly perturbed) input.
struct SampleEval {
  ConsistencyTriple consistencies;
  int decision = 0;
  double miou = 0.0;
  DepthMetrics depth;
};

SampleEval evaluate(const ToyNet& net, const ImageTensor& image, const Sample& truth, const ThresholdSet& thresholds);

/// Consistency triples of the network outputs on clean inputs.
std::vector<ConsistencyTriple> clean_scores(const ToyNet& net, std::span<const Sample> samples,
                                            const DetectorConfig& cfg);

struct SweepConfig {
  std::vector<PerturbKind> kinds{PerturbKind::gaussian, PerturbKind::salt_pepper, PerturbKind::fgsm,
                                 PerturbKind::bim, PerturbKind::pgd};
  std::vector<double> eps_levels{1, 2, 4, 8, 16, 32};
  AdvObjective objective{};  // loss used by the main grid
  int steps = 10;
  double alpha = 0.0;
  bool table4 = true;
  PerturbKind table4_kind = PerturbKind::pgd;
  std::vector<AdvObjective> table4_objectives{{LossMode::S, 0.0},
                                              {LossMode::D, 0.0},
                                              {LossMode::SD, 0.0},
                                              {LossMode::SD_ECL, 0.01},
                                              {LossMode::SD_ECL, 1.0}};
  PerturbKind roc_kind = PerturbKind::fgsm;  // kind for ROC and histogram files
  std::uint64_t seed = 0;
  int jobs = 1;

  void validate() const;
};

struct SweepRow {
  PerturbKind kind = PerturbKind::fgsm;
  double eps_levels = 0.0;
  std::string objective;
  std::size_t n = 0;
  double tpr = 0.0;
  double fpr = 0.0;  // clean test split under the same thresholds
  double miou = 0.0;
  double delta1 = 0.0;
  ConsistencyTriple mean_consistency;
  double mean_rms = 0.0;  // in 8-bit levels
  std::size_t warnings = 0;
  bool table4 = false;  // belongs only to the attack-ablation grid
};

struct SweepCell {
  SweepRow row;
  std::vector<ConsistencyTriple> perturbed;
  bool ok = false;
  std::string error;
};

struct SweepReport {
  std::vector<SweepCell> cells;  // fixed grid order
  std::vector<ConsistencyTriple> clean;
  double clean_miou = 0.0;
  double clean_delta1 = 0.0;
  ThresholdSet thresholds;
  SweepConfig config;

  bool complete() const;
  const SweepCell* find(PerturbKind kind, double eps, const std::string& objective) const;
};

SweepReport run_sweep(const ToyNet& net, const ThresholdSet& thresholds, std::span<const Sample> test,
                      const SweepConfig& cfg);

/// Writes sweep.csv, tableIV.csv, roc_<pair>_<eps>.csv and hist_<pair>_<eps>.csv.
/// A failed cell leaves a "# FAILED" marker line in sweep.csv.
void write_sweep(const SweepReport& report, const std::filesystem::path& dir);

/// Row-wise average of tpr over eps levels for one kind and objective.
double average_tpr(const SweepReport& report, PerturbKind kind, const std::string& objective);

std::string format_eps(double eps_levels);

}  // namespace edgeguard
