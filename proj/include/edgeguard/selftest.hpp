#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace edgeguard {

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;      // worst observed error
  double tolerance = 0.0;
  std::string detail;
};

/// Analytic vs central-difference gradients (f64, h = 1e-5) on random
/// 8x8 instances: seg, depth, ECL, total loss and every adversarial mode.
std::vector<CheckResult> gradient_checks(int instances, std::uint64_t seed);

/// miou and depth_metrics against naive loops plus closed-form cases.
std::vector<CheckResult> metric_oracles(int cases, std::uint64_t seed);

/// Both groups with the default sizes (20 instances, 50 cases).
std::vector<CheckResult> run_selftest(std::uint64_t seed);

/// ||a - b|| / max(||a||, ||b||, 1e-12).
double relative_error(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace edgeguard
