#include "doctest.h"
#include "edgeguard/array_io.hpp"
#include "edgeguard/sweep.hpp"
#include "edgeguard/training.hpp"
#include "test_util.hpp"

using namespace edgeguard;

namespace {

struct Small {
  ToyNet net;
  ThresholdSet thresholds;
  std::vector<Sample> test;
  Small() {
    SceneSpec spec;
    spec.height = spec.width = 16;
    spec.seed = 1;
    TrainConfig tc;
    tc.learning_rate = 0.1;
    tc.epochs = 2;
    net = train(ToyNet::initialized(5, 1), generate_split(spec, 16), tc).net;
    const auto cal = generate_split(spec, 30, Split::val);
    thresholds = calibrate(clean_scores(net, cal, DetectorConfig{}), DetectorConfig{});
    test = generate_split(spec, 10, Split::test);
  }
};

std::string slurp(const std::filesystem::path& p) {
  const auto b = read_file(p);
  return std::string(reinterpret_cast<const char*>(b.data()), b.size());
}

}  // namespace

TEST_CASE("zero-strength grid reproduces the clean flag rate") {
  Small s;
  SweepConfig cfg;
  cfg.kinds = {PerturbKind::gaussian, PerturbKind::fgsm};
  cfg.eps_levels = {0};
  cfg.table4 = false;
  const SweepReport r = run_sweep(s.net, s.thresholds, s.test, cfg);
  REQUIRE(r.complete());
  REQUIRE(r.cells.size() == 2);
  for (const auto& c : r.cells) CHECK(c.row.tpr == c.row.fpr);
}

TEST_CASE("sweep covers the grid, is deterministic and independent of jobs") {
  Small s;
  SweepConfig cfg;
  cfg.eps_levels = {2, 16};
  cfg.steps = 2;
  cfg.table4_objectives = {{LossMode::SD, 0.0}, {LossMode::SD_ECL, 1.0}};
  const SweepReport a = run_sweep(s.net, s.thresholds, s.test, cfg);
  CHECK(a.cells.size() == 5 * 2 + 2);
  CHECK(a.complete());
  cfg.jobs = 3;
  const SweepReport b = run_sweep(s.net, s.thresholds, s.test, cfg);
  test::TempDir da, db;
  write_sweep(a, da.path);
  write_sweep(b, db.path);
  for (const char* f : {"sweep.csv", "tableIV.csv", "roc_mx_16.csv", "hist_md_2.csv", "roc_vote_16.csv"}) {
    INFO(f);
    CHECK(slurp(da.path / f) == slurp(db.path / f));
  }
  const std::string table = slurp(da.path / "tableIV.csv");
  CHECK(table.find("SD+ECL(1)") != std::string::npos);
  for (const auto& c : a.cells) {
    CHECK(c.row.tpr >= 0.0);
    CHECK(c.row.tpr <= 1.0);
  }
}

TEST_CASE("failed cells leave a marker") {
  Small s;
  SweepConfig cfg;
  cfg.kinds = {PerturbKind::gaussian};
  cfg.eps_levels = {2};
  cfg.table4 = false;
  SweepReport r = run_sweep(s.net, s.thresholds, s.test, cfg);
  r.cells.front().ok = false;
  r.cells.front().error = "boom";
  test::TempDir d;
  write_sweep(r, d.path);
  CHECK(slurp(d.path / "sweep.csv").find("# FAILED gaussian,2,-: boom") != std::string::npos);
  CHECK(!r.complete());
}
