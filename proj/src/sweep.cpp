#include "edgeguard/sweep.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

#include "edgeguard/rng.hpp"

namespace edgeguard {

SampleEval evaluate(const ToyNet& net, const ImageTensor& image, const Sample& truth, const ThresholdSet& thresholds) {
  const NetOutputs out = forward(net, image);
  const SegLabelMap labels = argmax_labels(out.probs);
  SampleEval e;
  const DetectionResult r = detect(image, out.depth, labels, thresholds);
  e.consistencies = r.consistencies;
  e.decision = r.decision;
  e.miou = miou(labels, truth.labels_gt, truth.labels_gt.num_classes());
  e.depth = depth_metrics(out.depth, truth.depth_gt);
  return e;
}

std::vector<ConsistencyTriple> clean_scores(const ToyNet& net, std::span<const Sample> samples,
                                            const DetectorConfig& cfg) {
  std::vector<ConsistencyTriple> out;
  out.reserve(samples.size());
  for (const Sample& s : samples) {
    const NetOutputs o = forward(net, s.image);
    out.push_back(score(s.image, o.depth, argmax_labels(o.probs), cfg));
  }
  return out;
}

void SweepConfig::validate() const {
  if (kinds.empty() || eps_levels.empty()) throw InvalidArgument("sweep grid is empty");
  for (double e : eps_levels) {
    if (!(e >= 0.0 && e < 255.0)) throw InvalidArgument("epsilon levels must lie in [0, 255)");
  }
  if (steps < 1) throw InvalidArgument("steps must be >= 1");
  if (jobs < 1) throw InvalidArgument("jobs must be >= 1");
  objective.validate();
  for (const auto& o : table4_objectives) o.validate();
}

std::string format_eps(double eps_levels) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", eps_levels);
  return buf;
}

bool SweepReport::complete() const {
  for (const auto& c : cells) {
    if (!c.ok) return false;
  }
  return true;
}

const SweepCell* SweepReport::find(PerturbKind kind, double eps, const std::string& objective) const {
  for (const auto& c : cells) {
    if (c.row.kind == kind && c.row.eps_levels == eps && c.row.objective == objective) return &c;
  }
  return nullptr;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

struct CellSpec {
  PerturbKind kind;
  double eps;
  AdvObjective objective;
  bool table4;
};

void run_cell(const ToyNet& net, const ThresholdSet& thresholds, std::span<const Sample> test,
              const std::vector<int>& clean_decisions, const SweepConfig& cfg, const CellSpec& spec, SweepCell& cell) {
  SweepRow& row = cell.row;
  row.kind = spec.kind;
  row.eps_levels = spec.eps;
  row.objective = is_adversarial(spec.kind) ? spec.objective.name() : "-";
  row.table4 = spec.table4;
  row.n = test.size();
  const std::uint64_t cell_seed =
      derive_seed(cfg.seed, fnv1a(kind_name(spec.kind) + "|" + format_eps(spec.eps) + "|" + row.objective));

  std::vector<int> decisions;
  decisions.reserve(test.size());
  double rms_sum = 0.0;
  for (const Sample& s : test) {
    ImageTensor input = s.image;
    if (spec.eps > 0.0) {
      AttackSpec attack;
      attack.kind = spec.kind;
      attack.epsilon_levels = spec.eps;
      attack.objective = spec.objective;
      attack.steps = cfg.steps;
      attack.alpha = cfg.alpha;
      attack.seed = derive_seed(cell_seed, s.seed);
      const Grid<double> image = s.image.to_doubles();
      const Perturbation p = make_perturbation(net, image, s.labels_gt, s.depth_gt.to_doubles(), attack);
      row.warnings += p.warning ? 1 : 0;
      input = apply_perturbation(s.image, p.r);
      Grid<double> applied = input.to_doubles();
      for (std::size_t i = 0; i < applied.size(); ++i) applied[i] -= image[i];
      rms_sum += rms(applied) * 255.0;
    }
    const SampleEval e = evaluate(net, input, s, thresholds);
    cell.perturbed.push_back(e.consistencies);
    decisions.push_back(e.decision);
    row.miou += e.miou;
    row.delta1 += e.depth.delta1;
    for (int k = 0; k < 3; ++k) row.mean_consistency[k] += e.consistencies[k];
  }
  const auto n = static_cast<double>(test.size());
  const Rates rates = tpr_at_fpr(clean_decisions, decisions);
  row.tpr = rates.tpr;
  row.fpr = rates.fpr;
  row.miou /= n;
  row.delta1 /= n;
  for (int k = 0; k < 3; ++k) row.mean_consistency[k] /= n;
  row.mean_rms = rms_sum / n;
  cell.ok = true;
}

}  // namespace

SweepReport run_sweep(const ToyNet& net, const ThresholdSet& thresholds, std::span<const Sample> test,
                      const SweepConfig& cfg) {
  cfg.validate();
  if (test.empty()) throw InvalidArgument("test split is empty");
  SweepReport report;
  report.config = cfg;
  report.thresholds = thresholds;

  std::vector<int> clean_decisions;
  for (const Sample& s : test) {
    const SampleEval e = evaluate(net, s.image, s, thresholds);
    report.clean.push_back(e.consistencies);
    clean_decisions.push_back(e.decision);
    report.clean_miou += e.miou;
    report.clean_delta1 += e.depth.delta1;
  }
  report.clean_miou /= static_cast<double>(test.size());
  report.clean_delta1 /= static_cast<double>(test.size());

  std::vector<CellSpec> specs;
  for (PerturbKind kind : cfg.kinds) {
    for (double eps : cfg.eps_levels) specs.push_back({kind, eps, cfg.objective, false});
  }
  if (cfg.table4) {
    for (const auto& obj : cfg.table4_objectives) {
      const bool in_main = obj.name() == cfg.objective.name() &&
                           std::find(cfg.kinds.begin(), cfg.kinds.end(), cfg.table4_kind) != cfg.kinds.end();
      if (in_main) continue;
      for (double eps : cfg.eps_levels) specs.push_back({cfg.table4_kind, eps, obj, true});
    }
  }
  report.cells.resize(specs.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < specs.size(); i = next++) {
      SweepCell& cell = report.cells[i];
      try {
        run_cell(net, thresholds, test, clean_decisions, cfg, specs[i], cell);
      } catch (const std::exception& e) {
        cell.ok = false;
        cell.error = e.what();
        cell.row.kind = specs[i].kind;
        cell.row.eps_levels = specs[i].eps;
        cell.row.objective = is_adversarial(specs[i].kind) ? specs[i].objective.name() : "-";
        cell.row.table4 = specs[i].table4;
      }
    }
  };
  const int threads = std::min<int>(cfg.jobs, static_cast<int>(specs.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return report;
}

double average_tpr(const SweepReport& report, PerturbKind kind, const std::string& objective) {
  double sum = 0.0;
  int count = 0;
  for (const auto& c : report.cells) {
    if (c.ok && c.row.kind == kind && c.row.objective == objective) {
      sum += c.row.tpr;
      ++count;
    }
  }
  if (count == 0) throw InvalidArgument("no sweep rows for " + kind_name(kind) + " " + objective);
  return sum / count;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::string fmt(double v) {
  char buf[64];
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void write_roc(const std::filesystem::path& path, const std::vector<RocPoint>& roc) {
  auto out = open_csv(path);
  out << "fpr,tpr,threshold\n";
  for (const auto& p : roc) out << fmt(p.fpr) << ',' << fmt(p.tpr) << ',' << fmt(p.threshold) << '\n';
}

}  // namespace

void write_sweep(const SweepReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_csv(dir / "sweep.csv");
    out << "kind,eps,objective,grid,n,tpr,fpr,miou,delta1,ssim_mx,ssim_xd,ssim_md,rms_levels,warnings\n";
    out << "clean,0,-,clean," << report.clean.size() << ",-,-," << fmt(report.clean_miou) << ','
        << fmt(report.clean_delta1);
    ConsistencyTriple mean;
    for (const auto& t : report.clean) {
      for (int k = 0; k < 3; ++k) mean[k] += t[k];
    }
    for (int k = 0; k < 3; ++k) out << ',' << fmt(mean[k] / static_cast<double>(report.clean.size()));
    out << ",0,0\n";
    for (const auto& c : report.cells) {
      const SweepRow& r = c.row;
      if (!c.ok) {
        out << "# FAILED " << kind_name(r.kind) << ',' << format_eps(r.eps_levels) << ',' << r.objective << ": "
            << c.error << '\n';
        continue;
      }
      out << kind_name(r.kind) << ',' << format_eps(r.eps_levels) << ',' << r.objective << ','
          << (r.table4 ? "ablation" : "main") << ',' << r.n << ',' << fmt(r.tpr) << ',' << fmt(r.fpr) << ','
          << fmt(r.miou) << ',' << fmt(r.delta1) << ',' << fmt(r.mean_consistency.mx) << ','
          << fmt(r.mean_consistency.xd) << ',' << fmt(r.mean_consistency.md) << ',' << fmt(r.mean_rms) << ','
          << r.warnings << '\n';
    }
  }

  const SweepConfig& cfg = report.config;
  if (cfg.table4) {
    auto out = open_csv(dir / "tableIV.csv");
    out << "objective";
    for (double e : cfg.eps_levels) out << ",eps_" << format_eps(e);
    out << ",average\n";
    for (const auto& obj : cfg.table4_objectives) {
      out << obj.name();
      double sum = 0.0;
      bool all = true;
      for (double e : cfg.eps_levels) {
        const SweepCell* c = report.find(cfg.table4_kind, e, obj.name());
        if (c == nullptr || !c->ok) {
          out << ",nan";
          all = false;
          continue;
        }
        out << ',' << fmt(c->row.tpr);
        sum += c->row.tpr;
      }
      out << ',' << (all ? fmt(sum / static_cast<double>(cfg.eps_levels.size())) : std::string("nan")) << '\n';
    }
  }

  const std::string roc_objective = is_adversarial(cfg.roc_kind) ? cfg.objective.name() : "-";
  for (double e : cfg.eps_levels) {
    const SweepCell* c = report.find(cfg.roc_kind, e, roc_objective);
    if (c == nullptr || !c->ok) continue;
    const std::string tag = format_eps(e);
    for (int k = 0; k < 3; ++k) {
      std::vector<double> cs, ps;
      for (const auto& t : report.clean) cs.push_back(t[k]);
      for (const auto& t : c->perturbed) ps.push_back(t[k]);
      write_roc(dir / ("roc_" + std::string(kPairNames[k]) + "_" + tag + ".csv"), roc_points(cs, ps));
      const auto hc = histogram(cs);
      const auto hp = histogram(ps);
      auto out = open_csv(dir / ("hist_" + std::string(kPairNames[k]) + "_" + tag + ".csv"));
      out << "bin_lo,bin_hi,clean,perturbed\n";
      for (int b = 0; b < kHistBins; ++b) {
        out << fmt(hist_bin_lo(b)) << ',' << fmt(hist_bin_lo(b + 1)) << ',' << hc[b] << ',' << hp[b] << '\n';
      }
    }
    write_roc(dir / ("roc_vote_" + tag + ".csv"),
              roc_points(report.clean, c->perturbed, report.thresholds.config.vote_mode));
  }
}

}  // namespace edgeguard
