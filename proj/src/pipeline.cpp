#include "edgeguard/pipeline.hpp"

#include <cstdio>
#include <fstream>

#include "edgeguard/array_io.hpp"
#include "edgeguard/detector.hpp"
#include "edgeguard/error.hpp"
#include "edgeguard/rng.hpp"
#include "edgeguard/scenes.hpp"
#include "edgeguard/selftest.hpp"
#include "edgeguard/sweep.hpp"
#include "edgeguard/training.hpp"

namespace edgeguard {

namespace fs = std::filesystem;

namespace {

constexpr const char* kConfigName = "config.txt";
constexpr const char* kThresholdName = "thresholds.txt";

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

void emit(const LogSink& log, const std::string& line) {
  if (log) log(line);
}

int checked_int(const RunConfig& c, const std::string& key, long long lo, long long hi) {
  const long long v = c.integer(key);
  if (v < lo || v > hi) {
    throw InvalidArgument("option " + key + " must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return static_cast<int>(v);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void write_config(const RunConfig& c, const fs::path& dir, const std::string& command) {
  std::ofstream out = open_out(dir / kConfigName);
  out << "# edgeguard " << command << "\n" << c.dump();
}

struct Dataset {
  Manifest manifest;
  std::vector<ManifestEntry> entries;
  std::vector<Sample> samples;
};

Dataset load_split(const RunConfig& c, const std::string& split) {
  const fs::path path = resolve_manifest(c.str("data"));
  if (!fs::exists(path)) throw InvalidArgument("no manifest at " + path.string());
  Dataset d;
  d.manifest = read_manifest(path);
  const long long limit = c.integer("limit");
  if (limit < 0) throw InvalidArgument("limit must be >= 0");
  for (const auto& e : d.manifest.entries) {
    if (!split.empty() && e.split != split) continue;
    if (limit > 0 && d.entries.size() >= static_cast<std::size_t>(limit)) break;
    d.entries.push_back(e);
    d.samples.push_back(load_sample(path.parent_path(), e));
  }
  if (d.samples.empty()) {
    throw InvalidArgument("no samples" + (split.empty() ? std::string() : " in split '" + split + "'") + " of " +
                          path.string());
  }
  return d;
}

ToyNet load_checkpoint(const RunConfig& c) {
  const fs::path dir = c.str("checkpoint");
  if (!fs::exists(dir)) throw InvalidArgument("checkpoint " + dir.string() + " does not exist");
  return ToyNet::load(dir);
}

ThresholdSet load_thresholds(const RunConfig& c) {
  fs::path p = c.str("thresholds");
  if (fs::is_directory(p)) p /= kThresholdName;
  if (!fs::exists(p)) throw InvalidArgument("threshold file " + p.string() + " does not exist");
  return read_thresholds(p);
}

void check_classes(const ToyNet& net, const Dataset& d) {
  if (net.num_classes() != d.manifest.num_classes) {
    throw ShapeError("checkpoint has " + std::to_string(net.num_classes()) + " classes, dataset has " +
                     std::to_string(d.manifest.num_classes));
  }
}

void run_generate(const RunConfig& c, const fs::path& out, const LogSink& log) {
  SceneSpec spec;
  spec.height = checked_int(c, "height", 8, 4096);
  spec.width = checked_int(c, "width", 8, 4096);
  spec.num_classes = checked_int(c, "classes", 2, 65535);
  spec.num_shapes = checked_int(c, "shapes", 0, 1000);
  spec.depth_min = c.real("depth_min");
  spec.depth_max = c.real("depth_max");
  spec.texture_amplitude = checked_int(c, "texture", 0, 127);
  spec.seed = c.seed();
  spec.validate();
  const int n = checked_int(c, "n", 1, 1000000);
  const auto splits = c.list("splits");
  if (splits.empty()) throw InvalidArgument("splits must name at least one of train, val, test");
  std::vector<Split> parsed;
  for (const auto& s : splits) {
    try {
      parsed.push_back(parse_split(s));
    } catch (const Error&) {
      throw InvalidArgument("unknown split '" + s + "'");
    }
  }
  const int n_train = checked_int(c, "n_train", 0, 1000000);
  const int n_val = checked_int(c, "n_val", 0, 1000000);
  const int n_test = checked_int(c, "n_test", 0, 1000000);

  fs::create_directories(out);
  Manifest manifest;
  manifest.num_classes = spec.num_classes;
  for (Split split : parsed) {
    int count = split == Split::train ? n_train : split == Split::val ? n_val : n_test;
    if (count == 0) count = n;
    const auto samples = generate_split(spec, count, split);
    for (const Sample& s : samples) manifest.entries.push_back(save_sample(s, split_name(split), out));
    emit(log, "generated " + std::to_string(count) + " " + split_name(split) + " samples");
  }
  write_manifest(manifest, out / kManifestName);
}

void run_train(const RunConfig& c, const fs::path& out, const LogSink& log) {
  TrainConfig tc;
  tc.learning_rate = c.real("lr");
  tc.epochs = checked_int(c, "epochs", 1, 1000000);
  tc.batch_size = checked_int(c, "batch", 1, 1000000);
  tc.mu = c.real("mu");
  tc.lambda = c.real("lambda");
  tc.seed = derive_seed(c.seed(), 2);
  tc.validate();
  const Dataset d = load_split(c, c.str("split"));
  const ToyNet init = ToyNet::initialized(d.manifest.num_classes, derive_seed(c.seed(), 1));

  fs::create_directories(out);
  std::ofstream csv = open_out(out / "train_log.csv");
  csv << "epoch,seg,depth,con,total\n";
  const auto on_epoch = [&](const EpochLog& e) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g\n", e.epoch, e.mean.seg, e.mean.depth, e.mean.con,
                  e.mean.total);
    csv << buf;
    emit(log, "epoch " + std::to_string(e.epoch) + " loss " + fmt("%.6f", e.mean.total));
  };
  const TrainResult r = train(init, d.samples, tc, on_epoch);
  r.net.save(out);
}

void run_calibrate(const RunConfig& c, const fs::path& out, const LogSink& log) {
  DetectorConfig dc;
  dc.metric = parse_metric(c.str("metric"));
  dc.edge_mode = parse_edge_mode(c.str("edge_mode"));
  dc.vote_mode = parse_vote_mode(c.str("vote_mode"));
  dc.top_fraction = c.real("top_fraction");
  dc.target_fpr = c.real("target_fpr");
  if (c.has("gamma")) dc.gamma = c.real("gamma");
  dc.validate();
  const ToyNet net = load_checkpoint(c);
  const Dataset d = load_split(c, c.str("split"));
  check_classes(net, d);

  const auto clean = clean_scores(net, d.samples, dc);
  ThresholdSet t;
  if (c.has("gamma")) {
    t.theta = thresholds_for_gamma(clean, dc.gamma);
    t.gamma = dc.gamma;
    t.n = clean.size();
    t.achieved_fpr = flag_rate(clean, t.theta, dc.vote_mode);
    t.config = dc;
  } else {
    t = calibrate(clean, dc);
  }
  fs::create_directories(out);
  write_thresholds(t, out / kThresholdName);
  std::ofstream csv = open_out(out / "clean_scores.csv");
  csv << "seed,mx,xd,md\n";
  for (std::size_t i = 0; i < clean.size(); ++i) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), ",%.9f,%.9f,%.9f\n", clean[i].mx, clean[i].xd, clean[i].md);
    csv << d.entries[i].seed << buf;
  }
  emit(log, "gamma " + fmt("%.6f", t.gamma) + " fpr " + fmt("%.6f", t.achieved_fpr) + " theta " +
                fmt("%.6f", t.theta[0]) + " " + fmt("%.6f", t.theta[1]) + " " + fmt("%.6f", t.theta[2]));
}

void run_attack(const RunConfig& c, const fs::path& out, const LogSink& log) {
  AttackSpec spec;
  spec.kind = parse_kind(c.str("kind"));
  spec.epsilon_levels = c.real("eps");
  spec.objective = AdvObjective::parse(c.str("objective"));
  spec.steps = checked_int(c, "steps", 1, 1000000);
  spec.alpha = epsilon_from_levels(c.real("alpha"));
  spec.random_start = c.flag("random_start");
  spec.validate();
  const ToyNet net = load_checkpoint(c);
  const Dataset d = load_split(c, c.str("split"));
  check_classes(net, d);

  fs::create_directories(out);
  std::ofstream csv = open_out(out / "attack_log.csv");
  csv << "seed,kind,eps,objective,rms_levels,loss_before,loss_after,warning\n";
  Manifest manifest;
  manifest.num_classes = d.manifest.num_classes;
  std::size_t warnings = 0;
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    const Sample& s = d.samples[i];
    AttackSpec a = spec;
    a.seed = derive_seed(c.seed(), s.seed);
    const Grid<double> image = s.image.to_doubles();
    const Plane depth = s.depth_gt.to_doubles();
    const Perturbation p = make_perturbation(net, image, s.labels_gt, depth, a);
    Sample attacked = s;
    attacked.image = apply_perturbation(s.image, p.r);
    Grid<double> applied = attacked.image.to_doubles();
    for (std::size_t k = 0; k < applied.size(); ++k) applied[k] -= image[k];

    const ManifestEntry e = save_sample(attacked, d.entries[i].split, out);
    manifest.entries.push_back(e);
    const std::uint32_t shape[3] = {static_cast<std::uint32_t>(applied.height()),
                                    static_cast<std::uint32_t>(applied.width()),
                                    static_cast<std::uint32_t>(applied.channels())};
    save_f64(applied.values(), shape,
             out / (d.entries[i].split + "_" + std::to_string(s.seed) + "_perturbation.egarr"));

    const double before = adv_loss(net, image, s.labels_gt, depth, spec.objective);
    const double after = adv_loss(net, attacked.image.to_doubles(), s.labels_gt, depth, spec.objective);
    warnings += p.warning ? 1 : 0;
    char buf[160];
    std::snprintf(buf, sizeof(buf), ",%s,%s,%s,%.6f,%.9g,%.9g,%d\n", kind_name(spec.kind).c_str(),
                  format_eps(spec.epsilon_levels).c_str(), spec.objective.name().c_str(), rms(applied) * 255.0,
                  before, after, p.warning ? 1 : 0);
    csv << s.seed << buf;
  }
  write_manifest(manifest, out / kManifestName);
  emit(log, "perturbed " + std::to_string(d.samples.size()) + " samples with " + kind_name(spec.kind) + " eps " +
                format_eps(spec.epsilon_levels) + (warnings ? ", " + std::to_string(warnings) + " warnings" : ""));
}

void run_detect(const RunConfig& c, const fs::path& out, const LogSink& log) {
  const ToyNet net = load_checkpoint(c);
  const ThresholdSet t = load_thresholds(c);
  const Dataset d = load_split(c, c.str("split"));
  check_classes(net, d);

  fs::create_directories(out);
  std::ofstream csv = open_out(out / "detections.csv");
  csv << "split,seed,mx,xd,md,vote_mx,vote_xd,vote_md,decision\n";
  std::size_t flagged = 0;
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    const Sample& s = d.samples[i];
    const NetOutputs o = forward(net, s.image);
    const DetectionResult r = detect(s.image, o.depth, argmax_labels(o.probs), t);
    flagged += r.decision;
    char buf[192];
    std::snprintf(buf, sizeof(buf), ",%.9f,%.9f,%.9f,%d,%d,%d,%d\n", r.consistencies.mx, r.consistencies.xd,
                  r.consistencies.md, r.votes[0], r.votes[1], r.votes[2], r.decision);
    csv << d.entries[i].split << ',' << s.seed << buf;
  }
  emit(log, "flagged " + std::to_string(flagged) + " of " + std::to_string(d.samples.size()) + " samples");
}

void run_sweep_command(const RunConfig& c, const fs::path& out, const LogSink& log) {
  SweepConfig sc;
  sc.kinds.clear();
  for (const auto& k : c.list("kinds")) sc.kinds.push_back(parse_kind(k));
  sc.eps_levels = c.reals("eps");
  sc.objective = AdvObjective::parse(c.str("objective"));
  sc.steps = checked_int(c, "steps", 1, 1000000);
  sc.alpha = epsilon_from_levels(c.real("alpha"));
  sc.table4 = c.flag("table4");
  sc.table4_kind = parse_kind(c.str("table4_kind"));
  sc.table4_objectives.clear();
  for (const auto& o : c.list("table4_objectives")) sc.table4_objectives.push_back(AdvObjective::parse(o));
  sc.roc_kind = parse_kind(c.str("roc_kind"));
  sc.seed = c.seed();
  sc.jobs = checked_int(c, "jobs", 1, 1024);
  sc.validate();
  const ToyNet net = load_checkpoint(c);
  const ThresholdSet t = load_thresholds(c);
  const Dataset d = load_split(c, c.str("split"));
  check_classes(net, d);

  const SweepReport report = run_sweep(net, t, d.samples, sc);
  fs::create_directories(out);
  write_sweep(report, out);
  emit(log, "clean miou " + fmt("%.4f", report.clean_miou) + " delta1 " + fmt("%.4f", report.clean_delta1));
  for (const SweepCell& cell : report.cells) {
    const SweepRow& r = cell.row;
    std::string line = kind_name(r.kind) + " eps " + format_eps(r.eps_levels) + " " + r.objective;
    line += cell.ok ? " tpr " + fmt("%.3f", r.tpr) + " fpr " + fmt("%.3f", r.fpr) : " FAILED: " + cell.error;
    emit(log, line);
  }
  if (!report.complete()) throw Error("sweep finished with failed cells; see sweep.csv");
}

void run_selftest_command(const RunConfig& c, const LogSink& log) {
  auto checks = gradient_checks(checked_int(c, "instances", 1, 100000), c.seed());
  const auto oracles = metric_oracles(checked_int(c, "cases", 1, 100000), c.seed());
  checks.insert(checks.end(), oracles.begin(), oracles.end());
  int failed = 0;
  for (const CheckResult& r : checks) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s %-34s err %.3e tol %.1e", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.value,
                  r.tolerance);
    emit(log, std::string(buf) + (r.detail.empty() ? "" : "  " + r.detail));
    failed += r.pass ? 0 : 1;
  }
  if (failed > 0) throw NumericError(std::to_string(failed) + " selftest checks failed");
  emit(log, "all " + std::to_string(checks.size()) + " checks passed");
}

void dispatch(const std::string& command, const RunConfig& c, const fs::path& out, const LogSink& log) {
  if (command == "generate") {
    run_generate(c, out, log);
  } else if (command == "train") {
    run_train(c, out, log);
  } else if (command == "calibrate") {
    run_calibrate(c, out, log);
  } else if (command == "attack") {
    run_attack(c, out, log);
  } else if (command == "detect") {
    run_detect(c, out, log);
  } else if (command == "sweep") {
    run_sweep_command(c, out, log);
  }
}

}  // namespace

void prepare_output(const fs::path& dir, bool force) {
  if (!fs::exists(dir)) return;
  if (!fs::is_directory(dir)) throw InvalidArgument("output " + dir.string() + " exists and is not a directory");
  if (!force && !fs::is_empty(dir)) {
    throw InvalidArgument("output directory " + dir.string() + " is not empty; pass --force to overwrite");
  }
}

void run_command(const std::string& command, const RunConfig& config, const LogSink& log) {
  RunConfig raw = config;
  if (raw.has("config") && !raw.str("config").empty()) raw.merge_file(raw.str("config"));
  const RunConfig c = raw.resolve(command);
  if (command == "selftest") {
    run_selftest_command(c, log);
    return;
  }
  const fs::path out = c.str("out");
  if (out.empty()) throw InvalidArgument("missing required option --out");
  prepare_output(out, c.flag("force"));
  try {
    dispatch(command, c, out, log);
  } catch (...) {
    if (fs::is_directory(out)) write_config(c, out, command);
    throw;
  }
  write_config(c, out, command);
}

}  // namespace edgeguard
