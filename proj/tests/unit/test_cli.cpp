#include <cstdlib>
#include <fstream>

#include "doctest.h"
#include "edgeguard/array_io.hpp"
#include "edgeguard/config.hpp"
#include "edgeguard/error.hpp"
#include "edgeguard/pipeline.hpp"
#include "test_util.hpp"

using namespace edgeguard;
namespace fs = std::filesystem;

namespace {

struct SeedEnv {
  std::string saved;
  bool had = false;
  explicit SeedEnv(const char* value) {
    if (const char* v = std::getenv("EDGEGUARD_SEED")) {
      had = true;
      saved = v;
    }
    if (value) ::setenv("EDGEGUARD_SEED", value, 1);
    else ::unsetenv("EDGEGUARD_SEED");
  }
  ~SeedEnv() {
    if (had) ::setenv("EDGEGUARD_SEED", saved.c_str(), 1);
    else ::unsetenv("EDGEGUARD_SEED");
  }
};

std::string slurp(const fs::path& p) {
  const auto b = read_file(p);
  return std::string(reinterpret_cast<const char*>(b.data()), b.size());
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("config text parses key value lines") {
  const RunConfig c = RunConfig::parse("# header\n\n  lr =  0.1 \nsplits=train, val\n");
  CHECK(c.str("lr") == "0.1");
  CHECK(c.real("lr") == 0.1);
  CHECK(c.list("splits") == std::vector<std::string>{"train", "val"});
  CHECK_THROWS_AS(RunConfig::parse("lr 0.1\n"), InvalidArgument);
  CHECK_THROWS_AS(RunConfig::parse("= 3\n"), InvalidArgument);
}

TEST_CASE("typed getters reject malformed values") {
  RunConfig c;
  c.set("a", "1.5x");
  c.set("b", "7");
  c.set("f", "maybe");
  c.set("seed", "-3");
  CHECK_THROWS_AS(c.real("a"), InvalidArgument);
  CHECK(c.integer("b") == 7);
  CHECK_THROWS_AS(c.integer("a"), InvalidArgument);
  CHECK_THROWS_AS(c.flag("f"), InvalidArgument);
  CHECK_THROWS_AS(c.seed(), InvalidArgument);
}

TEST_CASE("resolve fills defaults and validates keys") {
  SeedEnv env(nullptr);
  RunConfig c;
  c.set("n", "3");
  const RunConfig r = c.resolve("generate");
  CHECK(r.str("n") == "3");
  CHECK(r.str("height") == "64");
  CHECK(r.str("seed") == "0");
  CHECK_FALSE(r.has("config"));

  RunConfig bad;
  bad.set("nn", "3");
  CHECK_THROWS_WITH_AS(bad.resolve("generate"), doctest::Contains("nn"), InvalidArgument);
  CHECK_THROWS_WITH_AS(RunConfig().resolve("sweep"), doctest::Contains("--checkpoint"), InvalidArgument);
  CHECK_THROWS_AS(RunConfig().resolve("nope"), InvalidArgument);
}

TEST_CASE("seed falls back to the environment") {
  SeedEnv env("41");
  CHECK(RunConfig().resolve("selftest").seed() == 41);
  RunConfig c;
  c.set("seed", "5");
  CHECK(c.resolve("selftest").seed() == 5);
}

TEST_CASE("flags override config file entries") {
  test::TempDir dir;
  write_text(dir.path / "run.cfg", "n = 9\nheight = 16\nconfig = ignored\n");
  RunConfig c;
  c.set("n", "2");
  c.merge_file(dir.path / "run.cfg");
  CHECK(c.str("n") == "2");
  CHECK(c.str("height") == "16");
  CHECK_FALSE(c.has("config"));
  CHECK_THROWS_AS(c.merge_file(dir.path / "missing.cfg"), InvalidArgument);
}

TEST_CASE("every command lists its keys") {
  CHECK(command_names().size() == 7);
  for (const auto& cmd : command_names()) {
    const auto& keys = command_keys(cmd);
    CHECK(keys.size() >= 3);
    CHECK(keys[0].name == "config");
  }
  const auto& sweep = command_keys("sweep");
  const bool has_jobs = std::any_of(sweep.begin(), sweep.end(), [](const KeySpec& k) { return k.name == "jobs"; });
  CHECK(has_jobs);
}

TEST_CASE("generate is deterministic and refuses to overwrite") {
  test::TempDir dir;
  RunConfig c;
  c.set("seed", "7");
  c.set("n", "4");
  c.set("height", "16");
  c.set("width", "16");
  c.set("out", (dir.path / "a").string());
  run_command("generate", c);
  c.set("out", (dir.path / "b").string());
  run_command("generate", c);
  for (const auto& e : fs::directory_iterator(dir.path / "a")) {
    const auto name = e.path().filename();
    if (name == "config.txt") continue;
    CHECK(slurp(e.path()) == slurp(dir.path / "b" / name));
  }
  CHECK(slurp(dir.path / "a" / "config.txt").find("seed = 7") != std::string::npos);
  CHECK_THROWS_WITH_AS(run_command("generate", c), doctest::Contains("--force"), InvalidArgument);
  c.set("force", "true");
  CHECK_NOTHROW(run_command("generate", c));
}

TEST_CASE("pipeline commands chain through files") {
  test::TempDir dir;
  const auto p = [&](const char* s) { return (dir.path / s).string(); };
  RunConfig g;
  g.set("seed", "3");
  g.set("n", "20");
  g.set("height", "16");
  g.set("width", "16");
  g.set("out", p("data"));
  run_command("generate", g);

  RunConfig t;
  t.set("data", p("data"));
  t.set("out", p("model"));
  t.set("epochs", "1");
  t.set("lr", "0.1");
  std::vector<std::string> lines;
  run_command("train", t, [&](const std::string& l) { lines.push_back(l); });
  CHECK(lines.size() == 1);
  CHECK(fs::exists(dir.path / "model" / "train_log.csv"));

  RunConfig cal;
  cal.set("data", p("data"));
  cal.set("checkpoint", p("model"));
  cal.set("out", p("calib"));
  run_command("calibrate", cal);
  CHECK(fs::exists(dir.path / "calib" / "thresholds.txt"));

  RunConfig a;
  a.set("data", p("data"));
  a.set("checkpoint", p("model"));
  a.set("out", p("attack"));
  a.set("kind", "fgsm");
  a.set("eps", "16");
  a.set("limit", "3");
  run_command("attack", a);
  const std::string log = slurp(dir.path / "attack" / "attack_log.csv");
  CHECK(std::count(log.begin(), log.end(), '\n') == 4);
  CHECK(fs::exists(dir.path / "attack" / "manifest.txt"));

  RunConfig d;
  d.set("data", p("attack"));
  d.set("checkpoint", p("model"));
  d.set("thresholds", p("calib"));
  d.set("out", p("detect"));
  run_command("detect", d);
  const std::string det = slurp(dir.path / "detect" / "detections.csv");
  CHECK(std::count(det.begin(), det.end(), '\n') == 4);

  RunConfig s;
  s.set("data", p("data"));
  s.set("checkpoint", p("model"));
  s.set("thresholds", p("calib"));
  s.set("out", p("sweep"));
  s.set("kinds", "gaussian");
  s.set("eps", "8");
  s.set("table4", "false");
  s.set("limit", "5");
  run_command("sweep", s);
  CHECK(fs::exists(dir.path / "sweep" / "sweep.csv"));
  CHECK(fs::exists(dir.path / "sweep" / "config.txt"));

  RunConfig missing = s;
  missing.set("checkpoint", p("nowhere"));
  missing.set("out", p("sweep2"));
  CHECK_THROWS_AS(run_command("sweep", missing), InvalidArgument);
  CHECK_FALSE(fs::exists(dir.path / "sweep2"));
}
