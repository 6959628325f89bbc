#include "edgeguard/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "edgeguard/error.hpp"

namespace edgeguard {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<KeySpec> with_common(std::vector<KeySpec> keys) {
  keys.insert(keys.begin(), {{"config", "", "key = value file; flags take precedence"},
                             {"seed", "", "global seed (falls back to EDGEGUARD_SEED, then 0)"},
                             {"force", "false", "allow overwriting existing outputs"}});
  return keys;
}

const std::map<std::string, std::vector<KeySpec>>& key_table() {
  static const std::map<std::string, std::vector<KeySpec>> table = [] {
    std::map<std::string, std::vector<KeySpec>> t;
    t["generate"] = with_common({
        {"out", "data", "output directory"},
        {"n", "100", "samples per split"},
        {"n_train", "0", "train samples (0 = n)"},
        {"n_val", "0", "val samples (0 = n)"},
        {"n_test", "0", "test samples (0 = n)"},
        {"splits", "train,val,test", "splits to generate"},
        {"height", "64", "image height"},
        {"width", "64", "image width"},
        {"classes", "5", "number of classes"},
        {"shapes", "6", "shapes per scene"},
        {"depth_min", "1", "nearest depth"},
        {"depth_max", "50", "farthest depth"},
        {"texture", "6", "texture amplitude in 8-bit levels"},
    });
    t["train"] = with_common({
        {"data", "data", "dataset directory or manifest"},
        {"out", "model", "checkpoint directory"},
        {"split", "train", "split to train on"},
        {"lr", "0.001", "SGD learning rate"},
        {"epochs", "40", "epochs"},
        {"batch", "8", "batch size"},
        {"mu", "0.003", "edge-consistency loss weight"},
        {"lambda", "0.1", "encoder gradient scale"},
        {"limit", "0", "use only the first N samples (0 = all)"},
    });
    t["calibrate"] = with_common({
        {"data", "data", "dataset directory or manifest"},
        {"checkpoint", "", "checkpoint directory written by train", true},
        {"out", "calib", "output directory"},
        {"split", "val", "clean calibration split"},
        {"metric", "ssim", "ssim | mae"},
        {"edge_mode", "continuous", "continuous | binary"},
        {"vote_mode", "majority", "majority | single_mx | single_xd | single_md"},
        {"top_fraction", "0.05", "kept fraction in binary edge mode"},
        {"target_fpr", "0.05", "target clean false positive rate"},
        {"gamma", "", "fixed per-pair quantile instead of the FPR search"},
        {"limit", "0", "use only the first N samples (0 = all)"},
    });
    t["attack"] = with_common({
        {"data", "data", "dataset directory or manifest"},
        {"checkpoint", "", "checkpoint directory written by train", true},
        {"out", "attack", "output directory"},
        {"split", "test", "split to perturb"},
        {"kind", "fgsm", "gaussian | salt_pepper | fgsm | bim | pgd"},
        {"eps", "8", "strength in 8-bit levels"},
        {"objective", "SD", "S | D | SD | SD+ECL(<mu>)"},
        {"steps", "10", "iterations for bim and pgd"},
        {"alpha", "0", "step size in levels (0 = eps / 4)"},
        {"random_start", "true", "pgd uniform random start"},
        {"limit", "0", "use only the first N samples (0 = all)"},
    });
    t["detect"] = with_common({
        {"data", "data", "dataset directory or manifest"},
        {"checkpoint", "", "checkpoint directory written by train", true},
        {"thresholds", "calib", "threshold file or calibrate output directory"},
        {"out", "detect", "output directory"},
        {"split", "", "only this split (empty = all entries)"},
        {"limit", "0", "use only the first N samples (0 = all)"},
    });
    t["sweep"] = with_common({
        {"data", "data", "dataset directory or manifest"},
        {"checkpoint", "", "checkpoint directory written by train", true},
        {"thresholds", "calib", "threshold file or calibrate output directory"},
        {"out", "sweep", "output directory"},
        {"split", "test", "split to evaluate"},
        {"kinds", "gaussian,salt_pepper,fgsm,bim,pgd", "perturbation kinds"},
        {"eps", "1,2,4,8,16,32", "strengths in 8-bit levels"},
        {"objective", "SD", "adversarial loss of the main grid"},
        {"steps", "10", "iterations for bim and pgd"},
        {"alpha", "0", "step size in levels (0 = eps / 4)"},
        {"table4", "true", "also run the attack-loss ablation grid"},
        {"table4_kind", "pgd", "attack used by the ablation grid"},
        {"table4_objectives", "S,D,SD,SD+ECL(0.01),SD+ECL(1)", "ablation loss modes"},
        {"roc_kind", "fgsm", "kind written to roc_ and hist_ files"},
        {"jobs", "1", "worker threads over grid cells"},
        {"limit", "0", "use only the first N samples (0 = all)"},
    });
    t["selftest"] = with_common({
        {"instances", "20", "random 8x8 instances per gradient check"},
        {"cases", "50", "random cases per metric oracle"},
    });
    return t;
  }();
  return table;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"generate", "train", "calibrate", "attack",
                                              "detect",   "sweep", "selftest"};
  return names;
}

const std::vector<KeySpec>& command_keys(const std::string& command) {
  const auto& t = key_table();
  const auto it = t.find(command);
  if (it == t.end()) throw InvalidArgument("unknown command '" + command + "'");
  return it->second;
}

void RunConfig::set(const std::string& key, const std::string& value) { values_[trim(key)] = trim(value); }

bool RunConfig::has(const std::string& key) const { return values_.count(key) != 0; }

RunConfig RunConfig::parse(const std::string& text, const std::string& origin) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos || trim(t.substr(0, eq)).empty()) {
      throw InvalidArgument(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    c.set(t.substr(0, eq), t.substr(eq + 1));
  }
  return c;
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const RunConfig file = parse(ss.str(), path.string());
  for (const auto& [k, v] : file.values_) {
    if (k == "config") continue;
    values_.emplace(k, v);
  }
}

RunConfig RunConfig::resolve(const std::string& command) const {
  const auto& keys = command_keys(command);
  RunConfig out;
  for (const auto& [k, v] : values_) {
    const bool known = std::any_of(keys.begin(), keys.end(), [&](const KeySpec& s) { return s.name == k; });
    if (!known) throw InvalidArgument("unknown option '" + k + "' for " + command);
  }
  for (const KeySpec& s : keys) {
    if (s.name == "config") continue;
    const auto it = values_.find(s.name);
    if (it != values_.end() && !(s.required && it->second.empty())) {
      out.values_[s.name] = it->second;
    } else if (s.required) {
      throw InvalidArgument("missing required option --" + s.name);
    } else if (!s.default_value.empty()) {
      out.values_[s.name] = s.default_value;
    }
  }
  if (!out.has("seed")) {
    const char* env = std::getenv("EDGEGUARD_SEED");
    out.values_["seed"] = env != nullptr && *env != '\0' ? env : "0";
  }
  out.seed();  // validates
  return out;
}

std::string RunConfig::str(const std::string& key) const {
  const auto it = values_.find(key);
  return it == values_.end() ? std::string() : it->second;
}

double RunConfig::real(const std::string& key) const {
  const std::string s = str(key);
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno != 0) {
    throw InvalidArgument("option " + key + " expects a number, got '" + s + "'");
  }
  return v;
}

long long RunConfig::integer(const std::string& key) const {
  const std::string s = str(key);
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || errno != 0) {
    throw InvalidArgument("option " + key + " expects an integer, got '" + s + "'");
  }
  return v;
}

std::uint64_t RunConfig::seed() const {
  const std::string s = str("seed");
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || s[0] == '-' || end != s.c_str() + s.size() || errno != 0) {
    throw InvalidArgument("seed expects a non-negative integer, got '" + s + "'");
  }
  return v;
}

bool RunConfig::flag(const std::string& key) const {
  const std::string s = str(key);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off" || s.empty()) return false;
  throw InvalidArgument("option " + key + " expects true or false, got '" + s + "'");
}

std::vector<std::string> RunConfig::list(const std::string& key) const {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(str(key));
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> RunConfig::reals(const std::string& key) const {
  std::vector<double> out;
  for (const std::string& s : list(key)) {
    RunConfig one;
    one.set("v", s);
    try {
      out.push_back(one.real("v"));
    } catch (const InvalidArgument&) {
      throw InvalidArgument("option " + key + " expects numbers, got '" + s + "'");
    }
  }
  return out;
}

std::string RunConfig::dump() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

}  // namespace edgeguard
