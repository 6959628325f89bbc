#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace edgeguard {

struct KeySpec {
  std::string name;
  std::string default_value;  // empty with required = true means no default
  std::string help;
  bool required = false;
};

/// Commands in CLI order: generate, train, calibrate, attack, detect, sweep, selftest.
const std::vector<std::string>& command_names();
/// Keys accepted by a command, including the shared ones (config, seed, force).
const std::vector<KeySpec>& command_keys(const std::string& command);

/// Flat key = value settings. Blank lines and lines starting with '#' are
/// ignored; whitespace around keys and values is trimmed.
class RunConfig {
 public:
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;
  const std::map<std::string, std::string>& values() const { return values_; }

  /// Adds entries from a file; keys already present keep their value.
  void merge_file(const std::filesystem::path& path);
  static RunConfig parse(const std::string& text, const std::string& origin = "config");

  /// Checks keys against the command, fills defaults and the seed fallback
  /// (EDGEGUARD_SEED, then 0). Missing required keys and unknown keys throw.
  RunConfig resolve(const std::string& command) const;

  std::string str(const std::string& key) const;
  double real(const std::string& key) const;
  long long integer(const std::string& key) const;
  std::uint64_t seed() const;
  bool flag(const std::string& key) const;
  std::vector<std::string> list(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;

  std::string dump() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace edgeguard
