#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "edgeguard/array.hpp"

namespace edgeguard {

struct SceneSpec {
  int height = 64;
  int width = 64;
  int num_classes = 5;
  int num_shapes = 6;
  double depth_min = 1.0;
  double depth_max = 50.0;
  int texture_amplitude = 6;  // in 8-bit levels
  std::uint64_t seed = 0;

  void validate() const;
};

struct Sample {
  std::uint64_t seed = 0;
  ImageTensor image;
  DepthMap depth_gt;
  SegLabelMap labels_gt;
};

/// Layered synthetic scene: background class 1 with a vertical depth ramp,
/// then num_shapes rectangles/ellipses resolved by nearest depth. Colors are
/// class-correlated, hazed with depth and carry low-amplitude texture; all
/// pixel values are multiples of 1/255.
Sample generate_sample(const SceneSpec& spec);

enum class Split { train, val, test };

std::string split_name(Split split);
Split parse_split(const std::string& name);

/// Seed of the k-th sample of a split. Splits occupy disjoint seed ranges of
/// width 10^9 each.
std::uint64_t split_seed(Split split, std::uint64_t base_seed, std::uint64_t k);

std::vector<Sample> generate_split(const SceneSpec& spec, int n, Split split = Split::train);

/// Plain-text index of a dataset directory. Paths are relative to the
/// manifest's own directory.
struct ManifestEntry {
  std::string split;
  std::uint64_t seed = 0;
  std::string image;
  std::string depth;
  std::string labels;
};

struct Manifest {
  int num_classes = 0;
  std::vector<ManifestEntry> entries;
};

inline constexpr const char* kManifestName = "manifest.txt";

void write_manifest(const Manifest& manifest, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);
/// Accepts either a manifest file or a directory containing manifest.txt.
std::filesystem::path resolve_manifest(const std::filesystem::path& path);

Sample load_sample(const std::filesystem::path& manifest_dir, const ManifestEntry& entry);
std::vector<Sample> load_dataset(const std::filesystem::path& manifest_path);

/// Writes image/depth/label flat-array files and returns the manifest row.
ManifestEntry save_sample(const Sample& sample, const std::string& split,
                          const std::filesystem::path& dir);

}  // namespace edgeguard
