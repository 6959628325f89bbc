#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <variant>
#include <vector>

#include "edgeguard/array.hpp"

namespace edgeguard {

// Flat-array container ("EGARRAY1"):
//
//   offset  size  field
//   0       8     magic "EGARRAY1"
//   8       4     ndim (1..4)
//   12      16    dim0..dim3 (unused slots 0, except below)
//   28      4     dtype: 0=u8, 1=f32, 2=f64, 3=u16 labels
//   32      ...   row-major payload
//
// All integers and floats are little-endian. Layouts per kind:
//   image   f32  ndim 3 (H, W, C)
//   depth   f32  ndim 2 (H, W)
//   probs   f32  ndim 3 (H, W, |S|)
//   labels  u16  ndim 2 (H, W), dim3 = |S|; stored 0-based (id - 1)
//   edges   f64  ndim 3 (2, H, W), plane 0 = height direction; dim3 = 1 if binary
//   params  f64  ndim 1..4

enum class DType : std::uint32_t { u8 = 0, f32 = 1, f64 = 2, u16_labels = 3 };

inline constexpr std::size_t kFlatHeaderBytes = 32;

struct FlatArray {
  DType dtype = DType::f32;
  std::uint32_t ndim = 0;
  std::array<std::uint32_t, 4> dims{};
  std::vector<std::byte> payload;

  std::size_t element_count() const;
};

std::size_t dtype_size(DType dtype);

FlatArray read_flat(const std::filesystem::path& path);
void write_flat(const std::filesystem::path& path, const FlatArray& array);

std::vector<std::byte> encode_flat(const FlatArray& array);
FlatArray decode_flat(std::span<const std::byte> bytes);

ImageTensor load_image(const std::filesystem::path& path);
DepthMap load_depth(const std::filesystem::path& path);
SegProbMap load_probs(const std::filesystem::path& path);
SegLabelMap load_labels(const std::filesystem::path& path);
std::vector<double> load_f64(const std::filesystem::path& path, std::vector<std::uint32_t>* shape = nullptr);

void save_image(const ImageTensor& image, const std::filesystem::path& path);
void save_depth(const DepthMap& depth, const std::filesystem::path& path);
void save_probs(const SegProbMap& probs, const std::filesystem::path& path);
void save_labels(const SegLabelMap& labels, const std::filesystem::path& path);
void save_f64(std::span<const double> values, std::span<const std::uint32_t> shape,
              const std::filesystem::path& path);

enum class ArrayKind { image, depth, probs, labels };
using AnyArray = std::variant<ImageTensor, DepthMap, SegProbMap, SegLabelMap>;

/// Loads a flat-array file as the requested kind; the header's dtype and
/// rank must match the kind's layout.
AnyArray load_array(const std::filesystem::path& path, ArrayKind kind);

/// Binary netpbm: P5 (1 channel) or P6 (3 channels), maxval 255. Values map
/// v / 255 on load and round(v * 255) on save.
ImageTensor load_ppm(const std::filesystem::path& path);
void save_ppm(const ImageTensor& image, const std::filesystem::path& path);

std::vector<std::byte> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes);

}  // namespace edgeguard
