#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "edgeguard/error.hpp"

namespace edgeguard {

/// Dense row-major H x W x C container. Element (y, x, c) lives at
/// ((y * W) + x) * C + c.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, int channels, T fill = T{})
      : height_(height), width_(width), channels_(channels) {
    if (height < 0 || width < 0 || channels < 1) {
      throw ShapeError("grid dimensions must be non-negative with at least one channel");
    }
    data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
  }
  Grid(int height, int width, int channels, std::vector<T> data)
      : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
    if (height < 0 || width < 0 || channels < 1 ||
        data_.size() != static_cast<std::size_t>(height) * width * channels) {
      throw ShapeError("grid data length does not match its dimensions");
    }
  }

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t pixels() const { return static_cast<std::size_t>(height_) * width_; }
  std::size_t size() const { return data_.size(); }

  T& at(int y, int x, int c = 0) { return data_[index(y, x, c)]; }
  const T& at(int y, int x, int c = 0) const { return data_[index(y, x, c)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::size_t index(int y, int x, int c = 0) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  bool same_shape(const Grid& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }
  template <typename U>
  bool same_extent(const Grid<U>& other) const {
    return height_ == other.height() && width_ == other.width();
  }

  bool operator==(const Grid&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 1;
  std::vector<T> data_;
};

using Plane = Grid<double>;

template <typename To, typename From>
Grid<To> grid_cast(const Grid<From>& g) {
  std::vector<To> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = static_cast<To>(g[i]);
  return Grid<To>(g.height(), g.width(), g.channels(), std::move(out));
}

inline constexpr double kMinDepth = 0.1;
inline constexpr double kMaxDepth = 100.0;

/// Network input x_t: 1 or 3 channels, every value in [0, 1].
class ImageTensor {
 public:
  ImageTensor() = default;
  explicit ImageTensor(Grid<float> data);
  /// Converts and validates; values must already lie in [0, 1].
  static ImageTensor from_doubles(const Grid<double>& data);

  int height() const { return data_.height(); }
  int width() const { return data_.width(); }
  int channels() const { return data_.channels(); }
  const Grid<float>& grid() const { return data_; }
  Grid<double> to_doubles() const { return grid_cast<double>(data_); }

  bool operator==(const ImageTensor&) const = default;

 private:
  Grid<float> data_;
};

/// Depth in scene units, constrained to [0.1, 100].
class DepthMap {
 public:
  DepthMap() = default;
  explicit DepthMap(Grid<float> data);
  static DepthMap from_doubles(const Grid<double>& data);

  int height() const { return data_.height(); }
  int width() const { return data_.width(); }
  const Grid<float>& grid() const { return data_; }
  Grid<double> to_doubles() const { return grid_cast<double>(data_); }

  bool operator==(const DepthMap&) const = default;

 private:
  Grid<float> data_;
};

/// Per-pixel class probabilities; channel s holds class s + 1.
class SegProbMap {
 public:
  static constexpr double kSumTolerance = 1e-5;

  SegProbMap() = default;
  explicit SegProbMap(Grid<float> data);
  static SegProbMap from_doubles(const Grid<double>& data);

  int height() const { return data_.height(); }
  int width() const { return data_.width(); }
  int num_classes() const { return data_.channels(); }
  const Grid<float>& grid() const { return data_; }
  Grid<double> to_doubles() const { return grid_cast<double>(data_); }

  bool operator==(const SegProbMap&) const = default;

 private:
  Grid<float> data_;
};

/// Class ids are 1-based in memory, {1, ..., num_classes}. The flat-array
/// file stores them 0-based (see array_io.hpp).
class SegLabelMap {
 public:
  SegLabelMap() = default;
  SegLabelMap(Grid<std::uint16_t> labels, int num_classes);

  int height() const { return labels_.height(); }
  int width() const { return labels_.width(); }
  int num_classes() const { return num_classes_; }
  const Grid<std::uint16_t>& grid() const { return labels_; }
  int at(int y, int x) const { return labels_.at(y, x); }

  /// One-hot encoding, H x W x num_classes.
  Grid<double> one_hot() const;

  bool operator==(const SegLabelMap&) const = default;

 private:
  Grid<std::uint16_t> labels_;
  int num_classes_ = 0;
};

/// Per-pixel argmax; ties go to the lowest class id.
SegLabelMap argmax_labels(const SegProbMap& probs);
SegLabelMap argmax_labels(const Grid<double>& probs);

}  // namespace edgeguard
