#include "edgeguard/array.hpp"

#include <cmath>
#include <string>

namespace edgeguard {
namespace {

void require_finite_range(std::span<const float> v, float lo, float hi, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] >= lo && v[i] <= hi)) {
      throw RangeError(std::string(what) + ": element " + std::to_string(i) + " = " +
                       std::to_string(v[i]) + " outside [" + std::to_string(lo) + ", " +
                       std::to_string(hi) + "]");
    }
  }
}

}  // namespace

ImageTensor::ImageTensor(Grid<float> data) : data_(std::move(data)) {
  if (data_.channels() != 1 && data_.channels() != 3) {
    throw ShapeError("image must have 1 or 3 channels, got " + std::to_string(data_.channels()));
  }
  require_finite_range(data_.values(), 0.0f, 1.0f, "image");
}

ImageTensor ImageTensor::from_doubles(const Grid<double>& data) {
  return ImageTensor(grid_cast<float>(data));
}

DepthMap::DepthMap(Grid<float> data) : data_(std::move(data)) {
  if (data_.channels() != 1) throw ShapeError("depth map must have a single channel");
  require_finite_range(data_.values(), static_cast<float>(kMinDepth), static_cast<float>(kMaxDepth),
                       "depth");
}

DepthMap DepthMap::from_doubles(const Grid<double>& data) { return DepthMap(grid_cast<float>(data)); }

SegProbMap::SegProbMap(Grid<float> data) : data_(std::move(data)) {
  require_finite_range(data_.values(), 0.0f, 1.0f, "segmentation probability");
  const int s = data_.channels();
  for (std::size_t p = 0; p < data_.pixels(); ++p) {
    double sum = 0.0;
    for (int c = 0; c < s; ++c) sum += data_[p * s + c];
    if (std::abs(sum - 1.0) > kSumTolerance) {
      throw RangeError("segmentation probabilities at pixel " + std::to_string(p) + " sum to " +
                       std::to_string(sum));
    }
  }
}

SegProbMap SegProbMap::from_doubles(const Grid<double>& data) {
  return SegProbMap(grid_cast<float>(data));
}

SegLabelMap::SegLabelMap(Grid<std::uint16_t> labels, int num_classes)
    : labels_(std::move(labels)), num_classes_(num_classes) {
  if (labels_.channels() != 1) throw ShapeError("label map must have a single channel");
  if (num_classes < 1 || num_classes > 65535) throw InvalidArgument("invalid class count");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 1 || labels_[i] > num_classes) {
      throw RangeError("label " + std::to_string(labels_[i]) + " outside {1.." +
                       std::to_string(num_classes) + "}");
    }
  }
}

Grid<double> SegLabelMap::one_hot() const {
  Grid<double> out(height(), width(), num_classes_, 0.0);
  for (std::size_t p = 0; p < labels_.pixels(); ++p) {
    out[p * num_classes_ + (labels_[p] - 1)] = 1.0;
  }
  return out;
}

SegLabelMap argmax_labels(const Grid<double>& probs) {
  const int s = probs.channels();
  Grid<std::uint16_t> labels(probs.height(), probs.width(), 1, 1);
  for (std::size_t p = 0; p < probs.pixels(); ++p) {
    int best = 0;
    for (int c = 1; c < s; ++c) {
      if (probs[p * s + c] > probs[p * s + best]) best = c;
    }
    labels[p] = static_cast<std::uint16_t>(best + 1);
  }
  return SegLabelMap(std::move(labels), s);
}

SegLabelMap argmax_labels(const SegProbMap& probs) { return argmax_labels(probs.to_doubles()); }

}  // namespace edgeguard
