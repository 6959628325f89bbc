#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "edgeguard/array.hpp"

namespace edgeguard {

/// Shared encoder (two 3x3 convolutions 3->16->16 with ReLU, zero padding)
/// feeding a 1x1 softmax segmentation head and a 1x1 sigmoid depth head.
/// Depth is decoded as 1 / (a * sigma + b), which spans [0.1, 100].
class ToyNet {
 public:
  static constexpr int kInputChannels = 3;
  static constexpr int kHidden = 16;
  static constexpr double kDepthA = 9.99;
  static constexpr double kDepthB = 0.01;

  struct Layer {
    std::string name;
    std::vector<std::uint32_t> shape;
    std::size_t offset = 0;
    std::size_t size = 0;
    bool encoder = false;

    bool operator==(const Layer&) const = default;
  };

  explicit ToyNet(int num_classes = 5);

  /// He-normal convolution weights, zero biases, depth bias set so the
  /// initial depth sits mid-range in log space.
  static ToyNet initialized(int num_classes, std::uint64_t seed);

  int num_classes() const { return num_classes_; }
  const std::vector<Layer>& layers() const { return layers_; }
  const Layer& layer(const std::string& name) const;
  /// Parameters [0, encoder_size()) belong to the shared encoder.
  std::size_t encoder_size() const { return encoder_size_; }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  // Weight layouts: conv (ky, kx, in, out); heads (in, out).
  const double* conv1_w() const { return params_.data() + layers_[0].offset; }
  const double* conv1_b() const { return params_.data() + layers_[1].offset; }
  const double* conv2_w() const { return params_.data() + layers_[2].offset; }
  const double* conv2_b() const { return params_.data() + layers_[3].offset; }
  const double* seg_w() const { return params_.data() + layers_[4].offset; }
  const double* seg_b() const { return params_.data() + layers_[5].offset; }
  const double* depth_w() const { return params_.data() + layers_[6].offset; }
  const double* depth_b() const { return params_.data() + layers_[7].offset; }

  bool all_finite() const;

  /// Checkpoint directory: one f64 flat array per layer plus manifest.txt
  /// listing name and shape per line.
  void save(const std::filesystem::path& dir) const;
  static ToyNet load(const std::filesystem::path& dir);

  bool operator==(const ToyNet&) const = default;

 private:
  int num_classes_;
  std::vector<Layer> layers_;
  std::size_t encoder_size_ = 0;
  std::vector<double> params_;
};

/// Activations retained for backpropagation.
struct ForwardCache {
  Grid<double> input;   // H x W x 3
  Grid<double> z1, a1;  // conv1 pre/post ReLU
  Grid<double> z2, a2;  // conv2 pre/post ReLU (encoder output)
  Grid<double> logits;  // H x W x |S|
  Grid<double> probs;
  Plane sigma;
  Plane inverse_depth;  // a * sigma + b
  Plane depth;
};

/// One shared-encoder pass producing both task outputs. Throws NumericError
/// on non-finite activations.
ForwardCache forward(const ToyNet& net, const Grid<double>& image);

struct NetOutputs {
  SegProbMap probs;
  DepthMap depth;
  ForwardCache cache;
};
NetOutputs forward(const ToyNet& net, const ImageTensor& image);

/// Backpropagates head gradients through the network.
///   grad_logits: dL/d(seg logits), H x W x |S| (may be empty)
///   grad_sigma:  dL/d(sigma), H x W (may be empty)
///   encoder_scale: multiplies the gradient where it enters the encoder
///   param_grad: accumulated into if non-null (size = params().size())
///   input_grad: overwritten with dL/d(input) if non-null
void backward(const ToyNet& net, const ForwardCache& cache, const Grid<double>& grad_logits,
              const Plane& grad_sigma, double encoder_scale, std::vector<double>* param_grad,
              Grid<double>* input_grad);

/// Softmax Jacobian-vector product: dL/d(logits) from dL/d(probs).
Grid<double> softmax_backward(const Grid<double>& probs, const Grid<double>& grad_probs);

}  // namespace edgeguard
