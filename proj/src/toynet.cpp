#include "edgeguard/toynet.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "edgeguard/array_io.hpp"
#include "edgeguard/rng.hpp"

namespace edgeguard {
namespace {

constexpr int kIn = ToyNet::kInputChannels;
constexpr int kHid = ToyNet::kHidden;

// 3x3 "same" convolution, zero padding, HWC layout, weights (ky, kx, in, out).
void conv3x3_forward(const Grid<double>& in, const double* w, const double* b, int cout, Grid<double>& out) {
  const int h = in.height();
  const int wd = in.width();
  const int cin = in.channels();
  out = Grid<double>(h, wd, cout, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < wd; ++x) {
      double* o = &out.at(y, x, 0);
      for (int k = 0; k < cout; ++k) o[k] = b[k];
      for (int ky = 0; ky < 3; ++ky) {
        const int sy = y + ky - 1;
        if (sy < 0 || sy >= h) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int sx = x + kx - 1;
          if (sx < 0 || sx >= wd) continue;
          const double* src = &in.at(sy, sx, 0);
          const double* wk = w + static_cast<std::size_t>((ky * 3 + kx) * cin) * cout;
          for (int i = 0; i < cin; ++i) {
            const double v = src[i];
            const double* wr = wk + static_cast<std::size_t>(i) * cout;
            for (int k = 0; k < cout; ++k) o[k] += v * wr[k];
          }
        }
      }
    }
  }
}

// Accumulates weight/bias gradients; writes input gradient if gin != nullptr.
void conv3x3_backward(const Grid<double>& in, const double* w, const Grid<double>& gout, double* gw,
                      double* gb, Grid<double>* gin) {
  const int h = in.height();
  const int wd = in.width();
  const int cin = in.channels();
  const int cout = gout.channels();
  if (gin) *gin = Grid<double>(h, wd, cin, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < wd; ++x) {
      const double* g = &gout.at(y, x, 0);
      if (gb) {
        for (int k = 0; k < cout; ++k) gb[k] += g[k];
      }
      for (int ky = 0; ky < 3; ++ky) {
        const int sy = y + ky - 1;
        if (sy < 0 || sy >= h) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int sx = x + kx - 1;
          if (sx < 0 || sx >= wd) continue;
          const double* src = &in.at(sy, sx, 0);
          const std::size_t base = static_cast<std::size_t>((ky * 3 + kx) * cin) * cout;
          double* gsrc = gin ? &gin->at(sy, sx, 0) : nullptr;
          for (int i = 0; i < cin; ++i) {
            const std::size_t row = base + static_cast<std::size_t>(i) * cout;
            if (gw) {
              const double v = src[i];
              double* gwr = gw + row;
              for (int k = 0; k < cout; ++k) gwr[k] += v * g[k];
            }
            if (gsrc) {
              const double* wr = w + row;
              double acc = 0.0;
              for (int k = 0; k < cout; ++k) acc += wr[k] * g[k];
              gsrc[i] += acc;
            }
          }
        }
      }
    }
  }
}

void require_finite(const Grid<double>& g, const char* what) {
  for (double v : g.values()) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite value in ") + what);
  }
}

}  // namespace

ToyNet::ToyNet(int num_classes) : num_classes_(num_classes) {
  if (num_classes < 2) throw InvalidArgument("the network needs at least two classes");
  const auto s = static_cast<std::uint32_t>(num_classes);
  auto add = [&](std::string name, std::vector<std::uint32_t> shape, bool encoder) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    const std::size_t offset = layers_.empty() ? 0 : layers_.back().offset + layers_.back().size;
    layers_.push_back(Layer{std::move(name), std::move(shape), offset, n, encoder});
  };
  add("conv1.weight", {3, 3, kIn, kHid}, true);
  add("conv1.bias", {kHid}, true);
  add("conv2.weight", {3, 3, kHid, kHid}, true);
  add("conv2.bias", {kHid}, true);
  encoder_size_ = layers_.back().offset + layers_.back().size;
  add("seg.weight", {kHid, s}, false);
  add("seg.bias", {s}, false);
  add("depth.weight", {kHid}, false);
  add("depth.bias", {1}, false);
  params_.assign(layers_.back().offset + layers_.back().size, 0.0);
}

ToyNet ToyNet::initialized(int num_classes, std::uint64_t seed) {
  ToyNet net(num_classes);
  Rng rng(derive_seed(seed, 0x1417));
  auto fill = [&](const std::string& name, double stddev) {
    const Layer& l = net.layer(name);
    for (std::size_t i = 0; i < l.size; ++i) net.params_[l.offset + i] = stddev * rng.normal();
  };
  fill("conv1.weight", std::sqrt(2.0 / (9.0 * kIn)));
  fill("conv2.weight", std::sqrt(2.0 / (9.0 * kHid)));
  fill("seg.weight", 0.1 / std::sqrt(static_cast<double>(kHid)));
  fill("depth.weight", 0.1 / std::sqrt(static_cast<double>(kHid)));
  // sigma such that depth = sqrt(50), the log-midpoint of the default scene range
  const double sigma0 = (1.0 / std::sqrt(50.0) - kDepthB) / kDepthA;
  net.params_[net.layer("depth.bias").offset] = std::log(sigma0 / (1.0 - sigma0));
  return net;
}

const ToyNet::Layer& ToyNet::layer(const std::string& name) const {
  for (const auto& l : layers_) {
    if (l.name == name) return l;
  }
  throw InvalidArgument("no layer named " + name);
}

bool ToyNet::all_finite() const {
  for (double v : params_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void ToyNet::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.txt", std::ios::trunc);
  if (!manifest) throw IoError("cannot write checkpoint manifest in " + dir.string());
  manifest << "# edgeguard checkpoint v1\n";
  manifest << "classes " << num_classes_ << "\n";
  for (const auto& l : layers_) {
    manifest << "layer " << l.name << ' ' << l.name << ".egarr";
    for (auto d : l.shape) manifest << ' ' << d;
    manifest << '\n';
    save_f64(std::span<const double>(params_.data() + l.offset, l.size), l.shape, dir / (l.name + ".egarr"));
  }
  if (!manifest) throw IoError("checkpoint manifest write failed");
}

ToyNet ToyNet::load(const std::filesystem::path& dir) {
  std::ifstream manifest(dir / "manifest.txt");
  if (!manifest) throw IoError("no checkpoint manifest in " + dir.string());
  int classes = 0;
  std::vector<std::pair<std::string, std::string>> files;
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "classes") {
      ls >> classes;
    } else if (tag == "layer") {
      std::string name, file;
      ls >> name >> file;
      files.emplace_back(name, file);
    } else {
      throw FormatError("unknown checkpoint manifest tag '" + tag + "'");
    }
  }
  ToyNet net(classes);
  if (files.size() != net.layers_.size()) throw FormatError("checkpoint layer count mismatch");
  for (std::size_t i = 0; i < files.size(); ++i) {
    const Layer& l = net.layers_[i];
    if (files[i].first != l.name) throw FormatError("unexpected checkpoint layer " + files[i].first);
    std::vector<std::uint32_t> shape;
    const auto values = load_f64(dir / files[i].second, &shape);
    if (shape != l.shape) throw ShapeError("checkpoint layer " + l.name + " has the wrong shape");
    std::copy(values.begin(), values.end(), net.params_.begin() + static_cast<std::ptrdiff_t>(l.offset));
  }
  if (!net.all_finite()) throw NumericError("checkpoint holds non-finite parameters");
  return net;
}

ForwardCache forward(const ToyNet& net, const Grid<double>& image) {
  if (image.channels() != kIn) throw ShapeError("network input must have 3 channels");
  const int h = image.height();
  const int w = image.width();
  const int s = net.num_classes();
  ForwardCache c;
  c.input = image;
  conv3x3_forward(image, net.conv1_w(), net.conv1_b(), kHid, c.z1);
  c.a1 = c.z1;
  for (double& v : c.a1.storage()) v = v > 0.0 ? v : 0.0;
  conv3x3_forward(c.a1, net.conv2_w(), net.conv2_b(), kHid, c.z2);
  c.a2 = c.z2;
  for (double& v : c.a2.storage()) v = v > 0.0 ? v : 0.0;

  c.logits = Grid<double>(h, w, s, 0.0);
  c.probs = Grid<double>(h, w, s, 0.0);
  c.sigma = Plane(h, w, 1, 0.0);
  c.inverse_depth = Plane(h, w, 1, 0.0);
  c.depth = Plane(h, w, 1, 0.0);
  const double* sw = net.seg_w();
  const double* sb = net.seg_b();
  const double* dw = net.depth_w();
  const double db = net.depth_b()[0];
  for (std::size_t p = 0; p < c.a2.pixels(); ++p) {
    const double* f = &c.a2[p * kHid];
    double* z = &c.logits[p * s];
    for (int k = 0; k < s; ++k) z[k] = sb[k];
    double u = db;
    for (int i = 0; i < kHid; ++i) {
      const double v = f[i];
      for (int k = 0; k < s; ++k) z[k] += v * sw[i * s + k];
      u += v * dw[i];
    }
    double zmax = z[0];
    for (int k = 1; k < s; ++k) zmax = std::max(zmax, z[k]);
    double total = 0.0;
    double* pr = &c.probs[p * s];
    for (int k = 0; k < s; ++k) {
      pr[k] = std::exp(z[k] - zmax);
      total += pr[k];
    }
    for (int k = 0; k < s; ++k) pr[k] /= total;
    const double sig = 1.0 / (1.0 + std::exp(-u));
    c.sigma[p] = sig;
    c.inverse_depth[p] = ToyNet::kDepthA * sig + ToyNet::kDepthB;
    c.depth[p] = 1.0 / c.inverse_depth[p];
  }
  require_finite(c.probs, "segmentation output");
  require_finite(c.depth, "depth output");
  return c;
}

NetOutputs forward(const ToyNet& net, const ImageTensor& image) {
  ForwardCache cache = forward(net, image.to_doubles());
  SegProbMap probs = SegProbMap::from_doubles(cache.probs);
  DepthMap depth = DepthMap::from_doubles(cache.depth);
  return NetOutputs{std::move(probs), std::move(depth), std::move(cache)};
}

Grid<double> softmax_backward(const Grid<double>& probs, const Grid<double>& grad_probs) {
  const int s = probs.channels();
  Grid<double> g(probs.height(), probs.width(), s, 0.0);
  for (std::size_t p = 0; p < probs.pixels(); ++p) {
    double dot = 0.0;
    for (int k = 0; k < s; ++k) dot += grad_probs[p * s + k] * probs[p * s + k];
    for (int k = 0; k < s; ++k) g[p * s + k] = probs[p * s + k] * (grad_probs[p * s + k] - dot);
  }
  return g;
}

void backward(const ToyNet& net, const ForwardCache& c, const Grid<double>& grad_logits,
              const Plane& grad_sigma, double encoder_scale, std::vector<double>* param_grad,
              Grid<double>* input_grad) {
  const int h = c.a2.height();
  const int w = c.a2.width();
  const int s = net.num_classes();
  const bool has_seg = grad_logits.size() != 0;
  const bool has_depth = grad_sigma.size() != 0;
  if (has_seg && (grad_logits.height() != h || grad_logits.width() != w || grad_logits.channels() != s)) {
    throw ShapeError("segmentation gradient shape mismatch");
  }
  if (has_depth && (grad_sigma.height() != h || grad_sigma.width() != w)) {
    throw ShapeError("depth gradient shape mismatch");
  }
  if (param_grad && param_grad->size() != net.params().size()) {
    throw ShapeError("parameter gradient buffer has the wrong size");
  }
  auto slot = [&](std::size_t layer) -> double* {
    return param_grad ? param_grad->data() + net.layers()[layer].offset : nullptr;
  };

  // Heads.
  Grid<double> g_a2(h, w, kHid, 0.0);
  const double* sw = net.seg_w();
  const double* dw = net.depth_w();
  double* g_sw = slot(4);
  double* g_sb = slot(5);
  double* g_dw = slot(6);
  double* g_db = slot(7);
  for (std::size_t p = 0; p < c.a2.pixels(); ++p) {
    const double* f = &c.a2[p * kHid];
    double* gf = &g_a2[p * kHid];
    if (has_seg) {
      const double* gz = &grad_logits[p * s];
      for (int i = 0; i < kHid; ++i) {
        double acc = 0.0;
        for (int k = 0; k < s; ++k) {
          acc += sw[i * s + k] * gz[k];
          if (g_sw) g_sw[i * s + k] += f[i] * gz[k];
        }
        gf[i] += acc;
      }
      if (g_sb) {
        for (int k = 0; k < s; ++k) g_sb[k] += gz[k];
      }
    }
    if (has_depth) {
      const double sig = c.sigma[p];
      const double gu = grad_sigma[p] * sig * (1.0 - sig);
      for (int i = 0; i < kHid; ++i) {
        gf[i] += dw[i] * gu;
        if (g_dw) g_dw[i] += f[i] * gu;
      }
      if (g_db) g_db[0] += gu;
    }
  }

  // Encoder, with the gradient scaled where it enters.
  for (std::size_t i = 0; i < g_a2.size(); ++i) {
    g_a2[i] = c.z2[i] > 0.0 ? g_a2[i] * encoder_scale : 0.0;
  }
  if (!param_grad && !input_grad) return;
  Grid<double> g_a1;
  conv3x3_backward(c.a1, net.conv2_w(), g_a2, slot(2), slot(3), &g_a1);
  for (std::size_t i = 0; i < g_a1.size(); ++i) {
    if (!(c.z1[i] > 0.0)) g_a1[i] = 0.0;
  }
  conv3x3_backward(c.input, net.conv1_w(), g_a1, slot(0), slot(1), input_grad);
  if (input_grad) require_finite(*input_grad, "input gradient");
}

}  // namespace edgeguard
