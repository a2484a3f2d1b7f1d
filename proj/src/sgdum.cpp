#include "liddense/sgdum.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "liddense/depth_io.hpp"

namespace liddense::sgdum {

void SgdumConfig::validate() const {
  if (kernel < 1 || kernel % 2 == 0) {
    throw std::invalid_argument("sgdum: kernel size must be odd, got " + std::to_string(kernel));
  }
  if (scale < 1) throw std::invalid_argument("sgdum: scale must be >= 1");
  if (in_channels == 0 || out_channels == 0) {
    throw std::invalid_argument("sgdum: channel counts must be positive");
  }
}

SgdumParams SgdumParams::create(nn::Initializer& init, const std::string& name,
                                const SgdumConfig& config) {
  config.validate();
  using ops::Conv2dOptions;
  const std::size_t taps = static_cast<std::size_t>(config.kernel) * config.kernel;
  const std::size_t s2 = static_cast<std::size_t>(config.scale) * config.scale;
  SgdumParams p;
  p.config = config;
  p.compress = nn::Conv2d::create(init, name + ".compress", config.in_channels,
                                  config.mid_channels(), 1, 1, {});
  p.encoder = nn::Conv2d::create(init, name + ".encoder", config.mid_channels(), s2 * taps, 3, 3,
                                 Conv2dOptions::same(3, 3));
  p.output = nn::Conv2d::create(init, name + ".output", config.in_channels, config.out_channels,
                                1, 1, {});
  return p;
}

namespace {

void check_input(const Tensor& x, const SgdumConfig& cfg) {
  if (x.rank() != 3 || x.dim(0) != cfg.in_channels) {
    throw ShapeError("sgdum: expected input [" + std::to_string(cfg.in_channels) + ",H,W], got " +
                     shape_string(x.shape()));
  }
}

}  // namespace

SemanticKernels generate_kernels(const Tensor& x, const SgdumParams& p) {
  p.config.validate();
  check_input(x, p.config);
  const Tensor compressed = p.compress(x);
  const Tensor logits = ops::pixel_shuffle(p.encoder(compressed), p.config.scale);
  return {ops::channel_softmax(logits), p.config.kernel, p.config.scale};
}

Tensor reassemble_gather(const Tensor& upsampled, const Tensor& kernels, int kernel, int dilation,
                         ops::PadMode padding) {
  if (upsampled.rank() != 3 || kernels.rank() != 3) {
    throw ShapeError("reassemble_gather: expected [C,H,W] tensors");
  }
  const std::size_t C = upsampled.dim(0), H = upsampled.dim(1), W = upsampled.dim(2);
  const std::size_t taps = static_cast<std::size_t>(kernel) * kernel;
  if (kernels.dim(0) != taps || kernels.dim(1) != H || kernels.dim(2) != W) {
    throw ShapeError("reassemble_gather: kernels " + shape_string(kernels.shape()) +
                     " incompatible with features " + shape_string(upsampled.shape()));
  }
  const int half = kernel / 2;
  // Source pixel index for each (tap, position); -1 marks a zero-padded tap.
  auto source = std::make_shared<std::vector<long>>(taps * H * W);
  for (int i = 0; i < kernel; ++i) {
    for (int j = 0; j < kernel; ++j) {
      const std::size_t t = static_cast<std::size_t>(i) * kernel + j;
      for (std::size_t y = 0; y < H; ++y) {
        for (std::size_t x = 0; x < W; ++x) {
          long sy = static_cast<long>(y) + static_cast<long>(i - half) * dilation;
          long sx = static_cast<long>(x) + static_cast<long>(j - half) * dilation;
          const bool inside = sy >= 0 && sy < static_cast<long>(H) && sx >= 0 &&
                              sx < static_cast<long>(W);
          long idx = -1;
          if (inside) {
            idx = sy * static_cast<long>(W) + sx;
          } else if (padding == ops::PadMode::kReplicate) {
            sy = std::clamp(sy, 0L, static_cast<long>(H) - 1);
            sx = std::clamp(sx, 0L, static_cast<long>(W) - 1);
            idx = sy * static_cast<long>(W) + sx;
          }
          (*source)[(t * H + y) * W + x] = idx;
        }
      }
    }
  }

  const std::size_t plane = H * W;
  const auto fv = upsampled.values();
  const auto kv = kernels.values();
  std::vector<double> out(C * plane, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    const double* fc = fv.data() + c * plane;
    double* oc = out.data() + c * plane;
    for (std::size_t t = 0; t < taps; ++t) {
      const double* kt = kv.data() + t * plane;
      const long* st = source->data() + t * plane;
      for (std::size_t k = 0; k < plane; ++k) {
        if (st[k] >= 0) oc[k] += kt[k] * fc[st[k]];
      }
    }
  }

  return Tensor::make_result("reassemble", {C, H, W}, std::move(out), {upsampled, kernels},
                             [source, C, plane, taps](detail::Node& self) {
    const Tensor& feat = self.inputs[0];
    const Tensor& kern = self.inputs[1];
    double* gf = detail::grad_ptr(feat);
    double* gk = detail::grad_ptr(kern);
    const double f = fault::factor("reassemble");
    const auto fv = feat.values();
    const auto kv = kern.values();
    for (std::size_t c = 0; c < C; ++c) {
      const double* fc = fv.data() + c * plane;
      const double* gc = self.grad.data() + c * plane;
      for (std::size_t t = 0; t < taps; ++t) {
        const double* kt = kv.data() + t * plane;
        const long* st = source->data() + t * plane;
        for (std::size_t k = 0; k < plane; ++k) {
          const long s = st[k];
          if (s < 0) continue;
          if (gk) gk[t * plane + k] += gc[k] * fc[s];
          if (gf) gf[c * plane + s] += f * kt[k] * gc[k];
        }
      }
    }
  });
}

Tensor reassemble_features(const Tensor& x, const SemanticKernels& kernels, ops::PadMode padding) {
  const Tensor up = ops::nearest_upsample(x, kernels.scale);
  return reassemble_gather(up, kernels.weights, kernels.kernel, kernels.scale, padding);
}

Tensor reassemble(const Tensor& x, const SemanticKernels& kernels, const SgdumParams& p) {
  check_input(x, p.config);
  return p.output(reassemble_features(x, kernels, p.config.gather_padding));
}

Tensor sgdum_forward(const Tensor& x, const SgdumParams& p) {
  return reassemble(x, generate_kernels(x, p), p);
}

}  // namespace liddense::sgdum
