#include "liddense/nn.hpp"

#include <cmath>
#include <stdexcept>

#include "liddense/depth_io.hpp"

namespace liddense::nn {

Tensor ParameterSet::add(std::string name, Tensor t) {
  for (const auto& item : items_) {
    if (item.name == name) throw std::invalid_argument("duplicate parameter name " + name);
  }
  items_.push_back({std::move(name), t});
  return t;
}

std::vector<Tensor> ParameterSet::tensors() const {
  std::vector<Tensor> out;
  out.reserve(items_.size());
  for (const auto& item : items_) out.push_back(item.tensor);
  return out;
}

std::size_t ParameterSet::count() const {
  std::size_t n = 0;
  for (const auto& item : items_) n += item.tensor.numel();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& item : items_) item.tensor.zero_grad();
}

const Tensor& ParameterSet::find(const std::string& name) const {
  for (const auto& item : items_) {
    if (item.name == name) return item.tensor;
  }
  throw std::out_of_range("no parameter named " + name);
}

Tensor Initializer::uniform(const std::string& name, Shape shape, std::size_t fan_in) {
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng_.uniform(-bound, bound);
  return params_.add(name, Tensor::from(std::move(shape), std::move(v), true));
}

Tensor Initializer::constant(const std::string& name, Shape shape, double value) {
  return params_.add(name, Tensor::full(std::move(shape), value, true));
}

Conv2d Conv2d::create(Initializer& init, const std::string& name, std::size_t in_channels,
                      std::size_t out_channels, std::size_t kh, std::size_t kw,
                      ops::Conv2dOptions options) {
  const std::size_t fan_in = in_channels * kh * kw;
  Conv2d c;
  c.weight = init.uniform(name + ".weight", {out_channels, in_channels, kh, kw}, fan_in);
  c.bias = init.uniform(name + ".bias", {out_channels}, fan_in);
  c.options = options;
  return c;
}

TransposedConv2d TransposedConv2d::create(Initializer& init, const std::string& name,
                                          std::size_t in_channels, std::size_t out_channels,
                                          std::size_t k, ops::TransposedConv2dOptions options) {
  // fan-in taken from weight dims 1..3, as for the forward conv it transposes
  const std::size_t fan_in = out_channels * k * k;
  TransposedConv2d t;
  t.weight = init.uniform(name + ".weight", {in_channels, out_channels, k, k}, fan_in);
  t.bias = init.uniform(name + ".bias", {out_channels}, fan_in);
  t.options = options;
  return t;
}

ChannelAffine ChannelAffine::create(Initializer& init, const std::string& name,
                                    std::size_t channels) {
  return {init.constant(name + ".scale", {channels}, 1.0),
          init.constant(name + ".shift", {channels}, 0.0)};
}

NonBottleneck1dParams NonBottleneck1dParams::create(Initializer& init, const std::string& name,
                                                    std::size_t channels) {
  using ops::Conv2dOptions;
  NonBottleneck1dParams p;
  p.conv3x1_a = Conv2d::create(init, name + ".conv3x1_a", channels, channels, 3, 1,
                               Conv2dOptions::same(3, 1));
  p.conv1x3_a = Conv2d::create(init, name + ".conv1x3_a", channels, channels, 1, 3,
                               Conv2dOptions::same(1, 3));
  p.norm_a = ChannelAffine::create(init, name + ".norm_a", channels);
  p.conv3x1_b = Conv2d::create(init, name + ".conv3x1_b", channels, channels, 3, 1,
                               Conv2dOptions::same(3, 1));
  p.conv1x3_b = Conv2d::create(init, name + ".conv1x3_b", channels, channels, 1, 3,
                               Conv2dOptions::same(1, 3));
  p.norm_b = ChannelAffine::create(init, name + ".norm_b", channels);
  return p;
}

Tensor nonbottleneck1d(const Tensor& x, const NonBottleneck1dParams& p) {
  if (x.rank() != 3 || x.dim(0) != p.conv3x1_a.weight.dim(1) ||
      p.conv1x3_b.weight.dim(0) != x.dim(0)) {
    throw ShapeError("nonbottleneck1d: residual block needs in-channels == out-channels, got input " +
                     shape_string(x.shape()));
  }
  Tensor y = ops::relu(p.conv3x1_a(x));
  y = ops::relu(p.norm_a(p.conv1x3_a(y)));
  y = ops::relu(p.conv3x1_b(y));
  y = p.norm_b(p.conv1x3_b(y));
  return ops::relu(ops::add(y, x));
}

DownsampleParams DownsampleParams::create(Initializer& init, const std::string& name,
                                          std::size_t in_channels, std::size_t out_channels) {
  return {Conv2d::create(init, name + ".conv", in_channels, out_channels, 3, 3,
                         ops::Conv2dOptions{2, 2, 1, 1, ops::PadMode::kZero})};
}

Tensor downsample_concat(const Tensor& x, const DownsampleParams& p) {
  if (x.rank() != 3 || x.dim(1) % 2 != 0 || x.dim(2) % 2 != 0) {
    throw ShapeError("downsample_concat: needs a [C,H,W] input with even H and W, got " +
                     shape_string(x.shape()));
  }
  if (x.dim(0) != p.conv.weight.dim(1)) {
    throw ShapeError("downsample_concat: input channels " + std::to_string(x.dim(0)) +
                     " vs conv in-channels " + std::to_string(p.conv.weight.dim(1)));
  }
  return ops::concat({p.conv(x), ops::maxpool2d(x, 2, 2)});
}

}  // namespace liddense::nn
