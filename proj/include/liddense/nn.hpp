#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "liddense/ops.hpp"
#include "liddense/rng.hpp"
#include "liddense/tensor.hpp"

namespace liddense::nn {

struct NamedParameter {
  std::string name;
  Tensor tensor;
};

/// Owns every trainable tensor of a model in registration order.
class ParameterSet {
 public:
  Tensor add(std::string name, Tensor t);

  std::vector<NamedParameter>& items() { return items_; }
  const std::vector<NamedParameter>& items() const { return items_; }
  std::vector<Tensor> tensors() const;
  std::size_t count() const;  // total scalar parameters
  void zero_grad();
  const Tensor& find(const std::string& name) const;

 private:
  std::vector<NamedParameter> items_;
};

/// Registers parameters with uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)) weights.
class Initializer {
 public:
  Initializer(ParameterSet& params, std::uint64_t seed) : params_(params), rng_(seed) {}

  Tensor uniform(const std::string& name, Shape shape, std::size_t fan_in);
  Tensor constant(const std::string& name, Shape shape, double value);

 private:
  ParameterSet& params_;
  Rng rng_;
};

struct Conv2d {
  Tensor weight;  // [O, C, KH, KW]
  Tensor bias;    // [O]
  ops::Conv2dOptions options;

  static Conv2d create(Initializer& init, const std::string& name, std::size_t in_channels,
                       std::size_t out_channels, std::size_t kh, std::size_t kw,
                       ops::Conv2dOptions options);
  Tensor operator()(const Tensor& x) const { return ops::conv2d(x, weight, bias, options); }
};

struct TransposedConv2d {
  Tensor weight;  // [C, O, K, K]
  Tensor bias;
  ops::TransposedConv2dOptions options;

  static TransposedConv2d create(Initializer& init, const std::string& name,
                                 std::size_t in_channels, std::size_t out_channels,
                                 std::size_t k = 3, ops::TransposedConv2dOptions options = {});
  Tensor operator()(const Tensor& x) const {
    return ops::transposed_conv2d(x, weight, bias, options);
  }
};

/// Per-channel learned scale/shift standing in for batch normalization.
struct ChannelAffine {
  Tensor scale;
  Tensor shift;

  static ChannelAffine create(Initializer& init, const std::string& name, std::size_t channels);
  Tensor operator()(const Tensor& x) const { return ops::affine(x, scale, shift); }
};

/// Factorized residual block: 3x1, relu, 1x3, affine, relu, 3x1, relu, 1x3,
/// affine, residual add, relu.
struct NonBottleneck1dParams {
  Conv2d conv3x1_a, conv1x3_a, conv3x1_b, conv1x3_b;
  ChannelAffine norm_a, norm_b;

  static NonBottleneck1dParams create(Initializer& init, const std::string& name,
                                      std::size_t channels);
};

Tensor nonbottleneck1d(const Tensor& x, const NonBottleneck1dParams& p);

/// Stride-2 3x3 conv (C_in -> C_conv) concatenated with 2x2 stride-2 max
/// pooling of the input: C_conv + C_in channels at half resolution. Input
/// height and width must be even.
struct DownsampleParams {
  Conv2d conv;

  static DownsampleParams create(Initializer& init, const std::string& name,
                                 std::size_t in_channels, std::size_t out_channels);
};

Tensor downsample_concat(const Tensor& x, const DownsampleParams& p);

}  // namespace liddense::nn
