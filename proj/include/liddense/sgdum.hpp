#pragma once

#include <cstddef>

#include "liddense/nn.hpp"
#include "liddense/ops.hpp"

// Semantic guided depth upsampling: a kernel branch predicts a normalized
// K x K fusion kernel for every output position, and a reassembly branch
// fuses the dilated neighborhood of the nearest-upsampled input with it.
namespace liddense::sgdum {

struct SgdumConfig {
  std::size_t in_channels = 16;
  std::size_t out_channels = 16;
  int kernel = 5;  // K, odd
  int scale = 2;   // S
  ops::PadMode gather_padding = ops::PadMode::kReplicate;

  /// Compressed width of the kernel branch: ceil(C_in / 4).
  std::size_t mid_channels() const { return (in_channels + 3) / 4; }
  /// Throws std::invalid_argument on a violated invariant.
  void validate() const;
};

struct SgdumParams {
  SgdumConfig config;
  nn::Conv2d compress;  // 1x1, C_in -> C_mid
  nn::Conv2d encoder;   // 3x3, C_mid -> S^2 K^2
  nn::Conv2d output;    // 1x1, C_in -> C_out

  static SgdumParams create(nn::Initializer& init, const std::string& name,
                            const SgdumConfig& config);
};

/// Per-position fusion weights, shape [K^2, S*H, S*W]. Channel index
/// i*K + j is tap (i, j) of the K x K window. Entries are nonnegative and
/// sum to 1 at every position.
struct SemanticKernels {
  Tensor weights;
  int kernel = 5;
  int scale = 2;
};

SemanticKernels generate_kernels(const Tensor& x, const SgdumParams& p);

/// Differentiable content-aware gather. `upsampled` is [C, SH, SW];
/// out[c, y, x] = sum_{i,j} k[i*K+j, y, x] * upsampled[c, y + (i - K/2) S, x + (j - K/2) S]
/// with out-of-range taps resolved by `padding`.
Tensor reassemble_gather(const Tensor& upsampled, const Tensor& kernels, int kernel, int dilation,
                         ops::PadMode padding);

/// Reassembly before the channel-mixing 1x1 conv: nearest upsample by S, then
/// reassemble_gather with dilation S.
Tensor reassemble_features(const Tensor& x, const SemanticKernels& kernels,
                           ops::PadMode padding = ops::PadMode::kReplicate);

/// reassemble_features followed by the 1x1 output conv: [C_out, S*H, S*W].
Tensor reassemble(const Tensor& x, const SemanticKernels& kernels, const SgdumParams& p);

Tensor sgdum_forward(const Tensor& x, const SgdumParams& p);

}  // namespace liddense::sgdum
