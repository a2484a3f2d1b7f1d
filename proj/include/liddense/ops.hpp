#pragma once

#include <span>
#include <vector>

#include "liddense/tensor.hpp"

// Differentiable operators on single images laid out as [C, H, W].
namespace liddense::ops {

enum class PadMode { kZero, kReplicate };

struct Conv2dOptions {
  int stride_h = 1;
  int stride_w = 1;
  int pad_h = 0;
  int pad_w = 0;
  PadMode pad_mode = PadMode::kZero;

  static Conv2dOptions same(int kh, int kw, PadMode mode = PadMode::kZero) {
    return {1, 1, kh / 2, kw / 2, mode};
  }
};

/// Cross-correlation. x [C,H,W], w [O,C,KH,KW], b [O] or undefined.
/// Output [O, floor((H+2p-KH)/s)+1, floor((W+2p-KW)/s)+1].
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, const Conv2dOptions& opt = {});

struct TransposedConv2dOptions {
  int stride = 2;
  int padding = 1;
  int output_padding = 1;
};

/// x [C,H,W], w [C,O,K,K] -> [O, (H-1)s - 2p + K + output_padding, ...].
Tensor transposed_conv2d(const Tensor& x, const Tensor& w, const Tensor& b,
                         const TransposedConv2dOptions& opt = {});

/// Unpadded max pooling; ties resolve to the first maximum in row-major order.
Tensor maxpool2d(const Tensor& x, int kernel = 2, int stride = 2);

Tensor relu(const Tensor& x);
Tensor softplus(const Tensor& x);

/// Per-channel scale and shift: y[c] = x[c] * scale[c] + shift[c].
Tensor affine(const Tensor& x, const Tensor& scale, const Tensor& shift);

Tensor nearest_upsample(const Tensor& x, int factor);

/// [C*r*r, H, W] -> [C, H*r, W*r]; out[c, h*r+i, w*r+j] = in[c*r*r + i*r + j, h, w].
Tensor pixel_shuffle(const Tensor& x, int r);
Tensor pixel_unshuffle(const Tensor& x, int r);

/// Softmax across the channel axis independently at every (h, w).
Tensor channel_softmax(const Tensor& x);

/// Concatenation along the channel axis.
Tensor concat(std::span<const Tensor> parts);
inline Tensor concat(std::initializer_list<Tensor> parts) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()));
}

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

}  // namespace liddense::ops
