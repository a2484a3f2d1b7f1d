#include "liddense/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "liddense/depth_io.hpp"

namespace liddense::ops {

namespace {

using detail::grad_ptr;
using detail::Node;

struct Chw {
  std::size_t c, h, w;
};

Chw chw(const Tensor& x, const char* op) {
  if (!x.defined() || x.rank() != 3) {
    throw ShapeError(std::string(op) + ": expected a [C,H,W] tensor, got " +
                     (x.defined() ? shape_string(x.shape()) : std::string("undefined")));
  }
  return {x.dim(0), x.dim(1), x.dim(2)};
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

// Maps output coordinate o and kernel tap k to an input coordinate, or -1 when
// the tap lands in zero padding.
std::vector<int> tap_table(int out_size, int in_size, int kernel, int stride, int pad,
                           PadMode mode) {
  std::vector<int> table(static_cast<std::size_t>(out_size) * kernel);
  for (int k = 0; k < kernel; ++k) {
    for (int o = 0; o < out_size; ++o) {
      int i = o * stride - pad + k;
      if (i < 0 || i >= in_size) {
        i = mode == PadMode::kZero ? -1 : std::clamp(i, 0, in_size - 1);
      }
      table[static_cast<std::size_t>(k) * out_size + o] = i;
    }
  }
  return table;
}

}  // namespace

// ---------------------------------------------------------------------------
// conv2d

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, const Conv2dOptions& opt) {
  const auto [C, H, W] = chw(x, "conv2d");
  if (!w.defined() || w.rank() != 4 || w.dim(1) != C) {
    throw ShapeError("conv2d: weight " + (w.defined() ? shape_string(w.shape()) : "undefined") +
                     " incompatible with input channels " + std::to_string(C));
  }
  const std::size_t O = w.dim(0), KH = w.dim(2), KW = w.dim(3);
  if (b.defined() && (b.rank() != 1 || b.dim(0) != O)) {
    throw ShapeError("conv2d: bias shape " + shape_string(b.shape()));
  }
  if (opt.stride_h < 1 || opt.stride_w < 1 || opt.pad_h < 0 || opt.pad_w < 0) {
    throw ShapeError("conv2d: invalid stride or padding");
  }
  const long ph = H + 2L * opt.pad_h - static_cast<long>(KH);
  const long pw = W + 2L * opt.pad_w - static_cast<long>(KW);
  if (ph < 0 || pw < 0) {
    throw ShapeError("conv2d: kernel does not fit padded input");
  }
  const int OH = static_cast<int>(ph / opt.stride_h + 1);
  const int OW = static_cast<int>(pw / opt.stride_w + 1);
  auto ty = std::make_shared<std::vector<int>>(
      tap_table(OH, static_cast<int>(H), static_cast<int>(KH), opt.stride_h, opt.pad_h, opt.pad_mode));
  auto tx = std::make_shared<std::vector<int>>(
      tap_table(OW, static_cast<int>(W), static_cast<int>(KW), opt.stride_w, opt.pad_w, opt.pad_mode));

  const auto xv = x.values();
  const auto wv = w.values();
  std::vector<double> out(O * OH * OW, 0.0);
  for (std::size_t o = 0; o < O; ++o) {
    double* op = out.data() + o * OH * OW;
    if (b.defined()) std::fill(op, op + OH * OW, b[o]);
    for (std::size_t c = 0; c < C; ++c) {
      const double* xp = xv.data() + c * H * W;
      for (std::size_t i = 0; i < KH; ++i) {
        const int* ry = ty->data() + i * OH;
        for (std::size_t j = 0; j < KW; ++j) {
          const double wt = wv[((o * C + c) * KH + i) * KW + j];
          const int* rx = tx->data() + j * OW;
          for (int oy = 0; oy < OH; ++oy) {
            const int iy = ry[oy];
            if (iy < 0) continue;
            const double* xrow = xp + static_cast<std::size_t>(iy) * W;
            double* orow = op + static_cast<std::size_t>(oy) * OW;
            for (int ox = 0; ox < OW; ++ox) {
              const int ix = rx[ox];
              if (ix >= 0) orow[ox] += wt * xrow[ix];
            }
          }
        }
      }
    }
  }

  return Tensor::make_result(
      "conv2d", {O, static_cast<std::size_t>(OH), static_cast<std::size_t>(OW)}, std::move(out),
      {x, w, b}, [=](Node& self) {
        const Tensor& xin = self.inputs[0];
        const Tensor& win = self.inputs[1];
        const Tensor& bin = self.inputs[2];
        double* gx = grad_ptr(xin);
        double* gw = grad_ptr(win);
        double* gb = grad_ptr(bin);
        const double f = fault::factor("conv2d");
        const auto xv = xin.values();
        const auto wv = win.values();
        const double* g = self.grad.data();
        for (std::size_t o = 0; o < O; ++o) {
          const double* go = g + o * OH * OW;
          if (gb) {
            double s = 0.0;
            for (int k = 0; k < OH * OW; ++k) s += go[k];
            gb[o] += s;
          }
          for (std::size_t c = 0; c < C; ++c) {
            const double* xp = xv.data() + c * H * W;
            double* gxp = gx ? gx + c * H * W : nullptr;
            for (std::size_t i = 0; i < KH; ++i) {
              const int* ry = ty->data() + i * OH;
              for (std::size_t j = 0; j < KW; ++j) {
                const std::size_t widx = ((o * C + c) * KH + i) * KW + j;
                const double wt = wv[widx] * f;
                const int* rx = tx->data() + j * OW;
                double gw_acc = 0.0;
                for (int oy = 0; oy < OH; ++oy) {
                  const int iy = ry[oy];
                  if (iy < 0) continue;
                  const std::size_t row = static_cast<std::size_t>(iy) * W;
                  const double* grow = go + static_cast<std::size_t>(oy) * OW;
                  for (int ox = 0; ox < OW; ++ox) {
                    const int ix = rx[ox];
                    if (ix < 0) continue;
                    gw_acc += grow[ox] * xp[row + ix];
                    if (gxp) gxp[row + ix] += wt * grow[ox];
                  }
                }
                if (gw) gw[widx] += gw_acc;
              }
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// transposed conv

Tensor transposed_conv2d(const Tensor& x, const Tensor& w, const Tensor& b,
                         const TransposedConv2dOptions& opt) {
  const auto [C, H, W] = chw(x, "transposed_conv2d");
  if (!w.defined() || w.rank() != 4 || w.dim(0) != C || w.dim(2) != w.dim(3)) {
    throw ShapeError("transposed_conv2d: weight " +
                     (w.defined() ? shape_string(w.shape()) : "undefined") +
                     " incompatible with input channels " + std::to_string(C));
  }
  const std::size_t O = w.dim(1), K = w.dim(2);
  if (b.defined() && (b.rank() != 1 || b.dim(0) != O)) {
    throw ShapeError("transposed_conv2d: bias shape " + shape_string(b.shape()));
  }
  const int s = opt.stride, p = opt.padding;
  if (s < 1 || p < 0 || opt.output_padding < 0 || opt.output_padding >= s) {
    throw ShapeError("transposed_conv2d: invalid stride/padding/output_padding");
  }
  const long oh = (static_cast<long>(H) - 1) * s - 2L * p + static_cast<long>(K) + opt.output_padding;
  const long ow = (static_cast<long>(W) - 1) * s - 2L * p + static_cast<long>(K) + opt.output_padding;
  if (oh <= 0 || ow <= 0) throw ShapeError("transposed_conv2d: empty output");
  const std::size_t OH = static_cast<std::size_t>(oh), OW = static_cast<std::size_t>(ow);

  const auto xv = x.values();
  const auto wv = w.values();
  std::vector<double> out(O * OH * OW, 0.0);
  for (std::size_t o = 0; o < O; ++o) {
    if (b.defined()) std::fill(out.begin() + o * OH * OW, out.begin() + (o + 1) * OH * OW, b[o]);
  }
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t o = 0; o < O; ++o) {
      for (std::size_t i = 0; i < K; ++i) {
        for (std::size_t j = 0; j < K; ++j) {
          const double wt = wv[((c * O + o) * K + i) * K + j];
          for (std::size_t iy = 0; iy < H; ++iy) {
            const long y = static_cast<long>(iy) * s - p + static_cast<long>(i);
            if (y < 0 || y >= oh) continue;
            for (std::size_t ix = 0; ix < W; ++ix) {
              const long xx = static_cast<long>(ix) * s - p + static_cast<long>(j);
              if (xx < 0 || xx >= ow) continue;
              out[(o * OH + y) * OW + xx] += wt * xv[(c * H + iy) * W + ix];
            }
          }
        }
      }
    }
  }

  return Tensor::make_result("transposed_conv2d", {O, OH, OW}, std::move(out), {x, w, b},
                             [=](Node& self) {
    const Tensor& xin = self.inputs[0];
    const Tensor& win = self.inputs[1];
    double* gx = grad_ptr(xin);
    double* gw = grad_ptr(win);
    double* gb = grad_ptr(self.inputs[2]);
    const double f = fault::factor("transposed_conv2d");
    const auto xv = xin.values();
    const auto wv = win.values();
    const double* g = self.grad.data();
    if (gb) {
      for (std::size_t o = 0; o < O; ++o) {
        double acc = 0.0;
        for (std::size_t k = 0; k < OH * OW; ++k) acc += g[o * OH * OW + k];
        gb[o] += acc;
      }
    }
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t o = 0; o < O; ++o) {
        for (std::size_t i = 0; i < K; ++i) {
          for (std::size_t j = 0; j < K; ++j) {
            const std::size_t widx = ((c * O + o) * K + i) * K + j;
            const double wt = wv[widx] * f;
            double gw_acc = 0.0;
            for (std::size_t iy = 0; iy < H; ++iy) {
              const long y = static_cast<long>(iy) * s - p + static_cast<long>(i);
              if (y < 0 || y >= oh) continue;
              for (std::size_t ix = 0; ix < W; ++ix) {
                const long xx = static_cast<long>(ix) * s - p + static_cast<long>(j);
                if (xx < 0 || xx >= ow) continue;
                const double go = g[(o * OH + y) * OW + xx];
                const std::size_t xi = (c * H + iy) * W + ix;
                gw_acc += go * xv[xi];
                if (gx) gx[xi] += wt * go;
              }
            }
            if (gw) gw[widx] += gw_acc;
          }
        }
      }
    }
  });
}

// ---------------------------------------------------------------------------
// pooling and pointwise

Tensor maxpool2d(const Tensor& x, int kernel, int stride) {
  const auto [C, H, W] = chw(x, "maxpool2d");
  if (kernel < 1 || stride < 1 || static_cast<std::size_t>(kernel) > H ||
      static_cast<std::size_t>(kernel) > W) {
    throw ShapeError("maxpool2d: invalid kernel/stride for input " + shape_string(x.shape()));
  }
  const std::size_t OH = (H - kernel) / stride + 1, OW = (W - kernel) / stride + 1;
  const auto xv = x.values();
  std::vector<double> out(C * OH * OW);
  auto source = std::make_shared<std::vector<std::size_t>>(out.size());
  auto* rec = piecewise::active();
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t oy = 0; oy < OH; ++oy) {
      for (std::size_t ox = 0; ox < OW; ++ox) {
        int best = 0;
        double best_v = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < kernel; ++i) {
          for (int j = 0; j < kernel; ++j) {
            const double v = xv[(c * H + oy * stride + i) * W + ox * stride + j];
            if (v > best_v) {
              best_v = v;
              best = i * kernel + j;
            }
          }
        }
        best = piecewise::decide(rec, best);
        const std::size_t src =
            (c * H + oy * stride + best / kernel) * W + ox * stride + best % kernel;
        const std::size_t oi = (c * OH + oy) * OW + ox;
        (*source)[oi] = src;
        out[oi] = xv[src];
      }
    }
  }
  return Tensor::make_result("maxpool2d", {C, OH, OW}, std::move(out), {x}, [source](Node& self) {
    double* gx = grad_ptr(self.inputs[0]);
    if (!gx) return;
    const double f = fault::factor("maxpool2d");
    for (std::size_t i = 0; i < source->size(); ++i) gx[(*source)[i]] += f * self.grad[i];
  });
}

Tensor relu(const Tensor& x) {
  const auto xv = x.values();
  std::vector<double> out(xv.size());
  auto mask = std::make_shared<std::vector<char>>(xv.size());
  auto* rec = piecewise::active();
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const bool on = piecewise::decide(rec, xv[i] > 0.0 ? 1 : 0) != 0;
    (*mask)[i] = on;
    out[i] = on ? xv[i] : 0.0;
  }
  return Tensor::make_result("relu", x.shape(), std::move(out), {x}, [mask](Node& self) {
    double* gx = grad_ptr(self.inputs[0]);
    if (!gx) return;
    const double f = fault::factor("relu");
    for (std::size_t i = 0; i < mask->size(); ++i) {
      if ((*mask)[i]) gx[i] += f * self.grad[i];
    }
  });
}

Tensor softplus(const Tensor& x) {
  const auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    out[i] = std::log1p(std::exp(-std::fabs(xv[i]))) + std::max(xv[i], 0.0);
  }
  return Tensor::make_result("softplus", x.shape(), std::move(out), {x}, [](Node& self) {
    const Tensor& xin = self.inputs[0];
    double* gx = grad_ptr(xin);
    if (!gx) return;
    const double f = fault::factor("softplus");
    const auto xv = xin.values();
    for (std::size_t i = 0; i < xv.size(); ++i) {
      const double sig = xv[i] >= 0.0 ? 1.0 / (1.0 + std::exp(-xv[i]))
                                      : std::exp(xv[i]) / (1.0 + std::exp(xv[i]));
      gx[i] += f * sig * self.grad[i];
    }
  });
}

Tensor affine(const Tensor& x, const Tensor& scale_t, const Tensor& shift) {
  const auto [C, H, W] = chw(x, "affine");
  if (scale_t.rank() != 1 || scale_t.dim(0) != C || shift.rank() != 1 || shift.dim(0) != C) {
    throw ShapeError("affine: scale/shift must be [" + std::to_string(C) + "]");
  }
  const std::size_t plane = H * W;
  const auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t k = 0; k < plane; ++k) {
      out[c * plane + k] = xv[c * plane + k] * scale_t[c] + shift[c];
    }
  }
  return Tensor::make_result("affine", x.shape(), std::move(out), {x, scale_t, shift},
                             [C, plane](Node& self) {
    const auto xv = self.inputs[0].values();
    const auto sv = self.inputs[1].values();
    double* gx = grad_ptr(self.inputs[0]);
    double* gs = grad_ptr(self.inputs[1]);
    double* gt = grad_ptr(self.inputs[2]);
    const double f = fault::factor("affine");
    for (std::size_t c = 0; c < C; ++c) {
      double acc_s = 0.0, acc_t = 0.0;
      for (std::size_t k = 0; k < plane; ++k) {
        const double g = self.grad[c * plane + k];
        acc_s += g * xv[c * plane + k];
        acc_t += g;
        if (gx) gx[c * plane + k] += f * g * sv[c];
      }
      if (gs) gs[c] += acc_s;
      if (gt) gt[c] += acc_t;
    }
  });
}

// ---------------------------------------------------------------------------
// resampling

Tensor nearest_upsample(const Tensor& x, int factor) {
  const auto [C, H, W] = chw(x, "nearest_upsample");
  if (factor < 1) throw ShapeError("nearest_upsample: factor must be >= 1");
  const std::size_t S = factor, OH = H * S, OW = W * S;
  const auto xv = x.values();
  std::vector<double> out(C * OH * OW);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < OH; ++y)
      for (std::size_t xx = 0; xx < OW; ++xx)
        out[(c * OH + y) * OW + xx] = xv[(c * H + y / S) * W + xx / S];
  return Tensor::make_result("nearest_upsample", {C, OH, OW}, std::move(out), {x},
                             [C, H, W, S](Node& self) {
    double* gx = grad_ptr(self.inputs[0]);
    if (!gx) return;
    const double f = fault::factor("nearest_upsample");
    const std::size_t OH = H * S, OW = W * S;
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t y = 0; y < OH; ++y)
        for (std::size_t xx = 0; xx < OW; ++xx)
          gx[(c * H + y / S) * W + xx / S] += f * self.grad[(c * OH + y) * OW + xx];
  });
}

namespace {

// Index of the pixel-shuffle output element corresponding to input element
// (ci, h, w) for upscale r.
struct ShuffleMap {
  std::size_t C, H, W, r;
  std::size_t out_index(std::size_t ci, std::size_t h, std::size_t w) const {
    const std::size_t c = ci / (r * r);
    const std::size_t i = (ci % (r * r)) / r;
    const std::size_t j = ci % r;
    return (c * H * r + h * r + i) * (W * r) + w * r + j;
  }
};

}  // namespace

Tensor pixel_shuffle(const Tensor& x, int r) {
  const auto [Cin, H, W] = chw(x, "pixel_shuffle");
  const std::size_t rr = static_cast<std::size_t>(r) * r;
  if (r < 1 || Cin % rr != 0) {
    throw ShapeError("pixel_shuffle: channels " + std::to_string(Cin) + " not divisible by r^2");
  }
  const ShuffleMap map{Cin / rr, H, W, static_cast<std::size_t>(r)};
  const auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t ci = 0; ci < Cin; ++ci)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 0; w < W; ++w) out[map.out_index(ci, h, w)] = xv[(ci * H + h) * W + w];
  return Tensor::make_result("pixel_shuffle", {map.C, H * r, W * r}, std::move(out), {x},
                             [map, Cin, H, W](Node& self) {
    double* gx = grad_ptr(self.inputs[0]);
    if (!gx) return;
    const double f = fault::factor("pixel_shuffle");
    for (std::size_t ci = 0; ci < Cin; ++ci)
      for (std::size_t h = 0; h < H; ++h)
        for (std::size_t w = 0; w < W; ++w)
          gx[(ci * H + h) * W + w] += f * self.grad[map.out_index(ci, h, w)];
  });
}

Tensor pixel_unshuffle(const Tensor& x, int r) {
  const auto [C, OH, OW] = chw(x, "pixel_unshuffle");
  if (r < 1 || OH % r != 0 || OW % r != 0) {
    throw ShapeError("pixel_unshuffle: spatial size not divisible by r");
  }
  const std::size_t H = OH / r, W = OW / r, rr = static_cast<std::size_t>(r) * r;
  const ShuffleMap map{C, H, W, static_cast<std::size_t>(r)};
  const std::size_t Cout = C * rr;
  const auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t ci = 0; ci < Cout; ++ci)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 0; w < W; ++w) out[(ci * H + h) * W + w] = xv[map.out_index(ci, h, w)];
  return Tensor::make_result("pixel_unshuffle", {Cout, H, W}, std::move(out), {x},
                             [map, Cout, H, W](Node& self) {
    double* gx = grad_ptr(self.inputs[0]);
    if (!gx) return;
    const double f = fault::factor("pixel_unshuffle");
    for (std::size_t ci = 0; ci < Cout; ++ci)
      for (std::size_t h = 0; h < H; ++h)
        for (std::size_t w = 0; w < W; ++w)
          gx[map.out_index(ci, h, w)] += f * self.grad[(ci * H + h) * W + w];
  });
}

Tensor channel_softmax(const Tensor& x) {
  const auto [C, H, W] = chw(x, "channel_softmax");
  if (C == 0) throw ShapeError("channel_softmax: no channels");
  const std::size_t plane = H * W;
  const auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t k = 0; k < plane; ++k) {
    double m = xv[k];
    for (std::size_t c = 1; c < C; ++c) m = std::max(m, xv[c * plane + k]);
    double z = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      const double e = std::exp(xv[c * plane + k] - m);
      out[c * plane + k] = e;
      z += e;
    }
    for (std::size_t c = 0; c < C; ++c) out[c * plane + k] /= z;
  }
  auto y = std::make_shared<std::vector<double>>(out);
  return Tensor::make_result("channel_softmax", x.shape(), std::move(out), {x},
                             [y, C, plane](Node& self) {
    double* gx = grad_ptr(self.inputs[0]);
    if (!gx) return;
    const double f = fault::factor("channel_softmax");
    for (std::size_t k = 0; k < plane; ++k) {
      double dot = 0.0;
      for (std::size_t c = 0; c < C; ++c) dot += self.grad[c * plane + k] * (*y)[c * plane + k];
      for (std::size_t c = 0; c < C; ++c) {
        const std::size_t i = c * plane + k;
        gx[i] += f * (*y)[i] * (self.grad[i] - dot);
      }
    }
  });
}

Tensor concat(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const auto [C0, H, W] = chw(parts[0], "concat");
  std::size_t C = 0;
  for (const Tensor& p : parts) {
    const auto [c, h, w] = chw(p, "concat");
    if (h != H || w != W) {
      throw ShapeError("concat: spatial mismatch " + shape_string(parts[0].shape()) + " vs " +
                       shape_string(p.shape()));
    }
    C += c;
  }
  (void)C0;
  std::vector<double> out;
  out.reserve(C * H * W);
  std::vector<std::size_t> offsets;
  for (const Tensor& p : parts) {
    offsets.push_back(out.size());
    out.insert(out.end(), p.values().begin(), p.values().end());
  }
  return Tensor::make_result("concat", {C, H, W}, std::move(out),
                             std::vector<Tensor>(parts.begin(), parts.end()),
                             [offsets](Node& self) {
    const double f = fault::factor("concat");
    for (std::size_t k = 0; k < self.inputs.size(); ++k) {
      double* g = grad_ptr(self.inputs[k]);
      if (!g) continue;
      const std::size_t n = self.inputs[k].numel();
      for (std::size_t i = 0; i < n; ++i) g[i] += f * self.grad[offsets[k] + i];
    }
  });
}

// ---------------------------------------------------------------------------
// elementwise arithmetic and reductions

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return Tensor::make_result("add", a.shape(), std::move(out), {a, b}, [](Node& self) {
    const double f = fault::factor("add");
    for (int k = 0; k < 2; ++k) {
      double* g = grad_ptr(self.inputs[k]);
      if (!g) continue;
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += f * self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return Tensor::make_result("sub", a.shape(), std::move(out), {a, b}, [](Node& self) {
    double* ga = grad_ptr(self.inputs[0]);
    double* gb = grad_ptr(self.inputs[1]);
    const double f = fault::factor("sub");
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (ga) ga[i] += f * self.grad[i];
      if (gb) gb[i] -= f * self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return Tensor::make_result("mul", a.shape(), std::move(out), {a, b}, [](Node& self) {
    const Tensor& a = self.inputs[0];
    const Tensor& b = self.inputs[1];
    double* ga = grad_ptr(a);
    double* gb = grad_ptr(b);
    const double f = fault::factor("mul");
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (ga) ga[i] += f * self.grad[i] * b[i];
      if (gb) gb[i] += f * self.grad[i] * a[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * factor;
  return Tensor::make_result("scale", a.shape(), std::move(out), {a}, [factor](Node& self) {
    double* g = grad_ptr(self.inputs[0]);
    if (!g) return;
    const double f = fault::factor("scale") * factor;
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += f * self.grad[i];
  });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  return Tensor::make_result("sum", {}, {s}, {x}, [](Node& self) {
    double* g = grad_ptr(self.inputs[0]);
    if (!g) return;
    const double f = fault::factor("sum");
    const std::size_t n = self.inputs[0].numel();
    for (std::size_t i = 0; i < n; ++i) g[i] += f * self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  if (x.numel() == 0) throw ShapeError("mean: empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

}  // namespace liddense::ops
