#include <doctest.h>

#include <cmath>

#include "liddense/depth_io.hpp"
#include "liddense/ops.hpp"
#include "liddense/rng.hpp"

using namespace liddense;
using namespace liddense::ops;

namespace {

Tensor rand_t(Rng& rng, Shape s, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(shape_numel(s));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor::from(std::move(s), std::move(v));
}

double at3(const Tensor& t, std::size_t c, std::size_t y, std::size_t x) {
  return t[(c * t.dim(1) + y) * t.dim(2) + x];
}

// Direct definition of cross-correlation with explicit padding.
std::vector<double> naive_conv(const Tensor& x, const Tensor& w, const Tensor& b,
                               const Conv2dOptions& o, std::size_t& OH, std::size_t& OW) {
  const long C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const long O = w.dim(0), KH = w.dim(2), KW = w.dim(3);
  OH = (H + 2 * o.pad_h - KH) / o.stride_h + 1;
  OW = (W + 2 * o.pad_w - KW) / o.stride_w + 1;
  std::vector<double> out(O * OH * OW);
  for (long oc = 0; oc < O; ++oc)
    for (long oy = 0; oy < static_cast<long>(OH); ++oy)
      for (long ox = 0; ox < static_cast<long>(OW); ++ox) {
        double s = b[oc];
        for (long c = 0; c < C; ++c)
          for (long i = 0; i < KH; ++i)
            for (long j = 0; j < KW; ++j) {
              long iy = oy * o.stride_h - o.pad_h + i;
              long ix = ox * o.stride_w - o.pad_w + j;
              double v;
              if (iy < 0 || iy >= H || ix < 0 || ix >= W) {
                if (o.pad_mode == PadMode::kZero) continue;
                iy = std::clamp(iy, 0L, H - 1);
                ix = std::clamp(ix, 0L, W - 1);
              }
              v = at3(x, c, iy, ix);
              s += w[((oc * C + c) * KH + i) * KW + j] * v;
            }
        out[(oc * OH + oy) * OW + ox] = s;
      }
  return out;
}

}  // namespace

TEST_CASE("conv2d matches the direct loop for many configurations") {
  Rng rng(30);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t C = 1 + rng.index(3), O = 1 + rng.index(3);
    const std::size_t KH = 1 + rng.index(3), KW = 1 + rng.index(3);
    const std::size_t H = KH + rng.index(5), W = KW + rng.index(5);
    Conv2dOptions opt;
    opt.stride_h = 1 + static_cast<int>(rng.index(2));
    opt.stride_w = 1 + static_cast<int>(rng.index(2));
    opt.pad_h = static_cast<int>(rng.index(2));
    opt.pad_w = static_cast<int>(rng.index(2));
    opt.pad_mode = rng.index(2) ? PadMode::kZero : PadMode::kReplicate;
    const Tensor x = rand_t(rng, {C, H, W});
    const Tensor w = rand_t(rng, {O, C, KH, KW});
    const Tensor b = rand_t(rng, {O});
    std::size_t OH = 0, OW = 0;
    const auto ref = naive_conv(x, w, b, opt, OH, OW);
    const Tensor y = conv2d(x, w, b, opt);
    REQUIRE(y.shape() == Shape{O, OH, OW});
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(y[i] == doctest::Approx(ref[i]).epsilon(1e-13));
  }
}

TEST_CASE("3x3 mean kernel equals a direct box filter") {
  Rng rng(31);
  const Tensor x = rand_t(rng, {1, 6, 7});
  const Tensor w = Tensor::full({1, 1, 3, 3}, 1.0 / 9.0);
  const Tensor b = Tensor::zeros({1});
  const Tensor y = conv2d(x, w, b, Conv2dOptions::same(3, 3, PadMode::kReplicate));
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 7; ++c) {
      double s = 0.0;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          s += at3(x, 0, std::clamp(r + dr, 0, 5), std::clamp(c + dc, 0, 6));
        }
      }
      CHECK(at3(y, 0, r, c) == doctest::Approx(s / 9.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("conv2d shape errors") {
  const Tensor x = Tensor::zeros({2, 4, 4});
  CHECK_THROWS_AS(conv2d(x, Tensor::zeros({1, 3, 3, 3}), Tensor::zeros({1})), ShapeError);
  CHECK_THROWS_AS(conv2d(x, Tensor::zeros({1, 2, 3, 3}), Tensor::zeros({2})), ShapeError);
  CHECK_THROWS_AS(conv2d(x, Tensor::zeros({1, 2, 5, 5}), Tensor::zeros({1})), ShapeError);
  CHECK_THROWS_AS(conv2d(Tensor::zeros({4, 4}), Tensor::zeros({1, 2, 3, 3}), Tensor::zeros({1})),
                  ShapeError);
}

TEST_CASE("transposed conv matches the scatter definition and doubles the size") {
  Rng rng(32);
  const std::size_t C = 2, O = 3, H = 3, W = 4, K = 3;
  const Tensor x = rand_t(rng, {C, H, W});
  const Tensor w = rand_t(rng, {C, O, K, K});
  const Tensor b = rand_t(rng, {O});
  const Tensor y = transposed_conv2d(x, w, b);
  REQUIRE(y.shape() == Shape{O, 2 * H, 2 * W});
  std::vector<double> ref(O * 2 * H * 2 * W);
  for (std::size_t o = 0; o < O; ++o)
    for (std::size_t i = 0; i < 4 * H * W; ++i) ref[o * 4 * H * W + i] = b[o];
  for (std::size_t c = 0; c < C; ++c)
    for (long iy = 0; iy < static_cast<long>(H); ++iy)
      for (long ix = 0; ix < static_cast<long>(W); ++ix)
        for (std::size_t o = 0; o < O; ++o)
          for (long ky = 0; ky < 3; ++ky)
            for (long kx = 0; kx < 3; ++kx) {
              const long oy = iy * 2 - 1 + ky, ox = ix * 2 - 1 + kx;
              if (oy < 0 || ox < 0 || oy >= static_cast<long>(2 * H) || ox >= static_cast<long>(2 * W)) continue;
              ref[(o * 2 * H + oy) * 2 * W + ox] +=
                  at3(x, c, iy, ix) * w[((c * O + o) * K + ky) * K + kx];
            }
  for (std::size_t i = 0; i < ref.size(); ++i) CHECK(y[i] == doctest::Approx(ref[i]).epsilon(1e-13));
}

TEST_CASE("transposed conv is the adjoint of the strided conv") {
  Rng rng(33);
  const std::size_t C = 2, O = 3, H = 6, W = 8;
  const Tensor wt = rand_t(rng, {C, O, 3, 3});  // transposed layout
  // Same taps in conv layout [C_out=C, C_in=O, 3, 3].
  std::vector<double> wc(wt.numel());
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t o = 0; o < O; ++o)
      for (std::size_t k = 0; k < 9; ++k) wc[(c * O + o) * 9 + k] = wt[(c * O + o) * 9 + k];
  const Tensor wconv = Tensor::from({C, O, 3, 3}, wc);
  const Tensor u = rand_t(rng, {O, H, W});
  const Tensor v = rand_t(rng, {C, H / 2, W / 2});
  Conv2dOptions opt{2, 2, 1, 1, PadMode::kZero};
  const Tensor cu = conv2d(u, wconv, Tensor::zeros({C}), opt);
  const Tensor tv = transposed_conv2d(v, wt, Tensor::zeros({O}));
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < cu.numel(); ++i) lhs += cu[i] * v[i];
  for (std::size_t i = 0; i < tv.numel(); ++i) rhs += u[i] * tv[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("maxpool picks the window maximum") {
  const Tensor x = Tensor::from({1, 2, 4}, {1, 5, 2, 0, 3, -1, 7, 8});
  const Tensor y = maxpool2d(x);
  CHECK(y.shape() == Shape{1, 1, 2});
  CHECK(y[0] == 5.0);
  CHECK(y[1] == 8.0);
  CHECK_THROWS_AS(maxpool2d(Tensor::zeros({1, 1, 4})), ShapeError);
}

TEST_CASE("pointwise ops") {
  const Tensor x = Tensor::from({1, 1, 4}, {-2, 0, 1e-3, 800});
  const Tensor r = relu(x);
  CHECK(r[0] == 0.0);
  CHECK(r[1] == 0.0);
  CHECK(r[2] == 1e-3);
  const Tensor s = softplus(x);
  CHECK(s[1] == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(s[0] == doctest::Approx(std::log1p(std::exp(-2.0))).epsilon(1e-15));
  CHECK(s[3] == 800.0);
  CHECK(std::isfinite(softplus(Tensor::from({1}, {-800}))[0]));

  const Tensor a = affine(Tensor::from({2, 1, 2}, {1, 2, 3, 4}), Tensor::from({2}, {2, -1}),
                          Tensor::from({2}, {0.5, 1}));
  CHECK(std::vector<double>(a.values().begin(), a.values().end()) ==
        std::vector<double>{2.5, 4.5, -2, -3});
  CHECK_THROWS_AS(affine(Tensor::zeros({2, 1, 1}), Tensor::zeros({3}), Tensor::zeros({2})), ShapeError);
}

TEST_CASE("resampling ops") {
  const Tensor x = Tensor::from({1, 2, 2}, {1, 2, 3, 4});
  const Tensor up = nearest_upsample(x, 2);
  CHECK(up.shape() == Shape{1, 4, 4});
  CHECK(at3(up, 0, 1, 1) == 1.0);
  CHECK(at3(up, 0, 0, 2) == 2.0);
  CHECK(at3(up, 0, 3, 3) == 4.0);

  Rng rng(34);
  const Tensor p = rand_t(rng, {8, 3, 2});
  const Tensor ps = pixel_shuffle(p, 2);
  CHECK(ps.shape() == Shape{2, 6, 4});
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t h = 0; h < 3; ++h)
      for (std::size_t w = 0; w < 2; ++w)
        for (std::size_t i = 0; i < 2; ++i)
          for (std::size_t j = 0; j < 2; ++j)
            CHECK(at3(ps, c, h * 2 + i, w * 2 + j) == at3(p, c * 4 + i * 2 + j, h, w));
  const Tensor back = pixel_unshuffle(ps, 2);
  CHECK(std::vector<double>(back.values().begin(), back.values().end()) ==
        std::vector<double>(p.values().begin(), p.values().end()));
  CHECK_THROWS_AS(pixel_shuffle(Tensor::zeros({3, 2, 2}), 2), ShapeError);
  CHECK_THROWS_AS(pixel_unshuffle(Tensor::zeros({1, 3, 2}), 2), ShapeError);
}

TEST_CASE("channel softmax normalizes per position and survives large logits") {
  const Tensor x = Tensor::from({3, 1, 2}, {1000, 0, 1000, 0, 999, 0});
  const Tensor s = channel_softmax(x);
  for (std::size_t p = 0; p < 2; ++p) {
    double sum = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(std::isfinite(s[c * 2 + p]));
      sum += s[c * 2 + p];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK(s[1] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("concat and arithmetic") {
  const Tensor a = Tensor::from({1, 1, 2}, {1, 2});
  const Tensor b = Tensor::from({2, 1, 2}, {3, 4, 5, 6});
  const Tensor c = concat({a, b});
  CHECK(c.shape() == Shape{3, 1, 2});
  CHECK(c[5] == 6.0);
  CHECK_THROWS_AS(concat({a, Tensor::zeros({1, 2, 2})}), ShapeError);
  CHECK(sum(b).item() == 18.0);
  CHECK(mean(b).item() == 4.5);
  CHECK(sub(b, b)[3] == 0.0);
  CHECK(mul(b, b)[1] == 16.0);
  CHECK_THROWS_AS(add(a, b), ShapeError);
}
