#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "liddense/gradcheck.hpp"
#include "liddense/ops.hpp"
#include "liddense/scene.hpp"
#include "liddense/sgtbn.hpp"
#include "test_helpers.hpp"

using namespace liddense;
using namespace liddense::sgtbn;

namespace {

Tensor t1(double v) { return Tensor::from({1}, {v}); }

std::vector<double> random_values(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace

TEST_CASE("forward shapes and parameter budget") {
  SgtbnTiny net(1);
  const auto sc = scene::make_synthetic_scene(1, 16, 12);
  const auto out = net.forward(sc.rgb, depth_to_tensor(sc.sparse));
  for (const Tensor* t : {&out.d_global, &out.c_global, &out.d_local, &out.c_local, &out.d_final}) {
    CHECK(t->shape() == Shape{1, 16, 12});
  }
  CHECK(out.global_feature.shape() == Shape{8, 16, 12});
  CHECK(net.parameters().count() <= 200000);
  for (double d : out.d_global.values()) CHECK(d > 0.0);
  for (double d : out.d_local.values()) CHECK(d > 0.0);

  CHECK_THROWS_AS(net.forward(Tensor::zeros({3, 10, 12}), Tensor::zeros({1, 10, 12})), ShapeError);
  CHECK_THROWS_AS(net.forward(Tensor::zeros({2, 16, 12}), Tensor::zeros({1, 16, 12})), ShapeError);
  CHECK_THROWS_AS(net.forward(Tensor::zeros({3, 16, 12}), Tensor::zeros({1, 16, 8})), ShapeError);
  CHECK_THROWS_AS(scene::make_synthetic_scene(1, 10, 12), ShapeError);
}

TEST_CASE("construction is deterministic in the seed") {
  SgtbnTiny a(7), b(7), c(8);
  const auto& pa = a.parameters().items();
  bool any_diff = false;
  for (std::size_t p = 0; p < pa.size(); ++p) {
    const auto va = pa[p].tensor.values(), vb = b.parameters().items()[p].tensor.values();
    CHECK(std::equal(va.begin(), va.end(), vb.begin()));
    const auto vc = c.parameters().items()[p].tensor.values();
    any_diff = any_diff || !std::equal(va.begin(), va.end(), vc.begin());
  }
  CHECK(any_diff);
}

TEST_CASE("fusion worked examples") {
  CHECK(fuse(t1(3.0), t1(std::log(2.0)), t1(0.0), t1(0.0))[0] == 2.0);
  CHECK(std::fabs(fuse(t1(1.7), t1(52.0), t1(9.3), t1(2.0))[0] - 1.7) <= 1e-12);
  CHECK(fuse(t1(1.5), t1(0.3), t1(4.5), t1(0.3))[0] == 3.0);

  SgtbnTiny net(2);
  const auto sc = scene::make_synthetic_scene(2, 8, 8);
  const auto out = net.forward(sc.rgb, depth_to_tensor(sc.sparse));
  const Tensor same = fuse(out.d_global, out.c_global, out.d_local, out.c_global);
  for (std::size_t i = 0; i < same.numel(); ++i) {
    CHECK(same[i] == doctest::Approx(0.5 * (out.d_global[i] + out.d_local[i])).epsilon(1e-15));
  }
  for (std::size_t i = 0; i < out.d_final.numel(); ++i) {
    CHECK(out.d_final[i] >= std::min(out.d_global[i], out.d_local[i]));
    CHECK(out.d_final[i] <= std::max(out.d_global[i], out.d_local[i]));
  }
}

TEST_CASE("fusion is convex and shift invariant on random pixels") {
  Rng rng(3);
  const std::size_t n = 2000;
  const Shape s{1, 40, 50};
  const Tensor dg = Tensor::from(s, random_values(rng, n, 0.1, 80));
  const Tensor dl = Tensor::from(s, random_values(rng, n, 0.1, 80));
  const Tensor cg = Tensor::from(s, random_values(rng, n, -30, 30));
  const Tensor cl = Tensor::from(s, random_values(rng, n, -30, 30));
  const Tensor f = fuse(dg, cg, dl, cl);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(f[i] >= std::min(dg[i], dl[i]));
    CHECK(f[i] <= std::max(dg[i], dl[i]));
  }
  for (double shift : {-1000.0, 0.75, 700.0}) {
    std::vector<double> sg(cg.values().begin(), cg.values().end());
    std::vector<double> sl(cl.values().begin(), cl.values().end());
    for (std::size_t i = 0; i < n; ++i) {
      sg[i] = std::ldexp(std::round(std::ldexp(sg[i], 20)), -20) + shift;
      sl[i] = std::ldexp(std::round(std::ldexp(sl[i], 20)), -20) + shift;
    }
    // Values on a 2^-20 grid shifted by a grid-aligned constant are exact, so
    // the logit difference is unchanged bit for bit.
    std::vector<double> g0(sg), l0(sl);
    for (std::size_t i = 0; i < n; ++i) {
      g0[i] -= shift;
      l0[i] -= shift;
    }
    const Tensor a = fuse(dg, Tensor::from(s, g0), dl, Tensor::from(s, l0));
    const Tensor b = fuse(dg, Tensor::from(s, sg), dl, Tensor::from(s, sl));
    for (std::size_t i = 0; i < n; ++i) CHECK(a[i] == b[i]);
  }
  CHECK_THROWS_AS(fuse(dg, cg, dl, Tensor::zeros({1, 40, 49})), ShapeError);
}

TEST_CASE("fusion gradient") {
  Rng rng(4);
  const Shape s{1, 3, 3};
  Tensor dg = Tensor::from(s, random_values(rng, 9, 1, 20), true);
  Tensor dl = Tensor::from(s, random_values(rng, 9, 1, 20), true);
  Tensor cg = Tensor::from(s, random_values(rng, 9, -2, 2), true);
  Tensor cl = Tensor::from(s, random_values(rng, 9, -2, 2), true);
  const auto rep = gradcheck([&] { return ops::sum(ops::mul(fuse(dg, cg, dl, cl), fuse(dg, cg, dl, cl))); },
                             {{"dg", dg}, {"cg", cg}, {"dl", dl}, {"cl", cl}});
  CHECK(rep.passed());
}

TEST_CASE("masked mse") {
  DepthMap gt(3, 2, {2.0, 0.0, 0.0, 0.0, 0.0, 0.0});
  CHECK(mse_loss(Tensor::from({1, 2, 3}, {2.5, 9, 9, 9, 9, 9}), gt).item() == 0.25);
  CHECK(mse_loss(Tensor::from({1, 2, 3}, {2.0, 1, 1, 1, 1, 1}), gt).item() == 0.0);
  CHECK_THROWS_AS(mse_loss(Tensor::zeros({1, 3, 2}), gt), ShapeError);
  CHECK_THROWS_AS(mse_loss(Tensor::zeros({1, 2, 3}), DepthMap(3, 2)), std::invalid_argument);

  Rng rng(5);
  const DepthMap g = testing::random_depth(rng, 9, 7, 0.4, 30);
  const auto pv = random_values(rng, 63, 0.5, 30);
  long double acc = 0;
  int n = 0;
  for (int r = 0; r < 7; ++r) {
    for (int c = 0; c < 9; ++c) {
      if (g.at(r, c) <= 0) continue;
      const long double e = static_cast<long double>(pv[r * 9 + c]) - g.at(r, c);
      acc += e * e;
      ++n;
    }
  }
  CHECK(mse_loss(Tensor::from({1, 7, 9}, pv), g).item() ==
        doctest::Approx(static_cast<double>(acc / n)).epsilon(1e-13));
}

TEST_CASE("total loss: zero at gt, degenerate weights and recomposition") {
  const auto sc = scene::make_synthetic_scene(6, 8, 8);
  const Tensor gt = depth_to_tensor(sc.gt);
  SgtbnOutputs exact{gt, Tensor::zeros({1, 8, 8}), Tensor::zeros({8, 8, 8}), gt,
                     Tensor::zeros({1, 8, 8}), gt};
  LossConfig cfg;
  cfg.vnl.groups = 30;
  const auto zero = total_loss(exact, sc.gt, sc.k, cfg);
  CHECK(zero.l_total == 0.0);
  CHECK(zero.l_mse == 0.0);
  CHECK(zero.l_vn == 0.0);

  SgtbnTiny net(6);
  const auto out = net.forward(sc.rgb, depth_to_tensor(sc.sparse));
  const auto full = total_loss(out, sc.gt, sc.k, cfg);
  CHECK(full.recomposition_error() <= 1e-12);
  CHECK(full.l_total ==
        doctest::Approx(full.l_final_out + 0.1 * full.l_final_global + 0.1 * full.l_final_local)
            .epsilon(1e-14));
  CHECK(full.l_vn > 0.0);

  cfg.lambda = 0.0;
  cfg.w_global = 0.0;
  cfg.w_local = 0.0;
  const auto mse_only = total_loss(out, sc.gt, sc.k, cfg);
  CHECK(mse_only.l_total == mse_loss(out.d_final, sc.gt).item());
}

TEST_CASE("depth tensor conversion clips to the encodable range") {
  const DepthMap m = tensor_to_depth(Tensor::from({1, 1, 4}, {-1.0, 5.0, 1e6, std::nan("")}));
  CHECK(m.at(0, 0) == 0.0);
  CHECK(m.at(0, 1) == 5.0);
  CHECK(m.at(0, 2) == kMaxEncodableDepth);
  CHECK(m.at(0, 3) == 0.0);
  CHECK_THROWS_AS(tensor_to_depth(Tensor::zeros({2, 1, 3})), ShapeError);
}
