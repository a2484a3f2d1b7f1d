#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "liddense/gradcheck.hpp"
#include "liddense/scene.hpp"
#include "liddense/vnl.hpp"
#include "test_helpers.hpp"

using namespace liddense;
using namespace liddense::vnl;

namespace {

const CameraIntrinsics kK(8.0, 8.0, 3.5, 3.5);

Tensor depth_tensor(const DepthMap& m) {
  return Tensor::from({1, static_cast<std::size_t>(m.height()), static_cast<std::size_t>(m.width())},
                      std::vector<double>(m.data().begin(), m.data().end()), true);
}

}  // namespace

TEST_CASE("virtual normal examples and sign convention") {
  CHECK(virtual_normal({0, 0, 0}, {1, 0, 0}, {0, 1, 0}) == Vec3{0, 0, 1});
  CHECK(virtual_normal({0, 0, 0}, {0, 1, 0}, {1, 0, 0}) == Vec3{0, 0, 1});
  const Vec3 n = virtual_normal({0, 0, 0}, {1, 0, 0}, {0, 0, 1});
  CHECK(n.x == 0.0);
  CHECK(n.y == 1.0);
  CHECK(n.z == 0.0);
  CHECK(dominant_axis({1, -1, 0.5}) == 0);
  CHECK(dominant_axis({0.5, -2, 2}) == 1);
  CHECK_THROWS_AS(virtual_normal({0, 0, 0}, {1, 1, 1}, {2, 2, 2}), ColinearError);

  const Vec3 t{3.0, -7.0, 11.0};
  const Vec3 a{0.3, 1.2, 4.0}, b{1.1, -0.4, 5.2}, c{-0.7, 0.2, 6.1};
  const Vec3 n0 = virtual_normal(a, b, c), n1 = virtual_normal(a + t, b + t, c + t);
  CHECK(std::fabs(n0.x - n1.x) < 1e-12);
  CHECK(std::fabs(n0.y - n1.y) < 1e-12);
  CHECK(std::fabs(n0.z - n1.z) < 1e-12);
  CHECK(norm(n0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("tilted plane against a fronto-parallel plane") {
  const double s = 0.5;
  const std::array<Vec3, 3> gt = {Vec3{0, 0, 5}, Vec3{1, 0, 5}, Vec3{0, 1, 5}};
  const std::array<Vec3, 3> pred = {Vec3{0, 0, 5}, Vec3{1, 0, 5 + s}, Vec3{0, 1, 5}};
  // cross((1,0,s), (0,1,0)) = (-s, 0, 1)
  const double r = std::sqrt(1 + s * s);
  const double expected = s / r + (1.0 - 1.0 / r);
  const double got = vnl_from_points(std::span(&pred, 1), std::span(&gt, 1));
  CHECK(got == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("loss is invariant to a common translation of both point sets") {
  Rng rng(40);
  std::vector<std::array<Vec3, 3>> p(20), g(20), pt(20), gtt(20);
  const Vec3 t{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
  for (std::size_t i = 0; i < 20; ++i) {
    for (int k = 0; k < 3; ++k) {
      g[i][k] = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(3, 9)};
      p[i][k] = g[i][k] + Vec3{rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)};
      gtt[i][k] = g[i][k] + t;
      pt[i][k] = p[i][k] + t;
    }
  }
  CHECK(std::fabs(vnl_from_points(p, g) - vnl_from_points(pt, gtt)) <= 1e-12);
  CHECK(vnl_from_points(g, g) == 0.0);
}

TEST_CASE("sampling: forced triple, exhaustion and determinism") {
  DepthMap three(8, 8);
  three.set(0, 0, 5.0);
  three.set(0, 6, 6.0);
  three.set(5, 2, 7.0);
  VnlConfig cfg;
  cfg.groups = 1;
  const auto g = sample_groups(three, kK, cfg);
  REQUIRE(g.size() == 1);
  std::vector<Pixel> px(g[0].pixels.begin(), g[0].pixels.end());
  for (Pixel want : {Pixel{0, 0}, Pixel{0, 6}, Pixel{5, 2}}) {
    CHECK(std::find(px.begin(), px.end(), want) != px.end());
  }

  DepthMap row(8, 8);
  for (int c = 0; c < 8; ++c) row.set(3, c, 4.0);
  try {
    sample_groups(row, kK, cfg);
    FAIL("expected SamplingExhaustedError");
  } catch (const SamplingExhaustedError& e) {
    CHECK(e.attempts() == 100);
  }
  CHECK_THROWS_AS(sample_groups(DepthMap(8, 8), kK, cfg), SamplingExhaustedError);

  Rng rng(41);
  const DepthMap dense = testing::random_depth(rng, 16, 12, 1.0, 30.0);
  cfg.groups = 50;
  cfg.seed = 9;
  const auto a = sample_groups(dense, kK, cfg);
  const auto b = sample_groups(dense, kK, cfg);
  REQUIRE(a.size() == 50);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].pixels == b[i].pixels);
    CHECK(a[i].gt == b[i].gt);
  }
  cfg.seed = 10;
  const auto c = sample_groups(dense, kK, cfg);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs = differs || !(a[i].pixels == c[i].pixels);
  CHECK(differs);
}

TEST_CASE("sampled triples satisfy the spread and angle rules") {
  Rng rng(42);
  const DepthMap dense = testing::random_depth(rng, 16, 16, 0.7, 30.0);
  VnlConfig cfg;
  cfg.groups = 200;
  for (const auto& g : sample_groups(dense, kK, cfg)) {
    for (int a = 0; a < 3; ++a) {
      CHECK(dense.valid(g.pixels[a].row, g.pixels[a].col));
      for (int b = a + 1; b < 3; ++b) {
        const double dr = g.pixels[a].row - g.pixels[b].row, dc = g.pixels[a].col - g.pixels[b].col;
        CHECK(std::sqrt(dr * dr + dc * dc) >= 2.0);
      }
    }
    const Vec3 u = g.gt[1] - g.gt[0], v = g.gt[2] - g.gt[0];
    CHECK(norm(cross(u, v)) / (norm(u) * norm(v)) >= 0.15);
  }
}

TEST_CASE("config validation") {
  VnlConfig cfg;
  cfg.groups = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.groups = 1;
  cfg.min_sine = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("differentiable loss: zero at gt, bounded, and rejects nonpositive depth") {
  const auto sc = scene::make_synthetic_scene(3, 8, 8);
  VnlConfig cfg;
  cfg.groups = 20;
  const Tensor exact = depth_tensor(sc.gt);
  CHECK(vnl_loss(exact, sc.gt, sc.k, cfg).item() == 0.0);

  Rng rng(43);
  std::vector<double> noisy(sc.gt.data().begin(), sc.gt.data().end());
  for (double& d : noisy) d *= rng.uniform(0.3, 3.0);
  const double l = vnl_loss(Tensor::from({1, 8, 8}, noisy), sc.gt, sc.k, cfg).item();
  CHECK(l > 0.0);
  CHECK(l <= 4.0);
  CHECK(vnl_loss(Tensor::from({8, 8}, noisy), sc.gt, sc.k, cfg).item() == l);

  std::vector<double> zero(64, 0.0);
  CHECK_THROWS(vnl_loss(Tensor::from({1, 8, 8}, zero), sc.gt, sc.k, cfg));
  CHECK_THROWS_AS(vnl_loss(Tensor::from({1, 4, 16}, noisy), sc.gt, sc.k, cfg), ShapeError);
}

TEST_CASE("differentiable loss agrees with the point-triple form and its gradient checks") {
  const auto sc = scene::make_synthetic_scene(4, 8, 8);
  VnlConfig cfg;
  cfg.groups = 5;
  cfg.seed = 2;
  const auto groups = sample_groups(sc.gt, sc.k, cfg);
  Rng rng(44);
  std::vector<double> pv(sc.gt.data().begin(), sc.gt.data().end());
  for (double& d : pv) d *= rng.uniform(0.8, 1.2);
  Tensor pred = Tensor::from({1, 8, 8}, pv, true);

  std::vector<std::array<Vec3, 3>> p, g;
  for (const auto& grp : groups) {
    std::array<Vec3, 3> tri;
    for (int i = 0; i < 3; ++i) {
      const Pixel px = grp.pixels[i];
      tri[i] = camera_point(sc.k, px.col, px.row, pv[px.row * 8 + px.col]);
    }
    p.push_back(tri);
    g.push_back(grp.gt);
  }
  CHECK(vnl_loss(pred, groups, sc.k).item() == doctest::Approx(vnl_from_points(p, g)).epsilon(1e-14));

  const auto rep = gradcheck([&] { return vnl_loss(pred, groups, sc.k); }, {{"pred", pred}});
  CHECK(rep.max_error < 1e-4);
}
