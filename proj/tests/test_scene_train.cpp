#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "liddense/checkpoint.hpp"
#include "liddense/scanline.hpp"
#include "liddense/scene.hpp"
#include "liddense/train.hpp"

using namespace liddense;

TEST_CASE("synthetic scenes are deterministic, dense, and sparse on one line") {
  for (std::uint64_t seed : {0u, 1u, 2u, 17u}) {
    const auto a = scene::make_synthetic_scene(seed, 32, 32);
    const auto b = scene::make_synthetic_scene(seed, 32, 32);
    CHECK(a.gt == b.gt);
    CHECK(a.sparse == b.sparse);
    CHECK(std::equal(a.rgb.values().begin(), a.rgb.values().end(), b.rgb.values().begin()));
    CHECK(a.gt.valid_count() == a.gt.size());
    REQUIRE(a.sparse.valid_count() > 0);
    CHECK(a.sparse.valid_count() < a.gt.size());
    for (double v : a.rgb.values()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }

    const auto cloud = scanline::backproject(a.gt, a.k);
    const auto assign = scanline::assign_lines(cloud, std::nullopt, a.interval_deg, scanline::kLevels);
    for (int r = 0; r < 32; ++r) {
      for (int c = 0; c < 32; ++c) {
        if (!a.sparse.valid(r, c)) continue;
        CHECK(a.sparse.at(r, c) == a.gt.at(r, c));
        CHECK(assign.line_index[static_cast<std::size_t>(r) * 32 + c] == a.scan_line);
      }
    }
  }
  CHECK(!(scene::make_synthetic_scene(1, 32, 32).gt == scene::make_synthetic_scene(2, 32, 32).gt));
}

TEST_CASE("rgb conversion to 8-bit") {
  const auto img = scene::tensor_to_rgb(Tensor::from({3, 1, 2}, {0.0, 1.5, 0.5, -1.0, 1.0, 0.2}));
  CHECK(img.at(0, 0) == Rgb{0, 128, 255});
  CHECK(img.at(0, 1) == Rgb{255, 0, 51});
  CHECK_THROWS_AS(scene::tensor_to_rgb(Tensor::zeros({1, 2, 2})), ShapeError);
}

TEST_CASE("zero steps leaves the initialization untouched") {
  train::TrainConfig cfg;
  cfg.steps = 0;
  cfg.height = cfg.width = 16;
  cfg.eval_scenes = 2;
  const auto res = train::train_toy(cfg);
  CHECK(res.log.steps.empty());
  REQUIRE(res.log.evals.size() == 1);
  CHECK(res.log.evals[0].step == 0);

  train::TrainConfig again = cfg;
  const auto fresh = train::train_toy(again);
  std::ostringstream a, b;
  checkpoint::save(res.model.parameters(), a);
  checkpoint::save(fresh.model.parameters(), b);
  CHECK(a.str() == b.str());
}

TEST_CASE("short training runs are bit-reproducible and log every stage") {
  train::TrainConfig cfg;
  cfg.steps = 6;
  cfg.eval_every = 4;
  cfg.height = cfg.width = 16;
  cfg.eval_scenes = 2;
  cfg.vnl_groups = 20;
  std::vector<std::size_t> callback_steps;
  train::TrainCallbacks cb;
  cb.on_step = [&](const train::StepRecord& r) { callback_steps.push_back(r.step); };
  const auto a = train::train_toy(cfg, cb);
  const auto b = train::train_toy(cfg);

  CHECK(callback_steps == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
  REQUIRE(a.log.evals.size() == 3);
  CHECK(a.log.evals[0].step == 0);
  CHECK(a.log.evals[1].step == 4);
  CHECK(a.log.evals[2].step == 6);
  REQUIRE(a.log.steps.size() == 6);
  std::set<std::uint64_t> vnl_seeds;
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(a.log.steps[i].loss.l_total == b.log.steps[i].loss.l_total);
    CHECK(std::isfinite(a.log.steps[i].loss.l_total));
    CHECK(a.log.steps[i].loss.recomposition_error() <= 1e-12);
    CHECK(!a.log.steps[i].loss.total.defined());
    vnl_seeds.insert(a.log.steps[i].vnl_seed);
  }
  CHECK(vnl_seeds.size() == 6);
  for (std::size_t i = 0; i < 3; ++i) CHECK(a.log.evals[i].report.rmse == b.log.evals[i].report.rmse);
  std::ostringstream ca, cb2;
  checkpoint::save(a.model.parameters(), ca);
  checkpoint::save(b.model.parameters(), cb2);
  CHECK(ca.str() == cb2.str());

  cfg.seed = 1;
  const auto c = train::train_toy(cfg);
  CHECK(c.log.steps[0].loss.l_total != a.log.steps[0].loss.l_total);
}

TEST_CASE("held-out set is independent of the run seed") {
  CHECK(train::heldout_seeds(8) == train::heldout_seeds(8));
  const auto s = train::heldout_seeds(8);
  CHECK(std::set<std::uint64_t>(s.begin(), s.end()).size() == 8);
}

TEST_CASE("divergence guard and config validation") {
  train::TrainConfig cfg;
  cfg.steps = 5;
  cfg.height = cfg.width = 16;
  cfg.eval_scenes = 1;
  cfg.vnl_groups = 10;
  cfg.lr = 1e300;
  try {
    train::train_toy(cfg);
    FAIL("expected divergence");
  } catch (const train::DivergenceError& e) {
    CHECK(e.step() >= 1);
    CHECK(e.step() < 5);
  }

  train::TrainConfig bad;
  bad.lr = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = {};
  bad.width = 30;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = {};
  bad.vnl_groups = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
