#include "liddense/train.hpp"

#include <cmath>
#include <string>

#include "liddense/optim.hpp"
#include "liddense/rng.hpp"

namespace liddense::train {

namespace {

enum Stream : std::uint64_t { kModel = 1, kTrainScene = 2, kVnl = 3, kHeldout = 4 };

constexpr std::uint64_t kHeldoutBase = 0x5eed0f4e1d0b5e7ULL;

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0) || weight_decay < 0.0 || lambda < 0.0 || w_global < 0.0 || w_local < 0.0) {
    throw std::invalid_argument("train: rates must be positive and weights non-negative");
  }
  if (vnl_groups == 0 || eval_every == 0 || eval_scenes == 0) {
    throw std::invalid_argument("train: vnl groups, eval interval and eval scenes must be positive");
  }
  if (height <= 0 || width <= 0 || height % 4 != 0 || width % 4 != 0) {
    throw std::invalid_argument("train: height and width must be positive multiples of 4");
  }
}

DivergenceError::DivergenceError(std::size_t step, const std::string& detail)
    : std::runtime_error("training diverged at step " + std::to_string(step) + ": " + detail),
      step_(step) {}

std::vector<std::uint64_t> heldout_seeds(std::size_t count) {
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < count; ++i) seeds.push_back(derive_seed(kHeldoutBase, kHeldout, i));
  return seeds;
}

metrics::EvalReport evaluate_model(const sgtbn::SgtbnTiny& model,
                                   const std::vector<scene::Scene>& scenes) {
  if (scenes.empty()) throw std::invalid_argument("evaluate_model: no scenes");
  // Stack all scenes vertically so the metrics pool every held-out pixel.
  const int w = scenes.front().gt.width();
  int total_h = 0;
  for (const auto& s : scenes) {
    if (s.gt.width() != w) throw ShapeError("evaluate_model: scene widths differ");
    total_h += s.gt.height();
  }
  std::vector<double> pred, gt;
  pred.reserve(static_cast<std::size_t>(total_h) * w);
  gt.reserve(pred.capacity());
  NoGradGuard no_grad;
  for (const auto& s : scenes) {
    const auto out = model.forward(s.rgb, sgtbn::depth_to_tensor(s.sparse));
    const DepthMap p = sgtbn::tensor_to_depth(out.d_final);
    pred.insert(pred.end(), p.data().begin(), p.data().end());
    gt.insert(gt.end(), s.gt.data().begin(), s.gt.data().end());
  }
  return metrics::evaluate(DepthMap(w, total_h, std::move(pred)),
                           DepthMap(w, total_h, std::move(gt)));
}

TrainResult train_toy(const TrainConfig& config, const TrainCallbacks& callbacks) {
  config.validate();
  TrainResult result{{}, sgtbn::SgtbnTiny(derive_seed(config.seed, kModel), config.net)};
  auto& model = result.model;
  auto& params = model.parameters();

  std::vector<scene::Scene> heldout;
  for (auto s : heldout_seeds(config.eval_scenes)) {
    heldout.push_back(scene::make_synthetic_scene(s, config.height, config.width, config.scene));
  }

  optim::AdamWConfig opt_cfg;
  opt_cfg.lr = config.lr;
  opt_cfg.weight_decay = config.weight_decay;
  opt_cfg.gradient_centralization = config.gc_enabled;
  optim::AdamW optimizer(params, opt_cfg);

  sgtbn::LossConfig loss_cfg;
  loss_cfg.lambda = config.lambda;
  loss_cfg.w_global = config.w_global;
  loss_cfg.w_local = config.w_local;
  loss_cfg.vnl.groups = config.vnl_groups;

  auto run_eval = [&](std::size_t step) {
    EvalRecord rec{step, evaluate_model(model, heldout)};
    result.log.evals.push_back(rec);
    if (callbacks.on_eval) callbacks.on_eval(rec);
  };

  for (std::size_t step = 0; step < config.steps; ++step) {
    if (step % config.eval_every == 0) run_eval(step);

    const auto sc = scene::make_synthetic_scene(derive_seed(config.seed, kTrainScene, step),
                                                config.height, config.width, config.scene);
    loss_cfg.vnl.seed = derive_seed(config.seed, kVnl, step);
    const auto out = model.forward(sc.rgb, sgtbn::depth_to_tensor(sc.sparse));
    // A prediction outside (0, inf) would make the normal term undefined; it
    // only happens once the weights have already blown up.
    for (const Tensor* d : {&out.d_final, &out.d_global, &out.d_local}) {
      for (double v : d->values()) {
        if (!(std::isfinite(v) && v > 0.0)) {
          throw DivergenceError(step, "predicted depth " + std::to_string(v));
        }
      }
    }
    auto loss = sgtbn::total_loss(out, sc.gt, sc.k, loss_cfg);
    if (!std::isfinite(loss.l_total)) {
      throw DivergenceError(step, "l_total = " + std::to_string(loss.l_total) +
                                      " (mse " + std::to_string(loss.l_mse) + ", vn " +
                                      std::to_string(loss.l_vn) + ")");
    }
    params.zero_grad();
    backward(loss.total);
    optimizer.step(params);
    loss.total = Tensor();

    StepRecord rec{step, loss_cfg.vnl.seed, std::move(loss)};
    result.log.steps.push_back(rec);
    if (callbacks.on_step) callbacks.on_step(rec);
  }
  run_eval(config.steps);
  return result;
}

}  // namespace liddense::train
