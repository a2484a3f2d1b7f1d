#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "liddense/metrics.hpp"
#include "liddense/scene.hpp"
#include "liddense/sgtbn.hpp"

namespace liddense::train {

struct TrainConfig {
  std::size_t steps = 500;
  std::uint64_t seed = 0;
  double lr = 1e-3;
  double weight_decay = 1e-4;
  bool gc_enabled = true;
  double lambda = 100.0;
  double w_global = 0.1;
  double w_local = 0.1;
  std::size_t vnl_groups = 100;
  int height = 32;
  int width = 32;
  std::size_t eval_every = 50;
  std::size_t eval_scenes = 8;
  sgtbn::SgtbnConfig net;
  scene::SceneConfig scene;

  void validate() const;
};

struct StepRecord {
  std::size_t step = 0;
  std::uint64_t vnl_seed = 0;
  sgtbn::LossBreakdown loss;  // `total` is released after the update
};

/// Held-out metrics of the model as it stood before update `step` (or after
/// the last update when step == steps).
struct EvalRecord {
  std::size_t step = 0;
  metrics::EvalReport report;  // pooled over all held-out scenes
};

struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<EvalRecord> evals;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t step, const std::string& detail);
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

struct TrainResult {
  TrainLog log;
  sgtbn::SgtbnTiny model;
};

/// Called after each step record and each evaluation, in log order.
struct TrainCallbacks {
  std::function<void(const StepRecord&)> on_step;
  std::function<void(const EvalRecord&)> on_eval;
};

/// Seeds of the fixed held-out scenes; independent of the run seed.
std::vector<std::uint64_t> heldout_seeds(std::size_t count);

/// Pooled metrics of the model's final depth over the given scenes.
metrics::EvalReport evaluate_model(const sgtbn::SgtbnTiny& model,
                                   const std::vector<scene::Scene>& scenes);

/// Trains on freshly generated synthetic scenes, one per step. Deterministic in
/// the config. Throws DivergenceError when l_total becomes non-finite or a
/// predicted depth leaves (0, inf).
TrainResult train_toy(const TrainConfig& config, const TrainCallbacks& callbacks = {});

}  // namespace liddense::train
