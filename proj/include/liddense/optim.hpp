#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "liddense/nn.hpp"

namespace liddense::optim {

struct AdamWConfig {
  double lr = 1e-3;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool gradient_centralization = true;
};

/// Subtracts, for every slice along the first axis of a rank >= 2 tensor, the
/// mean of that slice. Rank 0/1 gradients are left untouched.
void centralize_gradient(std::span<double> grad, const Shape& shape);

/// AdamW with decoupled weight decay; gradients of rank >= 2 parameters are
/// centralized first when enabled.
class AdamW {
 public:
  AdamW(const nn::ParameterSet& params, const AdamWConfig& config);

  /// One update from the current grads. Throws std::logic_error when a
  /// parameter has no gradient.
  void step(nn::ParameterSet& params);

  std::size_t steps_taken() const { return t_; }
  const AdamWConfig& config() const { return config_; }

 private:
  AdamWConfig config_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace liddense::optim
