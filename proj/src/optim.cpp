#include "liddense/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace liddense::optim {

void centralize_gradient(std::span<double> grad, const Shape& shape) {
  if (shape.size() < 2 || shape[0] == 0) return;
  const std::size_t slice = grad.size() / shape[0];
  for (std::size_t o = 0; o < shape[0]; ++o) {
    auto s = grad.subspan(o * slice, slice);
    double mean = 0.0;
    for (double g : s) mean += g;
    mean /= static_cast<double>(slice);
    for (double& g : s) g -= mean;
  }
}

AdamW::AdamW(const nn::ParameterSet& params, const AdamWConfig& config) : config_(config) {
  if (!(config.lr > 0.0) || config.weight_decay < 0.0) {
    throw std::invalid_argument("adamw: learning rate must be positive, weight decay >= 0");
  }
  for (const auto& item : params.items()) {
    m_.emplace_back(item.tensor.numel(), 0.0);
    v_.emplace_back(item.tensor.numel(), 0.0);
  }
}

void AdamW::step(nn::ParameterSet& params) {
  auto& items = params.items();
  if (items.size() != m_.size()) throw std::logic_error("adamw: parameter set changed");
  for (const auto& item : items) {
    if (!item.tensor.has_grad()) {
      throw std::logic_error("adamw: parameter '" + item.name + "' has no gradient");
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  const double step_size = config_.lr / bc1;
  const double bc2_sqrt = std::sqrt(bc2);
  const double decay = 1.0 - config_.lr * config_.weight_decay;

  for (std::size_t p = 0; p < items.size(); ++p) {
    Tensor t = items[p].tensor;
    std::vector<double> g(t.grad().begin(), t.grad().end());
    if (config_.gradient_centralization) centralize_gradient(g, t.shape());
    auto w = t.mutable_values();
    auto& m = m_[p];
    auto& v = v_[p];
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] *= decay;
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      const double denom = std::sqrt(v[i]) / bc2_sqrt + config_.eps;
      w[i] -= step_size * m[i] / denom;
    }
  }
}

}  // namespace liddense::optim
