#include "liddense/tensor.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

#include "liddense/depth_io.hpp"

namespace liddense {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("tensor of shape " + shape_string(shape) + " given " +
                     std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({}, {value}, requires_grad);
}

std::span<double> Tensor::mutable_values() { return node_->value; }

double Tensor::item() const {
  if (numel() != 1) {
    throw ShapeError("item() on tensor of shape " + shape_string(shape()));
  }
  return node_->value[0];
}

std::span<double> Tensor::mutable_grad() {
  if (node_->grad.size() != node_->value.size()) node_->grad.assign(node_->value.size(), 0.0);
  return node_->grad;
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const { return from(shape(), node_->value, false); }

Tensor Tensor::clone() const { return from(shape(), node_->value, requires_grad()); }

Tensor Tensor::make_result(const char* op, Shape shape, std::vector<double> values,
                           std::vector<Tensor> inputs,
                           std::function<void(detail::Node&)> backward) {
  Tensor out = from(std::move(shape), std::move(values), false);
  out.node_->op = op;
  const bool needs = g_grad_enabled && std::any_of(inputs.begin(), inputs.end(),
                                                   [](const Tensor& t) {
                                                     return t.defined() && t.requires_grad();
                                                   });
  if (needs) {
    out.node_->requires_grad = true;
    out.node_->inputs = std::move(inputs);
    out.node_->backward = std::move(backward);
  }
  return out;
}

// ---------------------------------------------------------------------------

Tape Tape::record(const Tensor& root) {
  Tape tape;
  if (!root.defined() || !root.requires_grad()) return tape;
  // Iterative post-order DFS: a node is emitted after all of its inputs.
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(root.node(), 0);
  seen.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next_input] = stack.back();
    if (next_input < node->inputs.size()) {
      const Tensor& in = node->inputs[next_input++];
      if (in.defined() && in.requires_grad() && seen.insert(in.node()).second) {
        stack.emplace_back(in.node(), 0);
      }
      continue;
    }
    tape.records_.push_back(node);
    stack.pop_back();
  }
  return tape;
}

void Tape::run_backward(const Tensor& root) const {
  if (records_.empty()) return;
  for (detail::Node* n : records_) {
    if (n->backward) {
      n->grad.assign(n->value.size(), 0.0);
    } else if (n->grad.size() != n->value.size()) {
      n->grad.assign(n->value.size(), 0.0);
    }
  }
  detail::Node* top = root.node();
  if (top->backward) {
    std::fill(top->grad.begin(), top->grad.end(), 1.0);
  } else {
    for (double& g : top->grad) g += 1.0;
    return;
  }
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backward) n->backward(*n);
  }
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ShapeError("backward: loss must be a scalar tensor");
  }
  Tape::record(loss).run_backward(loss);
}

// ---------------------------------------------------------------------------

namespace piecewise {

namespace {
thread_local Recorder* g_active = nullptr;
}

Recorder* active() { return g_active; }

Recorder::Recorder() : mode_(Mode::kRecord), previous_(g_active) { g_active = this; }

Recorder::Recorder(const std::vector<std::int32_t>& replay)
    : mode_(Mode::kReplay), replay_(&replay), previous_(g_active) {
  g_active = this;
}

Recorder::~Recorder() { g_active = previous_; }

std::int32_t Recorder::decide(std::int32_t natural) {
  if (mode_ == Mode::kRecord) {
    decisions_.push_back(natural);
    return natural;
  }
  if (cursor_ >= replay_->size()) {
    throw std::logic_error("piecewise replay: evaluation made more branch decisions than recorded");
  }
  const std::int32_t recorded = (*replay_)[cursor_++];
  if (recorded != natural) ++mismatches_;
  return recorded;
}

}  // namespace piecewise

namespace fault {

namespace {
std::string g_armed;
}

void arm(const std::string& op_name) { g_armed = op_name; }
void disarm() { g_armed.clear(); }
bool armed(const char* op_name) { return !g_armed.empty() && g_armed == op_name; }

}  // namespace fault

}  // namespace liddense
