#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace liddense {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

class Tensor;

namespace detail {

// One node of the dynamic graph. `backward` reads this node's grad and
// accumulates into the grads of `inputs`.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<Tensor> inputs;
  std::function<void(Node&)> backward;
};

}  // namespace detail

/// Dense row-major array of doubles with an optional gradient slot. Copies
/// share storage (handle semantics); use clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t numel() const { return node_->value.size(); }

  std::span<const double> values() const { return node_->value; }
  /// Mutable access for leaves (optimizer updates, finite differences).
  std::span<double> mutable_values();
  double item() const;
  double operator[](std::size_t i) const { return node_->value[i]; }

  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return !node_->backward; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad();
  void zero_grad();

  const char* op_name() const { return node_->op; }
  Tensor detach() const;
  Tensor clone() const;

  detail::Node* node() const { return node_.get(); }

  // Builds an op result. `backward` is dropped when no input requires grad or
  // when a NoGradGuard is active.
  static Tensor make_result(const char* op, Shape shape, std::vector<double> values,
                            std::vector<Tensor> inputs,
                            std::function<void(detail::Node&)> backward);

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

/// Disables graph recording on this thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

/// Topologically ordered op records reachable from a root.
class Tape {
 public:
  static Tape record(const Tensor& root);

  std::size_t size() const { return records_.size(); }
  std::span<detail::Node* const> records() const { return records_; }

  /// Seeds d(root)/d(root) = 1 and runs each record's backward rule exactly
  /// once, in reverse order. Leaf grads accumulate across calls; interior
  /// grads are reset.
  void run_backward(const Tensor& root) const;

 private:
  std::vector<detail::Node*> records_;  // every node, inputs before consumers
};

/// Populates grads of every leaf reachable from a scalar loss. Throws
/// ShapeError for non-scalar input.
void backward(const Tensor& loss);

namespace detail {

// Grad buffer of an op input inside a backward rule, or nullptr when that
// input does not take gradients.
inline double* grad_ptr(const Tensor& t) {
  return t.defined() && t.requires_grad() ? t.node()->grad.data() : nullptr;
}

}  // namespace detail

namespace piecewise {

// Ops with data-dependent branches (relu masks, max-pool argmax, sign
// choices) report each branch through decide(). Under a Recorder in record
// mode the choices are stored; in replay mode the stored choices are used
// instead, which keeps an evaluation on the same smooth piece of a piecewise
// function. Without an active recorder decide() returns its argument.

class Recorder {
 public:
  enum class Mode { kRecord, kReplay };

  Recorder();  // record mode
  explicit Recorder(const std::vector<std::int32_t>& replay);
  ~Recorder();
  Recorder(const Recorder&) = delete;
  Recorder& operator=(const Recorder&) = delete;

  std::int32_t decide(std::int32_t natural);

  Mode mode() const { return mode_; }
  const std::vector<std::int32_t>& decisions() const { return decisions_; }
  /// Replay mode: how many natural choices differed from the replayed ones.
  std::size_t mismatches() const { return mismatches_; }
  std::size_t consumed() const { return cursor_; }

 private:
  Mode mode_;
  std::vector<std::int32_t> decisions_;
  const std::vector<std::int32_t>* replay_ = nullptr;
  std::size_t cursor_ = 0;
  std::size_t mismatches_ = 0;
  Recorder* previous_;
};

Recorder* active();

inline std::int32_t decide(Recorder* rec, std::int32_t natural) {
  return rec == nullptr ? natural : rec->decide(natural);
}

}  // namespace piecewise

namespace fault {

// Deliberate backward-rule corruption for exercising the gradient checker.
// When the named op is armed, its backward rule scales the input gradient by
// 1.01.
void arm(const std::string& op_name);
void disarm();
bool armed(const char* op_name);
inline double factor(const char* op_name) { return armed(op_name) ? 1.01 : 1.0; }

}  // namespace fault

}  // namespace liddense
