#include "liddense/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "liddense/depth_io.hpp"

namespace liddense {

namespace {

bool bitwise_equal(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

}  // namespace

GradcheckReport gradcheck(const std::function<Tensor()>& f, const std::vector<NamedTensor>& wrt,
                          double h, double tol) {
  if (!(h > 0.0)) throw std::invalid_argument("gradcheck: step must be positive");
  for (const auto& item : wrt) {
    if (!item.tensor.defined() || !item.tensor.is_leaf() || !item.tensor.requires_grad()) {
      throw std::invalid_argument("gradcheck: '" + item.name + "' is not a trainable leaf");
    }
  }

  // Base evaluation, recorded twice to detect nondeterminism.
  std::vector<std::int32_t> decisions;
  Tensor base;
  {
    piecewise::Recorder rec;
    base = f();
    decisions = rec.decisions();
  }
  if (!base.defined() || base.numel() != 1) {
    throw ShapeError("gradcheck: f must return a scalar");
  }
  {
    NoGradGuard no_grad;
    piecewise::Recorder rec;
    const Tensor again = f();
    if (!bitwise_equal(again.item(), base.item()) || rec.decisions() != decisions) {
      throw NondeterminismError("gradcheck: repeated evaluation of f is not bit-identical");
    }
  }

  for (const auto& item : wrt) {
    Tensor t = item.tensor;
    t.zero_grad();
  }
  backward(base);

  GradcheckReport report;
  report.step = h;
  report.tolerance = tol;
  auto evaluate_replay = [&](std::size_t& mismatches) {
    NoGradGuard no_grad;
    piecewise::Recorder rec(decisions);
    const double v = f().item();
    if (rec.consumed() != decisions.size()) {
      throw NondeterminismError("gradcheck: evaluation structure changed under perturbation");
    }
    mismatches += rec.mismatches();
    return v;
  };

  for (const auto& item : wrt) {
    Tensor t = item.tensor;
    GradcheckEntry entry;
    entry.name = item.name;
    entry.elements = t.numel();
    const std::vector<double> analytic(t.grad().begin(), t.grad().end());
    auto values = t.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      std::size_t mismatches = 0;
      values[i] = original + h;
      const double plus = evaluate_replay(mismatches);
      values[i] = original - h;
      const double minus = evaluate_replay(mismatches);
      values[i] = original;
      const double numeric = (plus - minus) / (2.0 * h);
      const double a = analytic.empty() ? 0.0 : analytic[i];
      double err = std::fabs(a - numeric) / std::max(1.0, std::fabs(numeric));
      if (!std::isfinite(err)) err = std::numeric_limits<double>::infinity();
      if (mismatches > 0) ++report.kinks;
      if (i == 0 || err > entry.max_error) {
        entry.max_error = err;
        entry.worst_index = i;
        entry.worst_analytic = a;
        entry.worst_numeric = numeric;
      }
    }
    report.max_error = std::max(report.max_error, entry.max_error);
    report.elements += entry.elements;
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace liddense
