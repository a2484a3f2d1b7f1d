#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "liddense/tensor.hpp"

namespace liddense {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct GradcheckEntry {
  std::string name;
  std::size_t elements = 0;
  double max_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;
  double max_error = 0.0;
  std::size_t elements = 0;
  /// Elements whose +-h stencil crossed a branch boundary (relu, max-pool,
  /// sign); those were differenced on the branch active at the base point.
  std::size_t kinks = 0;
  double step = 0.0;
  double tolerance = 0.0;

  bool passed() const { return max_error < tolerance; }
};

/// Raised when two evaluations of f at the same point disagree.
class NondeterminismError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Compares d f / d t for every element of every tensor in `wrt` (leaves with
/// requires_grad, captured by f) against central differences
/// (f(t+h) - f(t-h)) / 2h. Error per element is
/// |analytic - numeric| / max(1, |numeric|).
///
/// The numeric evaluations replay the branch decisions of the base
/// evaluation, so a stencil that straddles a relu or max-pool boundary still
/// differences a smooth function. Such elements are counted in `kinks`.
GradcheckReport gradcheck(const std::function<Tensor()>& f, const std::vector<NamedTensor>& wrt,
                          double h = 1e-5, double tol = 1e-4);

}  // namespace liddense
