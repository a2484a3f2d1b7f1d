#pragma once

#include <cstddef>
#include <stdexcept>

#include "liddense/depth_io.hpp"

namespace liddense::metrics {

/// KITTI-style error report over ground-truth-valid pixels.
struct EvalReport {
  double rmse = 0.0;          // mm
  double mae = 0.0;           // mm
  double irmse = 0.0;         // 1/km
  double imae = 0.0;          // 1/km
  double sq_error_rel = 0.0;  // percent
  double abs_error_rel = 0.0; // percent
  std::size_t n_valid = 0;
};

class EvaluationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Pixels where gt is invalid are ignored; pred must be > 0 wherever gt is valid.
//   RMSE  = sqrt(mean((p - g)^2)) * 1000      MAE  = mean(|p - g|) * 1000
//   iRMSE = sqrt(mean((1/p - 1/g)^2)) * 1000  iMAE = mean(|1/p - 1/g|) * 1000
//   absErrorRel = mean(|p - g| / g) * 100     sqErrorRel = mean((p - g)^2 / g) * 100
EvalReport evaluate(const DepthMap& pred, const DepthMap& gt);

/// Same contract, computed by a plain per-pixel loop in long double. Used as a
/// reference for evaluate().
EvalReport evaluate_oracle(const DepthMap& pred, const DepthMap& gt);

}  // namespace liddense::metrics
