#include "liddense/metrics.hpp"

#include <array>
#include <cmath>
#include <string>

namespace liddense::metrics {

namespace {

void check_inputs(const DepthMap& pred, const DepthMap& gt) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw ShapeError("evaluate: pred " + std::to_string(pred.width()) + "x" +
                     std::to_string(pred.height()) + " vs gt " + std::to_string(gt.width()) +
                     "x" + std::to_string(gt.height()));
  }
}

[[noreturn]] void throw_nonpositive(int row, int col) {
  throw EvaluationError("evaluate: nonpositive prediction at gt-valid pixel (row " +
                        std::to_string(row) + ", col " + std::to_string(col) + ")");
}

// Neumaier-compensated running sum; fixed order keeps reports reproducible.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace

EvalReport evaluate(const DepthMap& pred, const DepthMap& gt) {
  check_inputs(pred, gt);
  std::array<CompensatedSum, 6> sums;
  std::size_t n = 0;
  for (int r = 0; r < gt.height(); ++r) {
    for (int c = 0; c < gt.width(); ++c) {
      const double g = gt.at(r, c);
      if (g <= 0.0) continue;
      const double p = pred.at(r, c);
      if (!(p > 0.0)) throw_nonpositive(r, c);
      const double e = p - g;
      const double ie = 1.0 / p - 1.0 / g;
      sums[0].add(e * e);
      sums[1].add(std::fabs(e));
      sums[2].add(ie * ie);
      sums[3].add(std::fabs(ie));
      sums[4].add(e * e / g);
      sums[5].add(std::fabs(e) / g);
      ++n;
    }
  }
  if (n == 0) throw EvaluationError("evaluate: ground truth has no valid pixels");
  const double inv_n = 1.0 / static_cast<double>(n);
  EvalReport rep;
  rep.n_valid = n;
  rep.rmse = std::sqrt(sums[0].value() * inv_n) * 1000.0;
  rep.mae = sums[1].value() * inv_n * 1000.0;
  rep.irmse = std::sqrt(sums[2].value() * inv_n) * 1000.0;
  rep.imae = sums[3].value() * inv_n * 1000.0;
  rep.sq_error_rel = sums[4].value() * inv_n * 100.0;
  rep.abs_error_rel = sums[5].value() * inv_n * 100.0;
  return rep;
}

EvalReport evaluate_oracle(const DepthMap& pred, const DepthMap& gt) {
  check_inputs(pred, gt);
  long double sq = 0, ab = 0, isq = 0, iab = 0, sqrel = 0, absrel = 0;
  std::size_t n = 0;
  for (int r = 0; r < gt.height(); ++r) {
    for (int c = 0; c < gt.width(); ++c) {
      const long double g = gt.at(r, c);
      if (g <= 0) continue;
      const long double p = pred.at(r, c);
      if (!(p > 0)) throw_nonpositive(r, c);
      const long double diff = p - g;
      const long double idiff = 1.0L / p - 1.0L / g;
      sq += diff * diff;
      ab += diff < 0 ? -diff : diff;
      isq += idiff * idiff;
      iab += idiff < 0 ? -idiff : idiff;
      sqrel += diff * diff / g;
      absrel += (diff < 0 ? -diff : diff) / g;
      ++n;
    }
  }
  if (n == 0) throw EvaluationError("evaluate: ground truth has no valid pixels");
  const long double count = static_cast<long double>(n);
  EvalReport rep;
  rep.n_valid = n;
  rep.rmse = static_cast<double>(std::sqrt(sq / count) * 1000.0L);
  rep.mae = static_cast<double>(ab / count * 1000.0L);
  rep.irmse = static_cast<double>(std::sqrt(isq / count) * 1000.0L);
  rep.imae = static_cast<double>(iab / count * 1000.0L);
  rep.sq_error_rel = static_cast<double>(sqrel / count * 100.0L);
  rep.abs_error_rel = static_cast<double>(absrel / count * 100.0L);
  return rep;
}

}  // namespace liddense::metrics
