#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "liddense/depth_io.hpp"
#include "liddense/geometry.hpp"
#include "liddense/tensor.hpp"

// Virtual normal loss: mean L1 gap between the unit normals of planes
// through matching point triples of the predicted and ground-truth clouds.
namespace liddense::vnl {

struct VnlConfig {
  std::size_t groups = 100;
  /// Minimum sine of the angle between (p2 - p1) and (p3 - p1), on gt points.
  double min_sine = 0.15;
  /// Minimum pairwise pixel distance within a triple.
  double min_pixel_distance = 2.0;
  std::uint64_t seed = 0;
  /// Rejection-sampling budget is attempts_per_group * groups.
  std::size_t attempts_per_group = 100;

  void validate() const;
};

struct PointGroup {
  std::array<Pixel, 3> pixels;
  std::array<Vec3, 3> gt;  // camera-frame points of the ground truth
};

class SamplingExhaustedError : public std::runtime_error {
 public:
  SamplingExhaustedError(std::size_t attempts, std::size_t found, std::size_t wanted);
  std::size_t attempts() const { return attempts_; }

 private:
  std::size_t attempts_;
};

class ColinearError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Exactly cfg.groups triples of gt-valid pixels, deterministic in (gt, seed).
/// Rejects triples with close pixels, pixels on one image line, or gt points
/// spanning an angle with sine below cfg.min_sine.
std::vector<PointGroup> sample_groups(const DepthMap& gt, const CameraIntrinsics& k,
                                      const VnlConfig& cfg);

/// Index of the largest-magnitude component (earliest axis on ties).
int dominant_axis(const Vec3& n);

/// normalize((p2 - p1) x (p3 - p1)), flipped so the dominant component is
/// positive. Throws ColinearError when the cross product norm is below 1e-12.
Vec3 virtual_normal(const Vec3& p1, const Vec3& p2, const Vec3& p3);

/// Loss over explicit point triples (no gradient).
double vnl_from_points(std::span<const std::array<Vec3, 3>> pred,
                       std::span<const std::array<Vec3, 3>> gt);

/// Differentiable loss with respect to a predicted depth tensor shaped
/// [1, H, W] or [H, W]. Ground-truth normals are constants.
Tensor vnl_loss(const Tensor& pred_depth, std::span<const PointGroup> groups,
                const CameraIntrinsics& k);

Tensor vnl_loss(const Tensor& pred_depth, const DepthMap& gt, const CameraIntrinsics& k,
                const VnlConfig& cfg);

}  // namespace liddense::vnl
