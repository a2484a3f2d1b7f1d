#pragma once

#include <cstdint>

#include "liddense/depth_io.hpp"
#include "liddense/tensor.hpp"

namespace liddense::scene {

struct SceneConfig {
  double camera_height = 1.6;  // meters above the ground plane
  double far_depth = 40.0;     // backdrop plane
  double focal_scale = 0.9;    // fx = fy = focal_scale * width
  double horizon = 0.35;       // principal point row as a fraction of height
  int min_boxes = 1;
  int max_boxes = 3;
};

/// Procedural street-like scene: ground plane, a far backdrop and 1-3
/// axis-aligned boxes standing on the ground, seen by a pinhole camera.
struct Scene {
  Tensor rgb;          // [3,H,W] in [0,1], flat albedo per object
  DepthMap sparse;     // gt restricted to one simulated scan line
  DepthMap gt;         // dense analytic depth
  CameraIntrinsics k;
  int scan_line = 0;   // selected line index
  double interval_deg = 0.0;
};

/// Deterministic in (seed, height, width, config). height and width must be
/// positive multiples of 4.
Scene make_synthetic_scene(std::uint64_t seed, int height, int width,
                           const SceneConfig& config = {});

/// [3,H,W] tensor in [0,1] to an 8-bit image.
RgbImage tensor_to_rgb(const Tensor& rgb);

}  // namespace liddense::scene
