#pragma once

#include <cmath>

#include "liddense/depth_io.hpp"

namespace liddense {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

/// Camera-frame ray through pixel (u=col, v=row) scaled to unit depth:
/// ((u-cx)/fx, (v-cy)/fy, 1). Points are ray * depth.
inline Vec3 camera_ray(const CameraIntrinsics& k, double col, double row) {
  return {(col - k.cx) / k.fx, (row - k.cy) / k.fy, 1.0};
}

inline Vec3 camera_point(const CameraIntrinsics& k, double col, double row, double depth) {
  return camera_ray(k, col, row) * depth;
}

/// Camera (x right, y down, z forward) to a z-up sensor frame (x forward,
/// y left, z up).
inline Vec3 camera_to_sensor(const Vec3& c) { return {c.z, -c.x, -c.y}; }

}  // namespace liddense
