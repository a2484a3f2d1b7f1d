#include "liddense/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "liddense/rng.hpp"
#include "liddense/scanline.hpp"

namespace liddense::scene {

namespace {

struct Color {
  double r, g, b;
};

constexpr Color kGround{0.40, 0.40, 0.42};
constexpr Color kBackdrop{0.65, 0.80, 0.95};
constexpr std::array<Color, 6> kAlbedos = {{{0.85, 0.20, 0.20},
                                            {0.20, 0.55, 0.85},
                                            {0.90, 0.75, 0.15},
                                            {0.30, 0.75, 0.30},
                                            {0.70, 0.35, 0.80},
                                            {0.95, 0.55, 0.20}}};

struct Box {
  double x0, x1, y0, y1, z0, z1;  // camera frame, y down
  Color albedo;
};

enum class Face { kFront, kSide, kTop };

// Slab test for a ray from the origin with direction (rx, ry, 1). Returns the
// entry distance along z (the ray's z component is 1) or +inf.
double hit_box(const Box& b, double rx, double ry, Face& face) {
  double lo = 0.0, hi = std::numeric_limits<double>::infinity();
  Face entry = Face::kFront;
  auto slab = [&](double dir, double a, double c, Face f) {
    if (dir == 0.0) {
      return a <= 0.0 && 0.0 <= c;
    }
    double t0 = a / dir, t1 = c / dir;
    if (t0 > t1) std::swap(t0, t1);
    if (t0 > lo) {
      lo = t0;
      entry = f;
    }
    hi = std::min(hi, t1);
    return true;
  };
  if (!slab(1.0, b.z0, b.z1, Face::kFront)) return std::numeric_limits<double>::infinity();
  if (!slab(rx, b.x0, b.x1, Face::kSide)) return std::numeric_limits<double>::infinity();
  if (!slab(ry, b.y0, b.y1, Face::kTop)) return std::numeric_limits<double>::infinity();
  if (lo > hi || hi <= 0.0) return std::numeric_limits<double>::infinity();
  face = entry;
  return lo;
}

}  // namespace

Scene make_synthetic_scene(std::uint64_t seed, int height, int width, const SceneConfig& cfg) {
  if (height <= 0 || width <= 0 || height % 4 != 0 || width % 4 != 0) {
    throw ShapeError("synthetic scene: height and width must be positive multiples of 4");
  }
  Rng rng(seed);
  Scene scene;
  const double f = cfg.focal_scale * width;
  scene.k = CameraIntrinsics(f, f, 0.5 * (width - 1), cfg.horizon * height);

  std::vector<Box> boxes;
  const int span = cfg.max_boxes - cfg.min_boxes + 1;
  const int n_boxes = cfg.min_boxes + static_cast<int>(rng.index(static_cast<std::uint64_t>(span)));
  for (int i = 0; i < n_boxes; ++i) {
    const double cx = rng.uniform(-5.0, 5.0);
    const double w = rng.uniform(1.0, 3.0);
    const double z0 = rng.uniform(4.0, 25.0);
    const double dz = rng.uniform(1.0, 4.0);
    const double h = rng.uniform(1.0, 3.5);
    const Color albedo = kAlbedos[rng.index(kAlbedos.size())];
    boxes.push_back({cx - 0.5 * w, cx + 0.5 * w, cfg.camera_height - h, cfg.camera_height, z0,
                     z0 + dz, albedo});
  }

  std::vector<double> depth(static_cast<std::size_t>(height) * width);
  std::vector<double> rgb(3 * depth.size());
  const std::size_t plane = depth.size();
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const double rx = (c - scene.k.cx) / scene.k.fx;
      const double ry = (r - scene.k.cy) / scene.k.fy;
      double z = cfg.far_depth;
      Color color = kBackdrop;
      if (ry > 0.0) {
        const double ground = cfg.camera_height / ry;
        if (ground < z) {
          z = ground;
          color = kGround;
        }
      }
      for (const Box& b : boxes) {
        Face face = Face::kFront;
        const double t = hit_box(b, rx, ry, face);
        if (t < z) {
          z = t;
          const double shade = face == Face::kFront ? 1.0 : (face == Face::kSide ? 0.7 : 0.85);
          color = {b.albedo.r * shade, b.albedo.g * shade, b.albedo.b * shade};
        }
      }
      const std::size_t i = static_cast<std::size_t>(r) * width + c;
      depth[i] = z;
      rgb[i] = color.r;
      rgb[plane + i] = color.g;
      rgb[2 * plane + i] = color.b;
    }
  }
  scene.gt = DepthMap(width, height, std::move(depth));
  scene.rgb = Tensor::from({3, static_cast<std::size_t>(height), static_cast<std::size_t>(width)},
                           std::move(rgb));

  // One scan line of a sensor whose angular line spacing matches the pixel
  // pitch at the image center.
  scene.interval_deg = std::atan(1.0 / scene.k.fy) * 180.0 / std::numbers::pi;
  const auto cloud = scanline::backproject(scene.gt, scene.k);
  const auto assign =
      scanline::assign_lines(cloud, std::nullopt, scene.interval_deg, scanline::kLevels);
  const int row = std::clamp(static_cast<int>(height * rng.uniform(0.55, 0.8)), 0, height - 1);
  const std::size_t probe = static_cast<std::size_t>(row) * width + width / 2;
  scene.scan_line = assign.line_index[probe];
  scene.sparse = scanline::extract_depthmap(scene.gt, cloud, assign, {scene.scan_line});
  return scene;
}

RgbImage tensor_to_rgb(const Tensor& rgb) {
  if (rgb.rank() != 3 || rgb.dim(0) != 3) {
    throw ShapeError("tensor_to_rgb: expected [3,H,W], got " + shape_string(rgb.shape()));
  }
  const int h = static_cast<int>(rgb.dim(1)), w = static_cast<int>(rgb.dim(2));
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::vector<Rgb> px(plane);
  auto to8 = [](double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  };
  for (std::size_t i = 0; i < plane; ++i) {
    px[i] = {to8(rgb[i]), to8(rgb[plane + i]), to8(rgb[2 * plane + i])};
  }
  return RgbImage(w, h, std::move(px));
}

}  // namespace liddense::scene
