#include "liddense/vnl.hpp"

#include <cmath>
#include <string>

#include "liddense/rng.hpp"

namespace liddense::vnl {

namespace {

constexpr double kColinearNorm = 1e-12;

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

Vec3 canonical(const Vec3& c, double nc, double flip) {
  return {flip * c.x / nc, flip * c.y / nc, flip * c.z / nc};
}

}  // namespace

void VnlConfig::validate() const {
  if (groups < 1) throw std::invalid_argument("vnl: group count must be >= 1");
  if (!(min_sine > 0.0 && min_sine < 1.0)) {
    throw std::invalid_argument("vnl: colinearity threshold must lie in (0, 1)");
  }
  if (attempts_per_group < 1) throw std::invalid_argument("vnl: attempt budget must be >= 1");
}

SamplingExhaustedError::SamplingExhaustedError(std::size_t attempts, std::size_t found,
                                               std::size_t wanted)
    : std::runtime_error("vnl: sampling exhausted after " + std::to_string(attempts) +
                         " attempts (" + std::to_string(found) + " of " +
                         std::to_string(wanted) + " groups found)"),
      attempts_(attempts) {}

std::vector<PointGroup> sample_groups(const DepthMap& gt, const CameraIntrinsics& k,
                                      const VnlConfig& cfg) {
  cfg.validate();
  std::vector<Pixel> valid;
  for (int r = 0; r < gt.height(); ++r) {
    for (int c = 0; c < gt.width(); ++c) {
      if (gt.valid(r, c)) valid.push_back({r, c});
    }
  }
  const std::size_t budget = cfg.attempts_per_group * cfg.groups;
  std::vector<PointGroup> groups;
  if (valid.size() < 3) throw SamplingExhaustedError(0, 0, cfg.groups);

  Rng rng(cfg.seed);
  const double min_d2 = cfg.min_pixel_distance * cfg.min_pixel_distance;
  std::size_t attempts = 0;
  while (groups.size() < cfg.groups) {
    if (attempts == budget) throw SamplingExhaustedError(attempts, groups.size(), cfg.groups);
    ++attempts;
    PointGroup g;
    for (auto& px : g.pixels) px = valid[rng.index(valid.size())];
    bool spread = true;
    for (int a = 0; a < 3 && spread; ++a) {
      for (int b = a + 1; b < 3; ++b) {
        const double dr = g.pixels[a].row - g.pixels[b].row;
        const double dc = g.pixels[a].col - g.pixels[b].col;
        if (dr * dr + dc * dc < min_d2 || (dr == 0.0 && dc == 0.0)) {
          spread = false;
          break;
        }
      }
    }
    if (!spread) continue;
    // Pixels on one image line back-project onto a plane through the camera
    // center whatever their depths, so their normal carries no depth signal.
    const long pixel_cross =
        static_cast<long>(g.pixels[1].row - g.pixels[0].row) * (g.pixels[2].col - g.pixels[0].col) -
        static_cast<long>(g.pixels[1].col - g.pixels[0].col) * (g.pixels[2].row - g.pixels[0].row);
    if (pixel_cross == 0) continue;
    for (int i = 0; i < 3; ++i) {
      const Pixel p = g.pixels[i];
      g.gt[i] = camera_point(k, p.col, p.row, gt.at(p.row, p.col));
    }
    const Vec3 a = g.gt[1] - g.gt[0];
    const Vec3 b = g.gt[2] - g.gt[0];
    const double na = norm(a), nb = norm(b);
    if (!(na > 0.0 && nb > 0.0)) continue;
    if (norm(cross(a, b)) / (na * nb) < cfg.min_sine) continue;
    groups.push_back(g);
  }
  return groups;
}

int dominant_axis(const Vec3& n) {
  int best = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::fabs(n[i]) > std::fabs(n[best])) best = i;
  }
  return best;
}

Vec3 virtual_normal(const Vec3& p1, const Vec3& p2, const Vec3& p3) {
  const Vec3 c = cross(p2 - p1, p3 - p1);
  const double nc = norm(c);
  if (!(nc >= kColinearNorm)) throw ColinearError("virtual_normal: colinear triple");
  return canonical(c, nc, c[dominant_axis(c)] < 0.0 ? -1.0 : 1.0);
}

double vnl_from_points(std::span<const std::array<Vec3, 3>> pred,
                       std::span<const std::array<Vec3, 3>> gt) {
  if (pred.size() != gt.size() || pred.empty()) {
    throw ShapeError("vnl_from_points: need equal, nonzero group counts");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const Vec3 np = virtual_normal(pred[i][0], pred[i][1], pred[i][2]);
    const Vec3 ng = virtual_normal(gt[i][0], gt[i][1], gt[i][2]);
    total += std::fabs(np.x - ng.x) + std::fabs(np.y - ng.y) + std::fabs(np.z - ng.z);
  }
  return total / static_cast<double>(pred.size());
}

Tensor vnl_loss(const Tensor& pred_depth, std::span<const PointGroup> groups,
                const CameraIntrinsics& k) {
  if (groups.empty()) throw std::invalid_argument("vnl_loss: no point groups");
  if (!(pred_depth.rank() == 2 || (pred_depth.rank() == 3 && pred_depth.dim(0) == 1))) {
    throw ShapeError("vnl_loss: prediction must be [1,H,W] or [H,W], got " +
                     shape_string(pred_depth.shape()));
  }
  const std::size_t H = pred_depth.dim(pred_depth.rank() - 2);
  const std::size_t W = pred_depth.dim(pred_depth.rank() - 1);

  // Per group: pixel indices, rays, and the local derivative of the summed L1
  // term with respect to the three predicted depths.
  struct GroupGrad {
    std::array<std::size_t, 3> index;
    std::array<double, 3> d_depth;
  };
  auto grads = std::make_shared<std::vector<GroupGrad>>();
  grads->reserve(groups.size());
  auto* rec = piecewise::active();
  const auto pv = pred_depth.values();
  const double inv_n = 1.0 / static_cast<double>(groups.size());
  double total = 0.0;

  for (const PointGroup& g : groups) {
    GroupGrad gg{};
    std::array<Vec3, 3> ray{}, point{};
    for (int i = 0; i < 3; ++i) {
      const Pixel p = g.pixels[i];
      if (p.row < 0 || p.col < 0 || static_cast<std::size_t>(p.row) >= H ||
          static_cast<std::size_t>(p.col) >= W) {
        throw ShapeError("vnl_loss: sampled pixel outside the prediction");
      }
      gg.index[i] = static_cast<std::size_t>(p.row) * W + static_cast<std::size_t>(p.col);
      const double d = pv[gg.index[i]];
      if (!(d > 0.0)) {
        throw std::domain_error("vnl_loss: nonpositive predicted depth at (row " +
                                std::to_string(p.row) + ", col " + std::to_string(p.col) + ")");
      }
      ray[i] = camera_ray(k, p.col, p.row);
      point[i] = ray[i] * d;
    }
    const Vec3 ng = virtual_normal(g.gt[0], g.gt[1], g.gt[2]);

    const Vec3 a = point[1] - point[0];
    const Vec3 b = point[2] - point[0];
    const Vec3 c = cross(a, b);
    const double nc = norm(c);
    if (!(nc >= kColinearNorm)) throw ColinearError("vnl_loss: predicted triple is colinear");
    const int axis = piecewise::decide(rec, dominant_axis(c));
    const double flip = piecewise::decide(rec, c[axis] < 0.0 ? 1 : 0) ? -1.0 : 1.0;
    const Vec3 np = canonical(c, nc, flip);
    const Vec3 diff = np - ng;
    std::array<double, 3> sign{};
    for (int i = 0; i < 3; ++i) {
      sign[i] = static_cast<double>(piecewise::decide(rec, static_cast<std::int32_t>(sgn(diff[i]))));
      total += sign[i] * diff[i];
    }

    // d(sum |np - ng|)/d np = sign; np = flip * c / |c|.
    const Vec3 g_np{sign[0], sign[1], sign[2]};
    const Vec3 n = c * (1.0 / nc);
    const Vec3 g_n = g_np * flip;
    const Vec3 g_c = (g_n - n * dot(n, g_n)) * (1.0 / nc);
    const Vec3 g_a = cross(b, g_c);
    const Vec3 g_b = cross(g_c, a);
    const std::array<Vec3, 3> g_p = {(g_a + g_b) * -1.0, g_a, g_b};
    for (int i = 0; i < 3; ++i) gg.d_depth[i] = dot(ray[i], g_p[i]);
    grads->push_back(gg);
  }

  return Tensor::make_result("vnl", {}, {total * inv_n}, {pred_depth},
                             [grads, inv_n](detail::Node& self) {
    double* gd = detail::grad_ptr(self.inputs[0]);
    if (!gd) return;
    const double scale = self.grad[0] * inv_n * fault::factor("vnl");
    for (const auto& gg : *grads) {
      for (int i = 0; i < 3; ++i) gd[gg.index[i]] += scale * gg.d_depth[i];
    }
  });
}

Tensor vnl_loss(const Tensor& pred_depth, const DepthMap& gt, const CameraIntrinsics& k,
                const VnlConfig& cfg) {
  const std::size_t H = pred_depth.rank() >= 2 ? pred_depth.dim(pred_depth.rank() - 2) : 0;
  const std::size_t W = pred_depth.rank() >= 2 ? pred_depth.dim(pred_depth.rank() - 1) : 0;
  if (H != static_cast<std::size_t>(gt.height()) || W != static_cast<std::size_t>(gt.width())) {
    throw ShapeError("vnl_loss: prediction " + shape_string(pred_depth.shape()) +
                     " does not match ground truth " + std::to_string(gt.height()) + "x" +
                     std::to_string(gt.width()));
  }
  const auto groups = sample_groups(gt, k, cfg);
  return vnl_loss(pred_depth, groups, k);
}

}  // namespace liddense::vnl
