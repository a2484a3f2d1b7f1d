#include "liddense/sgtbn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace liddense::sgtbn {

using ops::Conv2dOptions;

SgtbnTiny::SgtbnTiny(std::uint64_t seed, const SgtbnConfig& config) : config_(config) {
  nn::Initializer init(params_, seed);
  const std::size_t w1 = config.width1, w2 = config.width2, feat = config.feature;
  if (w1 <= 3 || w2 <= w1 || feat == 0) {
    throw std::invalid_argument("sgtbn: widths must satisfy 3 < width1 < width2");
  }

  auto make_encoder = [&](const std::string& name, std::size_t in) {
    Encoder e;
    e.down1 = nn::DownsampleParams::create(init, name + ".down1", in, w1 - in);
    e.norm1 = nn::ChannelAffine::create(init, name + ".norm1", w1);
    e.block1 = nn::NonBottleneck1dParams::create(init, name + ".block1", w1);
    e.down2 = nn::DownsampleParams::create(init, name + ".down2", w1, w2 - w1);
    e.norm2 = nn::ChannelAffine::create(init, name + ".norm2", w2);
    e.block2 = nn::NonBottleneck1dParams::create(init, name + ".block2", w2);
    return e;
  };
  rgb_enc_ = make_encoder("global.rgb", 3);
  depth_enc_ = make_encoder("global.depth", 1);

  sgdum::SgdumConfig up1{2 * w2, 2 * w1, config.sgdum_kernel, config.sgdum_scale,
                         ops::PadMode::kReplicate};
  sgdum::SgdumConfig up2{2 * w1, feat, config.sgdum_kernel, config.sgdum_scale,
                         ops::PadMode::kReplicate};
  up1_ = sgdum::SgdumParams::create(init, "global.up1", up1);
  dec_block_ = nn::NonBottleneck1dParams::create(init, "global.dec_block", 2 * w1);
  up2_ = sgdum::SgdumParams::create(init, "global.up2", up2);
  global_depth_ = nn::Conv2d::create(init, "global.depth_head", feat, 1, 3, 3,
                                     Conv2dOptions::same(3, 3));
  global_conf_ = nn::Conv2d::create(init, "global.conf_head", feat, 1, 3, 3,
                                    Conv2dOptions::same(3, 3));

  local_stem_ = nn::Conv2d::create(init, "local.stem", 1 + feat, w1, 3, 3,
                                   Conv2dOptions::same(3, 3));
  auto make_ed = [&](const std::string& name) {
    const Conv2dOptions down{2, 2, 1, 1, ops::PadMode::kZero};
    EncoderDecoder ed;
    ed.down1 = nn::Conv2d::create(init, name + ".down1", w1, 2 * w1, 3, 3, down);
    ed.down2 = nn::Conv2d::create(init, name + ".down2", 2 * w1, w2, 3, 3, down);
    ed.up2 = nn::TransposedConv2d::create(init, name + ".up2", w2, 2 * w1);
    ed.up1 = nn::TransposedConv2d::create(init, name + ".up1", 2 * w1, w1);
    return ed;
  };
  local_a_ = make_ed("local.ed_a");
  local_b_ = make_ed("local.ed_b");
  local_depth_ = nn::Conv2d::create(init, "local.depth_head", w1, 1, 3, 3,
                                    Conv2dOptions::same(3, 3));
  local_conf_ = nn::Conv2d::create(init, "local.conf_head", w1, 1, 3, 3,
                                   Conv2dOptions::same(3, 3));
}

Tensor SgtbnTiny::encode_stage(const Tensor& x, const nn::DownsampleParams& down,
                               const nn::ChannelAffine& norm,
                               const nn::NonBottleneck1dParams& block) const {
  const Tensor y = ops::relu(norm(nn::downsample_concat(x, down)));
  return nn::nonbottleneck1d(y, block);
}

Tensor SgtbnTiny::run_encoder_decoder(const EncoderDecoder& ed, const Tensor& x,
                                      const Tensor* inject) const {
  Tensor e1 = ops::relu(ed.down1(x));
  if (inject != nullptr) e1 = ops::add(e1, *inject);
  const Tensor e2 = ops::relu(ed.down2(e1));
  const Tensor d1 = ops::add(ops::relu(ed.up2(e2)), e1);
  return ops::add(ops::relu(ed.up1(d1)), x);
}

Tensor SgtbnTiny::depth_head(const nn::Conv2d& head, const Tensor& feature) const {
  return ops::scale(ops::softplus(head(feature)), config_.depth_scale);
}

SgtbnOutputs SgtbnTiny::forward(const Tensor& rgb, const Tensor& sparse) const {
  if (rgb.rank() != 3 || rgb.dim(0) != 3) {
    throw ShapeError("sgtbn: rgb must be [3,H,W], got " + shape_string(rgb.shape()));
  }
  if (sparse.rank() != 3 || sparse.dim(0) != 1 || sparse.dim(1) != rgb.dim(1) ||
      sparse.dim(2) != rgb.dim(2)) {
    throw ShapeError("sgtbn: sparse depth must be [1,H,W] matching rgb, got " +
                     shape_string(sparse.shape()));
  }
  if (rgb.dim(1) % 4 != 0 || rgb.dim(2) % 4 != 0 || rgb.dim(1) == 0 || rgb.dim(2) == 0) {
    throw ShapeError("sgtbn: H and W must be positive multiples of 4, got " +
                     shape_string(rgb.shape()));
  }
  const Tensor depth_in = ops::scale(sparse, 1.0 / config_.depth_scale);

  // Global branch: late fusion of separately encoded modalities.
  const Tensor rgb1 = encode_stage(rgb, rgb_enc_.down1, rgb_enc_.norm1, rgb_enc_.block1);
  const Tensor rgb2 = encode_stage(rgb1, rgb_enc_.down2, rgb_enc_.norm2, rgb_enc_.block2);
  const Tensor dep1 = encode_stage(depth_in, depth_enc_.down1, depth_enc_.norm1, depth_enc_.block1);
  const Tensor dep2 = encode_stage(dep1, depth_enc_.down2, depth_enc_.norm2, depth_enc_.block2);
  const Tensor first_encoder = ops::concat({rgb1, dep1});
  const Tensor bottleneck = ops::concat({rgb2, dep2});

  Tensor up = ops::relu(ops::add(sgdum::sgdum_forward(bottleneck, up1_), first_encoder));
  up = nn::nonbottleneck1d(up, dec_block_);
  const Tensor global_feature = ops::relu(sgdum::sgdum_forward(up, up2_));

  SgtbnOutputs out;
  out.global_feature = global_feature;
  out.d_global = depth_head(global_depth_, global_feature);
  out.c_global = global_conf_(global_feature);

  // Local branch.
  const Tensor stem = ops::relu(local_stem_(ops::concat({depth_in, global_feature})));
  const Tensor a = run_encoder_decoder(local_a_, stem, &first_encoder);
  const Tensor b = run_encoder_decoder(local_b_, a, nullptr);
  out.d_local = depth_head(local_depth_, b);
  out.c_local = local_conf_(b);

  out.d_final = fuse(out.d_global, out.c_global, out.d_local, out.c_local);
  return out;
}

// ---------------------------------------------------------------------------

Tensor fuse(const Tensor& d_global, const Tensor& c_global, const Tensor& d_local,
            const Tensor& c_local) {
  const Shape& s = d_global.shape();
  if (c_global.shape() != s || d_local.shape() != s || c_local.shape() != s) {
    throw ShapeError("fuse: inputs must share one shape, got " + shape_string(s) + ", " +
                     shape_string(c_global.shape()) + ", " + shape_string(d_local.shape()) +
                     ", " + shape_string(c_local.shape()));
  }
  const std::size_t n = d_global.numel();
  std::vector<double> out(n);
  auto weight_g = std::make_shared<std::vector<double>>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double cg = c_global[i], cl = c_local[i];
    const double m = std::max(cg, cl);
    const double eg = std::exp(cg - m);
    const double el = std::exp(cl - m);
    const double dg = d_global[i], dl = d_local[i];
    const double v = (eg * dg + el * dl) / (eg + el);
    // Rounding can land one ulp outside the convex hull of the two depths.
    out[i] = std::clamp(v, std::min(dg, dl), std::max(dg, dl));
    (*weight_g)[i] = eg / (eg + el);
  }
  return Tensor::make_result("fuse", s, std::move(out), {d_global, c_global, d_local, c_local},
                             [weight_g](detail::Node& self) {
    const Tensor& dg = self.inputs[0];
    const Tensor& dl = self.inputs[2];
    double* g_dg = detail::grad_ptr(self.inputs[0]);
    double* g_cg = detail::grad_ptr(self.inputs[1]);
    double* g_dl = detail::grad_ptr(self.inputs[2]);
    double* g_cl = detail::grad_ptr(self.inputs[3]);
    const double f = fault::factor("fuse");
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double g = self.grad[i];
      const double wg = (*weight_g)[i];
      const double wl = 1.0 - wg;
      const double dc = f * g * wg * wl * (dg[i] - dl[i]);
      if (g_dg) g_dg[i] += g * wg;
      if (g_dl) g_dl[i] += g * wl;
      if (g_cg) g_cg[i] += dc;
      if (g_cl) g_cl[i] -= dc;
    }
  });
}

Tensor mse_loss(const Tensor& pred, const DepthMap& gt) {
  if (pred.numel() != gt.size() ||
      pred.dim(pred.rank() - 1) != static_cast<std::size_t>(gt.width())) {
    throw ShapeError("mse_loss: prediction " + shape_string(pred.shape()) +
                     " does not match ground truth " + std::to_string(gt.height()) + "x" +
                     std::to_string(gt.width()));
  }
  const auto g = gt.data();
  std::size_t n = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] <= 0.0) continue;
    const double e = pred[i] - g[i];
    total += e * e;
    ++n;
  }
  if (n == 0) throw std::invalid_argument("mse_loss: ground truth has no valid pixels");
  const double inv_n = 1.0 / static_cast<double>(n);
  auto target = std::make_shared<std::vector<double>>(g.begin(), g.end());
  return Tensor::make_result("mse", {}, {total * inv_n}, {pred},
                             [target, inv_n](detail::Node& self) {
    double* gp = detail::grad_ptr(self.inputs[0]);
    if (!gp) return;
    const Tensor& p = self.inputs[0];
    const double scale = 2.0 * inv_n * self.grad[0] * fault::factor("mse");
    for (std::size_t i = 0; i < target->size(); ++i) {
      if ((*target)[i] > 0.0) gp[i] += scale * (p[i] - (*target)[i]);
    }
  });
}

double LossBreakdown::recomposition_error() const {
  const double e_out = std::fabs(l_final_out - (l_mse + lambda * l_vn));
  const double e_g = std::fabs(l_final_global - (mse_global + lambda * vn_global));
  const double e_l = std::fabs(l_final_local - (mse_local + lambda * vn_local));
  const double e_t =
      std::fabs(l_total - (l_final_out + w_global * l_final_global + w_local * l_final_local));
  return std::max({e_out, e_g, e_l, e_t});
}

LossBreakdown total_loss(const SgtbnOutputs& outputs, const DepthMap& gt,
                         const CameraIntrinsics& k, const LossConfig& cfg) {
  const auto groups = vnl::sample_groups(gt, k, cfg.vnl);
  auto final_loss = [&](const Tensor& pred, double& mse_value, double& vn_value) {
    const Tensor mse = mse_loss(pred, gt);
    const Tensor vn = vnl::vnl_loss(pred, groups, k);
    mse_value = mse.item();
    vn_value = vn.item();
    return ops::add(mse, ops::scale(vn, cfg.lambda));
  };
  LossBreakdown out;
  out.lambda = cfg.lambda;
  out.w_global = cfg.w_global;
  out.w_local = cfg.w_local;
  const Tensor lf_out = final_loss(outputs.d_final, out.l_mse, out.l_vn);
  const Tensor lf_g = final_loss(outputs.d_global, out.mse_global, out.vn_global);
  const Tensor lf_l = final_loss(outputs.d_local, out.mse_local, out.vn_local);
  out.total = ops::add(ops::add(lf_out, ops::scale(lf_g, cfg.w_global)),
                       ops::scale(lf_l, cfg.w_local));
  out.l_final_out = lf_out.item();
  out.l_final_global = lf_g.item();
  out.l_final_local = lf_l.item();
  out.l_total = out.total.item();
  return out;
}

Tensor depth_to_tensor(const DepthMap& map) {
  return Tensor::from({1, static_cast<std::size_t>(map.height()),
                       static_cast<std::size_t>(map.width())},
                      std::vector<double>(map.data().begin(), map.data().end()));
}

DepthMap tensor_to_depth(const Tensor& t) {
  if (t.rank() != 3 || t.dim(0) != 1) {
    throw ShapeError("tensor_to_depth: expected [1,H,W], got " + shape_string(t.shape()));
  }
  std::vector<double> v(t.values().begin(), t.values().end());
  for (double& d : v) {
    d = std::isfinite(d) ? std::clamp(d, 0.0, kMaxEncodableDepth) : 0.0;
  }
  return DepthMap(static_cast<int>(t.dim(2)), static_cast<int>(t.dim(1)), std::move(v));
}

}  // namespace liddense::sgtbn
