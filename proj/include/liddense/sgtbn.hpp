#pragma once

#include <cstddef>
#include <cstdint>

#include "liddense/depth_io.hpp"
#include "liddense/nn.hpp"
#include "liddense/sgdum.hpp"
#include "liddense/tensor.hpp"
#include "liddense/vnl.hpp"

// Desk-scale two-branch depth completion network.
//
// Global branch: separate RGB and depth encoders (two downsample stages with
// factorized residual blocks, widths 8 -> 16), bottleneck concat, two SGDUM
// upsampling stages, depth/confidence heads and an 8-channel global feature.
// Local branch: concat(sparse, global feature) through two stacked plain
// encoder-decoders with residual skips; the global branch's first-encoder
// feature is added after the first local downsampling. The two depth maps are
// merged with a per-pixel softmax over the confidences.
namespace liddense::sgtbn {

struct SgtbnConfig {
  std::size_t width1 = 8;    // channels after the first downsampling
  std::size_t width2 = 16;   // channels after the second downsampling
  std::size_t feature = 8;   // global feature channels
  int sgdum_kernel = 5;
  int sgdum_scale = 2;
  /// Depth heads emit depth_scale * softplus(raw) meters; the sparse input is
  /// divided by the same constant.
  double depth_scale = 10.0;
};

struct SgtbnOutputs {
  Tensor d_global;        // [1,H,W] meters
  Tensor c_global;        // [1,H,W] logits
  Tensor global_feature;  // [feature,H,W]
  Tensor d_local;
  Tensor c_local;
  Tensor d_final;
};

class SgtbnTiny {
 public:
  explicit SgtbnTiny(std::uint64_t seed, const SgtbnConfig& config = {});

  /// rgb [3,H,W] in [0,1]; sparse [1,H,W] meters with 0 = no measurement.
  /// H and W must be divisible by 4.
  SgtbnOutputs forward(const Tensor& rgb, const Tensor& sparse) const;

  nn::ParameterSet& parameters() { return params_; }
  const nn::ParameterSet& parameters() const { return params_; }
  const SgtbnConfig& config() const { return config_; }

 private:
  struct Encoder {
    nn::DownsampleParams down1, down2;
    nn::ChannelAffine norm1, norm2;
    nn::NonBottleneck1dParams block1, block2;
  };
  struct EncoderDecoder {
    nn::Conv2d down1, down2;
    nn::TransposedConv2d up2, up1;
  };

  Tensor encode_stage(const Tensor& x, const nn::DownsampleParams& down,
                      const nn::ChannelAffine& norm, const nn::NonBottleneck1dParams& block) const;
  Tensor run_encoder_decoder(const EncoderDecoder& ed, const Tensor& x, const Tensor* inject) const;
  Tensor depth_head(const nn::Conv2d& head, const Tensor& feature) const;

  SgtbnConfig config_;
  nn::ParameterSet params_;
  Encoder rgb_enc_, depth_enc_;
  sgdum::SgdumParams up1_, up2_;
  nn::NonBottleneck1dParams dec_block_;
  nn::Conv2d global_depth_, global_conf_;
  nn::Conv2d local_stem_;
  EncoderDecoder local_a_, local_b_;
  nn::Conv2d local_depth_, local_conf_;
};

/// Confidence fusion: D = (e^Cg Dg + e^Cl Dl) / (e^Cg + e^Cl), evaluated with
/// the larger logit subtracted first. Inputs share one shape.
Tensor fuse(const Tensor& d_global, const Tensor& c_global, const Tensor& d_local,
            const Tensor& c_local);

/// Mean squared meter error over pixels where gt is valid.
Tensor mse_loss(const Tensor& pred, const DepthMap& gt);

struct LossConfig {
  double lambda = 100.0;  // weight of the normal term
  double w_global = 0.1;
  double w_local = 0.1;
  vnl::VnlConfig vnl;
};

struct LossBreakdown {
  double l_mse = 0.0;  // final output
  double l_vn = 0.0;   // final output
  double l_final_out = 0.0;
  double l_final_global = 0.0;
  double l_final_local = 0.0;
  double l_total = 0.0;
  double mse_global = 0.0, vn_global = 0.0;
  double mse_local = 0.0, vn_local = 0.0;
  double lambda = 100.0, w_global = 0.1, w_local = 0.1;
  Tensor total;  // differentiable l_total

  /// max |identity residual| over the per-term and total recompositions.
  double recomposition_error() const;
};

/// l_final(D) = mse(D) + lambda * vnl(D), applied to the final, global and
/// local predictions with weights 1, w_global, w_local. All three normal terms
/// share one group sample drawn from gt with cfg.vnl.seed.
LossBreakdown total_loss(const SgtbnOutputs& outputs, const DepthMap& gt,
                         const CameraIntrinsics& k, const LossConfig& cfg);

Tensor depth_to_tensor(const DepthMap& map);
/// Predictions clamped to [0, max encodable depth]; non-finite values become 0.
DepthMap tensor_to_depth(const Tensor& t);

}  // namespace liddense::sgtbn
