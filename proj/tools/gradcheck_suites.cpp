#include "gradcheck_suites.hpp"

#include <functional>
#include <map>
#include <stdexcept>

#include "liddense/nn.hpp"
#include "liddense/ops.hpp"
#include "liddense/rng.hpp"
#include "liddense/scene.hpp"
#include "liddense/sgdum.hpp"
#include "liddense/sgtbn.hpp"
#include "liddense/vnl.hpp"

namespace liddense::cli {

namespace {

Tensor random_tensor(Rng& rng, Shape shape, double lo, double hi, bool grad) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(v), grad);
}

struct Case {
  std::function<Tensor()> f;
  std::vector<NamedTensor> wrt;
};

using Builder = std::function<Case(Rng&)>;

std::vector<NamedTensor> parameters_of(const nn::ParameterSet& ps) {
  std::vector<NamedTensor> out;
  for (const auto& item : ps.items()) out.push_back({item.name, item.tensor});
  return out;
}

// Reduces the op output to a scalar with fixed random weights so every output
// element gets a distinct upstream gradient.
Case unary(Rng& rng, Shape shape, double lo, double hi,
           const std::function<Tensor(const Tensor&)>& op) {
  Tensor x = random_tensor(rng, shape, lo, hi, true);
  Tensor y0 = op(x);
  Tensor r = random_tensor(rng, y0.shape(), -1.0, 1.0, false);
  return {[=] { return ops::sum(ops::mul(op(x), r)); }, {{"x", x}}};
}

const std::map<std::string, Builder>& builders() {
  static const std::map<std::string, Builder> table = {
      {"conv2d",
       [](Rng& rng) {
         Tensor x = random_tensor(rng, {2, 5, 6}, -1, 1, true);
         Tensor w = random_tensor(rng, {3, 2, 3, 2}, -1, 1, true);
         Tensor b = random_tensor(rng, {3}, -1, 1, true);
         Tensor r = random_tensor(rng, {3, 3, 3}, -1, 1, false);
         ops::Conv2dOptions opt{2, 2, 1, 0, ops::PadMode::kZero};
         return Case{[=] { return ops::sum(ops::mul(ops::conv2d(x, w, b, opt), r)); },
                     {{"x", x}, {"weight", w}, {"bias", b}}};
       }},
      {"conv2d_replicate",
       [](Rng& rng) {
         Tensor x = random_tensor(rng, {2, 4, 5}, -1, 1, true);
         Tensor w = random_tensor(rng, {2, 2, 3, 3}, -1, 1, true);
         Tensor b = random_tensor(rng, {2}, -1, 1, true);
         Tensor r = random_tensor(rng, {2, 4, 5}, -1, 1, false);
         const auto opt = ops::Conv2dOptions::same(3, 3, ops::PadMode::kReplicate);
         return Case{[=] { return ops::sum(ops::mul(ops::conv2d(x, w, b, opt), r)); },
                     {{"x", x}, {"weight", w}, {"bias", b}}};
       }},
      {"transposed_conv2d",
       [](Rng& rng) {
         Tensor x = random_tensor(rng, {2, 3, 4}, -1, 1, true);
         Tensor w = random_tensor(rng, {2, 3, 3, 3}, -1, 1, true);
         Tensor b = random_tensor(rng, {3}, -1, 1, true);
         Tensor r = random_tensor(rng, {3, 6, 8}, -1, 1, false);
         return Case{[=] { return ops::sum(ops::mul(ops::transposed_conv2d(x, w, b), r)); },
                     {{"x", x}, {"weight", w}, {"bias", b}}};
       }},
      {"maxpool2d",
       [](Rng& rng) { return unary(rng, {2, 4, 6}, -1, 1, [](const Tensor& t) { return ops::maxpool2d(t); }); }},
      {"relu",
       [](Rng& rng) { return unary(rng, {2, 4, 4}, -1, 1, [](const Tensor& t) { return ops::relu(t); }); }},
      {"softplus",
       [](Rng& rng) { return unary(rng, {2, 4, 4}, -3, 3, [](const Tensor& t) { return ops::softplus(t); }); }},
      {"affine",
       [](Rng& rng) {
         Tensor x = random_tensor(rng, {3, 3, 4}, -1, 1, true);
         Tensor s = random_tensor(rng, {3}, 0.5, 1.5, true);
         Tensor t = random_tensor(rng, {3}, -1, 1, true);
         Tensor r = random_tensor(rng, {3, 3, 4}, -1, 1, false);
         return Case{[=] { return ops::sum(ops::mul(ops::affine(x, s, t), r)); },
                     {{"x", x}, {"scale", s}, {"shift", t}}};
       }},
      {"nearest_upsample",
       [](Rng& rng) { return unary(rng, {2, 3, 3}, -1, 1, [](const Tensor& t) { return ops::nearest_upsample(t, 2); }); }},
      {"pixel_shuffle",
       [](Rng& rng) { return unary(rng, {8, 2, 3}, -1, 1, [](const Tensor& t) { return ops::pixel_shuffle(t, 2); }); }},
      {"pixel_unshuffle",
       [](Rng& rng) { return unary(rng, {2, 4, 6}, -1, 1, [](const Tensor& t) { return ops::pixel_unshuffle(t, 2); }); }},
      {"channel_softmax",
       [](Rng& rng) { return unary(rng, {4, 3, 3}, -2, 2, [](const Tensor& t) { return ops::channel_softmax(t); }); }},
      {"concat",
       [](Rng& rng) {
         Tensor a = random_tensor(rng, {2, 3, 3}, -1, 1, true);
         Tensor b = random_tensor(rng, {1, 3, 3}, -1, 1, true);
         Tensor r = random_tensor(rng, {3, 3, 3}, -1, 1, false);
         return Case{[=] { return ops::sum(ops::mul(ops::concat({a, b}), r)); }, {{"a", a}, {"b", b}}};
       }},
      {"add",
       [](Rng& rng) {
         Tensor a = random_tensor(rng, {2, 3, 3}, -1, 1, true);
         Tensor b = random_tensor(rng, {2, 3, 3}, -1, 1, true);
         Tensor r = random_tensor(rng, {2, 3, 3}, -1, 1, false);
         return Case{[=] { return ops::sum(ops::mul(ops::add(a, b), r)); }, {{"a", a}, {"b", b}}};
       }},
      {"sub",
       [](Rng& rng) {
         Tensor a = random_tensor(rng, {2, 3, 3}, -1, 1, true);
         Tensor b = random_tensor(rng, {2, 3, 3}, -1, 1, true);
         Tensor r = random_tensor(rng, {2, 3, 3}, -1, 1, false);
         return Case{[=] { return ops::sum(ops::mul(ops::sub(a, b), r)); }, {{"a", a}, {"b", b}}};
       }},
      {"mul",
       [](Rng& rng) {
         Tensor a = random_tensor(rng, {2, 3, 3}, -1, 1, true);
         Tensor b = random_tensor(rng, {2, 3, 3}, -1, 1, true);
         return Case{[=] { return ops::sum(ops::mul(a, b)); }, {{"a", a}, {"b", b}}};
       }},
      {"scale",
       [](Rng& rng) { return unary(rng, {2, 3, 3}, -1, 1, [](const Tensor& t) { return ops::scale(t, -0.7); }); }},
      {"mean",
       [](Rng& rng) { return unary(rng, {2, 3, 3}, -1, 1, [](const Tensor& t) { return ops::mean(t); }); }},
      {"nonbottleneck1d",
       [](Rng& rng) {
         auto ps = std::make_shared<nn::ParameterSet>();
         nn::Initializer init(*ps, rng.next());
         const auto p = nn::NonBottleneck1dParams::create(init, "block", 2);
         Tensor x = random_tensor(rng, {2, 4, 4}, -1, 1, true);
         Tensor r = random_tensor(rng, {2, 4, 4}, -1, 1, false);
         auto wrt = parameters_of(*ps);
         wrt.push_back({"x", x});
         return Case{[=] { return ops::sum(ops::mul(nn::nonbottleneck1d(x, p), r)); }, wrt};
       }},
      {"downsample",
       [](Rng& rng) {
         auto ps = std::make_shared<nn::ParameterSet>();
         nn::Initializer init(*ps, rng.next());
         const auto p = nn::DownsampleParams::create(init, "down", 2, 3);
         Tensor x = random_tensor(rng, {2, 4, 6}, -1, 1, true);
         Tensor r = random_tensor(rng, {5, 2, 3}, -1, 1, false);
         auto wrt = parameters_of(*ps);
         wrt.push_back({"x", x});
         return Case{[=] { return ops::sum(ops::mul(nn::downsample_concat(x, p), r)); }, wrt};
       }},
      {"sgdum",
       [](Rng& rng) {
         auto ps = std::make_shared<nn::ParameterSet>();
         nn::Initializer init(*ps, rng.next());
         sgdum::SgdumConfig cfg;
         cfg.in_channels = 2;
         cfg.out_channels = 2;
         const auto p = sgdum::SgdumParams::create(init, "sgdum", cfg);
         Tensor x = random_tensor(rng, {2, 6, 6}, -1, 1, true);
         Tensor r = random_tensor(rng, {2, 12, 12}, -1, 1, false);
         auto wrt = parameters_of(*ps);
         wrt.push_back({"x", x});
         return Case{[=] { return ops::sum(ops::mul(sgdum::sgdum_forward(x, p), r)); }, wrt};
       }},
      {"vnl",
       [](Rng& rng) {
         const auto sc = scene::make_synthetic_scene(rng.next(), 8, 8);
         std::vector<double> pred(sc.gt.data().begin(), sc.gt.data().end());
         for (double& d : pred) d *= rng.uniform(0.8, 1.2);
         Tensor x = Tensor::from({1, 8, 8}, std::move(pred), true);
         vnl::VnlConfig cfg;
         cfg.groups = 5;
         cfg.seed = rng.next();
         const auto groups = vnl::sample_groups(sc.gt, sc.k, cfg);
         const auto k = sc.k;
         return Case{[=] { return vnl::vnl_loss(x, groups, k); }, {{"pred", x}}};
       }},
      {"fuse",
       [](Rng& rng) {
         Tensor dg = random_tensor(rng, {1, 3, 3}, 1, 10, true);
         Tensor cg = random_tensor(rng, {1, 3, 3}, -2, 2, true);
         Tensor dl = random_tensor(rng, {1, 3, 3}, 1, 10, true);
         Tensor cl = random_tensor(rng, {1, 3, 3}, -2, 2, true);
         Tensor r = random_tensor(rng, {1, 3, 3}, -1, 1, false);
         return Case{[=] { return ops::sum(ops::mul(sgtbn::fuse(dg, cg, dl, cl), r)); },
                     {{"d_global", dg}, {"c_global", cg}, {"d_local", dl}, {"c_local", cl}}};
       }},
      {"mse",
       [](Rng& rng) {
         std::vector<double> g(16);
         for (double& v : g) v = rng.uniform() < 0.3 ? 0.0 : rng.uniform(1, 20);
         g[0] = 5.0;
         const DepthMap gt(4, 4, std::move(g));
         Tensor x = random_tensor(rng, {1, 4, 4}, 1, 20, true);
         return Case{[=] { return sgtbn::mse_loss(x, gt); }, {{"pred", x}}};
       }},
      {"network",
       [](Rng& rng) {
         const auto sc = std::make_shared<scene::Scene>(scene::make_synthetic_scene(rng.next(), 8, 8));
         auto model = std::make_shared<sgtbn::SgtbnTiny>(rng.next());
         sgtbn::LossConfig lc;
         lc.vnl.seed = rng.next();
         const Tensor sparse = sgtbn::depth_to_tensor(sc->sparse);
         return Case{[=] { return sgtbn::total_loss(model->forward(sc->rgb, sparse), sc->gt, sc->k, lc).total; },
                     parameters_of(model->parameters())};
       }},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {
      "conv2d", "conv2d_replicate", "transposed_conv2d", "maxpool2d", "relu", "softplus",
      "affine", "nearest_upsample", "pixel_shuffle", "pixel_unshuffle", "channel_softmax",
      "concat", "add", "sub", "mul", "scale", "mean", "nonbottleneck1d", "downsample", "sgdum", "vnl",
      "fuse", "mse", "network"};
  return names;
}

const std::vector<std::string>& fault_names() {
  static const std::vector<std::string> names = {
      "conv2d", "transposed_conv2d", "maxpool2d", "relu", "softplus", "affine",
      "nearest_upsample", "pixel_shuffle", "pixel_unshuffle", "channel_softmax", "concat",
      "add", "sub", "mul", "scale", "sum", "reassemble", "vnl", "fuse", "mse"};
  return names;
}

SuiteResult run_suite(const std::string& name, std::uint64_t seed, double step, double tol) {
  const auto& table = builders();
  const auto it = table.find(name);
  if (it == table.end()) throw std::invalid_argument("unknown gradcheck suite '" + name + "'");
  std::uint64_t index = 0;
  for (const auto& n : suite_names()) {
    if (n == name) break;
    ++index;
  }
  Rng rng(derive_seed(seed, 0x6c, index));
  Case c = it->second(rng);
  return {name, gradcheck(c.f, c.wrt, step, tol)};
}

}  // namespace liddense::cli
