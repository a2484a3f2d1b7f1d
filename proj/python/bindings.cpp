#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>

#include "liddense/depth_io.hpp"
#include "liddense/metrics.hpp"
#include "liddense/scanline.hpp"
#include "liddense/scene.hpp"
#include "liddense/sgtbn.hpp"
#include "liddense/train.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace liddense;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

DepthMap to_depth(const Array& a, const char* what) {
  if (a.ndim() != 2) throw py::value_error(std::string(what) + " must be a 2-D array");
  const auto h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  return DepthMap(w, h, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const DepthMap& m) {
  Array out({m.height(), m.width()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

Array to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  Array out(shape);
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

Tensor to_tensor(const Array& a) {
  Shape s(a.shape(), a.shape() + a.ndim());
  return Tensor::from(std::move(s), std::vector<double>(a.data(), a.data() + a.size()));
}

py::dict report_dict(const metrics::EvalReport& r) {
  return py::dict("rmse"_a = r.rmse, "mae"_a = r.mae, "irmse"_a = r.irmse, "imae"_a = r.imae,
                  "sq_error_rel"_a = r.sq_error_rel, "abs_error_rel"_a = r.abs_error_rel,
                  "n_valid"_a = r.n_valid);
}

py::dict loss_dict(const sgtbn::LossBreakdown& l) {
  return py::dict("l_mse"_a = l.l_mse, "l_vn"_a = l.l_vn, "l_final_out"_a = l.l_final_out,
                  "l_final_global"_a = l.l_final_global, "l_final_local"_a = l.l_final_local,
                  "l_total"_a = l.l_total, "recomposition_error"_a = l.recomposition_error());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Depth completion toolkit: KITTI depth I/O, metrics, scan-line reduction, toy training.";

  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<RangeError>(m, "RangeError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<metrics::EvaluationError>(m, "EvaluationError", PyExc_ValueError);

  py::class_<CameraIntrinsics>(m, "CameraIntrinsics")
      .def(py::init<double, double, double, double>(), "fx"_a, "fy"_a, "cx"_a, "cy"_a)
      .def_readonly("fx", &CameraIntrinsics::fx)
      .def_readonly("fy", &CameraIntrinsics::fy)
      .def_readonly("cx", &CameraIntrinsics::cx)
      .def_readonly("cy", &CameraIntrinsics::cy)
      .def("__repr__", [](const CameraIntrinsics& k) {
        return "CameraIntrinsics(fx=" + std::to_string(k.fx) + ", fy=" + std::to_string(k.fy) +
               ", cx=" + std::to_string(k.cx) + ", cy=" + std::to_string(k.cy) + ")";
      });

  m.def("load_depth_png", [](const std::filesystem::path& p) { return to_array(load_depth_png(p)); },
        "path"_a, "Read a 16-bit KITTI depth PNG as meters (0 = no measurement).");
  m.def("save_depth_png",
        [](const std::filesystem::path& p, const Array& depth) {
          save_depth_png(p, to_depth(depth, "depth"));
        },
        "path"_a, "depth"_a);
  m.def("load_calibration", &load_calibration, "path"_a);

  m.def("evaluate",
        [](const Array& pred, const Array& gt) {
          return report_dict(metrics::evaluate(to_depth(pred, "pred"), to_depth(gt, "gt")));
        },
        "pred"_a, "gt"_a,
        "RMSE/MAE in mm, iRMSE/iMAE in 1/km, relative errors in percent, over gt-valid pixels.");
  m.def("evaluate_oracle",
        [](const Array& pred, const Array& gt) {
          return report_dict(metrics::evaluate_oracle(to_depth(pred, "pred"), to_depth(gt, "gt")));
        },
        "pred"_a, "gt"_a);

  m.def("scan_lines",
        [](const Array& depth, const CameraIntrinsics& k, std::optional<double> theta_top,
           double interval) {
          const DepthMap map = to_depth(depth, "depth");
          const auto cloud = scanline::backproject(map, k);
          const auto assign = scanline::assign_lines(cloud, theta_top, interval);
          py::array_t<int> out({map.height(), map.width()});
          std::fill(out.mutable_data(), out.mutable_data() + out.size(), -1);
          for (std::size_t i = 0; i < cloud.pixels.size(); ++i) {
            out.mutable_at(cloud.pixels[i].row, cloud.pixels[i].col) = assign.line_index[i];
          }
          return out;
        },
        "depth"_a, "k"_a, "theta_top"_a = scanline::kDefaultThetaTopDeg,
        "interval"_a = scanline::kIntervalDeg,
        "Scan-line index per pixel, -1 where depth is invalid. theta_top=None uses the "
        "highest observed elevation.");
  m.def("convert_frame",
        [](const Array& depth, const CameraIntrinsics& k, const std::string& mode, int middle_line,
           std::optional<double> theta_top, double interval) {
          scanline::ConvertOptions opt;
          opt.selection = scanline::LineSelection::parse(mode);
          if (opt.selection.kind == scanline::LineSelection::Kind::kSingle) {
            opt.selection.middle_line = middle_line;
          }
          opt.theta_top_deg = theta_top;
          opt.interval_deg = interval;
          return to_array(scanline::convert_frame(to_depth(depth, "depth"), k, opt));
        },
        "depth"_a, "k"_a, "mode"_a = "single", "middle_line"_a = scanline::kDefaultMiddleLine,
        "theta_top"_a = scanline::kDefaultThetaTopDeg, "interval"_a = scanline::kIntervalDeg);

  m.def("synthetic_scene",
        [](std::uint64_t seed, int height, int width) {
          const auto sc = scene::make_synthetic_scene(seed, height, width);
          return py::dict("rgb"_a = to_array(sc.rgb), "sparse"_a = to_array(sc.sparse),
                          "gt"_a = to_array(sc.gt), "k"_a = sc.k, "scan_line"_a = sc.scan_line);
        },
        "seed"_a, "height"_a = 32, "width"_a = 32);

  m.def("fuse",
        [](const Array& dg, const Array& cg, const Array& dl, const Array& cl) {
          return to_array(sgtbn::fuse(to_tensor(dg), to_tensor(cg), to_tensor(dl), to_tensor(cl)));
        },
        "d_global"_a, "c_global"_a, "d_local"_a, "c_local"_a,
        "Per-pixel softmax-weighted merge of two depth maps by their confidence logits.");

  m.def("train_toy",
        [](std::size_t steps, std::uint64_t seed, double lr, double weight_decay, bool gc,
           double lambda, std::size_t vnl_groups, int size, std::size_t eval_every) {
          train::TrainConfig cfg;
          cfg.steps = steps;
          cfg.seed = seed;
          cfg.lr = lr;
          cfg.weight_decay = weight_decay;
          cfg.gc_enabled = gc;
          cfg.lambda = lambda;
          cfg.vnl_groups = vnl_groups;
          cfg.height = cfg.width = size;
          cfg.eval_every = eval_every;
          train::TrainLog log;
          {
            py::gil_scoped_release release;
            log = train::train_toy(cfg).log;
          }
          py::list step_list, eval_list;
          for (const auto& s : log.steps) {
            py::dict d = loss_dict(s.loss);
            d["step"] = s.step;
            step_list.append(d);
          }
          for (const auto& e : log.evals) {
            py::dict d = report_dict(e.report);
            d["step"] = e.step;
            eval_list.append(d);
          }
          return py::dict("steps"_a = step_list, "evals"_a = eval_list);
        },
        "steps"_a = 500, "seed"_a = 0, "lr"_a = 1e-3, "weight_decay"_a = 1e-4, "gc"_a = true,
        "lam"_a = 100.0, "vnl_groups"_a = 100, "size"_a = 32, "eval_every"_a = 50,
        "Train the small two-branch network on synthetic scenes; returns the step and "
        "held-out evaluation logs.");
}
