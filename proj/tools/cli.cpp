#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "gradcheck_suites.hpp"
#include "liddense/checkpoint.hpp"
#include "liddense/depth_io.hpp"
#include "liddense/metrics.hpp"
#include "liddense/parallel.hpp"
#include "liddense/scanline.hpp"
#include "liddense/train.hpp"

namespace liddense::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// Input problems detected before any work starts.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_json(const fs::path& path, const ordered_json& doc) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw UsageError("cannot write " + path.string());
  f << doc.dump(2) << "\n";
}

ordered_json report_json(const metrics::EvalReport& r) {
  return {{"rmse_mm", r.rmse},         {"mae_mm", r.mae},
          {"irmse_per_km", r.irmse},   {"imae_per_km", r.imae},
          {"sq_error_rel_pct", r.sq_error_rel}, {"abs_error_rel_pct", r.abs_error_rel},
          {"n_valid", r.n_valid}};
}

ordered_json loss_json(const sgtbn::LossBreakdown& l) {
  return {{"l_mse", l.l_mse},
          {"l_vn", l.l_vn},
          {"l_final_out", l.l_final_out},
          {"l_final_global", l.l_final_global},
          {"l_final_local", l.l_final_local},
          {"l_total", l.l_total},
          {"mse_global", l.mse_global},
          {"vn_global", l.vn_global},
          {"mse_local", l.mse_local},
          {"vn_local", l.vn_local},
          {"recomposition_error", l.recomposition_error()}};
}

std::vector<fs::path> png_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

void require_dir(const fs::path& p, const std::string& what) {
  if (!fs::is_directory(p)) throw UsageError(what + " is not a directory: " + p.string());
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw UsageError(what + " not found: " + p.string());
}

// --------------------------------------------------------------------------

struct ConvertArgs {
  std::string in, out, calib, mode = "single", theta_top = "2.0", report;
  int middle_line = scanline::kDefaultMiddleLine;
  double interval = scanline::kIntervalDeg;
};

int cmd_convert(const ConvertArgs& a, std::ostream& out, std::ostream& err) {
  require_dir(a.in, "--in");
  require_file(a.calib, "--calib");
  CameraIntrinsics k;
  try {
    k = load_calibration(a.calib);
  } catch (const std::exception& e) {
    throw UsageError(std::string("bad calibration: ") + e.what());
  }
  scanline::ConvertOptions opt;
  try {
    opt.selection = scanline::LineSelection::parse(a.mode);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  if (opt.selection.kind == scanline::LineSelection::Kind::kSingle) {
    opt.selection.middle_line = a.middle_line;
  }
  try {
    scanline::select_lines(opt.selection, opt.levels);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  if (a.theta_top == "auto") {
    opt.theta_top_deg = std::nullopt;
  } else {
    try {
      std::size_t used = 0;
      opt.theta_top_deg = std::stod(a.theta_top, &used);
      if (used != a.theta_top.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw UsageError("--theta-top must be a number of degrees or 'auto'");
    }
  }
  if (!(a.interval > 0.0)) throw UsageError("--interval must be positive");
  opt.interval_deg = a.interval;
  fs::create_directories(a.out);

  const auto summary = scanline::convert_dataset(a.in, k, a.out, opt);
  out << "converted " << summary.files_processed << " file(s), " << summary.files_failed
      << " failed; mean sparsity " << summary.mean_sparsity_before << " -> "
      << summary.mean_sparsity_after << "\n";
  for (const auto& e : summary.errors) err << e.file << ": " << e.message << "\n";

  if (!a.report.empty()) {
    ordered_json errors = ordered_json::array();
    for (const auto& e : summary.errors) errors.push_back({{"file", e.file}, {"message", e.message}});
    write_json(a.report,
               {{"format_version", kReportFormatVersion},
                {"command", "convert"},
                {"mode", opt.selection.to_string()},
                {"theta_top_deg", opt.theta_top_deg ? ordered_json(*opt.theta_top_deg)
                                                    : ordered_json("auto")},
                {"interval_deg", opt.interval_deg},
                {"files_processed", summary.files_processed},
                {"files_failed", summary.files_failed},
                {"mean_sparsity_before", summary.mean_sparsity_before},
                {"mean_sparsity_after", summary.mean_sparsity_after},
                {"errors", errors}});
  }
  return summary.ok() ? 0 : 1;
}

// --------------------------------------------------------------------------

struct EvalArgs {
  std::string pred, gt, report;
};

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  // (gt path, pred path) pairs, keyed by file name.
  std::vector<std::pair<fs::path, fs::path>> pairs;
  if (fs::is_directory(a.gt)) {
    require_dir(a.pred, "--pred");
    for (const auto& g : png_files(a.gt)) pairs.emplace_back(g, fs::path(a.pred) / g.filename());
  } else {
    require_file(a.gt, "--gt");
    require_file(a.pred, "--pred");
    pairs.emplace_back(a.gt, a.pred);
  }

  struct Item {
    std::optional<metrics::EvalReport> report;
    std::string error;
  };
  std::vector<Item> items(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) {
    try {
      if (!fs::is_regular_file(pairs[i].second)) {
        throw std::runtime_error("no prediction " + pairs[i].second.string());
      }
      const DepthMap gt = load_depth_png(pairs[i].first);
      const DepthMap pred = load_depth_png(pairs[i].second);
      if (gt.width() != pred.width() || gt.height() != pred.height()) {
        throw ShapeError("size mismatch: gt " + std::to_string(gt.width()) + "x" +
                         std::to_string(gt.height()) + ", pred " + std::to_string(pred.width()) +
                         "x" + std::to_string(pred.height()));
      }
      items[i].report = metrics::evaluate(pred, gt);
    } catch (const std::exception& e) {
      items[i].error = e.what();
    }
  });

  metrics::EvalReport mean{};
  std::size_t ok = 0, failed = 0;
  ordered_json files = ordered_json::array();
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string name = pairs[i].first.filename().string();
    if (!items[i].report) {
      ++failed;
      err << name << ": " << items[i].error << "\n";
      files.push_back({{"file", name}, {"error", items[i].error}});
      continue;
    }
    const auto& r = *items[i].report;
    ++ok;
    mean.rmse += r.rmse;
    mean.mae += r.mae;
    mean.irmse += r.irmse;
    mean.imae += r.imae;
    mean.sq_error_rel += r.sq_error_rel;
    mean.abs_error_rel += r.abs_error_rel;
    mean.n_valid += r.n_valid;
    ordered_json entry = {{"file", name}};
    entry.update(report_json(r));
    files.push_back(entry);
  }
  if (ok > 0) {
    const double n = static_cast<double>(ok);
    mean.rmse /= n;
    mean.mae /= n;
    mean.irmse /= n;
    mean.imae /= n;
    mean.sq_error_rel /= n;
    mean.abs_error_rel /= n;
  }
  out << "evaluated " << ok << " file(s), " << failed << " failed\n";
  if (ok > 0) {
    out << std::setprecision(6) << "RMSE " << mean.rmse << " mm  MAE " << mean.mae
        << " mm  iRMSE " << mean.irmse << " 1/km  iMAE " << mean.imae << " 1/km  sqErrorRel "
        << mean.sq_error_rel << " %  absErrorRel " << mean.abs_error_rel << " %  n_valid "
        << mean.n_valid << "\n";
  }
  if (!a.report.empty()) {
    write_json(a.report, {{"format_version", kReportFormatVersion},
                          {"command", "eval"},
                          {"files_evaluated", ok},
                          {"files_failed", failed},
                          {"mean", ok > 0 ? report_json(mean) : ordered_json(nullptr)},
                          {"files", files}});
  }
  return failed == 0 ? 0 : 1;
}

// --------------------------------------------------------------------------

struct GradcheckArgs {
  std::string op = "all", fault, report;
  std::uint64_t seed = 0;
  double step = 1e-5, tol = 1e-4;
};

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out, std::ostream&) {
  std::vector<std::string> suites;
  if (a.op == "all") {
    suites = suite_names();
  } else {
    const auto& names = suite_names();
    if (std::find(names.begin(), names.end(), a.op) == names.end()) {
      throw UsageError("unknown --op '" + a.op + "'");
    }
    suites = {a.op};
  }
  if (!a.fault.empty()) {
    const auto& names = fault_names();
    if (std::find(names.begin(), names.end(), a.fault) == names.end()) {
      throw UsageError("unknown --inject-fault op '" + a.fault + "'");
    }
  }
  if (!(a.step > 0.0) || !(a.tol > 0.0)) throw UsageError("--step and --tol must be positive");

  struct Disarm {
    ~Disarm() { fault::disarm(); }
  } disarm;
  if (!a.fault.empty()) fault::arm(a.fault);

  ordered_json rows = ordered_json::array();
  std::size_t failed = 0;
  out << std::left << std::setw(20) << "suite" << std::setw(14) << "max_rel_err" << std::setw(10)
      << "elements" << std::setw(8) << "kinks" << "result\n";
  for (const auto& name : suites) {
    const auto r = run_suite(name, a.seed, a.step, a.tol).report;
    const bool pass = r.passed();
    if (!pass) ++failed;
    std::ostringstream err_str;
    err_str << std::scientific << std::setprecision(3) << r.max_error;
    out << std::setw(20) << name << std::setw(14) << err_str.str() << std::setw(10) << r.elements
        << std::setw(8) << r.kinks << (pass ? "PASS" : "FAIL") << "\n";
    ordered_json worst = nullptr;
    for (const auto& e : r.entries) {
      if (e.max_error == r.max_error) {
        worst = {{"tensor", e.name},
                 {"index", e.worst_index},
                 {"analytic", e.worst_analytic},
                 {"numeric", e.worst_numeric}};
        break;
      }
    }
    rows.push_back({{"suite", name},
                    {"max_rel_error", r.max_error},
                    {"elements", r.elements},
                    {"kinks", r.kinks},
                    {"passed", pass},
                    {"worst", worst}});
  }
  if (!a.fault.empty()) {
    out << "injected fault in '" << a.fault << "': "
        << (failed > 0 ? "detected" : "not detected by the selected suites") << "\n";
  }
  out << (failed == 0 ? "all suites passed" : std::to_string(failed) + " suite(s) failed") << "\n";
  if (!a.report.empty()) {
    write_json(a.report, {{"format_version", kReportFormatVersion},
                          {"command", "gradcheck"},
                          {"seed", a.seed},
                          {"step", a.step},
                          {"tolerance", a.tol},
                          {"injected_fault", a.fault.empty() ? ordered_json(nullptr)
                                                             : ordered_json(a.fault)},
                          {"suites", rows}});
  }
  return failed == 0 ? 0 : 1;
}

// --------------------------------------------------------------------------

struct TrainArgs {
  train::TrainConfig cfg;
  bool no_gc = false;
  std::string out;
};

int cmd_train_toy(TrainArgs a, std::ostream& out, std::ostream& err) {
  a.cfg.gc_enabled = !a.no_gc;
  try {
    a.cfg.validate();
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  const fs::path dir(a.out);
  fs::create_directories(dir);
  std::ofstream log(dir / "log.jsonl", std::ios::trunc);
  if (!log) throw UsageError("cannot write " + (dir / "log.jsonl").string());

  const auto& c = a.cfg;
  log << ordered_json{{"format_version", kReportFormatVersion},
                      {"type", "config"},
                      {"steps", c.steps},
                      {"seed", c.seed},
                      {"lr", c.lr},
                      {"weight_decay", c.weight_decay},
                      {"gc_enabled", c.gc_enabled},
                      {"lambda", c.lambda},
                      {"w_global", c.w_global},
                      {"w_local", c.w_local},
                      {"vnl_groups", c.vnl_groups},
                      {"height", c.height},
                      {"width", c.width},
                      {"eval_every", c.eval_every},
                      {"eval_scenes", c.eval_scenes}}
             .dump()
      << "\n";

  train::TrainCallbacks cb;
  cb.on_step = [&](const train::StepRecord& r) {
    ordered_json rec = {{"type", "step"}, {"step", r.step}, {"vnl_seed", r.vnl_seed}};
    rec.update(loss_json(r.loss));
    log << rec.dump() << "\n";
  };
  cb.on_eval = [&](const train::EvalRecord& r) {
    ordered_json rec = {{"type", "eval"}, {"step", r.step}};
    rec.update(report_json(r.report));
    log << rec.dump() << "\n";
    out << "step " << r.step << ": held-out RMSE " << std::fixed << std::setprecision(1)
        << r.report.rmse << " mm, MAE " << r.report.mae << " mm\n"
        << std::defaultfloat;
  };

  try {
    auto result = train::train_toy(c, cb);
    checkpoint::save(result.model.parameters(), dir / "checkpoint.txt");
    const auto& evals = result.log.evals;
    const double first = evals.front().report.rmse, last = evals.back().report.rmse;
    double max_recomp = 0.0;
    for (const auto& s : result.log.steps) {
      max_recomp = std::max(max_recomp, s.loss.recomposition_error());
    }
    log << ordered_json{{"type", "summary"},
                        {"initial_rmse_mm", first},
                        {"final_rmse_mm", last},
                        {"rmse_ratio", first > 0.0 ? last / first : 0.0},
                        {"max_recomposition_error", max_recomp},
                        {"parameters", result.model.parameters().count()}}
               .dump()
        << "\n";
    out << "held-out RMSE " << first << " -> " << last << " mm; wrote "
        << (dir / "log.jsonl").string() << " and " << (dir / "checkpoint.txt").string() << "\n";
  } catch (const train::DivergenceError& e) {
    log << ordered_json{{"type", "diverged"}, {"step", e.step()}, {"message", e.what()}}.dump()
        << "\n";
    err << e.what() << "\n";
    return 1;
  }
  return 0;
}

// --------------------------------------------------------------------------

struct OverlayArgs {
  std::string rgb, depth, out, palette = "rdylbu";
  double near = 0.0, far = 0.0;
};

int cmd_overlay(const OverlayArgs& a, std::ostream& out, std::ostream&) {
  require_file(a.rgb, "--rgb");
  require_file(a.depth, "--depth");
  try {
    palette_color(a.palette, 0.0);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  const RgbImage rgb = load_rgb_png(a.rgb);
  const DepthMap depth = load_depth_png(a.depth);
  const RgbImage img = overlay(rgb, depth, a.palette, OverlayRange{a.near, a.far});
  if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
  save_rgb_png(a.out, img);
  out << "wrote " << a.out << " (" << depth.valid_count() << " depth pixels painted)\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse-to-dense depth completion toolkit", "liddense"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "liddense 0.1.0");

  ConvertArgs conv;
  auto* c = app.add_subcommand("convert", "Reduce 64-line depth PNGs to fewer scan lines");
  c->add_option("--in", conv.in, "Input directory of 16-bit depth PNGs")->required();
  c->add_option("--out", conv.out, "Output directory")->required();
  c->add_option("--calib", conv.calib, "Intrinsics file: fx fy cx cy")->required();
  c->add_option("--mode", conv.mode, "single | 16 | lines=a,b,...")->capture_default_str();
  c->add_option("--middle-line", conv.middle_line, "Line kept in single mode")
      ->capture_default_str();
  c->add_option("--theta-top", conv.theta_top, "Top line angle in degrees, or 'auto'")
      ->capture_default_str();
  c->add_option("--interval", conv.interval, "Angular line spacing in degrees")
      ->capture_default_str();
  c->add_option("--report", conv.report, "Write a JSON summary");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate predictions against ground truth");
  e->add_option("--pred", ev.pred, "Prediction PNG or directory")->required();
  e->add_option("--gt", ev.gt, "Ground-truth PNG or directory")->required();
  e->add_option("--report", ev.report, "Write a JSON report");

  GradcheckArgs gc;
  auto* g = app.add_subcommand("gradcheck", "Compare analytic gradients with central differences");
  g->add_option("--seed", gc.seed, "Seed for the random test inputs")->required();
  g->add_option("--op", gc.op, "Suite to run, or 'all'")->capture_default_str();
  g->add_option("--inject-fault", gc.fault, "Corrupt the backward rule of this op");
  g->add_option("--step", gc.step, "Finite-difference step")->capture_default_str();
  g->add_option("--tol", gc.tol, "Relative error tolerance")->capture_default_str();
  g->add_option("--report", gc.report, "Write a JSON report");
  g->add_flag_callback("--list", [&] {
    for (const auto& n : suite_names()) out << n << "\n";
    throw CLI::Success();
  }, "List suites and exit");

  TrainArgs tr;
  auto* t = app.add_subcommand("train-toy", "Train the small network on synthetic scenes");
  t->add_option("--seed", tr.cfg.seed, "Run seed")->required();
  t->add_option("--out", tr.out, "Output directory for log.jsonl and checkpoint.txt")->required();
  t->add_option("--steps", tr.cfg.steps, "Optimizer steps")->capture_default_str();
  t->add_option("--lr", tr.cfg.lr, "Learning rate")->capture_default_str();
  t->add_option("--wd", tr.cfg.weight_decay, "Decoupled weight decay")->capture_default_str();
  t->add_flag("--no-gc", tr.no_gc, "Disable gradient centralization");
  t->add_option("--lambda", tr.cfg.lambda, "Weight of the virtual normal term")
      ->capture_default_str();
  t->add_option("--vnl-groups", tr.cfg.vnl_groups, "Point groups per step")->capture_default_str();
  t->add_option("--size", tr.cfg.height, "Scene height and width (multiple of 4)")
      ->capture_default_str();
  t->add_option("--eval-every", tr.cfg.eval_every, "Held-out evaluation interval")
      ->capture_default_str();

  OverlayArgs ov;
  auto* o = app.add_subcommand("overlay", "Paint valid depth pixels over an RGB image");
  o->add_option("--rgb", ov.rgb, "RGB PNG")->required();
  o->add_option("--depth", ov.depth, "16-bit depth PNG")->required();
  o->add_option("--out", ov.out, "Output PNG")->required();
  o->add_option("--palette", ov.palette, "Color palette")->capture_default_str();
  o->add_option("--near", ov.near, "Depth mapped to the near color (<= 0: map minimum)");
  o->add_option("--far", ov.far, "Depth mapped to the far color (<= 0: map maximum)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*c) return cmd_convert(conv, out, err);
    if (*e) return cmd_eval(ev, out, err);
    if (*g) return cmd_gradcheck(gc, out, err);
    if (*t) {
      tr.cfg.width = tr.cfg.height;
      return cmd_train_toy(tr, out, err);
    }
    if (*o) return cmd_overlay(ov, out, err);
  } catch (const UsageError& ex) {
    err << "error: " << ex.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return 1;
  }
  return 2;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace liddense::cli
