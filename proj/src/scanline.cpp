#include "liddense/scanline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "liddense/parallel.hpp"

namespace liddense::scanline {

PointCloud backproject(const DepthMap& map, const CameraIntrinsics& k) {
  PointCloud cloud;
  cloud.width = map.width();
  cloud.height = map.height();
  const std::size_t n = map.valid_count();
  if (n == 0) {
    throw EmptyInputError("backproject: depth map has no valid pixels");
  }
  cloud.points.reserve(n);
  cloud.pixels.reserve(n);
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      const double d = map.at(r, c);
      if (d <= 0.0) continue;
      cloud.points.push_back(camera_to_sensor(camera_point(k, c, r, d)));
      cloud.pixels.push_back({r, c});
    }
  }
  return cloud;
}

double vertical_angle(const Vec3& p) {
  const double n = norm(p);
  if (!(n > 0.0)) {
    throw std::domain_error("vertical_angle: zero-norm point");
  }
  // Guard the asin argument against |z|/n exceeding 1 by rounding.
  const double s = std::clamp(p.z / n, -1.0, 1.0);
  return std::asin(s) * 180.0 / std::numbers::pi;
}

int line_for_angle(double theta_deg, double theta_top_deg, double interval_deg, int levels) {
  const double bin = std::floor((theta_top_deg - theta_deg) / interval_deg);
  if (bin < 0.0) return 0;
  if (bin > static_cast<double>(levels - 1)) return levels - 1;
  return static_cast<int>(bin);
}

ScanLineAssignment assign_lines(const PointCloud& cloud, std::optional<double> theta_top_deg,
                                double interval_deg, int levels) {
  if (!(interval_deg > 0.0)) throw std::invalid_argument("assign_lines: interval must be > 0");
  if (levels < 1) throw std::invalid_argument("assign_lines: levels must be >= 1");
  ScanLineAssignment out;
  out.levels = levels;
  out.theta.reserve(cloud.points.size());
  for (const Vec3& p : cloud.points) out.theta.push_back(vertical_angle(p));
  if (theta_top_deg) {
    out.theta_top = *theta_top_deg;
  } else {
    if (out.theta.empty()) throw EmptyInputError("assign_lines: empty cloud with auto theta_top");
    out.theta_top = *std::max_element(out.theta.begin(), out.theta.end());
  }
  out.line_index.reserve(out.theta.size());
  for (double t : out.theta) {
    out.line_index.push_back(line_for_angle(t, out.theta_top, interval_deg, levels));
  }
  return out;
}

LineSelection LineSelection::parse(const std::string& text) {
  if (text == "single") return single();
  if (text == "16" || text == "sixteen") return sixteen();
  const std::string prefix = "lines=";
  if (text.rfind(prefix, 0) == 0) {
    std::set<int> lines;
    std::stringstream ss(text.substr(prefix.size()));
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      std::size_t used = 0;
      int v = 0;
      try {
        v = std::stoi(item, &used);
      } catch (const std::exception&) {
        throw std::invalid_argument("bad line index '" + item + "'");
      }
      if (used != item.size()) throw std::invalid_argument("bad line index '" + item + "'");
      lines.insert(v);
    }
    return LineSelection::lines(std::move(lines));
  }
  throw std::invalid_argument("unknown mode '" + text + "' (expected single, 16, lines=a,b,c)");
}

std::string LineSelection::to_string() const {
  switch (kind) {
    case Kind::kSingle:
      return "single";
    case Kind::kSixteen:
      return "16";
    case Kind::kExplicit: {
      std::string s = "lines=";
      bool first = true;
      for (int l : explicit_lines) {
        if (!first) s += ",";
        s += std::to_string(l);
        first = false;
      }
      return s;
    }
  }
  return {};
}

std::set<int> select_lines(const LineSelection& selection, int levels) {
  auto check = [levels](int l) {
    if (l < 0 || l >= levels) {
      throw std::out_of_range("line index " + std::to_string(l) + " outside [0, " +
                              std::to_string(levels - 1) + "]");
    }
  };
  switch (selection.kind) {
    case LineSelection::Kind::kSingle:
      check(selection.middle_line);
      return {selection.middle_line};
    case LineSelection::Kind::kSixteen: {
      std::set<int> out;
      for (int l = 0; l < levels; l += 4) out.insert(l);
      return out;
    }
    case LineSelection::Kind::kExplicit:
      for (int l : selection.explicit_lines) check(l);
      return selection.explicit_lines;
  }
  return {};
}

DepthMap extract_depthmap(const DepthMap& map, const PointCloud& cloud,
                          const ScanLineAssignment& assign, const std::set<int>& lines) {
  if (cloud.width != map.width() || cloud.height != map.height() ||
      assign.line_index.size() != cloud.pixels.size()) {
    throw ShapeError("extract_depthmap: assignment was not derived from this map");
  }
  DepthMap out(map.width(), map.height());
  for (std::size_t i = 0; i < cloud.pixels.size(); ++i) {
    if (!lines.contains(assign.line_index[i])) continue;
    const Pixel p = cloud.pixels[i];
    out.set(p.row, p.col, map.at(p.row, p.col));
  }
  return out;
}

DepthMap convert_frame(const DepthMap& map, const CameraIntrinsics& k,
                       const ConvertOptions& options) {
  const auto lines = select_lines(options.selection, options.levels);
  const PointCloud cloud = backproject(map, k);
  const ScanLineAssignment assign =
      assign_lines(cloud, options.theta_top_deg, options.interval_deg, options.levels);
  return extract_depthmap(map, cloud, assign, lines);
}

ConvertSummary convert_dataset(const std::filesystem::path& in_dir, const CameraIntrinsics& k,
                               const std::filesystem::path& out_dir,
                               const ConvertOptions& options) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(in_dir)) {
    throw std::invalid_argument("input directory does not exist: " + in_dir.string());
  }
  select_lines(options.selection, options.levels);  // reject bad selections before any work
  fs::create_directories(out_dir);

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(in_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  struct Outcome {
    bool ok = false;
    double before = 0.0;
    double after = 0.0;
    std::string error;
  };
  std::vector<Outcome> outcomes(files.size());
  parallel_for(files.size(), [&](std::size_t i) {
    Outcome& o = outcomes[i];
    try {
      const DepthMap in = load_depth_png(files[i]);
      const DepthMap out = convert_frame(in, k, options);
      save_depth_png(out_dir / files[i].filename(), out);
      o.before = in.sparsity();
      o.after = out.sparsity();
      o.ok = true;
    } catch (const std::exception& e) {
      o.error = e.what();
    }
  });

  ConvertSummary summary;
  double before = 0.0, after = 0.0;
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (outcomes[i].ok) {
      ++summary.files_processed;
      before += outcomes[i].before;
      after += outcomes[i].after;
    } else {
      ++summary.files_failed;
      summary.errors.push_back({files[i].filename().string(), outcomes[i].error});
    }
  }
  if (summary.files_processed > 0) {
    summary.mean_sparsity_before = before / static_cast<double>(summary.files_processed);
    summary.mean_sparsity_after = after / static_cast<double>(summary.files_processed);
  }
  return summary;
}

}  // namespace liddense::scanline
