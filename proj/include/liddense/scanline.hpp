#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "liddense/depth_io.hpp"
#include "liddense/geometry.hpp"

namespace liddense::scanline {

inline constexpr int kLevels = 64;
inline constexpr double kIntervalDeg = 0.4;
/// Upper elevation bound of a Velodyne HDL-64E.
inline constexpr double kDefaultThetaTopDeg = 2.0;
inline constexpr int kDefaultMiddleLine = 31;

/// Raised when a frame has nothing to convert.
class EmptyInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PointCloud {
  std::vector<Vec3> points;   // sensor frame, z up
  std::vector<Pixel> pixels;  // originating raster position per point
  int width = 0;
  int height = 0;
};

struct ScanLineAssignment {
  std::vector<int> line_index;  // per point, in [0, levels)
  std::vector<double> theta;    // per point, degrees
  double theta_top = kDefaultThetaTopDeg;
  int levels = kLevels;
};

/// One sensor-frame point per valid pixel, in row-major pixel order.
/// Throws EmptyInputError when the map has no valid pixel.
PointCloud backproject(const DepthMap& map, const CameraIntrinsics& k);

/// Elevation angle arcsin(z / |p|) in degrees. Throws std::domain_error on a
/// zero-norm point.
double vertical_angle(const Vec3& p);

/// line = clamp(floor((theta_top - theta) / interval), 0, levels - 1); line 0 is
/// the topmost.
int line_for_angle(double theta_deg, double theta_top_deg, double interval_deg = kIntervalDeg,
                   int levels = kLevels);

/// theta_top == nullopt selects the maximum observed angle of the cloud.
ScanLineAssignment assign_lines(const PointCloud& cloud, std::optional<double> theta_top_deg,
                                double interval_deg = kIntervalDeg, int levels = kLevels);

struct LineSelection {
  enum class Kind { kSingle, kSixteen, kExplicit };
  Kind kind = Kind::kSingle;
  int middle_line = kDefaultMiddleLine;
  std::set<int> explicit_lines;

  static LineSelection single(int middle = kDefaultMiddleLine) {
    return {Kind::kSingle, middle, {}};
  }
  static LineSelection sixteen() { return {Kind::kSixteen, kDefaultMiddleLine, {}}; }
  static LineSelection lines(std::set<int> l) {
    return {Kind::kExplicit, kDefaultMiddleLine, std::move(l)};
  }

  /// Accepts "single", "16", or "lines=a,b,c".
  static LineSelection parse(const std::string& text);
  std::string to_string() const;
};

/// Throws std::out_of_range for indices outside [0, levels).
std::set<int> select_lines(const LineSelection& selection, int levels = kLevels);

DepthMap extract_depthmap(const DepthMap& map, const PointCloud& cloud,
                          const ScanLineAssignment& assign, const std::set<int>& lines);

struct ConvertOptions {
  LineSelection selection = LineSelection::single();
  std::optional<double> theta_top_deg = kDefaultThetaTopDeg;  // nullopt = auto
  double interval_deg = kIntervalDeg;
  int levels = kLevels;
};

/// The whole per-frame procedure: backproject, angle, quantize, select.
DepthMap convert_frame(const DepthMap& map, const CameraIntrinsics& k,
                       const ConvertOptions& options);

struct FileError {
  std::string file;
  std::string message;
};

struct ConvertSummary {
  std::size_t files_processed = 0;
  std::size_t files_failed = 0;
  double mean_sparsity_before = 0.0;
  double mean_sparsity_after = 0.0;
  std::vector<FileError> errors;
  bool ok() const { return files_failed == 0; }
};

/// Converts every *.png under in_dir (non-recursive, sorted by name) into
/// out_dir with the same file name. Per-file failures are collected.
ConvertSummary convert_dataset(const std::filesystem::path& in_dir, const CameraIntrinsics& k,
                               const std::filesystem::path& out_dir,
                               const ConvertOptions& options);

}  // namespace liddense::scanline
