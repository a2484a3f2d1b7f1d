#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace liddense {

/// Raised for malformed or unsupported image files.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a value cannot be represented in the target encoding.
class RangeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for mismatched raster dimensions or tensor shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Pixel {
  int row = 0;
  int col = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

// KITTI devkit convention: meters = raw / 256, raw 0 is "no measurement".
inline constexpr double kDepthUnitsPerMeter = 256.0;
inline constexpr double kMaxEncodableDepth = 65535.0 / kDepthUnitsPerMeter;

/// Single-channel depth raster in meters, row-major. 0.0 marks an invalid
/// pixel; every other value lies in (0, kMaxEncodableDepth].
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int width, int height);
  DepthMap(int width, int height, std::vector<double> meters);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  std::span<const double> data() const { return data_; }

  double at(int row, int col) const { return data_[index(row, col)]; }
  void set(int row, int col, double meters);

  bool valid(int row, int col) const { return at(row, col) > 0.0; }
  std::size_t valid_count() const;
  /// Fraction of valid pixels.
  double sparsity() const;

  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  friend bool operator==(const DepthMap&, const DepthMap&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, Rgb fill = {});
  RgbImage(int width, int height, std::vector<Rgb> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  std::span<const Rgb> data() const { return data_; }
  Rgb at(int row, int col) const { return data_[row * width_ + col]; }
  void set(int row, int col, Rgb c) { data_[row * width_ + col] = c; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Rgb> data_;
};

/// Pinhole intrinsics in pixels.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  CameraIntrinsics() = default;
  CameraIntrinsics(double fx, double fy, double cx, double cy);
};

/// Raw 16-bit raster as stored on disk.
struct RawDepth {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> values;
  friend bool operator==(const RawDepth&, const RawDepth&) = default;
};

// 16-bit grayscale PNG <-> raw raster. Bit exact; the PNG layer never
// applies gamma or scaling.
RawDepth decode_raw_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_raw_png(const RawDepth& raw);

DepthMap depth_from_raw(const RawDepth& raw);
/// Throws RangeError naming the first pixel whose round(d*256) exceeds 65535.
RawDepth depth_to_raw(const DepthMap& map);

DepthMap decode_depth_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_depth_png(const DepthMap& map);

/// 8-bit RGB PNG. Gray, palette and alpha inputs are expanded/stripped to RGB.
RgbImage decode_rgb_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_rgb_png(const RgbImage& image);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

DepthMap load_depth_png(const std::filesystem::path& path);
void save_depth_png(const std::filesystem::path& path, const DepthMap& map);
RgbImage load_rgb_png(const std::filesystem::path& path);
void save_rgb_png(const std::filesystem::path& path, const RgbImage& image);

/// Calibration text: `fx fy cx cy` on one line.
CameraIntrinsics parse_calibration(std::string_view text);
CameraIntrinsics load_calibration(const std::filesystem::path& path);

/// Row-major, true exactly where depth > 0.
std::vector<bool> valid_mask(const DepthMap& map);

// Overlay palettes. "rdylbu" runs red (near) through yellow to blue (far).
Rgb palette_color(std::string_view palette, double t);

struct OverlayRange {
  double near = 0.0;  // <= 0 means "use the map's minimum valid depth"
  double far = 0.0;   // <= 0 means "use the map's maximum valid depth"
};

/// Valid depth pixels are painted with the palette; invalid pixels keep the
/// RGB value.
RgbImage overlay(const RgbImage& rgb, const DepthMap& map,
                 std::string_view palette = "rdylbu", OverlayRange range = {});

}  // namespace liddense
