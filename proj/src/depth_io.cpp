#include "liddense/depth_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace liddense {

namespace {

std::string pixel_text(int row, int col) {
  return "(row " + std::to_string(row) + ", col " + std::to_string(col) + ")";
}

void check_depth_value(double meters, int row, int col) {
  if (!std::isfinite(meters) || meters < 0.0 || meters > kMaxEncodableDepth) {
    throw RangeError("depth " + std::to_string(meters) + " m at " + pixel_text(row, col) +
                     " outside [0, " + std::to_string(kMaxEncodableDepth) + "]");
  }
}

// ---------------------------------------------------------------------------
// libpng plumbing. libpng reports errors through longjmp, so the functions that
// call into it keep only trivially destructible locals; buffers are owned by
// the callers.

struct PngError {
  std::jmp_buf jump;
  char message[256];
};

void on_png_error(png_structp png, png_const_charp msg) {
  auto* err = static_cast<PngError*>(png_get_error_ptr(png));
  std::snprintf(err->message, sizeof(err->message), "%s", msg);
  std::longjmp(err->jump, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

struct MemoryReader {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
};

void read_from_memory(png_structp png, png_bytep out, png_size_t count) {
  auto* reader = static_cast<MemoryReader*>(png_get_io_ptr(png));
  if (reader->pos + count > reader->size) {
    png_error(png, "truncated PNG stream");
  }
  std::memcpy(out, reader->data + reader->pos, count);
  reader->pos += count;
}

void write_to_vector(png_structp png, png_bytep data, png_size_t count) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + count);
}

void flush_noop(png_structp) {}

struct PngHeader {
  png_uint_32 width;
  png_uint_32 height;
  int bit_depth;
  int color_type;
};

enum class ReadKind { kGray16, kRgb8 };

// Returns false and fills err->message on failure.
bool png_read_header(const std::uint8_t* data, std::size_t size, PngHeader* header,
                     PngError* err) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, err, on_png_error,
                                           on_png_warning);
  if (png == nullptr) {
    std::snprintf(err->message, sizeof(err->message), "cannot allocate PNG reader");
    return false;
  }
  png_infop info = png_create_info_struct(png);
  MemoryReader reader{data, size, 0};
  if (setjmp(err->jump)) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_set_read_fn(png, &reader, read_from_memory);
  png_read_info(png, info);
  header->width = png_get_image_width(png, info);
  header->height = png_get_image_height(png, info);
  header->bit_depth = png_get_bit_depth(png, info);
  header->color_type = png_get_color_type(png, info);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

// Reads all rows into `pixels` (sized by the caller for the requested layout).
bool png_read_pixels(const std::uint8_t* data, std::size_t size, ReadKind kind,
                     std::uint8_t* pixels, std::size_t row_bytes, png_bytep* rows,
                     PngError* err) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, err, on_png_error,
                                           on_png_warning);
  if (png == nullptr) {
    std::snprintf(err->message, sizeof(err->message), "cannot allocate PNG reader");
    return false;
  }
  png_infop info = png_create_info_struct(png);
  MemoryReader reader{data, size, 0};
  if (setjmp(err->jump)) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_set_read_fn(png, &reader, read_from_memory);
  png_read_info(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  if (kind == ReadKind::kRgb8) {
    const int color = png_get_color_type(png, info);
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
      png_set_gray_to_rgb(png);
    }
  }
  png_set_interlace_handling(png);
  png_read_update_info(png, info);
  if (png_get_rowbytes(png, info) != row_bytes) {
    png_error(png, "unexpected row layout");
  }
  for (png_uint_32 y = 0; y < height; ++y) {
    rows[y] = pixels + static_cast<std::size_t>(y) * row_bytes;
  }
  png_read_image(png, rows);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

bool png_write_pixels(std::vector<std::uint8_t>* out, png_uint_32 width, png_uint_32 height,
                      int bit_depth, int color_type, png_bytep* rows, PngError* err) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, err, on_png_error,
                                            on_png_warning);
  if (png == nullptr) {
    std::snprintf(err->message, sizeof(err->message), "cannot allocate PNG writer");
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (setjmp(err->jump)) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, out, write_to_vector, flush_noop);
  png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

PngHeader read_header_or_throw(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw FormatError("not a PNG file (bad signature)");
  }
  PngHeader header{};
  PngError err{};
  if (!png_read_header(bytes.data(), bytes.size(), &header, &err)) {
    throw FormatError(std::string("malformed PNG: ") + err.message);
  }
  return header;
}

}  // namespace

// ---------------------------------------------------------------------------

DepthMap::DepthMap(int width, int height) : DepthMap(width, height, {}) {}

DepthMap::DepthMap(int width, int height, std::vector<double> meters)
    : width_(width), height_(height), data_(std::move(meters)) {
  if (width < 0 || height < 0) {
    throw ShapeError("negative depth map dimensions");
  }
  const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (data_.empty()) {
    data_.assign(n, 0.0);
  }
  if (data_.size() != n) {
    throw ShapeError("depth data length " + std::to_string(data_.size()) + " != " +
                     std::to_string(width) + "x" + std::to_string(height));
  }
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) {
      check_depth_value(data_[index(r, c)], r, c);
    }
  }
}

void DepthMap::set(int row, int col, double meters) {
  check_depth_value(meters, row, col);
  data_[index(row, col)] = meters;
}

std::size_t DepthMap::valid_count() const {
  return static_cast<std::size_t>(
      std::count_if(data_.begin(), data_.end(), [](double d) { return d > 0.0; }));
}

double DepthMap::sparsity() const {
  if (data_.empty()) return 0.0;
  return static_cast<double>(valid_count()) / static_cast<double>(data_.size());
}

RgbImage::RgbImage(int width, int height, Rgb fill)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {}

RgbImage::RgbImage(int width, int height, std::vector<Rgb> pixels)
    : width_(width), height_(height), data_(std::move(pixels)) {
  if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw ShapeError("rgb data length does not match dimensions");
  }
}

CameraIntrinsics::CameraIntrinsics(double fx_, double fy_, double cx_, double cy_)
    : fx(fx_), fy(fy_), cx(cx_), cy(cy_) {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy) ||
      !std::isfinite(cx) || !std::isfinite(cy)) {
    throw std::invalid_argument("camera intrinsics require finite fx > 0 and fy > 0");
  }
}

// ---------------------------------------------------------------------------

RawDepth decode_raw_png(std::span<const std::uint8_t> bytes) {
  const PngHeader header = read_header_or_throw(bytes);
  if (header.color_type != PNG_COLOR_TYPE_GRAY) {
    throw FormatError("depth PNG must have exactly one (gray) channel; color type " +
                      std::to_string(header.color_type));
  }
  if (header.bit_depth != 16) {
    throw FormatError("depth PNG must be 16-bit; got bit depth " +
                      std::to_string(header.bit_depth));
  }
  const std::size_t row_bytes = static_cast<std::size_t>(header.width) * 2;
  std::vector<std::uint8_t> pixels(row_bytes * header.height);
  std::vector<png_bytep> rows(header.height);
  PngError err{};
  if (!png_read_pixels(bytes.data(), bytes.size(), ReadKind::kGray16, pixels.data(),
                       row_bytes, rows.data(), &err)) {
    throw FormatError(std::string("malformed PNG: ") + err.message);
  }
  RawDepth raw;
  raw.width = static_cast<int>(header.width);
  raw.height = static_cast<int>(header.height);
  raw.values.resize(static_cast<std::size_t>(header.width) * header.height);
  for (std::size_t i = 0; i < raw.values.size(); ++i) {
    // PNG samples are big-endian.
    raw.values[i] = static_cast<std::uint16_t>((pixels[2 * i] << 8) | pixels[2 * i + 1]);
  }
  return raw;
}

std::vector<std::uint8_t> encode_raw_png(const RawDepth& raw) {
  if (raw.width <= 0 || raw.height <= 0) {
    throw ShapeError("cannot encode an empty raster");
  }
  if (raw.values.size() != static_cast<std::size_t>(raw.width) * raw.height) {
    throw ShapeError("raw raster length does not match dimensions");
  }
  const std::size_t row_bytes = static_cast<std::size_t>(raw.width) * 2;
  std::vector<std::uint8_t> pixels(row_bytes * raw.height);
  for (std::size_t i = 0; i < raw.values.size(); ++i) {
    pixels[2 * i] = static_cast<std::uint8_t>(raw.values[i] >> 8);
    pixels[2 * i + 1] = static_cast<std::uint8_t>(raw.values[i] & 0xff);
  }
  std::vector<png_bytep> rows(raw.height);
  for (int y = 0; y < raw.height; ++y) rows[y] = pixels.data() + y * row_bytes;
  std::vector<std::uint8_t> out;
  PngError err{};
  if (!png_write_pixels(&out, raw.width, raw.height, 16, PNG_COLOR_TYPE_GRAY, rows.data(),
                        &err)) {
    throw FormatError(std::string("PNG encoding failed: ") + err.message);
  }
  return out;
}

DepthMap depth_from_raw(const RawDepth& raw) {
  std::vector<double> meters(raw.values.size());
  std::transform(raw.values.begin(), raw.values.end(), meters.begin(),
                 [](std::uint16_t v) { return static_cast<double>(v) / kDepthUnitsPerMeter; });
  return DepthMap(raw.width, raw.height, std::move(meters));
}

RawDepth depth_to_raw(const DepthMap& map) {
  RawDepth raw;
  raw.width = map.width();
  raw.height = map.height();
  raw.values.resize(map.size());
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      const double scaled = std::round(map.at(r, c) * kDepthUnitsPerMeter);
      if (scaled > 65535.0) {
        throw RangeError("depth " + std::to_string(map.at(r, c)) + " m at " +
                         pixel_text(r, c) + " overflows the 16-bit encoding");
      }
      raw.values[map.index(r, c)] = static_cast<std::uint16_t>(scaled);
    }
  }
  return raw;
}

DepthMap decode_depth_png(std::span<const std::uint8_t> bytes) {
  return depth_from_raw(decode_raw_png(bytes));
}

std::vector<std::uint8_t> encode_depth_png(const DepthMap& map) {
  return encode_raw_png(depth_to_raw(map));
}

RgbImage decode_rgb_png(std::span<const std::uint8_t> bytes) {
  const PngHeader header = read_header_or_throw(bytes);
  const std::size_t row_bytes = static_cast<std::size_t>(header.width) * 3;
  std::vector<std::uint8_t> pixels(row_bytes * header.height);
  std::vector<png_bytep> rows(header.height);
  PngError err{};
  if (!png_read_pixels(bytes.data(), bytes.size(), ReadKind::kRgb8, pixels.data(), row_bytes,
                       rows.data(), &err)) {
    throw FormatError(std::string("malformed PNG: ") + err.message);
  }
  std::vector<Rgb> rgb(static_cast<std::size_t>(header.width) * header.height);
  for (std::size_t i = 0; i < rgb.size(); ++i) {
    rgb[i] = {pixels[3 * i], pixels[3 * i + 1], pixels[3 * i + 2]};
  }
  return RgbImage(static_cast<int>(header.width), static_cast<int>(header.height),
                  std::move(rgb));
}

std::vector<std::uint8_t> encode_rgb_png(const RgbImage& image) {
  if (image.width() <= 0 || image.height() <= 0) {
    throw ShapeError("cannot encode an empty image");
  }
  const std::size_t row_bytes = static_cast<std::size_t>(image.width()) * 3;
  std::vector<std::uint8_t> pixels(row_bytes * image.height());
  const auto data = image.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    pixels[3 * i] = data[i].r;
    pixels[3 * i + 1] = data[i].g;
    pixels[3 * i + 2] = data[i].b;
  }
  std::vector<png_bytep> rows(image.height());
  for (int y = 0; y < image.height(); ++y) rows[y] = pixels.data() + y * row_bytes;
  std::vector<std::uint8_t> out;
  PngError err{};
  if (!png_write_pixels(&out, image.width(), image.height(), 8, PNG_COLOR_TYPE_RGB,
                        rows.data(), &err)) {
    throw FormatError(std::string("PNG encoding failed: ") + err.message);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw std::runtime_error("write failed for " + path.string());
  }
}

DepthMap load_depth_png(const std::filesystem::path& path) {
  try {
    return decode_depth_png(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_depth_png(const std::filesystem::path& path, const DepthMap& map) {
  write_file(path, encode_depth_png(map));
}

RgbImage load_rgb_png(const std::filesystem::path& path) {
  try {
    return decode_rgb_png(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_rgb_png(const std::filesystem::path& path, const RgbImage& image) {
  write_file(path, encode_rgb_png(image));
}

CameraIntrinsics parse_calibration(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::array<double, 4> v{};
  for (double& x : v) {
    if (!(in >> x)) {
      throw FormatError("calibration must contain four numbers: fx fy cx cy");
    }
  }
  std::string extra;
  if (in >> extra) {
    throw FormatError("unexpected trailing token in calibration: '" + extra + "'");
  }
  try {
    return CameraIntrinsics(v[0], v[1], v[2], v[3]);
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
}

CameraIntrinsics load_calibration(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return parse_calibration(
        std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<bool> valid_mask(const DepthMap& map) {
  std::vector<bool> mask(map.size());
  const auto data = map.data();
  for (std::size_t i = 0; i < data.size(); ++i) mask[i] = data[i] > 0.0;
  return mask;
}

// ---------------------------------------------------------------------------

namespace {

// ColorBrewer RdYlBu, reversed so that t=0 is red (near) and t=1 blue (far).
constexpr std::array<Rgb, 7> kRdYlBu = {{{165, 0, 38},
                                         {244, 109, 67},
                                         {253, 174, 97},
                                         {255, 255, 191},
                                         {171, 217, 233},
                                         {69, 117, 180},
                                         {49, 54, 149}}};

std::uint8_t lerp_channel(std::uint8_t a, std::uint8_t b, double f) {
  return static_cast<std::uint8_t>(std::lround(a + (b - a) * f));
}

}  // namespace

Rgb palette_color(std::string_view palette, double t) {
  if (palette != "rdylbu") {
    throw std::invalid_argument("unknown palette '" + std::string(palette) +
                                "' (available: rdylbu)");
  }
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0);
  const double pos = t * static_cast<double>(kRdYlBu.size() - 1);
  const auto lo = std::min(static_cast<std::size_t>(pos), kRdYlBu.size() - 2);
  const double f = pos - static_cast<double>(lo);
  const Rgb a = kRdYlBu[lo];
  const Rgb b = kRdYlBu[lo + 1];
  return {lerp_channel(a.r, b.r, f), lerp_channel(a.g, b.g, f), lerp_channel(a.b, b.b, f)};
}

RgbImage overlay(const RgbImage& rgb, const DepthMap& map, std::string_view palette,
                 OverlayRange range) {
  if (rgb.width() != map.width() || rgb.height() != map.height()) {
    throw ShapeError("overlay: rgb " + std::to_string(rgb.width()) + "x" +
                     std::to_string(rgb.height()) + " vs depth " +
                     std::to_string(map.width()) + "x" + std::to_string(map.height()));
  }
  palette_color(palette, 0.0);  // validates the name up front

  double lo = range.near;
  double hi = range.far;
  if (lo <= 0.0 || hi <= 0.0) {
    double min_d = 0.0, max_d = 0.0;
    bool any = false;
    for (double d : map.data()) {
      if (d <= 0.0) continue;
      min_d = any ? std::min(min_d, d) : d;
      max_d = any ? std::max(max_d, d) : d;
      any = true;
    }
    if (lo <= 0.0) lo = min_d;
    if (hi <= 0.0) hi = max_d;
  }

  RgbImage out = rgb;
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      const double d = map.at(r, c);
      if (d <= 0.0) continue;
      const double t = hi > lo ? (d - lo) / (hi - lo) : 0.0;
      out.set(r, c, palette_color(palette, t));
    }
  }
  return out;
}

}  // namespace liddense
