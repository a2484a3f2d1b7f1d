#pragma once

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>

#include "liddense/depth_io.hpp"
#include "liddense/rng.hpp"

namespace testing {

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("liddense_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Depth map with roughly `density` valid pixels at multiples of 1/256 m.
inline liddense::DepthMap random_depth(liddense::Rng& rng, int w, int h, double density,
                                       double max_m = 80.0) {
  std::vector<double> v(static_cast<std::size_t>(w) * h, 0.0);
  for (double& d : v) {
    if (rng.uniform() < density) d = static_cast<double>(1 + rng.index(static_cast<std::uint64_t>(max_m * 256))) / 256.0;
  }
  return liddense::DepthMap(w, h, std::move(v));
}

}  // namespace testing
