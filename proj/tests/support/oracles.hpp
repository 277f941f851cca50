#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "extremctl/se3.hpp"

namespace testsupport {

inline extremctl::se3::Rotation random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return extremctl::se3::Rotation::from_wxyz(n(rng), n(rng), n(rng), n(rng));
}

inline extremctl::se3::Pose random_pose(std::mt19937_64& rng, double reach = 2.0) {
  std::uniform_real_distribution<double> u(-reach, reach);
  return {random_rotation(rng), extremctl::se3::Vec3(u(rng), u(rng), u(rng))};
}

// Largest translation gap and rotation angle between two poses.
inline double translation_gap(const extremctl::se3::Pose& a, const extremctl::se3::Pose& b) {
  return (a.translation() - b.translation()).norm();
}
inline double rotation_gap(const extremctl::se3::Pose& a, const extremctl::se3::Pose& b) {
  return extremctl::se3::angular_distance(a.rotation(), b.rotation());
}

// Fresh scratch directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("extremctl_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace testsupport
