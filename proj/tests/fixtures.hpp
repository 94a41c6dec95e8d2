#pragma once

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "gsc/core.hpp"
#include "gsc/synthgen.hpp"

namespace gsc::test {

// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("gsc_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Camera at (0, 0, -dist) looking down +z.
inline CameraView front_camera(int w, int h, double f, double dist, std::string id = "v0") {
  CameraView c;
  c.view_id = std::move(id);
  c.width = w;
  c.height = h;
  c.fx = c.fy = f;
  c.cx = (w - 1) / 2.0;
  c.cy = (h - 1) / 2.0;
  c.translation = Vec3(0, 0, dist);
  return c;
}

inline GaussianPrimitive gaussian(Vec3 center, double scale, double opacity) {
  GaussianPrimitive g;
  g.center = center;
  g.scale = Vec3::Constant(scale);
  g.opacity = opacity;
  return g;
}

// Anisotropic Gaussians scattered in a slab in front of a slightly rotated
// camera.
inline std::pair<GaussianScene, CameraView> random_scene(std::mt19937_64& rng, std::size_t n,
                                                         int w, int h) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), s(0.005, 0.06), o(0.05, 1.0);
  GaussianScene scene;
  for (std::size_t i = 0; i < n; ++i) {
    GaussianPrimitive g;
    g.center = Vec3(1.2 * u(rng), 0.9 * u(rng), 0.8 * u(rng));
    g.scale = Vec3(s(rng), s(rng), s(rng));
    g.rotation = Quat(u(rng), u(rng), u(rng), u(rng)).normalized();
    g.opacity = o(rng);
    scene.gaussians.push_back(g);
  }
  CameraView cam = front_camera(w, h, 0.9 * w, 3.5);
  const Vec3 axis = Vec3(u(rng), u(rng), u(rng)).normalized();
  cam.rotation = Quat(Eigen::AngleAxisd(0.15 * u(rng), axis));
  return {scene, cam};
}

// Ellipse, optionally with random holes.
inline BinaryMask random_region(std::mt19937_64& rng, int w, int h, double holes = 0.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  BinaryMask m(w, h, 0);
  const double cx = w * (0.2 + 0.6 * u(rng)), cy = h * (0.2 + 0.6 * u(rng));
  const double rx = w * (0.08 + 0.3 * u(rng)), ry = h * (0.08 + 0.3 * u(rng));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = (x - cx) / rx, dy = (y - cy) / ry;
      if (dx * dx + dy * dy <= 1.0 && u(rng) >= holes) m(x, y) = 1;
    }
  }
  if (pixel_count(m) == 0) m(static_cast<int>(cx), static_cast<int>(cy)) = 1;
  return m;
}

// Two well separated boxes seen by a ring of cameras, no noise.
inline SynthSpec two_box_spec(std::uint64_t seed = 7) {
  SynthSpec s;
  s.seed = seed;
  SynthObject a;
  a.label = "chair";
  a.center = Vec3(-1.0, 0.0, 0.4);
  a.extent = Vec3(0.6, 0.6, 0.8);
  a.gaussians = 1500;
  SynthObject b = a;
  b.label = "table";
  b.center = Vec3(1.0, 0.3, 0.4);
  b.extent = Vec3(0.9, 0.6, 0.8);
  s.objects = {a, b};
  s.cameras.count = 8;
  s.cameras.radius = 5.0;
  s.cameras.height = 2.5;
  s.cameras.look_at = Vec3(0, 0, 0.4);
  s.cameras.width = 160;
  s.cameras.image_height = 120;
  s.cameras.focal = 150;
  return s;
}

}  // namespace gsc::test
