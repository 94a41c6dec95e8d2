#include "gsc/splat.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "gsc/error.hpp"
#include "gsc/parallel.hpp"

namespace gsc {

Mat3 gaussian_covariance(const GaussianPrimitive& g) {
  const Mat3 r = g.rotation.normalized().toRotationMatrix();
  const Mat3 s = g.scale.asDiagonal();
  const Mat3 m = r * s;
  return m * m.transpose();
}

std::optional<ProjectedGaussian> project_gaussian(const GaussianPrimitive& g,
                                                  const CameraView& cam, double near) {
  const Vec3 p = cam.to_camera(g.center);
  const double z = p.z();
  if (!(z > near)) return std::nullopt;

  ProjectedGaussian out;
  out.depth = z;
  out.pixel = Vec2(cam.fx * p.x() / z + cam.cx, cam.fy * p.y() / z + cam.cy);

  Eigen::Matrix<double, 2, 3> jac;
  jac << cam.fx / z, 0.0, -cam.fx * p.x() / (z * z),
         0.0, cam.fy / z, -cam.fy * p.y() / (z * z);
  const Mat3 w = cam.rotation.toRotationMatrix();
  const Eigen::Matrix<double, 2, 3> t = jac * w;
  out.cov2d = t * gaussian_covariance(g) * t.transpose();
  // Symmetrize away rounding so the eigen-solver sees an exact symmetric matrix.
  const double off = 0.5 * (out.cov2d(0, 1) + out.cov2d(1, 0));
  out.cov2d(0, 1) = out.cov2d(1, 0) = off;

  const double tr = out.cov2d.trace();
  const double det = out.cov2d.determinant();
  const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
  const double lambda_max = std::max(0.0, 0.5 * tr + disc);
  out.radius = 3.0 * std::sqrt(lambda_max);
  return out;
}

double splat_alpha(const Mat2& inv, double opacity, const Vec2& d) {
  const double q = d.x() * (inv(0, 0) * d.x() + inv(0, 1) * d.y()) +
                   d.y() * (inv(1, 0) * d.x() + inv(1, 1) * d.y());
  return std::min(kMaxAlpha, opacity * std::exp(-0.5 * q));
}

namespace {

struct Splat {
  GaussianIndex index = 0;
  double depth = 0;
  Vec2 center;
  Mat2 inv;
  double opacity = 0;
  int x0 = 0, x1 = -1, y0 = 0, y1 = -1;  // inclusive pixel rectangle, clipped
};

std::optional<Splat> prepare_splat(const GaussianPrimitive& g, GaussianIndex index,
                                   const CameraView& cam, double near) {
  if (!(g.opacity >= kMinAlpha)) return std::nullopt;
  auto proj = project_gaussian(g, cam, near);
  if (!proj) return std::nullopt;
  const Mat2 cov = proj->cov2d + kCovarianceDilation * Mat2::Identity();

  Splat s;
  s.index = index;
  s.depth = proj->depth;
  s.center = proj->pixel;
  s.inv = cov.inverse();
  s.opacity = g.opacity;

  // Outside the ellipse q <= q_max the unclamped alpha drops below 1/255, so
  // the rectangle bounding it loses no contribution.
  const double q_max = 2.0 * std::log(g.opacity / kMinAlpha);
  const double hx = std::sqrt(q_max * cov(0, 0)) + 1.0;
  const double hy = std::sqrt(q_max * cov(1, 1)) + 1.0;
  if (!std::isfinite(hx) || !std::isfinite(hy) || !std::isfinite(s.center.x()) ||
      !std::isfinite(s.center.y())) {
    return std::nullopt;
  }
  const double fx0 = std::ceil(s.center.x() - hx), fx1 = std::floor(s.center.x() + hx);
  const double fy0 = std::ceil(s.center.y() - hy), fy1 = std::floor(s.center.y() + hy);
  if (fx1 < 0 || fy1 < 0 || fx0 > cam.width - 1 || fy0 > cam.height - 1) return std::nullopt;
  s.x0 = static_cast<int>(std::max(0.0, fx0));
  s.x1 = static_cast<int>(std::min<double>(cam.width - 1, fx1));
  s.y0 = static_cast<int>(std::max(0.0, fy0));
  s.y1 = static_cast<int>(std::min<double>(cam.height - 1, fy1));
  return s;
}

}  // namespace

DepthRender render_median_depth(const GaussianScene& scene, const CameraView& cam, double near,
                                int workers) {
  if (scene.empty()) throw DataError("cannot render an empty scene");
  if (!(near > 0)) throw DataError("near plane must be positive");

  const std::size_t n = scene.size();
  std::vector<std::optional<Splat>> prepared(n);
  constexpr std::size_t kChunk = 4096;
  parallel_for((n + kChunk - 1) / kChunk, workers, [&](std::size_t c) {
    const std::size_t end = std::min(n, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) {
      prepared[i] = prepare_splat(scene.gaussians[i], static_cast<GaussianIndex>(i), cam, near);
    }
  });

  std::vector<Splat> splats;
  splats.reserve(n);
  for (auto& s : prepared) {
    if (s) splats.push_back(*s);
  }
  prepared.clear();
  std::sort(splats.begin(), splats.end(), [](const Splat& a, const Splat& b) {
    return a.depth < b.depth || (a.depth == b.depth && a.index < b.index);
  });

  const int tiles_x = (cam.width + kTileSize - 1) / kTileSize;
  const int tiles_y = (cam.height + kTileSize - 1) / kTileSize;
  std::vector<std::vector<std::uint32_t>> tiles(static_cast<std::size_t>(tiles_x) * tiles_y);
  for (std::uint32_t k = 0; k < splats.size(); ++k) {
    const Splat& s = splats[k];
    for (int ty = s.y0 / kTileSize; ty <= s.y1 / kTileSize; ++ty) {
      for (int tx = s.x0 / kTileSize; tx <= s.x1 / kTileSize; ++tx) {
        tiles[static_cast<std::size_t>(ty) * tiles_x + tx].push_back(k);
      }
    }
  }

  DepthRender out{DepthImage(cam.width, cam.height, kInfiniteDepth),
                  Raster<std::int64_t>(cam.width, cam.height, -1)};
  parallel_for(tiles.size(), workers, [&](std::size_t t) {
    const int tx = static_cast<int>(t % tiles_x);
    const int ty = static_cast<int>(t / tiles_x);
    const auto& list = tiles[t];
    const int x_end = std::min(cam.width, (tx + 1) * kTileSize);
    const int y_end = std::min(cam.height, (ty + 1) * kTileSize);
    for (int y = ty * kTileSize; y < y_end; ++y) {
      for (int x = tx * kTileSize; x < x_end; ++x) {
        double transmittance = 1.0;
        for (std::uint32_t k : list) {
          const Splat& s = splats[k];
          if (x < s.x0 || x > s.x1 || y < s.y0 || y > s.y1) continue;
          const double alpha = splat_alpha(s.inv, s.opacity, Vec2(x - s.center.x(), y - s.center.y()));
          if (alpha < kMinAlpha) continue;
          transmittance *= 1.0 - alpha;
          if (1.0 - transmittance > 0.5) {
            out.depth(x, y) = s.depth;
            out.source(x, y) = s.index;
            break;
          }
        }
      }
    }
  });
  return out;
}

DepthImage render_depth(const GaussianScene& scene, const CameraView& cam, double near,
                        int workers) {
  return render_median_depth(scene, cam, near, workers).depth;
}

double mask_mean_depth(const DepthImage& depth, const BinaryMask& region) {
  double sum = 0;
  std::size_t count = 0;
  for (int y = 0; y < region.height(); ++y) {
    for (int x = 0; x < region.width(); ++x) {
      if (!region(x, y)) continue;
      const double d = depth(x, y);
      if (std::isfinite(d)) {
        sum += d;
        ++count;
      }
    }
  }
  if (count == 0) throw UncoveredMaskError("uncovered mask: no masked pixel has finite depth");
  return sum / static_cast<double>(count);
}

}  // namespace gsc
