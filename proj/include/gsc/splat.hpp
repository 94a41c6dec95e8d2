#pragma once

#include <cstdint>
#include <optional>

#include "gsc/core.hpp"

namespace gsc {

inline constexpr double kDefaultNear = 0.01;
// Screen-space dilation added to every projected covariance before rasterizing.
inline constexpr double kCovarianceDilation = 0.3;
inline constexpr double kMaxAlpha = 0.99;
inline constexpr double kMinAlpha = 1.0 / 255.0;
inline constexpr int kTileSize = 16;

struct ProjectedGaussian {
  GaussianIndex gaussian_index = 0;
  Vec2 pixel = Vec2::Zero();  // (x_p, y_p)
  double depth = 0;           // camera-space z
  Mat2 cov2d = Mat2::Zero();  // J W Sigma W^T J^T, undilated
  double radius = 0;          // 3 * sqrt(largest eigenvalue of cov2d)
};

Mat3 gaussian_covariance(const GaussianPrimitive& g);

// Empty when the center lies at or behind the near plane.
std::optional<ProjectedGaussian> project_gaussian(const GaussianPrimitive& g,
                                                  const CameraView& cam, double near);

// Opacity contribution of a projected splat at a pixel, after dilation and the
// 0.99 clamp. Values below 1/255 are returned as-is; callers skip them.
double splat_alpha(const Mat2& inverse_dilated_cov, double opacity, const Vec2& offset);

struct DepthRender {
  DepthImage depth;
  // Gaussian whose contribution first pushed accumulated opacity past 0.5;
  // -1 where the pixel stayed uncovered.
  Raster<std::int64_t> source;
};

// Median-depth rasterization: per pixel, splats are composited front to back
// (ties by gaussian index) and the depth recorded is that of the splat at
// which accumulated opacity first exceeds 0.5. Work is split into 16x16 tiles;
// the result does not depend on the worker count.
DepthRender render_median_depth(const GaussianScene& scene, const CameraView& cam,
                                double near = kDefaultNear, int workers = 1);

DepthImage render_depth(const GaussianScene& scene, const CameraView& cam,
                        double near = kDefaultNear, int workers = 1);

// Mean over region pixels with finite depth. Throws UncoveredMaskError when
// no such pixel exists.
double mask_mean_depth(const DepthImage& depth, const BinaryMask& region);

}  // namespace gsc
