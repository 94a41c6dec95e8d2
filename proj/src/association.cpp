#include "gsc/association.hpp"

#include <algorithm>
#include <cmath>

#include "gsc/error.hpp"
#include "gsc/parallel.hpp"
#include "gsc/splat.hpp"

namespace gsc {

namespace {

struct Bounds {
  int x0, y0, x1, y1;  // inclusive; empty when x1 < x0
};

Bounds region_bounds(const BinaryMask& region) {
  Bounds b{region.width(), region.height(), -1, -1};
  for (int y = 0; y < region.height(); ++y) {
    for (int x = 0; x < region.width(); ++x) {
      if (!region(x, y)) continue;
      b.x0 = std::min(b.x0, x);
      b.x1 = std::max(b.x1, x);
      b.y0 = std::min(b.y0, y);
      b.y1 = std::max(b.y1, y);
    }
  }
  return b;
}

}  // namespace

ToleranceMap tolerance_map(const DepthImage& depth, const BinaryMask& region, double T,
                           int half_width, NeighborhoodRule rule) {
  if (depth.width() != region.width() || depth.height() != region.height()) {
    throw DataError("tolerance_map: depth and region sizes differ");
  }
  ToleranceMap tol(region.width(), region.height(), 0.0);
  const Bounds b = region_bounds(region);
  for (int y = b.y0; y <= b.y1; ++y) {
    for (int x = b.x0; x <= b.x1; ++x) {
      if (!region(x, y)) continue;
      const double d = depth(x, y);
      if (!std::isfinite(d)) continue;
      double best = 0.0;
      const int ny0 = std::max(b.y0, y - half_width), ny1 = std::min(b.y1, y + half_width);
      const int nx0 = std::max(b.x0, x - half_width), nx1 = std::min(b.x1, x + half_width);
      for (int ny = ny0; ny <= ny1; ++ny) {
        for (int nx = nx0; nx <= nx1; ++nx) {
          if (rule == NeighborhoodRule::ExcludeRowColumn) {
            if (nx == x || ny == y) continue;
          } else if (nx == x && ny == y) {
            continue;
          }
          if (!region(nx, ny)) continue;
          const double dn = depth(nx, ny);
          if (!std::isfinite(dn)) continue;
          const double diff = std::abs(d - dn);
          if (diff <= T && diff > best) best = diff;
        }
      }
      tol(x, y) = best;
    }
  }
  return tol;
}

ViewProjection::ViewProjection(const GaussianScene& scene, const CameraView& cam, double near,
                               int workers)
    : width_(cam.width), height_(cam.height) {
  const std::size_t n = scene.size();
  const std::size_t pixels = static_cast<std::size_t>(width_) * height_;
  constexpr std::uint32_t kNone = 0xffffffffu;
  std::vector<std::uint32_t> pixel_of(n, kNone);
  std::vector<double> depth_of(n, 0.0);

  constexpr std::size_t kChunk = 4096;
  parallel_for((n + kChunk - 1) / kChunk, workers, [&](std::size_t c) {
    const std::size_t end = std::min(n, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) {
      const Vec3 p = cam.to_camera(scene.gaussians[i].center);
      if (!(p.z() > near)) continue;
      const double px = cam.fx * p.x() / p.z() + cam.cx;
      const double py = cam.fy * p.y() / p.z() + cam.cy;
      if (!std::isfinite(px) || !std::isfinite(py)) continue;
      const double rx = std::floor(px + 0.5), ry = std::floor(py + 0.5);
      if (rx < 0 || ry < 0 || rx >= width_ || ry >= height_) continue;
      pixel_of[i] = static_cast<std::uint32_t>(static_cast<std::size_t>(ry) * width_ +
                                               static_cast<std::size_t>(rx));
      depth_of[i] = p.z();
    }
  });

  offsets_.assign(pixels + 1, 0);
  for (std::uint32_t p : pixel_of) {
    if (p != kNone) ++offsets_[p + 1];
  }
  for (std::size_t p = 0; p < pixels; ++p) offsets_[p + 1] += offsets_[p];
  entries_.resize(offsets_[pixels]);
  std::vector<std::uint32_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (pixel_of[i] == kNone) continue;
    entries_[fill[pixel_of[i]]++] = Entry{static_cast<GaussianIndex>(i), depth_of[i]};
  }
}

MaskAssociation gaussians_for_mask(const ViewProjection& projection, const std::string& view_id,
                                   const MaskInstance& mask, const DepthImage& depth,
                                   const ToleranceMap& tol, const PipelineConfig& cfg) {
  const BinaryMask& region = mask.region;
  if (region.width() != projection.width() || region.height() != projection.height()) {
    throw DataError("mask " + std::to_string(mask.mask_id) + " in view " + view_id +
                    " does not match the view size");
  }
  MaskAssociation out;
  out.view_id = view_id;
  out.mask_id = mask.mask_id;
  out.label = mask.label;
  out.confidence = mask.confidence;
  out.weight = mask.confidence / mask_mean_depth(depth, region);

  for (int y = 0; y < region.height(); ++y) {
    for (int x = 0; x < region.width(); ++x) {
      if (!region(x, y)) continue;
      const auto entries = projection.at(x, y);
      if (entries.empty()) continue;
      if (!cfg.enable_depth_test) {
        for (const auto& e : entries) out.gaussian_indices.push_back(e.index);
        continue;
      }
      const double d = depth(x, y);
      if (!std::isfinite(d)) continue;
      const double delta = tol(x, y);
      for (const auto& e : entries) {
        if (d - delta <= e.depth && e.depth <= d + delta) out.gaussian_indices.push_back(e.index);
      }
    }
  }
  std::sort(out.gaussian_indices.begin(), out.gaussian_indices.end());
  return out;
}

MaskAssociation gaussians_for_mask(const GaussianScene& scene, const CameraView& cam,
                                   const MaskInstance& mask, const DepthImage& depth,
                                   const ToleranceMap& tol, const PipelineConfig& cfg) {
  return gaussians_for_mask(ViewProjection(scene, cam, cfg.near), cam.view_id, mask, depth, tol,
                            cfg);
}

}  // namespace gsc
