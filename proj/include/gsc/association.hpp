#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gsc/core.hpp"

namespace gsc {

// Adaptive depth tolerance over a mask. For each masked pixel with finite
// depth, the largest |D(p) - D(n)| not exceeding T among window neighbors n
// that are masked and finite; 0 when no neighbor qualifies. Pixels outside the
// region, and masked pixels with sentinel depth, hold 0.
ToleranceMap tolerance_map(const DepthImage& depth, const BinaryMask& region, double T,
                           int half_width = 3,
                           NeighborhoodRule rule = NeighborhoodRule::ExcludeRowColumn);

// Pixel a projected center lands on: round half up on each axis.
inline int landing_pixel(double coord) { return static_cast<int>(std::floor(coord + 0.5)); }

// Every Gaussian of a scene projected into one view, bucketed by landing pixel.
// Gaussians behind the near plane or landing outside the image are absent.
class ViewProjection {
 public:
  ViewProjection(const GaussianScene& scene, const CameraView& cam, double near, int workers = 1);

  int width() const { return width_; }
  int height() const { return height_; }

  struct Entry {
    GaussianIndex index;
    double depth;
  };
  // Entries landing on (x, y), ascending by gaussian index.
  std::span<const Entry> at(int x, int y) const {
    const std::size_t p = static_cast<std::size_t>(y) * width_ + x;
    return {entries_.data() + offsets_[p], entries_.data() + offsets_[p + 1]};
  }

 private:
  int width_;
  int height_;
  std::vector<std::uint32_t> offsets_;
  std::vector<Entry> entries_;
};

// Associates a mask with the Gaussians it sees. The result's
// gaussian_indices are sorted ascending. Throws UncoveredMaskError when the
// mask has no pixel with finite depth.
MaskAssociation gaussians_for_mask(const ViewProjection& projection, const std::string& view_id,
                                   const MaskInstance& mask, const DepthImage& depth,
                                   const ToleranceMap& tol, const PipelineConfig& cfg);

// Convenience overload that projects the scene on the fly.
MaskAssociation gaussians_for_mask(const GaussianScene& scene, const CameraView& cam,
                                   const MaskInstance& mask, const DepthImage& depth,
                                   const ToleranceMap& tol, const PipelineConfig& cfg);

}  // namespace gsc
