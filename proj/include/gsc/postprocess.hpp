#pragma once

#include <optional>
#include <vector>

#include "gsc/core.hpp"

namespace gsc {

struct ClusteringParams {
  int min_pts = 6;
  double eps_hat = 0;
  double membership_cutoff = 0.1;
};

// c_O = ln(|M|) * mean confidence of the contributing masks.
double object_confidence(const CodebookObject& object);

// Recomputes object_confidence on every object, then drops those strictly
// below tau_object.
ObjectCodebook filter_objects(ObjectCodebook codebook, double tau_object);

// Distance of every point to its k-th nearest other point, ascending. Empty
// when there are not more than k points.
std::optional<std::vector<double>> kdist_curve(const std::vector<Vec3>& points, int k);

enum class KneeShape { ConcaveIncreasing, ConvexIncreasing, ConcaveDecreasing, ConvexDecreasing };

// Kneedle knee detection over x = 0..n-1 (offline, first knee). Returns the
// index of the knee in the input.
std::optional<std::size_t> kneedle_index(const std::vector<double>& y, double sensitivity = 1.0,
                                         KneeShape shape = KneeShape::ConcaveIncreasing);

// Curve value at the knee, or empty when none is found or |curve| < 3.
std::optional<double> kneedle_elbow(const std::vector<double>& curve,
                                    KneeShape shape = KneeShape::ConcaveIncreasing,
                                    double sensitivity = 1.0);

struct Clustering {
  std::vector<int> labels;  // -1 marks noise
  std::vector<double> probabilities;
};

// HDBSCAN with cluster-selection epsilon eps_hat, min_samples and minimum
// cluster size both min_pts, excess-of-mass selection allowing a single
// cluster. Empty when there are not more than min_pts points.
std::optional<Clustering> hdbscan_eps(const std::vector<Vec3>& points,
                                      const ClusteringParams& params);

// Estimated cluster-selection epsilon for a point set: the k-dist elbow
// (convex-increasing Kneedle), or the 90th-percentile k-dist when no knee
// exists. Empty when there are too few points.
std::optional<double> estimate_eps(const std::vector<Vec3>& points, int min_pts);

// Removes Gaussians clustered as noise or with membership below the cutoff.
// Objects with at most min_pts Gaussians come back unchanged; so do objects
// the clustering would empty, with a warning appended.
CodebookObject remove_spatial_outliers(CodebookObject object, const GaussianScene& scene,
                                       const PipelineConfig& cfg,
                                       std::vector<Warning>* warnings = nullptr);

}  // namespace gsc
