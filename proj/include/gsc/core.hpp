#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "gsc/raster.hpp"

namespace gsc {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

// Gaussians are identified everywhere by their position in the scene list.
using GaussianIndex = std::uint32_t;
using ObjectId = std::uint32_t;
using MaskId = std::uint32_t;

inline constexpr double kInfiniteDepth = std::numeric_limits<double>::infinity();

struct GaussianPrimitive {
  Vec3 center = Vec3::Zero();
  Vec3 scale = Vec3::Ones();  // post-activation extents, all > 0
  Quat rotation = Quat::Identity();
  double opacity = 1.0;  // post-activation, in [0, 1]
};

struct GaussianScene {
  std::vector<GaussianPrimitive> gaussians;

  std::size_t size() const noexcept { return gaussians.size(); }
  bool empty() const noexcept { return gaussians.empty(); }
  const GaussianPrimitive& operator[](GaussianIndex i) const { return gaussians[i]; }
};

// Pinhole camera with a world-to-camera pose. Camera frame: x right, y down,
// z forward.
struct CameraView {
  std::string view_id;
  int width = 0;
  int height = 0;
  double fx = 0, fy = 0, cx = 0, cy = 0;
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 to_camera(const Vec3& world) const { return rotation * world + translation; }
  Vec3 center_in_world() const { return -(rotation.conjugate() * translation); }
};

struct MaskInstance {
  MaskId mask_id = 0;
  std::string label;
  double det_conf = 0;
  double seg_conf = 0;
  double confidence = 0;  // det_conf * seg_conf
  BinaryMask region;

  static MaskInstance make(MaskId id, std::string label, double det_conf, double seg_conf,
                           BinaryMask region);
};

struct ViewMaskSet {
  std::string view_id;
  int width = 0;
  int height = 0;
  std::vector<MaskInstance> masks;
};

// Per-pixel median depth; uncovered pixels hold kInfiniteDepth.
using DepthImage = Raster<double>;
// Per-pixel depth tolerance; zero outside the mask it was computed for.
using ToleranceMap = Raster<double>;

struct MaskAssociation {
  std::string view_id;
  MaskId mask_id = 0;
  std::vector<GaussianIndex> gaussian_indices;  // sorted, unique
  double weight = 0;  // confidence / mean mask depth
  std::string label;
  double confidence = 0;
};

struct MaskRef {
  std::string view_id;
  MaskId mask_id = 0;
  double confidence = 0;

  bool operator==(const MaskRef&) const = default;
};

struct CodebookObject {
  ObjectId object_id = 0;
  // Sorted ascending; gaussian_weights[i] is the accumulated weight of
  // gaussian_indices[i].
  std::vector<GaussianIndex> gaussian_indices;
  std::vector<double> gaussian_weights;
  std::map<std::string, double> label_votes;
  std::vector<MaskRef> mask_refs;
  std::string final_label;
  double object_confidence = 0;

  std::size_t size() const noexcept { return gaussian_indices.size(); }
  std::optional<double> weight_of(GaussianIndex g) const;

  bool operator==(const CodebookObject&) const = default;
};

struct ObjectCodebook {
  std::vector<CodebookObject> objects;  // ascending object_id
  ObjectId next_id = 0;
  bool postprocessed = false;

  bool operator==(const ObjectCodebook&) const = default;
};

// A mask carrying a consistent object identity (pipeline output or ground
// truth). object_id is empty for masks the codebook could not place.
struct RelabeledMask {
  MaskId mask_id = 0;
  std::optional<ObjectId> object_id;
  std::string label;
  double confidence = 0;
  BinaryMask region;
};

struct RelabeledMaskSet {
  std::string view_id;
  int width = 0;
  int height = 0;
  std::vector<RelabeledMask> masks;
};

// Axis-aligned box in continuous pixel coordinates; pixel (x, y) spans
// [x - 0.5, x + 0.5] x [y - 0.5, y + 0.5].
struct BBox {
  std::string view_id;
  std::string label;
  double confidence = 1.0;
  std::optional<ObjectId> object_id;
  double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

  double area() const { return (x_max - x_min) * (y_max - y_min); }
};

double box_iou(const BBox& a, const BBox& b);

enum class PostprocessMode { Auto, On, Off };

// Which neighbors of a pixel enter its depth-tolerance window.
enum class NeighborhoodRule {
  ExcludeRowColumn,  // drop every neighbor sharing the center's row or column
  ExcludeCenter,     // drop only the center pixel
};

enum class Stage {
  DepthTest,
  SemanticConstraint,
  Filter1,
  SpatialMerge,
  Filter2,
  ObjectFilter,
  OutlierRemoval,
};

std::string_view stage_name(Stage stage);
std::optional<Stage> parse_stage(std::string_view name);
const std::vector<Stage>& all_stages();

std::string_view postprocess_mode_name(PostprocessMode mode);
std::optional<PostprocessMode> parse_postprocess_mode(std::string_view name);

struct PipelineConfig {
  double tau_overlap = 0.2;
  double tau_filter1 = 0.4;
  double tau_spatial = 0.3;
  double tau_filter2 = 0.3;
  double tau_object = 0.8;
  double depth_bound = 0.5;  // T, camera units
  int half_width = 3;        // 7x7 window
  NeighborhoodRule neighborhood = NeighborhoodRule::ExcludeRowColumn;
  int min_pts = 6;
  double membership_cutoff = 0.1;
  double near = 0.01;
  int min_visible = 5;
  PostprocessMode postprocess_mode = PostprocessMode::Auto;
  int auto_label_threshold = 10;  // post-processing turns on above this many labels

  bool enable_depth_test = true;
  bool enable_semantic_constraint = true;
  bool enable_filter1 = true;
  bool enable_spatial_merge = true;
  bool enable_filter2 = true;
  bool enable_object_filter = true;
  bool enable_outlier_removal = true;

  bool stage_enabled(Stage stage) const;
  void set_stage(Stage stage, bool enabled);

  // Throws DataError when a threshold leaves its domain.
  void validate() const;

  bool operator==(const PipelineConfig&) const = default;
};

PipelineConfig config_defaults();

// Diagnostic emitted instead of failing the run.
struct Warning {
  std::string stage;
  std::string kind;
  std::string view_id;
  std::optional<MaskId> mask_id;
  std::optional<ObjectId> object_id;
  std::string message;
};

// Labels compare as ASCII case-folded strings.
std::string fold_label(std::string_view label);

// Argmax over votes; equal totals resolve to the lexicographically smallest label.
std::string best_label(const std::map<std::string, double>& votes);

}  // namespace gsc
