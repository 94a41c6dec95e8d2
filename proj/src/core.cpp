#include "gsc/core.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <utility>

#include "gsc/error.hpp"

namespace gsc {

MaskInstance MaskInstance::make(MaskId id, std::string label, double det_conf, double seg_conf,
                                BinaryMask region) {
  MaskInstance m;
  m.mask_id = id;
  m.label = fold_label(label);
  m.det_conf = det_conf;
  m.seg_conf = seg_conf;
  m.confidence = det_conf * seg_conf;
  m.region = std::move(region);
  return m;
}

std::optional<double> CodebookObject::weight_of(GaussianIndex g) const {
  auto it = std::lower_bound(gaussian_indices.begin(), gaussian_indices.end(), g);
  if (it == gaussian_indices.end() || *it != g) return std::nullopt;
  return gaussian_weights[static_cast<std::size_t>(it - gaussian_indices.begin())];
}

double box_iou(const BBox& a, const BBox& b) {
  const double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (ix <= 0 || iy <= 0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

namespace {

constexpr std::array<std::pair<Stage, std::string_view>, 7> kStageNames{{
    {Stage::DepthTest, "depth-test"},
    {Stage::SemanticConstraint, "semantic-constraint"},
    {Stage::Filter1, "filter1"},
    {Stage::SpatialMerge, "spatial-merge"},
    {Stage::Filter2, "filter2"},
    {Stage::ObjectFilter, "object-filter"},
    {Stage::OutlierRemoval, "outlier-removal"},
}};

}  // namespace

std::string_view stage_name(Stage stage) {
  for (const auto& [s, name] : kStageNames) {
    if (s == stage) return name;
  }
  return "unknown";
}

std::optional<Stage> parse_stage(std::string_view name) {
  for (const auto& [s, n] : kStageNames) {
    if (n == name) return s;
  }
  return std::nullopt;
}

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> stages = [] {
    std::vector<Stage> v;
    for (const auto& entry : kStageNames) v.push_back(entry.first);
    return v;
  }();
  return stages;
}

std::string_view postprocess_mode_name(PostprocessMode mode) {
  switch (mode) {
    case PostprocessMode::Auto: return "auto";
    case PostprocessMode::On: return "on";
    case PostprocessMode::Off: return "off";
  }
  return "auto";
}

std::optional<PostprocessMode> parse_postprocess_mode(std::string_view name) {
  if (name == "auto") return PostprocessMode::Auto;
  if (name == "on") return PostprocessMode::On;
  if (name == "off") return PostprocessMode::Off;
  return std::nullopt;
}

bool PipelineConfig::stage_enabled(Stage stage) const {
  switch (stage) {
    case Stage::DepthTest: return enable_depth_test;
    case Stage::SemanticConstraint: return enable_semantic_constraint;
    case Stage::Filter1: return enable_filter1;
    case Stage::SpatialMerge: return enable_spatial_merge;
    case Stage::Filter2: return enable_filter2;
    case Stage::ObjectFilter: return enable_object_filter;
    case Stage::OutlierRemoval: return enable_outlier_removal;
  }
  return false;
}

void PipelineConfig::set_stage(Stage stage, bool enabled) {
  switch (stage) {
    case Stage::DepthTest: enable_depth_test = enabled; break;
    case Stage::SemanticConstraint: enable_semantic_constraint = enabled; break;
    case Stage::Filter1: enable_filter1 = enabled; break;
    case Stage::SpatialMerge: enable_spatial_merge = enabled; break;
    case Stage::Filter2: enable_filter2 = enabled; break;
    case Stage::ObjectFilter: enable_object_filter = enabled; break;
    case Stage::OutlierRemoval: enable_outlier_removal = enabled; break;
  }
}

void PipelineConfig::validate() const {
  const std::pair<const char*, double> thresholds[] = {
      {"tau_overlap", tau_overlap}, {"tau_filter1", tau_filter1},
      {"tau_spatial", tau_spatial}, {"tau_filter2", tau_filter2},
      {"tau_object", tau_object},
  };
  for (const auto& [name, value] : thresholds) {
    if (!(value > 0.0 && value < 1.0)) {
      throw DataError(std::string(name) + " must lie in (0, 1), got " + std::to_string(value));
    }
  }
  if (!(depth_bound > 0.0)) throw DataError("depth_bound must be positive");
  if (half_width < 1) throw DataError("half_width must be at least 1");
  if (min_pts < 2) throw DataError("min_pts must be at least 2");
  if (!(membership_cutoff >= 0.0 && membership_cutoff <= 1.0)) {
    throw DataError("membership_cutoff must lie in [0, 1]");
  }
  if (!(near > 0.0)) throw DataError("near must be positive");
  if (min_visible < 1) throw DataError("min_visible must be at least 1");
}

PipelineConfig config_defaults() { return PipelineConfig{}; }

std::string fold_label(std::string_view label) {
  std::string out(label);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string best_label(const std::map<std::string, double>& votes) {
  // std::map iterates in lexicographic order, so a strict > keeps the
  // smallest label among equal totals.
  std::string best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (const auto& [label, score] : votes) {
    if (score > best_score) {
      best = label;
      best_score = score;
    }
  }
  return best;
}

}  // namespace gsc
