#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gsc/core.hpp"

namespace gsc {

using RelabeledViews = std::map<std::string, RelabeledMaskSet>;

// --- mask association --------------------------------------------------------

struct AssociationReport {
  double miou = 0, precision = 0, recall = 0, f1 = 0;  // percentages
  std::size_t tp = 0, fp = 0, fn = 0;
  std::size_t unique_pred_masks = 0, unique_gt_masks = 0;
  std::vector<std::string> flags;  // metrics reported as 0 for lack of a denominator
};

// pred object id -> gt object id.
using ObjectAssignment = std::map<ObjectId, ObjectId>;

// Minimum-cost assignment of rows to columns for an r x c cost matrix
// (row-major). Returns the column of each row, or -1 for rows left out when
// r > c.
std::vector<int> solve_assignment(const std::vector<double>& cost, std::size_t rows,
                                  std::size_t cols);

// One-to-one pred/gt object assignment maximizing pixel intersection summed
// over views. Pairs with zero intersection are never assigned.
ObjectAssignment match_objects(const RelabeledViews& pred, const RelabeledViews& gt);

AssociationReport mask_metrics(const RelabeledViews& pred, const RelabeledViews& gt,
                               const ObjectAssignment& assignment, double iou_threshold = 0.5);

// Matches and scores in one call.
AssociationReport evaluate_masks(const RelabeledViews& pred, const RelabeledViews& gt,
                                 double iou_threshold = 0.5);

// CSV of F1 over consecutive view batches (views in ascending id order), each
// batch matched independently. Columns: batch_size,batch,first_view,last_view,f1.
std::string batch_f1_csv(const RelabeledViews& pred, const RelabeledViews& gt,
                         const std::vector<std::size_t>& batch_sizes = {10, 20, 50});

// --- boxes -------------------------------------------------------------------

// Box around the object's visible splats (center +/- 2 sigma), clipped to the
// image. Empty when fewer than cfg.min_visible splats are visible.
std::optional<BBox> bbox_from_object(const CodebookObject& object, const GaussianScene& scene,
                                     const CameraView& cam, const DepthImage& depth,
                                     const PipelineConfig& cfg);

// Boxes for every object in every view, keyed by view_id. Confidence is the
// object confidence for post-processed codebooks and 1.0 otherwise.
std::map<std::string, std::vector<BBox>> detect_boxes(const ObjectCodebook& codebook,
                                                      const GaussianScene& scene,
                                                      const std::vector<CameraView>& views,
                                                      const PipelineConfig& cfg, int workers = 1);

// Tight box of each (view, object) instance; unassigned masks are ignored.
std::map<std::string, std::vector<BBox>> boxes_from_masks(const RelabeledViews& masks);

// --- detection ---------------------------------------------------------------

struct ClassDetection {
  std::string label;
  std::size_t gt = 0, predictions = 0;
  double ap = 0;    // fraction
  double lamr = 1;  // fraction
};

struct DetectionReport {
  double map = 0;    // percent
  double mlamr = 0;  // percent
  std::vector<ClassDetection> classes;       // scored classes, by label
  std::vector<std::string> excluded_classes;  // predicted but absent from gt
};

// Image count for FPPI defaults to the number of distinct views across both sides.
DetectionReport detection_metrics(const std::vector<BBox>& pred, const std::vector<BBox>& gt,
                                  double iou_threshold = 0.5,
                                  std::optional<std::size_t> num_images = std::nullopt);

// --- reporting ---------------------------------------------------------------

nlohmann::json association_report_to_json(const AssociationReport& r);
nlohmann::json detection_report_to_json(const DetectionReport& r);
std::string association_table(const AssociationReport& r);
std::string detection_table(const DetectionReport& r);

}  // namespace gsc
