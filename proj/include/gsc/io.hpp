#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "gsc/core.hpp"
#include "gsc/rle.hpp"

namespace gsc {

namespace fs = std::filesystem;

// --- 3DGS scenes -----------------------------------------------------------

// Binary little-endian PLY in the reference 3DGS layout. Stored scales are
// log-space, stored opacity is a logit; both are activated on read.
GaussianScene read_gaussian_ply(const fs::path& path);
void write_gaussian_ply(const GaussianScene& scene, const fs::path& path);

// --- cameras ---------------------------------------------------------------

// Returned sorted by view_id with normalized rotations.
std::vector<CameraView> cameras_from_json(const nlohmann::json& j);
nlohmann::json cameras_to_json(const std::vector<CameraView>& views);
std::vector<CameraView> read_cameras(const fs::path& path);
void write_cameras(const std::vector<CameraView>& views, const fs::path& path);

// --- masks -----------------------------------------------------------------

nlohmann::json rle_to_json(const RleMask& rle);
RleMask rle_from_json(const nlohmann::json& j);

ViewMaskSet masks_from_json(const nlohmann::json& j);
nlohmann::json masks_to_json(const ViewMaskSet& set);
ViewMaskSet read_masks(const fs::path& path);
void write_masks(const ViewMaskSet& set, const fs::path& path);
// Every *.json file in dir, keyed by view_id.
std::map<std::string, ViewMaskSet> read_mask_dir(const fs::path& dir);

RelabeledMaskSet relabeled_masks_from_json(const nlohmann::json& j);
nlohmann::json relabeled_masks_to_json(const RelabeledMaskSet& set);
RelabeledMaskSet read_relabeled_masks(const fs::path& path);
void write_relabeled_masks(const RelabeledMaskSet& set, const fs::path& path);
std::map<std::string, RelabeledMaskSet> read_relabeled_dir(const fs::path& dir);

// --- codebook --------------------------------------------------------------

nlohmann::json codebook_to_json(const ObjectCodebook& codebook);
ObjectCodebook codebook_from_json(const nlohmann::json& j);
// Canonical serialized form; byte-identical for equal codebooks.
std::string codebook_to_string(const ObjectCodebook& codebook);
void write_codebook(const ObjectCodebook& codebook, const fs::path& path);
ObjectCodebook read_codebook(const fs::path& path);

// --- boxes -----------------------------------------------------------------

nlohmann::json boxes_to_json(const std::vector<BBox>& boxes);
std::vector<BBox> boxes_from_json(const nlohmann::json& j);
void write_boxes(const std::vector<BBox>& boxes, const fs::path& path);
std::vector<BBox> read_boxes(const fs::path& path);

// --- depth dumps -----------------------------------------------------------

// 8-byte header (height, width as little-endian u32) followed by row-major
// little-endian float32 depths.
void write_depth_dump(const DepthImage& depth, const fs::path& path);
DepthImage read_depth_dump(const fs::path& path);

// --- config / diagnostics --------------------------------------------------

// Keys present in j override the corresponding fields of base.
PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig base = {});
nlohmann::json config_to_json(const PipelineConfig& cfg);
PipelineConfig read_config(const fs::path& path, PipelineConfig base = {});

nlohmann::json warning_to_json(const Warning& w);

nlohmann::json read_json_file(const fs::path& path);
void write_json_file(const nlohmann::json& j, const fs::path& path, int indent = -1);

}  // namespace gsc
