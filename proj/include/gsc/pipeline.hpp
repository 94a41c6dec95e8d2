#pragma once

#include <map>
#include <string>
#include <vector>

#include "gsc/codebook.hpp"
#include "gsc/core.hpp"

namespace gsc {

struct PipelineResult {
  ObjectCodebook codebook;
  std::vector<Warning> warnings;
  std::vector<StageTiming> timings;
  std::size_t distinct_labels = 0;  // across all input masks
  bool postprocess_active = false;
};

// Number of distinct (case-folded) labels among the masks.
std::size_t count_distinct_labels(const std::map<std::string, ViewMaskSet>& mask_sets);

// Whether object filtering and outlier removal run for this input.
bool postprocess_active(const PipelineConfig& cfg, std::size_t distinct_labels);

// Codebook construction followed, when active, by object-confidence
// filtering and spatial-outlier removal. Every surviving object carries its
// object_confidence; codebook.postprocessed records whether post-processing ran.
PipelineResult run_pipeline(const GaussianScene& scene, const std::vector<CameraView>& views,
                            const std::map<std::string, ViewMaskSet>& mask_sets,
                            const PipelineConfig& cfg, int workers = 1);

}  // namespace gsc
