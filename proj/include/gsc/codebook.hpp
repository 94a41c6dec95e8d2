#pragma once

#include <map>
#include <string>
#include <vector>

#include "gsc/core.hpp"

namespace gsc {

struct StageTiming {
  std::string stage;
  double seconds = 0;
};

// |a ∩ b| / min(|a|, |b|); 0 when either set is empty.
double gaussian_overlap(const std::vector<GaussianIndex>& a, const std::vector<GaussianIndex>& b);

// Folds one association into the codebook: merges into the best-overlapping
// candidate above tau_overlap, otherwise creates an object. Candidates are
// objects whose current best vote label equals the mask label, or every
// object when the semantic constraint is off. Returns the receiving object id.
ObjectId semantic_merge_step(ObjectCodebook& codebook, const MaskAssociation& assoc,
                             double tau_overlap, bool enable_semantic_constraint);

// Drops Gaussians whose weight is strictly below max weight * tau_filter.
CodebookObject filter_low_weight(CodebookObject object, double tau_filter);

// Collapses connected components of the mutual-overlap graph in one pass.
ObjectCodebook spatial_merge(const ObjectCodebook& codebook, double tau_spatial);

// Sets and returns final_label (argmax of votes, lexicographic on ties).
std::string vote_label(CodebookObject& object);

struct BuildResult {
  ObjectCodebook codebook;
  std::vector<Warning> warnings;
  std::vector<StageTiming> timings;
  std::size_t associations = 0;  // masks that reached the merge step
};

// Stages 2A-2F. Views are processed in ascending view_id order and masks in
// ascending mask_id order. Throws DataError for a mask set whose view has no
// camera.
BuildResult build_codebook(const GaussianScene& scene, const std::vector<CameraView>& views,
                           const std::map<std::string, ViewMaskSet>& mask_sets,
                           const PipelineConfig& cfg, int workers = 1);

// Gives each mask the id and final label of the object that absorbed it.
// Masks no surviving object references are left unassigned.
std::map<std::string, RelabeledMaskSet> relabel_masks(
    const ObjectCodebook& codebook, const std::map<std::string, ViewMaskSet>& mask_sets);

}  // namespace gsc
