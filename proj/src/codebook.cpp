#include "gsc/codebook.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <optional>

#include "gsc/association.hpp"
#include "gsc/error.hpp"
#include "gsc/index_set.hpp"
#include "gsc/parallel.hpp"
#include "gsc/splat.hpp"

namespace gsc {

double gaussian_overlap(const std::vector<GaussianIndex>& a, const std::vector<GaussianIndex>& b) {
  const std::size_t denom = std::min(a.size(), b.size());
  if (denom == 0) return 0.0;
  return static_cast<double>(intersection_size(a, b)) / static_cast<double>(denom);
}

ObjectId semantic_merge_step(ObjectCodebook& codebook, const MaskAssociation& assoc,
                             double tau_overlap, bool enable_semantic_constraint) {
  CodebookObject* best = nullptr;
  double best_overlap = -1.0;
  for (auto& obj : codebook.objects) {
    if (enable_semantic_constraint && best_label(obj.label_votes) != assoc.label) continue;
    const double ov = gaussian_overlap(assoc.gaussian_indices, obj.gaussian_indices);
    // Objects are kept in ascending id order, so strict > keeps the lowest id on ties.
    if (ov > best_overlap) {
      best_overlap = ov;
      best = &obj;
    }
  }

  const std::vector<double> weights(assoc.gaussian_indices.size(), assoc.weight);
  const MaskRef ref{assoc.view_id, assoc.mask_id, assoc.confidence};
  if (best != nullptr && best_overlap > tau_overlap) {
    merge_weighted(best->gaussian_indices, best->gaussian_weights, assoc.gaussian_indices, weights);
    best->label_votes[assoc.label] += assoc.confidence;
    best->mask_refs.push_back(ref);
    return best->object_id;
  }

  CodebookObject obj;
  obj.object_id = codebook.next_id++;
  obj.gaussian_indices = assoc.gaussian_indices;
  obj.gaussian_weights = weights;
  obj.label_votes[assoc.label] = assoc.confidence;
  obj.mask_refs.push_back(ref);
  const auto pos = std::lower_bound(
      codebook.objects.begin(), codebook.objects.end(), obj.object_id,
      [](const CodebookObject& o, ObjectId id) { return o.object_id < id; });
  codebook.objects.insert(pos, std::move(obj));
  return codebook.next_id - 1;
}

CodebookObject filter_low_weight(CodebookObject object, double tau_filter) {
  if (object.gaussian_weights.empty()) return object;
  const double w_max =
      *std::max_element(object.gaussian_weights.begin(), object.gaussian_weights.end());
  const double cutoff = w_max * tau_filter;
  std::size_t out = 0;
  for (std::size_t i = 0; i < object.gaussian_indices.size(); ++i) {
    if (object.gaussian_weights[i] < cutoff) continue;
    object.gaussian_indices[out] = object.gaussian_indices[i];
    object.gaussian_weights[out] = object.gaussian_weights[i];
    ++out;
  }
  object.gaussian_indices.resize(out);
  object.gaussian_weights.resize(out);
  return object;
}

namespace {

struct DisjointSets {
  std::vector<std::size_t> parent;

  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }

  // The smaller root wins, so each component's root is its smallest member.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent[b] = a;
  }
};

}  // namespace

ObjectCodebook spatial_merge(const ObjectCodebook& codebook, double tau_spatial) {
  const auto& objs = codebook.objects;
  const std::size_t n = objs.size();
  DisjointSets sets(n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const auto& ga = objs[a].gaussian_indices;
      const auto& gb = objs[b].gaussian_indices;
      if (ga.empty() || gb.empty()) continue;
      const double inter = static_cast<double>(intersection_size(ga, gb));
      if (inter / static_cast<double>(ga.size()) > tau_spatial &&
          inter / static_cast<double>(gb.size()) > tau_spatial) {
        sets.unite(a, b);
      }
    }
  }

  ObjectCodebook out;
  out.next_id = codebook.next_id;
  out.postprocessed = codebook.postprocessed;
  std::vector<std::optional<std::size_t>> slot(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = sets.find(i);
    if (root == i) {
      slot[i] = out.objects.size();
      out.objects.push_back(objs[i]);
      continue;
    }
    CodebookObject& dst = out.objects[*slot[root]];
    const CodebookObject& src = objs[i];
    merge_weighted(dst.gaussian_indices, dst.gaussian_weights, src.gaussian_indices,
                   src.gaussian_weights);
    for (const auto& [label, votes] : src.label_votes) dst.label_votes[label] += votes;
    dst.mask_refs.insert(dst.mask_refs.end(), src.mask_refs.begin(), src.mask_refs.end());
  }
  return out;
}

std::string vote_label(CodebookObject& object) {
  object.final_label = best_label(object.label_votes);
  return object.final_label;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct ViewWork {
  const CameraView* cam = nullptr;
  const ViewMaskSet* masks = nullptr;
  std::vector<std::optional<MaskAssociation>> associations;  // ordered like sorted masks
  std::vector<Warning> warnings;
};

void associate_view(const GaussianScene& scene, const PipelineConfig& cfg, ViewWork& work) {
  const CameraView& cam = *work.cam;
  const DepthImage depth = render_depth(scene, cam, cfg.near, 1);
  const ViewProjection projection(scene, cam, cfg.near, 1);

  std::vector<const MaskInstance*> order;
  for (const auto& m : work.masks->masks) order.push_back(&m);
  std::sort(order.begin(), order.end(),
            [](const MaskInstance* a, const MaskInstance* b) { return a->mask_id < b->mask_id; });

  for (const MaskInstance* m : order) {
    const ToleranceMap tol =
        tolerance_map(depth, m->region, cfg.depth_bound, cfg.half_width, cfg.neighborhood);
    try {
      MaskAssociation assoc = gaussians_for_mask(projection, cam.view_id, *m, depth, tol, cfg);
      if (assoc.gaussian_indices.empty()) {
        work.warnings.push_back({"association", "empty-association", cam.view_id, m->mask_id,
                                 std::nullopt, "no Gaussian passed the inlier test"});
        work.associations.emplace_back();
      } else {
        work.associations.emplace_back(std::move(assoc));
      }
    } catch (const UncoveredMaskError& e) {
      work.warnings.push_back({"association", "uncovered-mask", cam.view_id, m->mask_id,
                               std::nullopt, e.what()});
      work.associations.emplace_back();
    }
  }
}

void filter_all(ObjectCodebook& codebook, double tau, const std::string& stage,
                std::vector<Warning>& warnings, int workers) {
  parallel_for(codebook.objects.size(), workers, [&](std::size_t i) {
    codebook.objects[i] = filter_low_weight(std::move(codebook.objects[i]), tau);
  });
  std::vector<CodebookObject> kept;
  for (auto& obj : codebook.objects) {
    if (obj.gaussian_indices.empty()) {
      warnings.push_back({stage, "empty-object", "", std::nullopt, obj.object_id,
                          "object lost every Gaussian and was dropped"});
    } else {
      kept.push_back(std::move(obj));
    }
  }
  codebook.objects = std::move(kept);
}

}  // namespace

BuildResult build_codebook(const GaussianScene& scene, const std::vector<CameraView>& views,
                           const std::map<std::string, ViewMaskSet>& mask_sets,
                           const PipelineConfig& cfg, int workers) {
  cfg.validate();
  if (scene.empty()) throw DataError("scene has no Gaussians");
  std::map<std::string, const CameraView*> cams;
  for (const auto& v : views) cams[v.view_id] = &v;

  std::vector<ViewWork> work;
  for (const auto& [view_id, set] : mask_sets) {
    auto it = cams.find(view_id);
    if (it == cams.end()) throw DataError("masks reference unknown view_id '" + view_id + "'");
    if (set.masks.empty()) continue;
    const CameraView& cam = *it->second;
    if (set.width != cam.width || set.height != cam.height) {
      throw DataError("mask set for view '" + view_id + "' does not match the camera size");
    }
    work.push_back(ViewWork{&cam, &set, {}, {}});
  }

  BuildResult result;
  auto t0 = Clock::now();
  parallel_for(work.size(), workers, [&](std::size_t i) { associate_view(scene, cfg, work[i]); });
  result.timings.push_back({"association", seconds_since(t0)});

  t0 = Clock::now();
  for (auto& w : work) {
    result.warnings.insert(result.warnings.end(), w.warnings.begin(), w.warnings.end());
    for (auto& assoc : w.associations) {
      if (!assoc) continue;
      semantic_merge_step(result.codebook, *assoc, cfg.tau_overlap, cfg.enable_semantic_constraint);
      ++result.associations;
    }
    w.associations.clear();
  }
  result.timings.push_back({"semantic-merge", seconds_since(t0)});

  if (cfg.enable_filter1) {
    t0 = Clock::now();
    filter_all(result.codebook, cfg.tau_filter1, "filter1", result.warnings, workers);
    result.timings.push_back({"filter1", seconds_since(t0)});
  }
  if (cfg.enable_spatial_merge) {
    t0 = Clock::now();
    result.codebook = spatial_merge(result.codebook, cfg.tau_spatial);
    result.timings.push_back({"spatial-merge", seconds_since(t0)});
  }
  if (cfg.enable_filter2) {
    t0 = Clock::now();
    filter_all(result.codebook, cfg.tau_filter2, "filter2", result.warnings, workers);
    result.timings.push_back({"filter2", seconds_since(t0)});
  }
  t0 = Clock::now();
  for (auto& obj : result.codebook.objects) vote_label(obj);
  result.timings.push_back({"label-voting", seconds_since(t0)});
  return result;
}

std::map<std::string, RelabeledMaskSet> relabel_masks(
    const ObjectCodebook& codebook, const std::map<std::string, ViewMaskSet>& mask_sets) {
  std::map<std::pair<std::string, MaskId>, const CodebookObject*> owner;
  for (const auto& obj : codebook.objects) {
    for (const auto& ref : obj.mask_refs) owner[{ref.view_id, ref.mask_id}] = &obj;
  }
  std::map<std::string, RelabeledMaskSet> out;
  for (const auto& [view_id, set] : mask_sets) {
    RelabeledMaskSet& dst = out[view_id];
    dst.view_id = view_id;
    dst.width = set.width;
    dst.height = set.height;
    for (const auto& m : set.masks) {
      RelabeledMask r;
      r.mask_id = m.mask_id;
      r.label = m.label;
      r.confidence = m.confidence;
      r.region = m.region;
      auto it = owner.find({view_id, m.mask_id});
      if (it != owner.end()) {
        r.object_id = it->second->object_id;
        r.label = it->second->final_label;
      }
      dst.masks.push_back(std::move(r));
    }
    std::sort(dst.masks.begin(), dst.masks.end(),
              [](const RelabeledMask& a, const RelabeledMask& b) { return a.mask_id < b.mask_id; });
  }
  return out;
}

}  // namespace gsc
