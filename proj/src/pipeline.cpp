#include "gsc/pipeline.hpp"

#include <chrono>
#include <set>

#include "gsc/parallel.hpp"
#include "gsc/postprocess.hpp"

namespace gsc {

std::size_t count_distinct_labels(const std::map<std::string, ViewMaskSet>& mask_sets) {
  std::set<std::string> labels;
  for (const auto& [view, set] : mask_sets) {
    for (const auto& m : set.masks) labels.insert(fold_label(m.label));
  }
  return labels.size();
}

bool postprocess_active(const PipelineConfig& cfg, std::size_t distinct_labels) {
  switch (cfg.postprocess_mode) {
    case PostprocessMode::On: return true;
    case PostprocessMode::Off: return false;
    case PostprocessMode::Auto:
      return distinct_labels > static_cast<std::size_t>(cfg.auto_label_threshold);
  }
  return false;
}

PipelineResult run_pipeline(const GaussianScene& scene, const std::vector<CameraView>& views,
                            const std::map<std::string, ViewMaskSet>& mask_sets,
                            const PipelineConfig& cfg, int workers) {
  using Clock = std::chrono::steady_clock;
  BuildResult built = build_codebook(scene, views, mask_sets, cfg, workers);

  PipelineResult out;
  out.codebook = std::move(built.codebook);
  out.warnings = std::move(built.warnings);
  out.timings = std::move(built.timings);
  out.distinct_labels = count_distinct_labels(mask_sets);
  out.postprocess_active = postprocess_active(cfg, out.distinct_labels);

  for (auto& obj : out.codebook.objects) obj.object_confidence = object_confidence(obj);
  if (!out.postprocess_active) return out;
  out.codebook.postprocessed = true;

  if (cfg.enable_object_filter) {
    const auto t0 = Clock::now();
    out.codebook = filter_objects(std::move(out.codebook), cfg.tau_object);
    out.timings.push_back(
        {"object-filter", std::chrono::duration<double>(Clock::now() - t0).count()});
  }
  if (cfg.enable_outlier_removal) {
    const auto t0 = Clock::now();
    auto& objs = out.codebook.objects;
    std::vector<std::vector<Warning>> per_object(objs.size());
    parallel_for(objs.size(), workers, [&](std::size_t i) {
      objs[i] = remove_spatial_outliers(std::move(objs[i]), scene, cfg, &per_object[i]);
    });
    for (auto& w : per_object) out.warnings.insert(out.warnings.end(), w.begin(), w.end());
    out.timings.push_back(
        {"outlier-removal", std::chrono::duration<double>(Clock::now() - t0).count()});
  }
  return out;
}

}  // namespace gsc
