#include "gsc/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gsc/codebook.hpp"
#include "gsc/error.hpp"
#include "gsc/evalkit.hpp"
#include "gsc/io.hpp"
#include "gsc/overlay.hpp"
#include "gsc/pipeline.hpp"
#include "gsc/splat.hpp"
#include "gsc/synthgen.hpp"

namespace gsc {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

class Logger {
 public:
  explicit Logger(std::ostream& os) : os_(os) {}
  void event(json j) { os_ << j.dump() << '\n'; }
  void timing(const std::string& command, const std::string& stage, double seconds) {
    event({{"event", "timing"}, {"command", command}, {"stage", stage}, {"seconds", seconds}});
  }
  void warning(const Warning& w) {
    json j = warning_to_json(w);
    j["event"] = "warning";
    event(std::move(j));
  }

 private:
  std::ostream& os_;
};

std::string valid_stage_list() {
  std::string out;
  for (Stage s : all_stages()) {
    if (!out.empty()) out += ", ";
    out += stage_name(s);
  }
  return out;
}

struct ConfigFlags {
  std::string config_path;
  std::vector<std::string> disable;
  std::string postprocess;
  int workers = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON file overriding pipeline defaults");
    cmd->add_option("--disable", disable, "Stage to disable (repeatable)");
    cmd->add_option("--postprocess", postprocess, "Post-processing mode: auto, on or off");
    cmd->add_option("--workers", workers, "Worker threads; 0 uses all cores");
  }

  // Defaults, then the config file, then flags.
  PipelineConfig resolve() const {
    PipelineConfig cfg = config_defaults();
    if (!config_path.empty()) cfg = read_config(config_path, cfg);
    for (const auto& name : disable) {
      auto stage = parse_stage(name);
      if (!stage) {
        throw UsageError("unknown stage '" + name + "'; valid stages: " + valid_stage_list());
      }
      cfg.set_stage(*stage, false);
    }
    if (!postprocess.empty()) {
      auto mode = parse_postprocess_mode(postprocess);
      if (!mode) throw UsageError("--postprocess must be auto, on or off");
      cfg.postprocess_mode = *mode;
    }
    cfg.validate();
    return cfg;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Box files and relabeled-mask files are both accepted; masks become tight boxes.
std::vector<BBox> read_box_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw FormatError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<BBox> out;
  for (const auto& f : files) {
    const json j = read_json_file(f);
    if (j.contains("boxes")) {
      auto boxes = boxes_from_json(j);
      out.insert(out.end(), boxes.begin(), boxes.end());
    } else if (j.contains("masks")) {
      RelabeledViews one;
      auto set = relabeled_masks_from_json(j);
      one[set.view_id] = std::move(set);
      for (auto& [view, boxes] : boxes_from_masks(one)) {
        out.insert(out.end(), boxes.begin(), boxes.end());
      }
    } else {
      throw FormatError(f.string() + ": expected a box or relabeled-mask file");
    }
  }
  return out;
}

std::size_t count_relabeled_views(const fs::path& dir) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") ++n;
  }
  return n;
}

struct Inputs {
  std::string scene, cameras, masks;
};

int cmd_synth_gen(const std::string& spec_path, const std::string& preset, std::uint64_t seed,
                  const std::string& out_dir, int workers, Logger& log, std::ostream& out) {
  SynthSpec spec;
  if (!spec_path.empty()) {
    spec = synth_spec_from_json(read_json_file(spec_path));
  } else if (preset == "benchmark") {
    spec = benchmark_spec(seed, false);
  } else if (preset == "benchmark-noisy") {
    spec = benchmark_spec(seed, true);
  } else {
    throw UsageError("synth-gen needs --spec or --preset benchmark|benchmark-noisy");
  }
  auto t0 = std::chrono::steady_clock::now();
  const SynthScene scene = generate_scene(spec);
  const SynthViews views = generate_views_and_masks(scene, spec, workers);
  write_dataset(spec, scene, views, out_dir);
  log.timing("synth-gen", "generate", seconds_since(t0));
  std::size_t masks = 0;
  for (const auto& [v, s] : views.masks) masks += s.masks.size();
  out << json{{"gaussians", scene.scene.size()},
              {"views", views.cameras.size()},
              {"masks", masks},
              {"out", out_dir}}
             .dump()
      << '\n';
  return kExitOk;
}

int cmd_render_depth(const std::string& scene_path, const std::string& cameras_path,
                     const std::string& out_dir, const std::string& only_view, double near,
                     int workers, Logger& log) {
  const GaussianScene scene = read_gaussian_ply(scene_path);
  const auto cams = read_cameras(cameras_path);
  fs::create_directories(out_dir);
  bool found = false;
  for (const auto& cam : cams) {
    if (!only_view.empty() && cam.view_id != only_view) continue;
    found = true;
    auto t0 = std::chrono::steady_clock::now();
    const DepthImage depth = render_depth(scene, cam, near, workers);
    write_depth_dump(depth, fs::path(out_dir) / (cam.view_id + ".depth"));
    log.timing("render-depth", cam.view_id, seconds_since(t0));
  }
  if (!found) throw DataError("no camera with view_id '" + only_view + "'");
  return kExitOk;
}

PipelineResult run_build(const Inputs& in, const PipelineConfig& cfg, int workers,
                         const std::string& command, Logger& log, GaussianScene* scene_out,
                         std::vector<CameraView>* cams_out,
                         std::map<std::string, ViewMaskSet>* masks_out) {
  auto t0 = std::chrono::steady_clock::now();
  GaussianScene scene = read_gaussian_ply(in.scene);
  auto cams = read_cameras(in.cameras);
  auto masks = read_mask_dir(in.masks);
  log.timing(command, "load", seconds_since(t0));
  PipelineResult result = run_pipeline(scene, cams, masks, cfg, workers);
  for (const auto& t : result.timings) log.timing(command, t.stage, t.seconds);
  for (const auto& w : result.warnings) log.warning(w);
  if (scene_out) *scene_out = std::move(scene);
  if (cams_out) *cams_out = std::move(cams);
  if (masks_out) *masks_out = std::move(masks);
  return result;
}

int cmd_build(const Inputs& in, const std::string& out_path, const std::string& warnings_path,
              const ConfigFlags& flags, Logger& log, std::ostream& out) {
  const PipelineConfig cfg = flags.resolve();
  const PipelineResult result = run_build(in, cfg, flags.workers, "build", log, nullptr, nullptr, nullptr);
  write_codebook(result.codebook, out_path);
  const std::string wpath = warnings_path.empty() ? out_path + ".warnings.jsonl" : warnings_path;
  std::ofstream wf(wpath);
  if (!wf) throw FormatError("cannot write " + wpath);
  for (const auto& w : result.warnings) wf << warning_to_json(w).dump() << '\n';
  out << json{{"objects", result.codebook.objects.size()},
              {"warnings", result.warnings.size()},
              {"distinct_labels", result.distinct_labels},
              {"postprocessed", result.codebook.postprocessed},
              {"out", out_path}}
             .dump()
      << '\n';
  return kExitOk;
}

int cmd_relabel(const std::string& codebook_path, const std::string& masks_dir,
                const std::string& out_dir, bool overlays, std::ostream& out) {
  const ObjectCodebook cb = read_codebook(codebook_path);
  const auto masks = read_mask_dir(masks_dir);
  const auto relabeled = relabel_masks(cb, masks);
  fs::create_directories(out_dir);
  if (overlays) fs::create_directories(fs::path(out_dir) / "overlays");
  std::size_t assigned = 0, total = 0;
  for (const auto& [view, set] : relabeled) {
    write_relabeled_masks(set, fs::path(out_dir) / (view + ".json"));
    if (overlays) write_mask_overlay(set, fs::path(out_dir) / "overlays" / (view + ".png"));
    for (const auto& m : set.masks) {
      ++total;
      if (m.object_id) ++assigned;
    }
  }
  out << json{{"views", relabeled.size()}, {"masks", total}, {"assigned", assigned}}.dump()
      << '\n';
  return kExitOk;
}

int cmd_detect(const std::string& codebook_path, const std::string& scene_path,
               const std::string& cameras_path, const std::string& out_dir, bool overlays,
               const ConfigFlags& flags, Logger& log, std::ostream& out) {
  const PipelineConfig cfg = flags.resolve();
  const ObjectCodebook cb = read_codebook(codebook_path);
  const GaussianScene scene = read_gaussian_ply(scene_path);
  const auto cams = read_cameras(cameras_path);
  for (const auto& obj : cb.objects) {
    for (GaussianIndex g : obj.gaussian_indices) {
      if (g >= scene.size()) {
        throw DataError("codebook object " + std::to_string(obj.object_id) +
                        " references Gaussian " + std::to_string(g) + " outside the scene");
      }
    }
  }
  auto t0 = std::chrono::steady_clock::now();
  const auto boxes = detect_boxes(cb, scene, cams, cfg, flags.workers);
  log.timing("detect", "boxes", seconds_since(t0));
  fs::create_directories(out_dir);
  if (overlays) fs::create_directories(fs::path(out_dir) / "overlays");
  std::size_t total = 0;
  for (const auto& cam : cams) {
    const auto& b = boxes.at(cam.view_id);
    total += b.size();
    write_boxes(b, fs::path(out_dir) / (cam.view_id + ".json"));
    if (overlays) {
      write_box_overlay(cam.view_id, cam.width, cam.height, b,
                        fs::path(out_dir) / "overlays" / (cam.view_id + ".png"));
    }
  }
  out << json{{"views", cams.size()}, {"boxes", total}}.dump() << '\n';
  return kExitOk;
}

int cmd_eval_masks(const std::string& pred_dir, const std::string& gt_dir,
                   const std::string& json_out, const std::string& batch_csv, std::ostream& out) {
  const auto pred = read_relabeled_dir(pred_dir);
  const auto gt = read_relabeled_dir(gt_dir);
  const AssociationReport r = evaluate_masks(pred, gt);
  const json j = association_report_to_json(r);
  out << j.dump() << '\n' << association_table(r);
  if (!json_out.empty()) write_json_file(j, json_out, 2);
  if (!batch_csv.empty()) {
    std::ofstream f(batch_csv);
    if (!f) throw FormatError("cannot write " + batch_csv);
    f << batch_f1_csv(pred, gt);
  }
  return kExitOk;
}

int cmd_eval_detect(const std::string& pred_dir, const std::string& gt_dir,
                    const std::string& json_out, std::ostream& out) {
  const auto pred = read_box_dir(pred_dir);
  const auto gt = read_box_dir(gt_dir);
  const std::size_t images = count_relabeled_views(gt_dir);
  const DetectionReport r = detection_metrics(pred, gt, 0.5, images);
  const json j = detection_report_to_json(r);
  out << j.dump() << '\n' << detection_table(r);
  if (!json_out.empty()) write_json_file(j, json_out, 2);
  return kExitOk;
}

int cmd_ablate(const Inputs& in, const std::string& gt_dir, const std::string& json_out,
               const ConfigFlags& flags, Logger& log, std::ostream& out) {
  const PipelineConfig base = flags.resolve();
  const auto gt = read_relabeled_dir(gt_dir);
  std::vector<BBox> gt_boxes;
  for (auto& [view, boxes] : boxes_from_masks(gt)) {
    gt_boxes.insert(gt_boxes.end(), boxes.begin(), boxes.end());
  }

  GaussianScene scene;
  std::vector<CameraView> cams;
  std::map<std::string, ViewMaskSet> masks;
  {
    auto t0 = std::chrono::steady_clock::now();
    scene = read_gaussian_ply(in.scene);
    cams = read_cameras(in.cameras);
    masks = read_mask_dir(in.masks);
    log.timing("ablate", "load", seconds_since(t0));
  }

  struct Row {
    std::string name;
    AssociationReport masks;
    DetectionReport detection;
  };
  std::vector<Row> rows;
  auto evaluate = [&](const std::string& name, const PipelineConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    const PipelineResult res = run_pipeline(scene, cams, masks, cfg, flags.workers);
    const auto relabeled = relabel_masks(res.codebook, masks);
    std::vector<BBox> pred;
    for (auto& [view, boxes] : detect_boxes(res.codebook, scene, cams, cfg, flags.workers)) {
      pred.insert(pred.end(), boxes.begin(), boxes.end());
    }
    rows.push_back({name, evaluate_masks(relabeled, gt), detection_metrics(pred, gt_boxes, 0.5, gt.size())});
    log.timing("ablate", name, seconds_since(t0));
  };
  evaluate("full", base);
  for (Stage s : all_stages()) {
    if (!base.stage_enabled(s)) continue;
    PipelineConfig cfg = base;
    cfg.set_stage(s, false);
    evaluate("w/o " + std::string(stage_name(s)), cfg);
  }

  json j = json::array();
  std::ostringstream table;
  table << std::fixed << std::setprecision(2);
  table << std::left << std::setw(28) << "Pipeline" << std::right << std::setw(8) << "mIoU"
        << std::setw(8) << "Prec." << std::setw(8) << "Rec." << std::setw(8) << "F1"
        << std::setw(8) << "mAP" << std::setw(8) << "mLAMR" << '\n';
  for (const auto& r : rows) {
    j.push_back({{"pipeline", r.name},
                 {"masks", association_report_to_json(r.masks)},
                 {"detection", detection_report_to_json(r.detection)}});
    table << std::left << std::setw(28) << r.name << std::right << std::setw(8) << r.masks.miou
          << std::setw(8) << r.masks.precision << std::setw(8) << r.masks.recall << std::setw(8)
          << r.masks.f1 << std::setw(8) << r.detection.map << std::setw(8) << r.detection.mlamr
          << '\n';
  }
  out << table.str();
  if (!json_out.empty()) write_json_file(j, json_out, 2);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& log_stream) {
  Logger log(log_stream);
  CLI::App app{"Multi-view consistent object codebook from Gaussian splats and 2D masks", "gsc"};
  app.require_subcommand(1);

  Inputs in;
  ConfigFlags flags;
  std::string out_path, warnings_path, spec_path, preset, view, codebook_path, pred_dir, gt_dir,
      json_out, batch_csv;
  std::uint64_t seed = 0;
  double near = kDefaultNear;
  bool overlays = true;

  auto* synth = app.add_subcommand("synth-gen", "Generate a synthetic dataset");
  synth->add_option("--spec", spec_path, "Synthetic scene spec (JSON)");
  synth->add_option("--preset", preset, "benchmark or benchmark-noisy");
  synth->add_option("--seed", seed, "Seed for --preset");
  synth->add_option("--out", out_path, "Output directory")->required();
  synth->add_option("--workers", flags.workers, "Worker threads; 0 uses all cores");

  auto* render = app.add_subcommand("render-depth", "Dump median-depth rasters");
  render->add_option("--scene", in.scene, "3DGS PLY")->required();
  render->add_option("--cameras", in.cameras, "Camera JSON")->required();
  render->add_option("--out", out_path, "Output directory")->required();
  render->add_option("--view", view, "Render only this view");
  render->add_option("--near", near, "Near plane");
  render->add_option("--workers", flags.workers, "Worker threads; 0 uses all cores");

  auto* build = app.add_subcommand("build", "Build the object codebook");
  build->add_option("--scene", in.scene, "3DGS PLY")->required();
  build->add_option("--cameras", in.cameras, "Camera JSON")->required();
  build->add_option("--masks", in.masks, "Directory of per-view mask JSON")->required();
  build->add_option("--out", out_path, "Codebook JSON to write")->required();
  build->add_option("--warnings", warnings_path, "Warnings JSON-lines file");
  flags.attach(build);

  auto* relabel = app.add_subcommand("relabel", "Write multi-view consistent masks");
  relabel->add_option("--codebook", codebook_path, "Codebook JSON")->required();
  relabel->add_option("--masks", in.masks, "Directory of per-view mask JSON")->required();
  relabel->add_option("--out", out_path, "Output directory")->required();
  relabel->add_flag("!--no-overlays", overlays, "Skip overlay PNGs");

  auto* detect = app.add_subcommand("detect", "Write per-view boxes from codebook objects");
  detect->add_option("--codebook", codebook_path, "Codebook JSON")->required();
  detect->add_option("--scene", in.scene, "3DGS PLY")->required();
  detect->add_option("--cameras", in.cameras, "Camera JSON")->required();
  detect->add_option("--out", out_path, "Output directory")->required();
  detect->add_flag("!--no-overlays", overlays, "Skip overlay PNGs");
  flags.attach(detect);

  auto* eval_masks = app.add_subcommand("eval-masks", "Score relabeled masks against ground truth");
  eval_masks->add_option("--pred", pred_dir, "Predicted relabeled masks directory")->required();
  eval_masks->add_option("--gt", gt_dir, "Ground-truth relabeled masks directory")->required();
  eval_masks->add_option("--json", json_out, "Also write the report here");
  eval_masks->add_option("--batch-csv", batch_csv, "Write per-batch F1 CSV here");

  auto* eval_detect = app.add_subcommand("eval-detect", "Score boxes against ground truth");
  eval_detect->add_option("--pred", pred_dir, "Predicted box directory")->required();
  eval_detect->add_option("--gt", gt_dir, "Ground-truth box or relabeled-mask directory")->required();
  eval_detect->add_option("--json", json_out, "Also write the report here");

  auto* ablate = app.add_subcommand("ablate", "Evaluate the pipeline with each stage disabled");
  ablate->add_option("--scene", in.scene, "3DGS PLY")->required();
  ablate->add_option("--cameras", in.cameras, "Camera JSON")->required();
  ablate->add_option("--masks", in.masks, "Directory of per-view mask JSON")->required();
  ablate->add_option("--gt", gt_dir, "Ground-truth relabeled masks directory")->required();
  ablate->add_option("--json", json_out, "Also write the matrix here");
  flags.attach(ablate);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    log.event({{"event", "error"}, {"kind", "usage"}, {"message", e.what()}});
    log_stream << app.help();
    return kExitUsageError;
  }

  try {
    if (*synth) return cmd_synth_gen(spec_path, preset, seed, out_path, flags.workers, log, out);
    if (*render) return cmd_render_depth(in.scene, in.cameras, out_path, view, near, flags.workers, log);
    if (*build) return cmd_build(in, out_path, warnings_path, flags, log, out);
    if (*relabel) return cmd_relabel(codebook_path, in.masks, out_path, overlays, out);
    if (*detect) {
      return cmd_detect(codebook_path, in.scene, in.cameras, out_path, overlays, flags, log, out);
    }
    if (*eval_masks) return cmd_eval_masks(pred_dir, gt_dir, json_out, batch_csv, out);
    if (*eval_detect) return cmd_eval_detect(pred_dir, gt_dir, json_out, out);
    if (*ablate) return cmd_ablate(in, gt_dir, json_out, flags, log, out);
  } catch (const UsageError& e) {
    log.event({{"event", "error"}, {"kind", "usage"}, {"message", e.what()}});
    return kExitUsageError;
  } catch (const std::exception& e) {
    log.event({{"event", "error"}, {"kind", "data"}, {"message", e.what()}});
    return kExitDataError;
  }
  return kExitUsageError;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace gsc
