#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gsc/core.hpp"

namespace gsc {

enum class SynthShape { Box, Sphere };

struct SynthObject {
  std::string label;
  SynthShape shape = SynthShape::Box;
  Vec3 center = Vec3::Zero();
  Vec3 extent = Vec3::Ones();  // full side lengths; a sphere uses extent.x() as diameter
  std::size_t gaussians = 1000;
  double opacity = 0.9;
  // Background geometry renders and occludes but never yields masks.
  bool detectable = true;
  // Index of an enclosing object whose masks also cover this one.
  std::optional<std::size_t> parent;
};

struct SynthFloaters {
  std::size_t count = 0;
  Vec3 min = Vec3::Constant(-1), max = Vec3::Constant(1);
  double scale = 0.04;
  double opacity = 0.6;
};

enum class Trajectory { Orbit, Corridor };

struct SynthCameras {
  Trajectory trajectory = Trajectory::Orbit;
  std::size_t count = 24;
  double radius = 6.0;  // orbit radius, or corridor length
  double height = 2.0;
  Vec3 look_at = Vec3::Zero();
  int width = 320, image_height = 240;
  double focal = 260.0;
};

struct SynthNoise {
  double label_flip_rate = 0;
  double conf_min = 0.7, conf_max = 1.0;
  int mask_erosion_px = 0;
  double drop_rate = 0;
  double spurious_rate = 0;
};

struct SynthSpec {
  std::uint64_t seed = 0;
  std::vector<SynthObject> objects;
  SynthFloaters floaters;
  SynthCameras cameras;
  SynthNoise noise;
  std::size_t min_mask_pixels = 30;
  std::vector<std::string> vocabulary;  // labels drawn for flips and spurious masks

  // Throws DataError for rates outside [0, 1], zero counts, or bad parents.
  void validate() const;
};

// The fixed 12-label vocabulary used when a spec does not provide one.
const std::vector<std::string>& default_vocabulary();

SynthSpec synth_spec_from_json(const nlohmann::json& j);
nlohmann::json synth_spec_to_json(const SynthSpec& spec);

// Evaluation scene: three chairs in a row, a table, a cabinet carrying a
// monitor, a plant and a door; 24 orbit views, 40k Gaussians.
// noisy switches on label flips, drops, erosion, spurious masks and floaters.
SynthSpec benchmark_spec(std::uint64_t seed, bool noisy);

struct SynthScene {
  GaussianScene scene;
  std::vector<int> gt;  // object index per Gaussian; -1 for floaters and background
};

SynthScene generate_scene(const SynthSpec& spec);

struct SynthViews {
  std::vector<CameraView> cameras;
  std::map<std::string, ViewMaskSet> masks;
  std::map<std::string, RelabeledMaskSet> gt_masks;
};

std::vector<CameraView> generate_cameras(const SynthSpec& spec);

SynthViews generate_views_and_masks(const SynthScene& scene, const SynthSpec& spec,
                                    int workers = 1);

// Layout: scene.ply, cameras.json, masks/<view>.json, gt_masks/<view>.json,
// gt_gaussians.json and spec.json.
void write_dataset(const SynthSpec& spec, const SynthScene& scene, const SynthViews& views,
                   const std::filesystem::path& dir);

// Square erosion with a (2r+1)^2 structuring element; pixels near the border erode.
BinaryMask erode(const BinaryMask& mask, int radius);

// splitmix64 finalizer, used to derive independent streams.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

}  // namespace gsc
