#include <doctest.h>

#include <random>
#include <set>

#include "fixtures.hpp"
#include "gsc/error.hpp"
#include "gsc/io.hpp"
#include "gsc/synthgen.hpp"

using namespace gsc;

TEST_CASE("same seed gives the same scene") {
  const SynthSpec spec = gsc::test::two_box_spec(3);
  const SynthScene a = generate_scene(spec), b = generate_scene(spec);
  REQUIRE(a.scene.size() == b.scene.size());
  for (std::size_t i = 0; i < a.scene.size(); ++i) CHECK(a.scene[i].center == b.scene[i].center);
  CHECK(a.gt == b.gt);

  SynthSpec other = spec;
  other.seed = 4;
  CHECK(generate_scene(other).scene[0].center != a.scene[0].center);
}

TEST_CASE("ground truth partitions the Gaussians") {
  SynthSpec spec = gsc::test::two_box_spec();
  spec.floaters.count = 3;
  const SynthScene s = generate_scene(spec);
  CHECK(s.scene.size() == 1500 + 1500 + 3);
  CHECK(std::count(s.gt.begin(), s.gt.end(), -1) == 3);
  CHECK(std::count(s.gt.begin(), s.gt.end(), 0) == 1500);
  for (std::size_t i = 0; i < s.scene.size(); ++i) {
    if (s.gt[i] < 0) continue;
    const auto& o = spec.objects[static_cast<std::size_t>(s.gt[i])];
    const Vec3 d = (s.scene[i].center - o.center).cwiseAbs();
    CHECK((d.array() <= 0.5 * o.extent.array() + 1e-12).all());
    CHECK(s.scene[i].scale.x() == doctest::Approx(o.extent.mean() / 20.0));
  }
}

TEST_CASE("zero noise yields one true mask per visible object") {
  const SynthSpec spec = gsc::test::two_box_spec();
  const SynthScene scene = generate_scene(spec);
  const SynthViews v = generate_views_and_masks(scene, spec);
  CHECK(v.cameras.size() == spec.cameras.count);
  for (const auto& [id, set] : v.masks) {
    const auto& gt = v.gt_masks.at(id);
    REQUIRE(set.masks.size() == gt.masks.size());
    CHECK(set.masks.size() == 2);
    for (std::size_t i = 0; i < set.masks.size(); ++i) {
      CHECK(set.masks[i].label == gt.masks[i].label);
      CHECK(set.masks[i].region == gt.masks[i].region);
    }
  }
}

TEST_CASE("dropping everything leaves no masks") {
  SynthSpec spec = gsc::test::two_box_spec();
  spec.noise.drop_rate = 1.0;
  const SynthViews v = generate_views_and_masks(generate_scene(spec), spec);
  for (const auto& [id, set] : v.masks) CHECK(set.masks.empty());
}

TEST_CASE("label flips follow the seeded draws") {
  SynthSpec spec = gsc::test::two_box_spec(12);
  spec.cameras.count = 24;
  spec.noise.label_flip_rate = 0.2;
  const SynthScene scene = generate_scene(spec);
  const SynthViews v = generate_views_and_masks(scene, spec);

  // Replays the per-view stream: each visible object draws drop, flip, two
  // confidences and a replacement label, in that order.
  constexpr std::uint64_t kViewStream = 3;
  const auto& vocab = default_vocabulary();
  std::size_t expected = 0, observed = 0, i = 0;
  for (const auto& cam : v.cameras) {
    std::mt19937_64 rng(stream_seed(spec.seed, kViewStream, i++));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> conf(spec.noise.conf_min, spec.noise.conf_max);
    const auto& gt = v.gt_masks.at(cam.view_id);
    const auto& masks = v.masks.at(cam.view_id);
    for (std::size_t k = 0; k < gt.masks.size(); ++k) {
      unit(rng);
      const bool flip = unit(rng) < 0.2;
      conf(rng);
      conf(rng);
      std::uniform_int_distribution<std::size_t>(0, vocab.size() - 2)(rng);
      expected += flip;
      observed += masks.masks[k].label != gt.masks[k].label;
    }
  }
  CHECK(observed == expected);
  CHECK(expected > 0);
  const SynthViews again = generate_views_and_masks(scene, spec, 3);
  for (const auto& [id, set] : again.masks) {
    for (std::size_t k = 0; k < set.masks.size(); ++k) {
      CHECK(set.masks[k].label == v.masks.at(id).masks[k].label);
    }
  }
}

TEST_CASE("spec validation") {
  SynthSpec spec = gsc::test::two_box_spec();
  spec.noise.drop_rate = 1.5;
  CHECK_THROWS_AS(spec.validate(), DataError);
  spec = gsc::test::two_box_spec();
  spec.objects[0].gaussians = 0;
  CHECK_THROWS_AS(spec.validate(), DataError);
  spec = gsc::test::two_box_spec();
  spec.objects[0].parent = 0;
  CHECK_THROWS_AS(spec.validate(), DataError);
}

TEST_CASE("spec JSON round trip") {
  const SynthSpec spec = benchmark_spec(2, true);
  CHECK(synth_spec_to_json(synth_spec_from_json(synth_spec_to_json(spec))) == synth_spec_to_json(spec));
  std::size_t total = spec.floaters.count;
  for (const auto& o : spec.objects) total += o.gaussians;
  CHECK(total == 40000);
  CHECK(spec.objects.size() == 8);
  CHECK(spec.cameras.count == 24);
}

TEST_CASE("erosion") {
  BinaryMask m(7, 7, 0);
  for (int y = 1; y < 6; ++y) {
    for (int x = 1; x < 6; ++x) m(x, y) = 1;
  }
  const BinaryMask e = erode(m, 1);
  CHECK(pixel_count(e) == 9);
  CHECK(e(3, 3) == 1);
  CHECK(e(1, 1) == 0);
  CHECK(pixel_count(erode(BinaryMask(4, 4, 1), 1)) == 4);
  CHECK(erode(m, 0) == m);
}

TEST_CASE("dataset layout") {
  const SynthSpec spec = gsc::test::two_box_spec();
  const SynthScene scene = generate_scene(spec);
  const SynthViews v = generate_views_and_masks(scene, spec);
  gsc::test::TempDir dir;
  write_dataset(spec, scene, v, dir.path());
  for (const char* f : {"scene.ply", "cameras.json", "gt_gaussians.json", "spec.json"}) {
    CHECK(std::filesystem::exists(dir / f));
  }
  CHECK(read_mask_dir(dir / "masks").size() == spec.cameras.count);
  CHECK(read_relabeled_dir(dir / "gt_masks").size() == spec.cameras.count);
  CHECK(read_gaussian_ply(dir / "scene.ply").size() == scene.scene.size());
}
