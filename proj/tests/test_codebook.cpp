#include <doctest.h>

#include <numeric>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "gsc/codebook.hpp"
#include "gsc/synthgen.hpp"
#include "oracles.hpp"

using namespace gsc;

namespace {

std::vector<GaussianIndex> range(GaussianIndex lo, GaussianIndex hi) {
  std::vector<GaussianIndex> v(hi - lo + 1);
  std::iota(v.begin(), v.end(), lo);
  return v;
}

MaskAssociation assoc(std::string label, std::vector<GaussianIndex> idx, double conf = 0.8,
                      MaskId id = 0) {
  MaskAssociation a;
  a.view_id = "v";
  a.mask_id = id;
  a.label = std::move(label);
  a.confidence = conf;
  a.weight = conf / 2.0;
  a.gaussian_indices = std::move(idx);
  return a;
}

CodebookObject object(ObjectId id, std::vector<GaussianIndex> idx, std::string label = "x") {
  CodebookObject o;
  o.object_id = id;
  o.gaussian_indices = std::move(idx);
  o.gaussian_weights.assign(o.gaussian_indices.size(), 1.0);
  o.label_votes[label] = 1.0;
  o.mask_refs.push_back({"v", id, 1.0});
  return o;
}

ObjectCodebook random_codebook(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n_obj(1, 30), size(1, 40), base(0, 60);
  std::uniform_real_distribution<double> w(0.01, 1.0);
  ObjectCodebook cb;
  const int n = n_obj(rng);
  for (int i = 0; i < n; ++i) {
    std::set<GaussianIndex> s;
    const int b = base(rng), k = size(rng);
    for (int j = 0; j < k; ++j) s.insert(static_cast<GaussianIndex>(b + base(rng) % 25));
    CodebookObject o = object(static_cast<ObjectId>(i), {s.begin(), s.end()},
                              i % 3 ? "chair" : "table");
    for (auto& x : o.gaussian_weights) x = w(rng);
    cb.objects.push_back(std::move(o));
  }
  cb.next_id = static_cast<ObjectId>(n);
  return cb;
}

}  // namespace

TEST_CASE("semantic merge") {
  ObjectCodebook cb;
  SUBCASE("first mask creates object 0") {
    CHECK(semantic_merge_step(cb, assoc("door", range(1, 10), 0.7), 0.2, true) == 0);
    REQUIRE(cb.objects.size() == 1);
    CHECK(cb.objects[0].label_votes == std::map<std::string, double>{{"door", 0.7}});
    CHECK(cb.next_id == 1);
  }
  SUBCASE("overlapping mask with the same label merges") {
    semantic_merge_step(cb, assoc("door", range(1, 10)), 0.2, true);
    CHECK(gaussian_overlap(range(6, 12), range(1, 10)) == doctest::Approx(5.0 / 7.0));
    CHECK(semantic_merge_step(cb, assoc("door", range(6, 12)), 0.2, true) == 0);
    REQUIRE(cb.objects.size() == 1);
    CHECK(cb.objects[0].gaussian_indices == range(1, 12));
    CHECK(*cb.objects[0].weight_of(6) == doctest::Approx(0.8));
    CHECK(*cb.objects[0].weight_of(1) == doctest::Approx(0.4));
    CHECK(cb.objects[0].mask_refs.size() == 2);
  }
  SUBCASE("a different label never merges") {
    semantic_merge_step(cb, assoc("door", range(1, 10)), 0.2, true);
    CHECK(semantic_merge_step(cb, assoc("window", range(6, 12)), 0.2, true) == 1);
    CHECK(cb.objects.size() == 2);
    ObjectCodebook unconstrained;
    semantic_merge_step(unconstrained, assoc("door", range(1, 10)), 0.2, false);
    CHECK(semantic_merge_step(unconstrained, assoc("window", range(6, 12)), 0.2, false) == 0);
    CHECK(unconstrained.objects.size() == 1);
  }
  SUBCASE("ties go to the lowest id") {
    semantic_merge_step(cb, assoc("door", range(1, 4)), 0.2, true);
    semantic_merge_step(cb, assoc("door", range(5, 8)), 0.2, true);
    CHECK(semantic_merge_step(cb, assoc("door", range(3, 6)), 0.2, true) == 0);
  }
  SUBCASE("object count grows by at most one") {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<GaussianIndex> lo(0, 80);
    for (int i = 0; i < 200; ++i) {
      const std::size_t before = cb.objects.size();
      const GaussianIndex a = lo(rng);
      semantic_merge_step(cb, assoc(i % 2 ? "door" : "wall", range(a, a + 10)), 0.2, true);
      CHECK(cb.objects.size() - before <= 1);
    }
    std::set<ObjectId> ids;
    for (const auto& o : cb.objects) ids.insert(o.object_id);
    CHECK(ids.size() == cb.objects.size());
    CHECK(cb.next_id > *ids.rbegin());
  }
}

TEST_CASE("low-weight filter") {
  CodebookObject o = object(0, {1, 2, 3});
  o.gaussian_weights = {1.0, 0.5, 0.3};
  CHECK(filter_low_weight(o, 0.4).gaussian_indices == std::vector<GaussianIndex>{1, 2});

  o.gaussian_weights = {1.0, 0.4, 0.39};
  CHECK(filter_low_weight(o, 0.4).gaussian_indices == std::vector<GaussianIndex>{1, 2});

  const CodebookObject single = object(0, {7});
  CHECK(filter_low_weight(single, 0.9) == single);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> w(0, 1);
  for (int i = 0; i < 50; ++i) {
    CodebookObject r = object(0, range(0, 20));
    for (auto& x : r.gaussian_weights) x = w(rng);
    CHECK(filter_low_weight(r, 0.99).size() >= 1);
  }
}

TEST_CASE("spatial merge hand cases") {
  SUBCASE("disjoint objects stay apart") {
    ObjectCodebook cb;
    cb.objects = {object(0, range(1, 5)), object(1, range(6, 9))};
    CHECK(spatial_merge(cb, 0.3) == cb);
  }
  SUBCASE("mutual overlap merges") {
    ObjectCodebook cb;
    auto b = range(1, 9);
    b.push_back(11);
    cb.objects = {object(0, range(1, 10)), object(1, b)};
    const ObjectCodebook m = spatial_merge(cb, 0.3);
    REQUIRE(m.objects.size() == 1);
    CHECK(m.objects[0].gaussian_indices == range(1, 11));
    CHECK(m.objects[0].object_id == 0);
    CHECK(*m.objects[0].weight_of(5) == 2.0);
  }
  SUBCASE("components are transitive") {
    ObjectCodebook cb;
    cb.objects = {object(0, range(1, 10)), object(1, range(6, 15)), object(2, range(11, 20))};
    CHECK(spatial_merge(cb, 0.3).objects.size() == 1);
  }
  SUBCASE("a small subset of a large object does not merge") {
    ObjectCodebook cb;
    cb.objects = {object(0, range(1, 100)), object(1, range(1, 5))};
    CHECK(spatial_merge(cb, 0.3).objects.size() == 2);
  }
}

TEST_CASE("spatial merge equals union-find closure and conserves weight") {
  std::mt19937_64 rng(211);
  for (int trial = 0; trial < 200; ++trial) {
    const ObjectCodebook cb = random_codebook(rng);
    const ObjectCodebook got = spatial_merge(cb, 0.3);
    REQUIRE(got == oracle::spatial_merge(cb, 0.3));
    double before = 0, after = 0;
    for (const auto& o : cb.objects) before += std::accumulate(o.gaussian_weights.begin(), o.gaussian_weights.end(), 0.0);
    for (const auto& o : got.objects) after += std::accumulate(o.gaussian_weights.begin(), o.gaussian_weights.end(), 0.0);
    CHECK(after == doctest::Approx(before).epsilon(1e-12));
  }
}

TEST_CASE("vote label is order and scale invariant") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> c(0.1, 1.0);
  std::vector<std::pair<std::string, double>> votes;
  for (int i = 0; i < 12; ++i) votes.push_back({i % 3 == 0 ? "door" : (i % 3 == 1 ? "wall" : "window"), c(rng)});
  auto label_of = [](const std::vector<std::pair<std::string, double>>& v, double scale) {
    CodebookObject o;
    for (const auto& [l, x] : v) o.label_votes[l] += x * scale;
    return vote_label(o);
  };
  const std::string base = label_of(votes, 1.0);
  for (int i = 0; i < 10; ++i) {
    std::shuffle(votes.begin(), votes.end(), rng);
    CHECK(label_of(votes, 1.0) == base);
    CHECK(label_of(votes, 3.5) == base);
  }
}

TEST_CASE("codebook construction on a two-box scene") {
  const SynthSpec spec = gsc::test::two_box_spec();
  const SynthScene scene = generate_scene(spec);
  const SynthViews views = generate_views_and_masks(scene, spec);
  const PipelineConfig cfg;

  SUBCASE("no masks") {
    const BuildResult r = build_codebook(scene.scene, views.cameras, {}, cfg);
    CHECK(r.codebook.objects.empty());
  }
  SUBCASE("one mask") {
    std::map<std::string, ViewMaskSet> one;
    auto first = *views.masks.begin();
    first.second.masks.resize(1);
    one.insert(first);
    const BuildResult r = build_codebook(scene.scene, views.cameras, one, cfg);
    REQUIRE(r.codebook.objects.size() == 1);
    CHECK(r.codebook.objects[0].final_label == first.second.masks[0].label);
  }
  SUBCASE("full view set") {
    const BuildResult r = build_codebook(scene.scene, views.cameras, views.masks, cfg);
    REQUIRE(r.codebook.objects.size() == 2);
    std::set<std::string> labels;
    for (const auto& o : r.codebook.objects) labels.insert(o.final_label);
    CHECK(labels == std::set<std::string>{"chair", "table"});
    std::vector<GaussianIndex> common;
    const auto& a = r.codebook.objects[0].gaussian_indices;
    const auto& b = r.codebook.objects[1].gaussian_indices;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
    CHECK(common.empty());
    for (const auto& o : r.codebook.objects) {
      for (GaussianIndex g : o.gaussian_indices) {
        REQUIRE(g < scene.scene.size());
        CHECK(spec.objects[static_cast<std::size_t>(scene.gt[g])].label == o.final_label);
      }
    }

    const auto relabeled = relabel_masks(r.codebook, views.masks);
    std::map<ObjectId, ObjectId> pred_to_gt;
    for (const auto& [view, set] : relabeled) {
      const auto& gt = views.gt_masks.at(view);
      REQUIRE(set.masks.size() == gt.masks.size());
      for (std::size_t i = 0; i < set.masks.size(); ++i) {
        REQUIRE(set.masks[i].object_id);
        auto [it, fresh] = pred_to_gt.emplace(*set.masks[i].object_id, *gt.masks[i].object_id);
        CHECK(it->second == *gt.masks[i].object_id);
      }
    }
    CHECK(pred_to_gt.size() == 2);
  }
  SUBCASE("ablated stages still give a valid codebook") {
    PipelineConfig off = cfg;
    off.enable_depth_test = false;
    off.enable_semantic_constraint = false;
    const BuildResult r = build_codebook(scene.scene, views.cameras, views.masks, off);
    CHECK_FALSE(r.codebook.objects.empty());
    for (const auto& o : r.codebook.objects) {
      CHECK_FALSE(o.mask_refs.empty());
      CHECK(o.gaussian_indices.size() == o.gaussian_weights.size());
    }
  }
  SUBCASE("worker count does not change the result") {
    const BuildResult a = build_codebook(scene.scene, views.cameras, views.masks, cfg, 1);
    const BuildResult b = build_codebook(scene.scene, views.cameras, views.masks, cfg, 3);
    CHECK(a.codebook == b.codebook);
  }
}

TEST_CASE("relabeling leaves masks of dropped objects unassigned") {
  BinaryMask region(4, 4, 1);
  std::map<std::string, ViewMaskSet> masks;
  masks["a"] = ViewMaskSet{"a", 4, 4, {MaskInstance::make(0, "door", 1, 1, region),
                                       MaskInstance::make(1, "door", 1, 1, region)}};
  masks["b"] = ViewMaskSet{"b", 4, 4, {MaskInstance::make(0, "door", 1, 1, region)}};
  ObjectCodebook cb;
  CodebookObject o = object(5, {1}, "door");
  o.final_label = "door";
  o.mask_refs = {{"a", 0, 1.0}, {"b", 0, 1.0}};
  cb.objects.push_back(o);
  const auto r = relabel_masks(cb, masks);
  CHECK(r.at("a").masks[0].object_id == 5u);
  CHECK(r.at("b").masks[0].object_id == 5u);
  CHECK_FALSE(r.at("a").masks[1].object_id);
}
