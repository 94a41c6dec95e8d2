#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "gsc/cli.hpp"
#include "gsc/io.hpp"
#include "gsc/synthgen.hpp"

using namespace gsc;
using gsc::test::TempDir;

namespace {

struct Run {
  int code;
  std::string out, log;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, log;
  const int code = run_cli(args, out, log);
  return {code, out.str(), log.str()};
}

double f1_of(const std::string& eval_out) {
  return nlohmann::json::parse(eval_out.substr(0, eval_out.find('\n')))["f1"].get<double>();
}

void write_two_box(const std::filesystem::path& dir) {
  const SynthSpec spec = gsc::test::two_box_spec();
  const SynthScene scene = generate_scene(spec);
  write_dataset(spec, scene, generate_views_and_masks(scene, spec), dir);
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(cli({"build", "--cameras", "c.json", "--masks", "m", "--out", "o.json"}).code == 2);
  CHECK(cli({}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"--help"}).code == 0);

  TempDir dir;
  write_two_box(dir.path());
  const auto d = dir.path().string();
  const Run bad = cli({"build", "--scene", d + "/scene.ply", "--cameras", d + "/cameras.json",
                       "--masks", d + "/masks", "--out", d + "/cb.json", "--disable", "depth"});
  CHECK(bad.code == 2);
  CHECK(bad.log.find("depth-test") != std::string::npos);
}

TEST_CASE("missing input files exit with 1") {
  const Run r = cli({"build", "--scene", "/nonexistent.ply", "--cameras", "c.json", "--masks", "m",
                     "--out", "o.json"});
  CHECK(r.code == 1);
  CHECK(r.log.find("\"error\"") != std::string::npos);
}

TEST_CASE("build, relabel and score a zero-noise dataset") {
  TempDir dir;
  write_two_box(dir.path());
  const auto d = dir.path().string();
  const Run build = cli({"build", "--scene", d + "/scene.ply", "--cameras", d + "/cameras.json",
                         "--masks", d + "/masks", "--out", d + "/cb.json", "--workers", "2"});
  REQUIRE(build.code == 0);
  CHECK(nlohmann::json::parse(build.out)["objects"] == 2);
  CHECK(build.log.find("\"timing\"") != std::string::npos);
  CHECK(std::filesystem::exists(d + "/cb.json.warnings.jsonl"));

  REQUIRE(cli({"relabel", "--codebook", d + "/cb.json", "--masks", d + "/masks", "--out", d + "/rel"}).code == 0);
  CHECK(std::filesystem::exists(d + "/rel/overlays"));
  const Run eval = cli({"eval-masks", "--pred", d + "/rel", "--gt", d + "/gt_masks", "--batch-csv",
                        d + "/batches.csv"});
  REQUIRE(eval.code == 0);
  CHECK(f1_of(eval.out) == 100.0);
  CHECK(std::filesystem::exists(d + "/batches.csv"));

  REQUIRE(cli({"detect", "--codebook", d + "/cb.json", "--scene", d + "/scene.ply", "--cameras",
               d + "/cameras.json", "--out", d + "/det", "--no-overlays"}).code == 0);
  const Run det = cli({"eval-detect", "--pred", d + "/det", "--gt", d + "/gt_masks"});
  REQUIRE(det.code == 0);
  CHECK(nlohmann::json::parse(det.out.substr(0, det.out.find('\n')))["mAP"] == 100.0);

  REQUIRE(cli({"render-depth", "--scene", d + "/scene.ply", "--cameras", d + "/cameras.json",
               "--out", d + "/depth", "--view", "view_000"}).code == 0);
  CHECK(read_depth_dump(d + "/depth/view_000.depth").width() == 160);
}

TEST_CASE("config file and flags layer over the defaults") {
  TempDir dir;
  write_two_box(dir.path());
  const auto d = dir.path().string();
  write_json_file({{"enable_spatial_merge", false}, {"tau_overlap", 0.5}}, d + "/cfg.json");
  const std::vector<std::string> base{"build", "--scene", d + "/scene.ply", "--cameras",
                                      d + "/cameras.json", "--masks", d + "/masks", "--config",
                                      d + "/cfg.json"};
  auto with = [&](std::vector<std::string> extra) {
    auto args = base;
    args.insert(args.end(), extra.begin(), extra.end());
    return cli(args);
  };
  CHECK(with({"--out", d + "/a.json"}).code == 0);
  CHECK(with({"--out", d + "/b.json", "--disable", "filter1", "--disable", "filter2"}).code == 0);
  CHECK(with({"--out", d + "/c.json", "--postprocess", "sometimes"}).code == 2);

  write_json_file({{"tau_overlap", 1.5}}, d + "/bad.json");
  CHECK(cli({"build", "--scene", d + "/scene.ply", "--cameras", d + "/cameras.json", "--masks",
             d + "/masks", "--config", d + "/bad.json", "--out", d + "/x.json"}).code == 1);

  std::vector<std::string> all_off = base;
  all_off.insert(all_off.end(), {"--out", d + "/off.json"});
  for (const char* s : {"depth-test", "semantic-constraint", "filter1", "spatial-merge", "filter2",
                        "object-filter", "outlier-removal"}) {
    all_off.insert(all_off.end(), {"--disable", s});
  }
  REQUIRE(cli(all_off).code == 0);
  CHECK_FALSE(read_codebook(d + "/off.json").objects.empty());
}

TEST_CASE("synth-gen is deterministic") {
  TempDir dir;
  const auto d = dir.path().string();
  write_json_file(synth_spec_to_json(gsc::test::two_box_spec()), d + "/spec.json");
  REQUIRE(cli({"synth-gen", "--spec", d + "/spec.json", "--out", d + "/a", "--workers", "1"}).code == 0);
  REQUIRE(cli({"synth-gen", "--spec", d + "/spec.json", "--out", d + "/b", "--workers", "3"}).code == 0);
  for (const char* f : {"scene.ply", "cameras.json", "masks/view_003.json", "gt_masks/view_005.json"}) {
    std::ifstream a(d + "/a/" + f, std::ios::binary), b(d + "/b/" + f, std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(!sa.empty());
    CHECK(sa == sb);
  }
  CHECK(cli({"synth-gen", "--preset", "nonsense", "--out", d + "/c"}).code == 2);
}

TEST_CASE("disabling the semantic constraint costs F1 when an object nests in another") {
  TempDir dir;
  const auto d = dir.path().string();
  REQUIRE(cli({"synth-gen", "--preset", "benchmark", "--seed", "2", "--out", d}).code == 0);
  auto f1 = [&](std::vector<std::string> extra, const std::string& tag) {
    std::vector<std::string> args{"build", "--scene", d + "/scene.ply", "--cameras",
                                  d + "/cameras.json", "--masks", d + "/masks", "--out",
                                  d + "/" + tag + ".json"};
    args.insert(args.end(), extra.begin(), extra.end());
    REQUIRE(cli(args).code == 0);
    REQUIRE(cli({"relabel", "--codebook", d + "/" + tag + ".json", "--masks", d + "/masks", "--out",
                 d + "/" + tag, "--no-overlays"}).code == 0);
    return f1_of(cli({"eval-masks", "--pred", d + "/" + tag, "--gt", d + "/gt_masks"}).out);
  };
  const double full = f1({}, "full");
  const double without = f1({"--disable", "semantic-constraint"}, "nosem");
  CHECK(full == doctest::Approx(100.0));
  CHECK(without < full);
}

TEST_CASE("ablate prints one row per pipeline variant") {
  TempDir dir;
  write_two_box(dir.path());
  const auto d = dir.path().string();
  const Run r = cli({"ablate", "--scene", d + "/scene.ply", "--cameras", d + "/cameras.json",
                     "--masks", d + "/masks", "--gt", d + "/gt_masks", "--json", d + "/ab.json"});
  REQUIRE(r.code == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 9);
  CHECK(r.out.rfind("Pipeline", 0) == 0);
  CHECK(r.out.find("w/o outlier-removal") != std::string::npos);
  CHECK(std::filesystem::exists(d + "/ab.json"));
}
