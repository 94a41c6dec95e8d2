#include "gsc/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include "gsc/error.hpp"
#include "gsc/io.hpp"
#include "gsc/parallel.hpp"
#include "gsc/splat.hpp"

namespace gsc {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix64(mix64(mix64(mix64(seed) ^ a) ^ b) ^ c);
}

namespace {

// Stream identifiers for independent random sequences.
enum : std::uint64_t { kObjectStream = 1, kFloaterStream = 2, kViewStream = 3 };

void require_rate(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw DataError(std::string("synth spec: ") + name + " must lie in [0, 1]");
  }
}

Vec3 vec3_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw FormatError("synth spec: expected a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

nlohmann::json vec3_to(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

}  // namespace

const std::vector<std::string>& default_vocabulary() {
  static const std::vector<std::string> vocab{
      "bookshelf", "cabinet", "chair", "computer", "door",  "lamp",
      "monitor",   "plant",   "sofa",  "table",    "trash can", "window"};
  return vocab;
}

void SynthSpec::validate() const {
  if (objects.empty()) throw DataError("synth spec: at least one object is required");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const auto& o = objects[i];
    if (o.gaussians == 0) throw DataError("synth spec: object gaussian count must be positive");
    if (!(o.extent.minCoeff() > 0)) throw DataError("synth spec: object extents must be positive");
    if (!(o.opacity > 0 && o.opacity <= 1)) throw DataError("synth spec: opacity must lie in (0, 1]");
    if (o.parent && *o.parent >= objects.size()) throw DataError("synth spec: parent out of range");
    // Parents must precede children so ancestry walks terminate.
    if (o.parent && *o.parent >= i) throw DataError("synth spec: a parent must be listed first");
  }
  if (cameras.count == 0) throw DataError("synth spec: camera count must be positive");
  if (cameras.width <= 0 || cameras.image_height <= 0 || !(cameras.focal > 0)) {
    throw DataError("synth spec: invalid image geometry");
  }
  require_rate(noise.label_flip_rate, "label_flip_rate");
  require_rate(noise.drop_rate, "drop_rate");
  require_rate(noise.spurious_rate, "spurious_rate");
  require_rate(noise.conf_min, "conf_min");
  require_rate(noise.conf_max, "conf_max");
  if (noise.conf_min > noise.conf_max) throw DataError("synth spec: conf_min exceeds conf_max");
  if (noise.mask_erosion_px < 0) throw DataError("synth spec: erosion must be non-negative");
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  try {
    SynthSpec s;
    s.seed = j.value("seed", std::uint64_t{0});
    for (const auto& o : j.at("objects")) {
      SynthObject obj;
      obj.label = fold_label(o.at("label").get<std::string>());
      const std::string shape = o.value("shape", std::string("box"));
      if (shape == "box") {
        obj.shape = SynthShape::Box;
      } else if (shape == "sphere") {
        obj.shape = SynthShape::Sphere;
      } else {
        throw FormatError("synth spec: unknown shape '" + shape + "'");
      }
      obj.center = vec3_from(o.at("center"));
      obj.extent = vec3_from(o.at("extent"));
      obj.gaussians = o.value("gaussians", std::size_t{1000});
      obj.opacity = o.value("opacity", 0.9);
      obj.detectable = o.value("detectable", true);
      if (o.contains("parent") && !o["parent"].is_null()) obj.parent = o["parent"].get<std::size_t>();
      s.objects.push_back(std::move(obj));
    }
    if (j.contains("floaters")) {
      const auto& f = j["floaters"];
      s.floaters.count = f.value("count", std::size_t{0});
      if (f.contains("min")) s.floaters.min = vec3_from(f["min"]);
      if (f.contains("max")) s.floaters.max = vec3_from(f["max"]);
      s.floaters.scale = f.value("scale", s.floaters.scale);
      s.floaters.opacity = f.value("opacity", s.floaters.opacity);
    }
    if (j.contains("cameras")) {
      const auto& c = j["cameras"];
      const std::string traj = c.value("trajectory", std::string("orbit"));
      if (traj == "orbit") {
        s.cameras.trajectory = Trajectory::Orbit;
      } else if (traj == "corridor") {
        s.cameras.trajectory = Trajectory::Corridor;
      } else {
        throw FormatError("synth spec: unknown trajectory '" + traj + "'");
      }
      s.cameras.count = c.value("count", s.cameras.count);
      s.cameras.radius = c.value("radius", s.cameras.radius);
      s.cameras.height = c.value("height", s.cameras.height);
      if (c.contains("look_at")) s.cameras.look_at = vec3_from(c["look_at"]);
      s.cameras.width = c.value("width", s.cameras.width);
      s.cameras.image_height = c.value("image_height", s.cameras.image_height);
      s.cameras.focal = c.value("focal", s.cameras.focal);
    }
    if (j.contains("noise")) {
      const auto& n = j["noise"];
      s.noise.label_flip_rate = n.value("label_flip_rate", 0.0);
      s.noise.conf_min = n.value("conf_min", s.noise.conf_min);
      s.noise.conf_max = n.value("conf_max", s.noise.conf_max);
      s.noise.mask_erosion_px = n.value("mask_erosion_px", 0);
      s.noise.drop_rate = n.value("drop_rate", 0.0);
      s.noise.spurious_rate = n.value("spurious_rate", 0.0);
    }
    s.min_mask_pixels = j.value("min_mask_pixels", s.min_mask_pixels);
    if (j.contains("vocabulary")) {
      for (const auto& l : j["vocabulary"]) s.vocabulary.push_back(fold_label(l.get<std::string>()));
    }
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("synth spec: ") + e.what());
  }
}

nlohmann::json synth_spec_to_json(const SynthSpec& s) {
  nlohmann::json objects = nlohmann::json::array();
  for (const auto& o : s.objects) {
    nlohmann::json jo{{"label", o.label},
                      {"shape", o.shape == SynthShape::Box ? "box" : "sphere"},
                      {"center", vec3_to(o.center)},
                      {"extent", vec3_to(o.extent)},
                      {"gaussians", o.gaussians},
                      {"opacity", o.opacity},
                      {"detectable", o.detectable}};
    jo["parent"] = o.parent ? nlohmann::json(*o.parent) : nlohmann::json(nullptr);
    objects.push_back(std::move(jo));
  }
  nlohmann::json j{
      {"seed", s.seed},
      {"objects", objects},
      {"floaters",
       {{"count", s.floaters.count},
        {"min", vec3_to(s.floaters.min)},
        {"max", vec3_to(s.floaters.max)},
        {"scale", s.floaters.scale},
        {"opacity", s.floaters.opacity}}},
      {"cameras",
       {{"trajectory", s.cameras.trajectory == Trajectory::Orbit ? "orbit" : "corridor"},
        {"count", s.cameras.count},
        {"radius", s.cameras.radius},
        {"height", s.cameras.height},
        {"look_at", vec3_to(s.cameras.look_at)},
        {"width", s.cameras.width},
        {"image_height", s.cameras.image_height},
        {"focal", s.cameras.focal}}},
      {"noise",
       {{"label_flip_rate", s.noise.label_flip_rate},
        {"conf_min", s.noise.conf_min},
        {"conf_max", s.noise.conf_max},
        {"mask_erosion_px", s.noise.mask_erosion_px},
        {"drop_rate", s.noise.drop_rate},
        {"spurious_rate", s.noise.spurious_rate}}},
      {"min_mask_pixels", s.min_mask_pixels}};
  if (!s.vocabulary.empty()) j["vocabulary"] = s.vocabulary;
  return j;
}

SynthSpec benchmark_spec(std::uint64_t seed, bool noisy) {
  SynthSpec s;
  s.seed = seed;
  auto box = [](std::string label, Vec3 center, Vec3 extent, std::size_t n) {
    SynthObject o;
    o.label = std::move(label);
    o.center = center;
    o.extent = extent;
    o.gaussians = n;
    return o;
  };
  // Chairs share a row so they hide one another from views along the x axis.
  s.objects.push_back(box("chair", {-3.0, 1.8, 0.5}, {0.6, 0.6, 1.0}, 4500));
  s.objects.push_back(box("chair", {-1.2, 1.8, 0.5}, {0.6, 0.6, 1.0}, 4500));
  s.objects.push_back(box("chair", {0.6, 1.8, 0.5}, {0.6, 0.6, 1.0}, 4500));
  s.objects.push_back(box("table", {2.64, 1.44, 0.4}, {1.4, 0.8, 0.8}, 5500));
  s.objects.push_back(box("cabinet", {2.8, -1.2, 0.5}, {0.7, 0.7, 1.0}, 10000));
  SynthObject plant = box("plant", {-2.4, -1.92, 0.4}, {0.8, 0.8, 0.8}, 5000);
  plant.shape = SynthShape::Sphere;
  s.objects.push_back(plant);
  s.objects.push_back(box("door", {0.0, -2.88, 1.0}, {1.0, 0.12, 2.0}, 5650));
  // A thin panel standing on the cabinet; cabinet masks cover it too.
  SynthObject monitor = box("monitor", {2.8, -1.2, 1.25}, {0.9, 0.05, 0.5}, 350);
  monitor.parent = 4;
  s.objects.push_back(monitor);

  s.cameras.trajectory = Trajectory::Orbit;
  s.cameras.count = 24;
  s.cameras.radius = 6.5;
  s.cameras.height = 4.0;
  s.cameras.look_at = Vec3(0.0, 0.0, 0.7);
  s.cameras.width = 320;
  s.cameras.image_height = 240;
  s.cameras.focal = 260.0;

  if (noisy) {
    s.noise.label_flip_rate = 0.15;
    s.noise.drop_rate = 0.2;
    s.noise.mask_erosion_px = 2;
    s.noise.spurious_rate = 0.1;
    s.floaters.count = 200;
    s.floaters.min = Vec3(-4.2, -4.2, 0.2);
    s.floaters.max = Vec3(4.2, 4.2, 2.5);
    // Keep the total at 40k Gaussians.
    s.objects[6].gaussians -= s.floaters.count;
  }
  return s;
}

SynthScene generate_scene(const SynthSpec& spec) {
  spec.validate();
  SynthScene out;
  for (std::size_t k = 0; k < spec.objects.size(); ++k) {
    const SynthObject& o = spec.objects[k];
    std::mt19937_64 rng(stream_seed(spec.seed, kObjectStream, k));
    std::uniform_real_distribution<double> unit(-0.5, 0.5);
    const double s = o.extent.mean() / 20.0;
    for (std::size_t i = 0; i < o.gaussians; ++i) {
      Vec3 p;
      if (o.shape == SynthShape::Box) {
        p = Vec3(unit(rng), unit(rng), unit(rng)).cwiseProduct(o.extent);
      } else {
        do {
          p = Vec3(unit(rng), unit(rng), unit(rng));
        } while (p.squaredNorm() > 0.25);
        p *= o.extent.x();
      }
      GaussianPrimitive g;
      g.center = o.center + p;
      g.scale = Vec3::Constant(s);
      g.opacity = o.opacity;
      out.scene.gaussians.push_back(g);
      out.gt.push_back(o.detectable ? static_cast<int>(k) : -1);
    }
  }
  std::mt19937_64 rng(stream_seed(spec.seed, kFloaterStream));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < spec.floaters.count; ++i) {
    const Vec3 t(unit(rng), unit(rng), unit(rng));
    GaussianPrimitive g;
    g.center = spec.floaters.min + t.cwiseProduct(spec.floaters.max - spec.floaters.min);
    g.scale = Vec3::Constant(spec.floaters.scale);
    g.opacity = spec.floaters.opacity;
    out.scene.gaussians.push_back(g);
    out.gt.push_back(-1);
  }
  return out;
}

namespace {

CameraView look_at_camera(const std::string& id, const Vec3& pos, const Vec3& target,
                          const SynthCameras& c) {
  const Vec3 up(0, 0, 1);
  const Vec3 f = (target - pos).normalized();
  Vec3 r = f.cross(up);
  if (r.norm() < 1e-9) r = Vec3(1, 0, 0);
  r.normalize();
  const Vec3 d = f.cross(r);
  Mat3 rot;
  rot.row(0) = r;
  rot.row(1) = d;
  rot.row(2) = f;
  CameraView cam;
  cam.view_id = id;
  cam.width = c.width;
  cam.height = c.image_height;
  cam.fx = cam.fy = c.focal;
  cam.cx = (c.width - 1) / 2.0;
  cam.cy = (c.image_height - 1) / 2.0;
  cam.rotation = Quat(rot).normalized();
  cam.translation = -(cam.rotation * pos);
  return cam;
}

std::string view_name(std::size_t i) {
  std::ostringstream os;
  os << "view_" << std::setw(3) << std::setfill('0') << i;
  return os.str();
}

}  // namespace

std::vector<CameraView> generate_cameras(const SynthSpec& spec) {
  const SynthCameras& c = spec.cameras;
  std::vector<CameraView> out;
  for (std::size_t i = 0; i < c.count; ++i) {
    Vec3 pos, target;
    if (c.trajectory == Trajectory::Orbit) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(c.count);
      pos = c.look_at + Vec3(c.radius * std::cos(a), c.radius * std::sin(a), 0.0);
      pos.z() = c.height;
      target = c.look_at;
    } else {
      // Walk along x, looking across the corridor toward +y.
      const double t = c.count == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(c.count - 1);
      const double x = c.look_at.x() + (t - 0.5) * c.radius;
      pos = Vec3(x, c.look_at.y() - 4.0, c.height);
      target = Vec3(x, c.look_at.y(), c.look_at.z());
    }
    out.push_back(look_at_camera(view_name(i), pos, target, c));
  }
  return out;
}

BinaryMask erode(const BinaryMask& mask, int radius) {
  if (radius <= 0) return mask;
  const int w = mask.width(), h = mask.height();
  // Separable: horizontal then vertical run tests.
  BinaryMask horiz(w, h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool keep = true;
      for (int dx = -radius; dx <= radius && keep; ++dx) {
        const int nx = x + dx;
        keep = nx >= 0 && nx < w && mask(nx, y);
      }
      horiz(x, y) = keep ? 1 : 0;
    }
  }
  BinaryMask out(w, h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool keep = true;
      for (int dy = -radius; dy <= radius && keep; ++dy) {
        const int ny = y + dy;
        keep = ny >= 0 && ny < h && horiz(x, ny);
      }
      out(x, y) = keep ? 1 : 0;
    }
  }
  return out;
}

namespace {

struct ViewResult {
  ViewMaskSet masks;
  RelabeledMaskSet gt;
};

std::string other_label(const std::vector<std::string>& vocab, const std::string& label,
                        std::mt19937_64& rng) {
  std::vector<std::string> choices;
  for (const auto& l : vocab) {
    if (l != label) choices.push_back(l);
  }
  if (choices.empty()) return label;
  std::uniform_int_distribution<std::size_t> pick(0, choices.size() - 1);
  return choices[pick(rng)];
}

ViewResult make_view(const SynthScene& scene, const SynthSpec& spec, const CameraView& cam,
                     std::size_t view_index) {
  const auto& vocab = spec.vocabulary.empty() ? default_vocabulary() : spec.vocabulary;
  const DepthRender render = render_median_depth(scene.scene, cam, kDefaultNear, 1);
  const std::size_t n_obj = spec.objects.size();
  std::vector<BinaryMask> regions(n_obj, BinaryMask(cam.width, cam.height, 0));
  std::vector<std::size_t> area(n_obj, 0);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const std::int64_t src = render.source(x, y);
      if (src < 0) continue;
      int id = scene.gt[static_cast<std::size_t>(src)];
      // A pixel of a nested object belongs to every enclosing object too.
      while (id >= 0) {
        const auto k = static_cast<std::size_t>(id);
        regions[k](x, y) = 1;
        ++area[k];
        id = spec.objects[k].parent ? static_cast<int>(*spec.objects[k].parent) : -1;
      }
    }
  }

  ViewResult out;
  out.masks.view_id = out.gt.view_id = cam.view_id;
  out.masks.width = out.gt.width = cam.width;
  out.masks.height = out.gt.height = cam.height;

  std::mt19937_64 rng(stream_seed(spec.seed, kViewStream, view_index));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> conf(spec.noise.conf_min, spec.noise.conf_max);
  MaskId next_mask = 0;
  std::vector<std::size_t> visible;
  for (std::size_t k = 0; k < n_obj; ++k) {
    const SynthObject& o = spec.objects[k];
    if (!o.detectable || area[k] < spec.min_mask_pixels) continue;
    visible.push_back(k);
    RelabeledMask g;
    g.mask_id = static_cast<MaskId>(out.gt.masks.size());
    g.object_id = static_cast<ObjectId>(k);
    g.label = o.label;
    g.confidence = 1.0;
    g.region = regions[k];
    out.gt.masks.push_back(g);

    // Draw every variate up front so one noise setting does not shift another.
    const double u_drop = unit(rng);
    const double u_flip = unit(rng);
    const double det = conf(rng);
    const double seg = conf(rng);
    const std::string flipped = other_label(vocab, o.label, rng);
    if (u_drop < spec.noise.drop_rate) continue;
    BinaryMask region = erode(regions[k], spec.noise.mask_erosion_px);
    if (pixel_count(region) == 0) continue;
    const std::string label = u_flip < spec.noise.label_flip_rate ? flipped : o.label;
    out.masks.masks.push_back(MaskInstance::make(next_mask++, label, det, seg, std::move(region)));
  }

  // Spurious masks sit on real structure: each is an ellipse centred on a
  // random pixel of the visible object that spawned it.
  std::uniform_real_distribution<double> radius(8.0, 30.0);
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  for (std::size_t k : visible) {
    const double u = unit(rng);
    const std::size_t nth = std::uniform_int_distribution<std::size_t>(0, area[k] - 1)(rng);
    const double rx = radius(rng), ry = radius(rng);
    const std::string label = vocab[pick(rng)];
    const double det = conf(rng), seg = conf(rng);
    if (u >= spec.noise.spurious_rate) continue;
    double cx = 0, cy = 0;
    std::size_t seen = 0;
    for (int y = 0; y < cam.height && seen <= nth; ++y) {
      for (int x = 0; x < cam.width; ++x) {
        if (regions[k](x, y) && seen++ == nth) {
          cx = x;
          cy = y;
          break;
        }
      }
    }
    BinaryMask blob(cam.width, cam.height, 0);
    for (int y = 0; y < cam.height; ++y) {
      for (int x = 0; x < cam.width; ++x) {
        const double dx = (x - cx) / rx, dy = (y - cy) / ry;
        if (dx * dx + dy * dy <= 1.0) blob(x, y) = 1;
      }
    }
    out.masks.masks.push_back(MaskInstance::make(next_mask++, label, det, seg, std::move(blob)));
  }
  return out;
}

}  // namespace

SynthViews generate_views_and_masks(const SynthScene& scene, const SynthSpec& spec, int workers) {
  spec.validate();
  SynthViews out;
  out.cameras = generate_cameras(spec);
  std::vector<ViewResult> results(out.cameras.size());
  parallel_for(out.cameras.size(), workers,
               [&](std::size_t v) { results[v] = make_view(scene, spec, out.cameras[v], v); });
  for (std::size_t v = 0; v < results.size(); ++v) {
    const std::string& id = out.cameras[v].view_id;
    out.masks[id] = std::move(results[v].masks);
    out.gt_masks[id] = std::move(results[v].gt);
  }
  return out;
}

void write_dataset(const SynthSpec& spec, const SynthScene& scene, const SynthViews& views,
                   const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "masks");
  fs::create_directories(dir / "gt_masks");
  write_gaussian_ply(scene.scene, dir / "scene.ply");
  write_cameras(views.cameras, dir / "cameras.json");
  for (const auto& [id, set] : views.masks) write_masks(set, dir / "masks" / (id + ".json"));
  for (const auto& [id, set] : views.gt_masks) {
    write_relabeled_masks(set, dir / "gt_masks" / (id + ".json"));
  }
  nlohmann::json objects = nlohmann::json::array();
  for (std::size_t k = 0; k < spec.objects.size(); ++k) {
    const auto& o = spec.objects[k];
    objects.push_back({{"object_id", k},
                       {"label", o.label},
                       {"detectable", o.detectable},
                       {"parent", o.parent ? nlohmann::json(*o.parent) : nlohmann::json(nullptr)}});
  }
  write_json_file({{"objects", objects}, {"gaussian_object", scene.gt}}, dir / "gt_gaussians.json");
  write_json_file(synth_spec_to_json(spec), dir / "spec.json", 2);
}

}  // namespace gsc
