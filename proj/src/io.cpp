#include "gsc/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "gsc/error.hpp"

namespace gsc {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

namespace {

const json& require(const json& j, const char* key, const std::string& context) {
  auto it = j.find(key);
  if (it == j.end()) throw FormatError(context + ": missing field '" + key + "'");
  return *it;
}

template <typename T>
T get_field(const json& j, const char* key, const std::string& context) {
  try {
    return require(j, key, context).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(context + ": bad field '" + key + "': " + e.what());
  }
}

Quat normalized_quat(double w, double x, double y, double z, const std::string& context) {
  Quat q(w, x, y, z);
  const double n = q.norm();
  if (!(n > 0) || !std::isfinite(n)) throw DataError(context + ": degenerate quaternion");
  q.coeffs() /= n;
  return q;
}

// --- PLY -------------------------------------------------------------------

struct PlyProperty {
  std::string name;
  std::string type;
  std::size_t offset = 0;
  std::size_t size = 0;
};

std::size_t ply_type_size(const std::string& type) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
  if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
  if (type == "int" || type == "uint" || type == "int32" || type == "uint32" ||
      type == "float" || type == "float32") {
    return 4;
  }
  if (type == "double" || type == "float64") return 8;
  return 0;
}

double read_ply_scalar(const char* p, const std::string& type) {
  auto load = [p]<typename T>(T) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return static_cast<double>(v);
  };
  if (type == "float" || type == "float32") return load(float{});
  if (type == "double" || type == "float64") return load(double{});
  if (type == "char" || type == "int8") return load(std::int8_t{});
  if (type == "uchar" || type == "uint8") return load(std::uint8_t{});
  if (type == "short" || type == "int16") return load(std::int16_t{});
  if (type == "ushort" || type == "uint16") return load(std::uint16_t{});
  if (type == "int" || type == "int32") return load(std::int32_t{});
  return load(std::uint32_t{});
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) {
  p = std::clamp(p, 1e-7, 1.0 - 1e-7);
  return std::log(p / (1.0 - p));
}

}  // namespace

GaussianScene read_gaussian_ply(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open PLY file " + path.string());
  const std::string ctx = path.string();

  std::string line;
  std::getline(in, line);
  if (line != "ply" && line != "ply\r") throw FormatError(ctx + ": not a PLY file");

  bool binary_le = false;
  bool in_vertex = false;
  bool vertex_seen = false;
  std::size_t vertex_count = 0;
  std::vector<PlyProperty> props;
  std::size_t stride = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      binary_le = fmt == "binary_little_endian";
    } else if (word == "element") {
      std::string name;
      std::size_t count = 0;
      ls >> name >> count;
      if (name == "vertex") {
        if (vertex_seen) throw FormatError(ctx + ": duplicate vertex element");
        vertex_seen = true;
        in_vertex = true;
        vertex_count = count;
      } else {
        if (!vertex_seen) throw FormatError(ctx + ": vertex must be the first element");
        in_vertex = false;
      }
    } else if (word == "property" && in_vertex) {
      std::string type, name;
      ls >> type;
      if (type == "list") throw FormatError(ctx + ": list properties are not supported on vertex");
      ls >> name;
      const std::size_t size = ply_type_size(type);
      if (size == 0) throw FormatError(ctx + ": unknown property type '" + type + "'");
      props.push_back({name, type, stride, size});
      stride += size;
    } else if (word == "end_header") {
      break;
    }
  }
  if (!binary_le) throw FormatError(ctx + ": only binary_little_endian PLY is supported");
  if (!vertex_seen) throw FormatError(ctx + ": no vertex element");

  auto find = [&](const std::string& name) -> const PlyProperty& {
    for (const auto& p : props) {
      if (p.name == name) return p;
    }
    throw FormatError(ctx + ": missing required property '" + name + "'");
  };
  const char* names[] = {"x",       "y",       "z",       "scale_0", "scale_1", "scale_2",
                         "rot_0",   "rot_1",   "rot_2",   "rot_3",   "opacity"};
  std::vector<const PlyProperty*> fields;
  for (const char* n : names) fields.push_back(&find(n));

  std::vector<char> block(vertex_count * stride);
  in.read(block.data(), static_cast<std::streamsize>(block.size()));
  if (static_cast<std::size_t>(in.gcount()) != block.size()) {
    throw FormatError(ctx + ": truncated vertex data");
  }

  GaussianScene scene;
  scene.gaussians.resize(vertex_count);
  double v[11];
  for (std::size_t i = 0; i < vertex_count; ++i) {
    const char* row = block.data() + i * stride;
    for (std::size_t f = 0; f < fields.size(); ++f) {
      v[f] = read_ply_scalar(row + fields[f]->offset, fields[f]->type);
      if (std::isnan(v[f])) {
        throw DataError(ctx + ": NaN in property '" + fields[f]->name + "' of element " +
                        std::to_string(i));
      }
    }
    auto& g = scene.gaussians[i];
    g.center = Vec3(v[0], v[1], v[2]);
    g.scale = Vec3(std::exp(v[3]), std::exp(v[4]), std::exp(v[5]));
    g.rotation = normalized_quat(v[6], v[7], v[8], v[9], ctx + " element " + std::to_string(i));
    g.opacity = sigmoid(v[10]);
  }
  return scene;
}

void write_gaussian_ply(const GaussianScene& scene, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write PLY file " + path.string());
  const char* names[] = {"x",       "y",       "z",       "nx",      "ny",      "nz",
                         "f_dc_0",  "f_dc_1",  "f_dc_2",  "opacity", "scale_0", "scale_1",
                         "scale_2", "rot_0",   "rot_1",   "rot_2",   "rot_3"};
  out << "ply\nformat binary_little_endian 1.0\nelement vertex " << scene.size() << "\n";
  for (const char* n : names) out << "property float " << n << "\n";
  out << "end_header\n";
  std::vector<float> row(std::size(names));
  for (const auto& g : scene.gaussians) {
    row = {static_cast<float>(g.center.x()),
           static_cast<float>(g.center.y()),
           static_cast<float>(g.center.z()),
           0.f, 0.f, 0.f, 0.f, 0.f, 0.f,
           static_cast<float>(logit(g.opacity)),
           static_cast<float>(std::log(g.scale.x())),
           static_cast<float>(std::log(g.scale.y())),
           static_cast<float>(std::log(g.scale.z())),
           static_cast<float>(g.rotation.w()),
           static_cast<float>(g.rotation.x()),
           static_cast<float>(g.rotation.y()),
           static_cast<float>(g.rotation.z())};
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw FormatError("failed writing PLY file " + path.string());
}

// --- cameras ---------------------------------------------------------------

std::vector<CameraView> cameras_from_json(const json& j) {
  if (!j.is_array()) throw FormatError("cameras: expected a JSON array");
  std::vector<CameraView> views;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& r = j[i];
    const std::string ctx = "camera record " + std::to_string(i);
    CameraView v;
    v.view_id = get_field<std::string>(r, "view_id", ctx);
    v.width = get_field<int>(r, "width", ctx);
    v.height = get_field<int>(r, "height", ctx);
    v.fx = get_field<double>(r, "fx", ctx);
    v.fy = get_field<double>(r, "fy", ctx);
    v.cx = get_field<double>(r, "cx", ctx);
    v.cy = get_field<double>(r, "cy", ctx);
    v.rotation = normalized_quat(get_field<double>(r, "qw", ctx), get_field<double>(r, "qx", ctx),
                                 get_field<double>(r, "qy", ctx), get_field<double>(r, "qz", ctx),
                                 ctx);
    v.translation = Vec3(get_field<double>(r, "tx", ctx), get_field<double>(r, "ty", ctx),
                         get_field<double>(r, "tz", ctx));
    if (v.width <= 0 || v.height <= 0) throw DataError(ctx + ": width and height must be positive");
    if (!(v.fx > 0) || !(v.fy > 0)) throw DataError(ctx + ": focal lengths must be positive");
    if (!seen.insert(v.view_id).second) throw DataError("duplicate view_id '" + v.view_id + "'");
    views.push_back(std::move(v));
  }
  std::sort(views.begin(), views.end(),
            [](const CameraView& a, const CameraView& b) { return a.view_id < b.view_id; });
  return views;
}

json cameras_to_json(const std::vector<CameraView>& views) {
  json arr = json::array();
  for (const auto& v : views) {
    arr.push_back({{"view_id", v.view_id},
                   {"width", v.width},
                   {"height", v.height},
                   {"fx", v.fx},
                   {"fy", v.fy},
                   {"cx", v.cx},
                   {"cy", v.cy},
                   {"qw", v.rotation.w()},
                   {"qx", v.rotation.x()},
                   {"qy", v.rotation.y()},
                   {"qz", v.rotation.z()},
                   {"tx", v.translation.x()},
                   {"ty", v.translation.y()},
                   {"tz", v.translation.z()}});
  }
  return arr;
}

std::vector<CameraView> read_cameras(const fs::path& path) {
  try {
    return cameras_from_json(read_json_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_cameras(const std::vector<CameraView>& views, const fs::path& path) {
  write_json_file(cameras_to_json(views), path, 2);
}

// --- masks -----------------------------------------------------------------

json rle_to_json(const RleMask& rle) {
  return {{"size", {rle.height, rle.width}}, {"counts", rle.counts}};
}

RleMask rle_from_json(const json& j) {
  RleMask rle;
  const auto size = get_field<std::vector<int>>(j, "size", "rle");
  if (size.size() != 2) throw FormatError("rle: size must be [height, width]");
  rle.height = size[0];
  rle.width = size[1];
  rle.counts = get_field<std::vector<std::uint32_t>>(j, "counts", "rle");
  return rle;
}

namespace {

BinaryMask decode_region(const json& m, int height, int width, const std::string& ctx) {
  const RleMask rle = rle_from_json(require(m, "rle", ctx));
  if (rle.height != height || rle.width != width) {
    throw DataError(ctx + ": region size does not match the view");
  }
  try {
    return rle_decode(rle);
  } catch (const DataError& e) {
    throw DataError(ctx + ": " + e.what());
  }
}

void check_unit_interval(double v, const char* name, const std::string& ctx) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw DataError(ctx + ": " + name + " outside [0, 1]: " + std::to_string(v));
  }
}

}  // namespace

ViewMaskSet masks_from_json(const json& j) {
  ViewMaskSet set;
  set.view_id = get_field<std::string>(j, "view_id", "mask file");
  const std::string ctx = "masks of view '" + set.view_id + "'";
  set.height = get_field<int>(j, "height", ctx);
  set.width = get_field<int>(j, "width", ctx);
  std::set<MaskId> ids;
  for (const json& m : require(j, "masks", ctx)) {
    const auto id = get_field<MaskId>(m, "mask_id", ctx);
    const std::string mctx = ctx + " mask " + std::to_string(id);
    if (!ids.insert(id).second) throw DataError(mctx + ": duplicate mask_id");
    const double det = get_field<double>(m, "det_conf", mctx);
    const double seg = get_field<double>(m, "seg_conf", mctx);
    check_unit_interval(det, "det_conf", mctx);
    check_unit_interval(seg, "seg_conf", mctx);
    BinaryMask region = decode_region(m, set.height, set.width, mctx);
    if (pixel_count(region) == 0) throw DataError(mctx + ": empty region");
    set.masks.push_back(MaskInstance::make(id, get_field<std::string>(m, "label", mctx), det, seg,
                                           std::move(region)));
  }
  std::sort(set.masks.begin(), set.masks.end(),
            [](const MaskInstance& a, const MaskInstance& b) { return a.mask_id < b.mask_id; });
  return set;
}

json masks_to_json(const ViewMaskSet& set) {
  json masks = json::array();
  for (const auto& m : set.masks) {
    masks.push_back({{"mask_id", m.mask_id},
                     {"label", m.label},
                     {"det_conf", m.det_conf},
                     {"seg_conf", m.seg_conf},
                     {"rle", rle_to_json(rle_encode(m.region))}});
  }
  return {{"view_id", set.view_id}, {"height", set.height}, {"width", set.width},
          {"masks", masks}};
}

ViewMaskSet read_masks(const fs::path& path) {
  try {
    return masks_from_json(read_json_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_masks(const ViewMaskSet& set, const fs::path& path) {
  write_json_file(masks_to_json(set), path);
}

namespace {

std::vector<fs::path> json_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw FormatError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

std::map<std::string, ViewMaskSet> read_mask_dir(const fs::path& dir) {
  std::map<std::string, ViewMaskSet> out;
  for (const auto& f : json_files(dir)) {
    ViewMaskSet set = read_masks(f);
    std::string id = set.view_id;
    if (!out.emplace(id, std::move(set)).second) {
      throw DataError(dir.string() + ": two mask files for view '" + id + "'");
    }
  }
  return out;
}

RelabeledMaskSet relabeled_masks_from_json(const json& j) {
  RelabeledMaskSet set;
  set.view_id = get_field<std::string>(j, "view_id", "relabeled mask file");
  const std::string ctx = "relabeled masks of view '" + set.view_id + "'";
  set.height = get_field<int>(j, "height", ctx);
  set.width = get_field<int>(j, "width", ctx);
  for (const json& m : require(j, "masks", ctx)) {
    RelabeledMask r;
    r.mask_id = get_field<MaskId>(m, "mask_id", ctx);
    const std::string mctx = ctx + " mask " + std::to_string(r.mask_id);
    const auto oid = get_field<std::int64_t>(m, "object_id", mctx);
    if (oid >= 0) r.object_id = static_cast<ObjectId>(oid);
    r.label = fold_label(get_field<std::string>(m, "label", mctx));
    r.confidence = m.value("confidence", 1.0);
    r.region = decode_region(m, set.height, set.width, mctx);
    set.masks.push_back(std::move(r));
  }
  return set;
}

json relabeled_masks_to_json(const RelabeledMaskSet& set) {
  json masks = json::array();
  for (const auto& m : set.masks) {
    masks.push_back({{"mask_id", m.mask_id},
                     {"object_id", m.object_id ? static_cast<std::int64_t>(*m.object_id) : -1},
                     {"label", m.label},
                     {"confidence", m.confidence},
                     {"rle", rle_to_json(rle_encode(m.region))}});
  }
  return {{"view_id", set.view_id}, {"height", set.height}, {"width", set.width},
          {"masks", masks}};
}

RelabeledMaskSet read_relabeled_masks(const fs::path& path) {
  try {
    return relabeled_masks_from_json(read_json_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_relabeled_masks(const RelabeledMaskSet& set, const fs::path& path) {
  write_json_file(relabeled_masks_to_json(set), path);
}

std::map<std::string, RelabeledMaskSet> read_relabeled_dir(const fs::path& dir) {
  std::map<std::string, RelabeledMaskSet> out;
  for (const auto& f : json_files(dir)) {
    RelabeledMaskSet set = read_relabeled_masks(f);
    std::string id = set.view_id;
    if (!out.emplace(id, std::move(set)).second) {
      throw DataError(dir.string() + ": two mask files for view '" + id + "'");
    }
  }
  return out;
}

// --- codebook --------------------------------------------------------------

namespace {

ObjectId default_next_id(const ObjectCodebook& cb) {
  ObjectId next = 0;
  for (const auto& o : cb.objects) next = std::max(next, o.object_id + 1);
  return next;
}

}  // namespace

json codebook_to_json(const ObjectCodebook& codebook) {
  json objects = json::array();
  for (const auto& o : codebook.objects) {
    json refs = json::array();
    for (const auto& r : o.mask_refs) {
      refs.push_back({{"view_id", r.view_id}, {"mask_id", r.mask_id}, {"confidence", r.confidence}});
    }
    objects.push_back({{"object_id", o.object_id},
                       {"final_label", o.final_label},
                       {"object_confidence", o.object_confidence},
                       {"label_votes", o.label_votes},
                       {"mask_refs", refs},
                       {"gaussian_indices", o.gaussian_indices},
                       {"gaussian_weights", o.gaussian_weights}});
  }
  json j = {{"objects", objects}};
  if (codebook.next_id != default_next_id(codebook)) j["next_id"] = codebook.next_id;
  if (codebook.postprocessed) j["postprocessed"] = true;
  return j;
}

ObjectCodebook codebook_from_json(const json& j) {
  ObjectCodebook cb;
  std::set<ObjectId> ids;
  for (const json& o : require(j, "objects", "codebook")) {
    CodebookObject obj;
    obj.object_id = get_field<ObjectId>(o, "object_id", "codebook object");
    const std::string ctx = "codebook object " + std::to_string(obj.object_id);
    if (!ids.insert(obj.object_id).second) throw DataError(ctx + ": duplicate object_id");
    obj.final_label = o.value("final_label", std::string{});
    obj.object_confidence = o.value("object_confidence", 0.0);
    obj.label_votes = get_field<std::map<std::string, double>>(o, "label_votes", ctx);
    for (const json& r : require(o, "mask_refs", ctx)) {
      obj.mask_refs.push_back({get_field<std::string>(r, "view_id", ctx),
                               get_field<MaskId>(r, "mask_id", ctx),
                               get_field<double>(r, "confidence", ctx)});
    }
    obj.gaussian_indices = get_field<std::vector<GaussianIndex>>(o, "gaussian_indices", ctx);
    obj.gaussian_weights = get_field<std::vector<double>>(o, "gaussian_weights", ctx);
    if (obj.gaussian_indices.size() != obj.gaussian_weights.size()) {
      throw DataError(ctx + ": gaussian_indices and gaussian_weights differ in length");
    }
    if (std::adjacent_find(obj.gaussian_indices.begin(), obj.gaussian_indices.end(),
                           std::greater_equal<>()) != obj.gaussian_indices.end()) {
      throw DataError(ctx + ": gaussian_indices must be strictly ascending");
    }
    cb.objects.push_back(std::move(obj));
  }
  std::sort(cb.objects.begin(), cb.objects.end(),
            [](const CodebookObject& a, const CodebookObject& b) {
              return a.object_id < b.object_id;
            });
  cb.next_id = j.contains("next_id") ? j["next_id"].get<ObjectId>() : default_next_id(cb);
  cb.postprocessed = j.value("postprocessed", false);
  return cb;
}

std::string codebook_to_string(const ObjectCodebook& codebook) {
  return codebook_to_json(codebook).dump();
}

void write_codebook(const ObjectCodebook& codebook, const fs::path& path) {
  write_json_file(codebook_to_json(codebook), path);
}

ObjectCodebook read_codebook(const fs::path& path) {
  try {
    return codebook_from_json(read_json_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// --- boxes -----------------------------------------------------------------

json boxes_to_json(const std::vector<BBox>& boxes) {
  json arr = json::array();
  for (const auto& b : boxes) {
    json jb = {{"view_id", b.view_id}, {"label", b.label},   {"confidence", b.confidence},
               {"x_min", b.x_min},     {"y_min", b.y_min},   {"x_max", b.x_max},
               {"y_max", b.y_max}};
    if (b.object_id) jb["object_id"] = *b.object_id;
    arr.push_back(std::move(jb));
  }
  return {{"boxes", arr}};
}

std::vector<BBox> boxes_from_json(const json& j) {
  std::vector<BBox> out;
  for (const json& jb : require(j, "boxes", "box file")) {
    BBox b;
    b.view_id = get_field<std::string>(jb, "view_id", "box");
    b.label = fold_label(get_field<std::string>(jb, "label", "box"));
    b.confidence = jb.value("confidence", 1.0);
    if (jb.contains("object_id")) b.object_id = jb["object_id"].get<ObjectId>();
    b.x_min = get_field<double>(jb, "x_min", "box");
    b.y_min = get_field<double>(jb, "y_min", "box");
    b.x_max = get_field<double>(jb, "x_max", "box");
    b.y_max = get_field<double>(jb, "y_max", "box");
    if (b.x_min > b.x_max || b.y_min > b.y_max) throw DataError("box with inverted extents");
    out.push_back(std::move(b));
  }
  return out;
}

void write_boxes(const std::vector<BBox>& boxes, const fs::path& path) {
  write_json_file(boxes_to_json(boxes), path, 2);
}

std::vector<BBox> read_boxes(const fs::path& path) {
  try {
    return boxes_from_json(read_json_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// --- depth dumps -----------------------------------------------------------

void write_depth_dump(const DepthImage& depth, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write depth dump " + path.string());
  const std::uint32_t header[2] = {static_cast<std::uint32_t>(depth.height()),
                                   static_cast<std::uint32_t>(depth.width())};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  std::vector<float> values(depth.size());
  std::transform(depth.values().begin(), depth.values().end(), values.begin(),
                 [](double d) { return static_cast<float>(d); });
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(float)));
  if (!out) throw FormatError("failed writing depth dump " + path.string());
}

DepthImage read_depth_dump(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open depth dump " + path.string());
  std::uint32_t header[2] = {0, 0};
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in) throw FormatError(path.string() + ": truncated header");
  DepthImage depth(static_cast<int>(header[1]), static_cast<int>(header[0]));
  std::vector<float> values(depth.size());
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != values.size() * sizeof(float)) {
    throw FormatError(path.string() + ": truncated depth data");
  }
  std::copy(values.begin(), values.end(), depth.values().begin());
  return depth;
}

// --- config / diagnostics --------------------------------------------------

PipelineConfig config_from_json(const json& j, PipelineConfig cfg) {
  if (!j.is_object()) throw FormatError("config: expected a JSON object");
  auto set = [&](const char* key, auto& field) {
    if (auto it = j.find(key); it != j.end()) {
      try {
        field = it->get<std::decay_t<decltype(field)>>();
      } catch (const json::exception& e) {
        throw FormatError(std::string("config: bad value for '") + key + "': " + e.what());
      }
    }
  };
  set("tau_overlap", cfg.tau_overlap);
  set("tau_filter1", cfg.tau_filter1);
  set("tau_spatial", cfg.tau_spatial);
  set("tau_filter2", cfg.tau_filter2);
  set("tau_object", cfg.tau_object);
  set("depth_bound", cfg.depth_bound);
  set("half_width", cfg.half_width);
  set("min_pts", cfg.min_pts);
  set("membership_cutoff", cfg.membership_cutoff);
  set("near", cfg.near);
  set("min_visible", cfg.min_visible);
  set("auto_label_threshold", cfg.auto_label_threshold);
  set("enable_depth_test", cfg.enable_depth_test);
  set("enable_semantic_constraint", cfg.enable_semantic_constraint);
  set("enable_filter1", cfg.enable_filter1);
  set("enable_spatial_merge", cfg.enable_spatial_merge);
  set("enable_filter2", cfg.enable_filter2);
  set("enable_object_filter", cfg.enable_object_filter);
  set("enable_outlier_removal", cfg.enable_outlier_removal);
  if (auto it = j.find("postprocess_mode"); it != j.end()) {
    auto mode = parse_postprocess_mode(it->get<std::string>());
    if (!mode) throw FormatError("config: postprocess_mode must be auto, on or off");
    cfg.postprocess_mode = *mode;
  }
  if (auto it = j.find("neighborhood"); it != j.end()) {
    const auto name = it->get<std::string>();
    if (name == "exclude-row-column") {
      cfg.neighborhood = NeighborhoodRule::ExcludeRowColumn;
    } else if (name == "exclude-center") {
      cfg.neighborhood = NeighborhoodRule::ExcludeCenter;
    } else {
      throw FormatError("config: neighborhood must be exclude-row-column or exclude-center");
    }
  }
  return cfg;
}

json config_to_json(const PipelineConfig& cfg) {
  return {{"tau_overlap", cfg.tau_overlap},
          {"tau_filter1", cfg.tau_filter1},
          {"tau_spatial", cfg.tau_spatial},
          {"tau_filter2", cfg.tau_filter2},
          {"tau_object", cfg.tau_object},
          {"depth_bound", cfg.depth_bound},
          {"half_width", cfg.half_width},
          {"neighborhood", cfg.neighborhood == NeighborhoodRule::ExcludeRowColumn
                               ? "exclude-row-column"
                               : "exclude-center"},
          {"min_pts", cfg.min_pts},
          {"membership_cutoff", cfg.membership_cutoff},
          {"near", cfg.near},
          {"min_visible", cfg.min_visible},
          {"postprocess_mode", postprocess_mode_name(cfg.postprocess_mode)},
          {"auto_label_threshold", cfg.auto_label_threshold},
          {"enable_depth_test", cfg.enable_depth_test},
          {"enable_semantic_constraint", cfg.enable_semantic_constraint},
          {"enable_filter1", cfg.enable_filter1},
          {"enable_spatial_merge", cfg.enable_spatial_merge},
          {"enable_filter2", cfg.enable_filter2},
          {"enable_object_filter", cfg.enable_object_filter},
          {"enable_outlier_removal", cfg.enable_outlier_removal}};
}

PipelineConfig read_config(const fs::path& path, PipelineConfig base) {
  return config_from_json(read_json_file(path), base);
}

json warning_to_json(const Warning& w) {
  json j = {{"level", "warning"}, {"stage", w.stage}, {"kind", w.kind}};
  if (!w.view_id.empty()) j["view_id"] = w.view_id;
  if (w.mask_id) j["mask_id"] = *w.mask_id;
  if (w.object_id) j["object_id"] = *w.object_id;
  if (!w.message.empty()) j["message"] = w.message;
  return j;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": invalid JSON: " + e.what());
  }
}

void write_json_file(const json& j, const fs::path& path, int indent) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump(indent) << "\n";
  if (!out) throw FormatError("failed writing " + path.string());
}

}  // namespace gsc
