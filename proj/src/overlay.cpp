#include "gsc/overlay.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <set>

#include <png.h>

#include "gsc/error.hpp"
#include "gsc/io.hpp"

namespace gsc {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

nlohmann::json color_json(const Rgb& c) { return {c[0], c[1], c[2]}; }

}  // namespace

Rgb palette_color(ObjectId id) {
  const std::uint64_t h = splitmix64(static_cast<std::uint64_t>(id) + 1);
  // Keep channels in [64, 255] so colors stand out from the black canvas.
  auto channel = [h](int shift) {
    return static_cast<std::uint8_t>(64 + ((h >> shift) & 0xff) * 191 / 255);
  };
  return {channel(0), channel(8), channel(16)};
}

RgbImage render_mask_overlay(const RelabeledMaskSet& set) {
  RgbImage image(set.width, set.height, Rgb{0, 0, 0});
  std::vector<const RelabeledMask*> order;
  for (const auto& m : set.masks) order.push_back(&m);
  std::sort(order.begin(), order.end(),
            [](const RelabeledMask* a, const RelabeledMask* b) { return a->mask_id < b->mask_id; });
  for (const RelabeledMask* m : order) {
    const Rgb color = m->object_id ? palette_color(*m->object_id) : kUnassignedColor;
    for (int y = 0; y < set.height; ++y) {
      for (int x = 0; x < set.width; ++x) {
        if (m->region(x, y)) image(x, y) = color;
      }
    }
  }
  return image;
}

RgbImage render_box_overlay(int width, int height, const std::vector<BBox>& boxes) {
  RgbImage image(width, height, Rgb{0, 0, 0});
  for (const auto& b : boxes) {
    const Rgb color = b.object_id ? palette_color(*b.object_id) : kUnassignedColor;
    const int x0 = std::clamp(static_cast<int>(std::lround(b.x_min + 0.5)), 0, width - 1);
    const int x1 = std::clamp(static_cast<int>(std::lround(b.x_max - 0.5)), 0, width - 1);
    const int y0 = std::clamp(static_cast<int>(std::lround(b.y_min + 0.5)), 0, height - 1);
    const int y1 = std::clamp(static_cast<int>(std::lround(b.y_max - 0.5)), 0, height - 1);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const bool edge = x - x0 < 2 || x1 - x < 2 || y - y0 < 2 || y1 - y < 2;
        if (edge) image(x, y) = color;
      }
    }
  }
  return image;
}

void write_png(const RgbImage& image, const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "wb"));
  if (!file) throw FormatError("cannot write PNG " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("failed writing PNG " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()),
               static_cast<png_uint_32>(image.height()), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height(); ++y) {
    auto* row = const_cast<png_bytep>(
        reinterpret_cast<const png_byte*>(&image(0, y)));
    png_write_row(png, row);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

RgbImage read_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw FormatError("cannot read PNG " + path.string());
  }
  img.format = PNG_FORMAT_RGB;
  RgbImage out(static_cast<int>(img.width), static_cast<int>(img.height));
  if (!png_image_finish_read(&img, nullptr, out.data(), 0, nullptr)) {
    png_image_free(&img);
    throw FormatError("failed decoding PNG " + path.string());
  }
  return out;
}

void write_mask_overlay(const RelabeledMaskSet& set, const std::filesystem::path& png_path) {
  write_png(render_mask_overlay(set), png_path);
  nlohmann::json objects = nlohmann::json::array();
  std::set<ObjectId> seen;
  for (const auto& m : set.masks) {
    if (!m.object_id || !seen.insert(*m.object_id).second) continue;
    objects.push_back({{"object_id", *m.object_id},
                       {"label", m.label},
                       {"color", color_json(palette_color(*m.object_id))}});
  }
  write_json_file({{"view_id", set.view_id}, {"objects", objects}},
                  png_path.string() + ".json", 2);
}

void write_box_overlay(const std::string& view_id, int width, int height,
                       const std::vector<BBox>& boxes, const std::filesystem::path& png_path) {
  write_png(render_box_overlay(width, height, boxes), png_path);
  nlohmann::json objects = nlohmann::json::array();
  for (const auto& b : boxes) {
    nlohmann::json o = {{"label", b.label},
                        {"confidence", b.confidence},
                        {"box", {b.x_min, b.y_min, b.x_max, b.y_max}}};
    if (b.object_id) {
      o["object_id"] = *b.object_id;
      o["color"] = color_json(palette_color(*b.object_id));
    }
    objects.push_back(std::move(o));
  }
  write_json_file({{"view_id", view_id}, {"objects", objects}}, png_path.string() + ".json", 2);
}

}  // namespace gsc
