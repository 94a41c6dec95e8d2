#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "gsc/core.hpp"

namespace gsc {

using Rgb = std::array<std::uint8_t, 3>;
using RgbImage = Raster<Rgb>;

// Fixed hash-based color for an object id; identical across views and runs.
Rgb palette_color(ObjectId id);

inline constexpr Rgb kUnassignedColor{128, 128, 128};

// Masks painted in ascending mask_id order onto a black canvas.
RgbImage render_mask_overlay(const RelabeledMaskSet& set);
// Boxes drawn as 2 px outlines onto a black canvas.
RgbImage render_box_overlay(int width, int height, const std::vector<BBox>& boxes);

void write_png(const RgbImage& image, const std::filesystem::path& path);
RgbImage read_png(const std::filesystem::path& path);

// Write the PNG plus a "<png>.json" sidecar listing object ids, labels and colors.
void write_mask_overlay(const RelabeledMaskSet& set, const std::filesystem::path& png_path);
void write_box_overlay(const std::string& view_id, int width, int height,
                       const std::vector<BBox>& boxes, const std::filesystem::path& png_path);

}  // namespace gsc
