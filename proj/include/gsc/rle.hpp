#pragma once

#include <cstdint>
#include <vector>

#include "gsc/raster.hpp"

namespace gsc {

// Uncompressed COCO-style run-length encoding: column-major runs that
// alternate background/foreground, starting with a (possibly empty)
// background run.
struct RleMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint32_t> counts;

  bool operator==(const RleMask&) const = default;
};

RleMask rle_encode(const BinaryMask& mask);

// Throws DataError when the runs do not cover height * width pixels exactly.
BinaryMask rle_decode(const RleMask& rle);

}  // namespace gsc
