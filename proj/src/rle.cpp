#include "gsc/rle.hpp"

#include <string>

#include "gsc/error.hpp"

namespace gsc {

RleMask rle_encode(const BinaryMask& mask) {
  RleMask rle{mask.height(), mask.width(), {}};
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (int x = 0; x < mask.width(); ++x) {
    for (int y = 0; y < mask.height(); ++y) {
      const std::uint8_t v = mask(x, y) != 0 ? 1 : 0;
      if (v != current) {
        rle.counts.push_back(run);
        run = 0;
        current = v;
      }
      ++run;
    }
  }
  rle.counts.push_back(run);
  return rle;
}

BinaryMask rle_decode(const RleMask& rle) {
  if (rle.height < 0 || rle.width < 0) throw DataError("RLE size must be non-negative");
  const std::uint64_t area = static_cast<std::uint64_t>(rle.height) * rle.width;
  std::uint64_t total = 0;
  for (auto c : rle.counts) total += c;
  if (total != area) {
    throw DataError("RLE counts sum to " + std::to_string(total) + " but mask area is " +
                    std::to_string(area));
  }
  BinaryMask mask(rle.width, rle.height, 0);
  std::uint64_t pos = 0;
  std::uint8_t value = 0;
  for (auto c : rle.counts) {
    if (value != 0) {
      for (std::uint64_t k = pos; k < pos + c; ++k) {
        const int x = static_cast<int>(k / rle.height);
        const int y = static_cast<int>(k % rle.height);
        mask(x, y) = 1;
      }
    }
    pos += c;
    value ^= 1;
  }
  return mask;
}

}  // namespace gsc
