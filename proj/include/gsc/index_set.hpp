#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gsc/core.hpp"

namespace gsc {

// Set algebra over sorted, duplicate-free index vectors.

inline std::size_t intersection_size(std::span<const GaussianIndex> a,
                                     std::span<const GaussianIndex> b) {
  std::size_t i = 0, j = 0, n = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

// Merges a weighted set into another: indices are unioned and weights of
// shared indices are summed.
inline void merge_weighted(std::vector<GaussianIndex>& indices, std::vector<double>& weights,
                           std::span<const GaussianIndex> add_indices,
                           std::span<const double> add_weights) {
  std::vector<GaussianIndex> out_idx;
  std::vector<double> out_w;
  out_idx.reserve(indices.size() + add_indices.size());
  out_w.reserve(indices.size() + add_indices.size());
  std::size_t i = 0, j = 0;
  while (i < indices.size() || j < add_indices.size()) {
    if (j == add_indices.size() || (i < indices.size() && indices[i] < add_indices[j])) {
      out_idx.push_back(indices[i]);
      out_w.push_back(weights[i]);
      ++i;
    } else if (i == indices.size() || add_indices[j] < indices[i]) {
      out_idx.push_back(add_indices[j]);
      out_w.push_back(add_weights[j]);
      ++j;
    } else {
      out_idx.push_back(indices[i]);
      out_w.push_back(weights[i] + add_weights[j]);
      ++i;
      ++j;
    }
  }
  indices = std::move(out_idx);
  weights = std::move(out_w);
}

}  // namespace gsc
