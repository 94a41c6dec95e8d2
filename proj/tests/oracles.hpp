#pragma once

// Brute-force reference implementations shared by the unit tests and the
// acceptance runner. Each one recomputes a result the slow, obvious way.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gsc/core.hpp"
#include "gsc/splat.hpp"

namespace gsc::oracle {

// Per-pixel compositing over every splat in the scene, no tiling or culling.
inline DepthImage render_depth(const GaussianScene& scene, const CameraView& cam, double near) {
  struct Item {
    double depth;
    GaussianIndex index;
    Vec2 center;
    Mat2 inv;
    double opacity;
  };
  std::vector<Item> items;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const auto& g = scene.gaussians[i];
    if (!(g.opacity >= kMinAlpha)) continue;
    auto p = project_gaussian(g, cam, near);
    if (!p) continue;
    const Mat2 cov = p->cov2d + kCovarianceDilation * Mat2::Identity();
    items.push_back({p->depth, static_cast<GaussianIndex>(i), p->pixel, cov.inverse(), g.opacity});
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    return a.depth != b.depth ? a.depth < b.depth : a.index < b.index;
  });
  DepthImage out(cam.width, cam.height, kInfiniteDepth);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      double t = 1.0;
      for (const auto& it : items) {
        const double a = splat_alpha(it.inv, it.opacity, Vec2(x - it.center.x(), y - it.center.y()));
        if (a < kMinAlpha) continue;
        t *= 1.0 - a;
        if (1.0 - t > 0.5) {
          out(x, y) = it.depth;
          break;
        }
      }
    }
  }
  return out;
}

// Enumerates the full (2h+1)^2 window of every masked pixel.
inline ToleranceMap tolerance_map(const DepthImage& depth, const BinaryMask& region, double T,
                                  int h, NeighborhoodRule rule) {
  ToleranceMap out(region.width(), region.height(), 0.0);
  for (int y = 0; y < region.height(); ++y) {
    for (int x = 0; x < region.width(); ++x) {
      if (!region(x, y) || !std::isfinite(depth(x, y))) continue;
      double best = 0.0;
      for (int dy = -h; dy <= h; ++dy) {
        for (int dx = -h; dx <= h; ++dx) {
          const bool skip = rule == NeighborhoodRule::ExcludeRowColumn ? (dx == 0 || dy == 0)
                                                                       : (dx == 0 && dy == 0);
          if (skip || !region.contains(x + dx, y + dy) || !region(x + dx, y + dy)) continue;
          const double dn = depth(x + dx, y + dy);
          if (!std::isfinite(dn)) continue;
          const double diff = std::abs(depth(x, y) - dn);
          if (diff <= T) best = std::max(best, diff);
        }
      }
      out(x, y) = best;
    }
  }
  return out;
}

struct Association {
  std::vector<GaussianIndex> indices;
  double weight = 0;
};

// Per-Gaussian evaluation of the inlier test, with its own pixel arithmetic.
inline Association associate(const GaussianScene& scene, const CameraView& cam,
                             const MaskInstance& mask, const DepthImage& depth,
                             const ToleranceMap& tol, const PipelineConfig& cfg) {
  Association out;
  double sum = 0;
  std::size_t count = 0;
  for (int y = 0; y < mask.region.height(); ++y) {
    for (int x = 0; x < mask.region.width(); ++x) {
      if (mask.region(x, y) && std::isfinite(depth(x, y))) {
        sum += depth(x, y);
        ++count;
      }
    }
  }
  out.weight = mask.confidence / (sum / static_cast<double>(count));
  for (std::size_t i = 0; i < scene.size(); ++i) {
    // Depth maps hold camera-space z from this transform, so ties at the band
    // edges only compare exactly when it is shared.
    const Vec3 v = cam.to_camera(scene.gaussians[i].center);
    if (!(v[2] > cfg.near)) continue;
    const int px = static_cast<int>(std::floor(cam.fx * v[0] / v[2] + cam.cx + 0.5));
    const int py = static_cast<int>(std::floor(cam.fy * v[1] / v[2] + cam.cy + 0.5));
    if (!mask.region.contains(px, py) || !mask.region(px, py)) continue;
    if (cfg.enable_depth_test) {
      const double d = depth(px, py);
      if (!std::isfinite(d) || !(d - tol(px, py) <= v[2] && v[2] <= d + tol(px, py))) continue;
    }
    out.indices.push_back(static_cast<GaussianIndex>(i));
  }
  return out;
}

// Components of the mutual-overlap graph by Warshall transitive closure; each
// component is folded into its lowest-position member in ascending order.
inline ObjectCodebook spatial_merge(const ObjectCodebook& cb, double tau) {
  const std::size_t n = cb.objects.size();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) {
    reach[i][i] = true;
    for (std::size_t j = 0; j < n; ++j) {
      const auto& a = cb.objects[i].gaussian_indices;
      const auto& b = cb.objects[j].gaussian_indices;
      if (i == j || a.empty() || b.empty()) continue;
      std::vector<GaussianIndex> common;
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
      const double inter = static_cast<double>(common.size());
      if (inter / a.size() > tau && inter / b.size() > tau) reach[i][j] = true;
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (reach[i][k] && reach[k][j]) reach[i][j] = true;
      }
    }
  }
  ObjectCodebook out;
  out.next_id = cb.next_id;
  out.postprocessed = cb.postprocessed;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t root = i;
    for (std::size_t j = 0; j < i; ++j) {
      if (reach[i][j]) {
        root = j;
        break;
      }
    }
    if (root != i) continue;
    CodebookObject obj = cb.objects[i];
    std::map<GaussianIndex, double> weights;
    for (std::size_t k = 0; k < obj.size(); ++k) weights[obj.gaussian_indices[k]] = obj.gaussian_weights[k];
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!reach[i][j]) continue;
      const auto& src = cb.objects[j];
      for (std::size_t k = 0; k < src.size(); ++k) weights[src.gaussian_indices[k]] += src.gaussian_weights[k];
      for (const auto& [label, v] : src.label_votes) obj.label_votes[label] += v;
      obj.mask_refs.insert(obj.mask_refs.end(), src.mask_refs.begin(), src.mask_refs.end());
    }
    obj.gaussian_indices.clear();
    obj.gaussian_weights.clear();
    for (const auto& [g, wt] : weights) {
      obj.gaussian_indices.push_back(g);
      obj.gaussian_weights.push_back(wt);
    }
    out.objects.push_back(std::move(obj));
  }
  return out;
}

struct Dbscan {
  std::vector<int> labels;  // -1 for noise
  std::vector<bool> core;
};

// Textbook DBSCAN; a point's own position counts toward min_pts.
inline Dbscan dbscan(const std::vector<Vec3>& pts, double eps, int min_pts) {
  const std::size_t n = pts.size();
  std::vector<std::vector<std::size_t>> nb(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if ((pts[i] - pts[j]).norm() <= eps) nb[i].push_back(j);
    }
  }
  Dbscan out{std::vector<int>(n, -1), std::vector<bool>(n, false)};
  for (std::size_t i = 0; i < n; ++i) out.core[i] = nb[i].size() >= static_cast<std::size_t>(min_pts);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!out.core[i] || out.labels[i] >= 0) continue;
    std::vector<std::size_t> stack{i};
    out.labels[i] = next;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      if (!out.core[p]) continue;
      for (std::size_t q : nb[p]) {
        if (out.labels[q] < 0) {
          out.labels[q] = next;
          stack.push_back(q);
        }
      }
    }
    ++next;
  }
  return out;
}

// Offline Kneedle for a concave increasing curve over x = 0..n-1: the first
// strict local maximum of the difference curve whose value is undercut by a
// later point before the next maximum.
inline std::optional<std::size_t> kneedle(const std::vector<double>& y, double s = 1.0) {
  const std::size_t n = y.size();
  if (n < 3) return std::nullopt;
  const double lo = *std::min_element(y.begin(), y.end());
  const double hi = *std::max_element(y.begin(), y.end());
  if (!(hi > lo)) return std::nullopt;
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = (y[i] - lo) / (hi - lo) - static_cast<double>(i) / static_cast<double>(n - 1);
  }
  std::vector<std::size_t> maxima;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (d[i] > d[i - 1] && d[i] >= d[i + 1]) maxima.push_back(i);
  }
  const double step = s / static_cast<double>(n - 1);
  for (std::size_t m = 0; m < maxima.size(); ++m) {
    const double threshold = d[maxima[m]] - step;
    const std::size_t end = m + 1 < maxima.size() ? maxima[m + 1] : n;
    for (std::size_t j = maxima[m] + 1; j < end; ++j) {
      if (d[j] < threshold) return maxima[m];
    }
  }
  return std::nullopt;
}

// All-point interpolated AP by re-running greedy matching at every distinct
// confidence threshold. Ranking matches the evaluator: confidence, then
// object id, then view id.
inline double sweep_ap(std::vector<BBox> preds, const std::vector<BBox>& gts, double iou_thr) {
  if (gts.empty()) return 0.0;
  std::stable_sort(preds.begin(), preds.end(), [](const BBox& a, const BBox& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    const auto ia = a.object_id.value_or(std::numeric_limits<ObjectId>::max());
    const auto ib = b.object_id.value_or(std::numeric_limits<ObjectId>::max());
    if (ia != ib) return ia < ib;
    return a.view_id < b.view_id;
  });
  std::vector<double> thresholds;
  for (const auto& p : preds) thresholds.push_back(p.confidence);
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  std::vector<double> rec{0.0}, prec{1.0};
  for (double t : thresholds) {
    std::vector<bool> used(gts.size(), false);
    std::size_t tp = 0, fp = 0;
    for (const auto& p : preds) {
      if (p.confidence < t) continue;
      std::optional<std::size_t> hit;
      double best = -1;
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (used[g] || gts[g].view_id != p.view_id) continue;
        const double iou = box_iou(p, gts[g]);
        if (iou >= iou_thr && iou > best) {
          best = iou;
          hit = g;
        }
      }
      if (hit) {
        used[*hit] = true;
        ++tp;
      } else {
        ++fp;
      }
    }
    rec.push_back(static_cast<double>(tp) / static_cast<double>(gts.size()));
    prec.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
  }
  double ap = 0;
  for (std::size_t i = 1; i < rec.size(); ++i) {
    const double p = *std::max_element(prec.begin() + static_cast<std::ptrdiff_t>(i), prec.end());
    ap += (rec[i] - rec[i - 1]) * p;
  }
  return ap;
}

// Mean AP over the gt classes, as a fraction.
inline double sweep_map(const std::vector<BBox>& preds, const std::vector<BBox>& gts, double thr) {
  std::map<std::string, std::vector<BBox>> p, g;
  for (const auto& b : preds) p[fold_label(b.label)].push_back(b);
  for (const auto& b : gts) g[fold_label(b.label)].push_back(b);
  if (g.empty()) return 0.0;
  double sum = 0;
  for (const auto& [label, boxes] : g) sum += sweep_ap(p[label], boxes, thr);
  return sum / static_cast<double>(g.size());
}

// Two partitions agree when some bijection maps one's labels onto the other's.
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b,
                           const std::vector<bool>& only) {
  std::map<int, int> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!only[i]) continue;
    if (a[i] < 0 || b[i] < 0) {
      if (a[i] != b[i]) return false;
      continue;
    }
    auto [it, fresh] = ab.emplace(a[i], b[i]);
    if (!fresh && it->second != b[i]) return false;
    auto [jt, fresh2] = ba.emplace(b[i], a[i]);
    if (!fresh2 && jt->second != a[i]) return false;
  }
  return true;
}

}  // namespace gsc::oracle
