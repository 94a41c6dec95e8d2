#include "gsc/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <tuple>

namespace gsc {

double object_confidence(const CodebookObject& object) {
  if (object.mask_refs.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& ref : object.mask_refs) sum += ref.confidence;
  const double n = static_cast<double>(object.mask_refs.size());
  return std::log(n) * (sum / n);
}

ObjectCodebook filter_objects(ObjectCodebook codebook, double tau_object) {
  std::vector<CodebookObject> kept;
  for (auto& obj : codebook.objects) {
    obj.object_confidence = object_confidence(obj);
    if (obj.object_confidence >= tau_object) kept.push_back(std::move(obj));
  }
  codebook.objects = std::move(kept);
  return codebook;
}

namespace {

// Distance from point i to its k-th nearest other point (k >= 1).
double kth_neighbor_distance(const std::vector<Vec3>& points, std::size_t i, int k,
                             std::vector<double>& scratch) {
  scratch.clear();
  for (std::size_t j = 0; j < points.size(); ++j) {
    if (j != i) scratch.push_back((points[i] - points[j]).norm());
  }
  auto nth = scratch.begin() + (k - 1);
  std::nth_element(scratch.begin(), nth, scratch.end());
  return *nth;
}

}  // namespace

std::optional<std::vector<double>> kdist_curve(const std::vector<Vec3>& points, int k) {
  if (k < 1 || points.size() <= static_cast<std::size_t>(k)) return std::nullopt;
  std::vector<double> out(points.size());
  std::vector<double> scratch;
  scratch.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    out[i] = kth_neighbor_distance(points, i, k, scratch);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<std::size_t> kneedle_index(const std::vector<double>& y, double sensitivity,
                                         KneeShape shape) {
  const std::size_t n = y.size();
  if (n < 2) return std::nullopt;
  const auto [lo_it, hi_it] = std::minmax_element(y.begin(), y.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) return std::nullopt;

  std::vector<double> xn(n), yn(n);
  for (std::size_t i = 0; i < n; ++i) {
    xn[i] = static_cast<double>(i) / static_cast<double>(n - 1);
    yn[i] = (y[i] - lo) / (hi - lo);
  }
  // Map every orientation onto a concave increasing curve.
  switch (shape) {
    case KneeShape::ConcaveIncreasing:
      break;
    case KneeShape::ConcaveDecreasing:
      std::reverse(yn.begin(), yn.end());
      break;
    case KneeShape::ConvexDecreasing: {
      const double m = *std::max_element(yn.begin(), yn.end());
      for (auto& v : yn) v = m - v;
      break;
    }
    case KneeShape::ConvexIncreasing: {
      const double m = *std::max_element(yn.begin(), yn.end());
      for (auto& v : yn) v = m - v;
      std::reverse(yn.begin(), yn.end());
      break;
    }
  }
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = yn[i] - xn[i];

  // Local extrema with plateaus counted; the ends compare against themselves.
  std::vector<bool> is_max(n), is_min(n);
  std::vector<std::size_t> maxima;
  for (std::size_t i = 0; i < n; ++i) {
    const double prev = diff[i == 0 ? 0 : i - 1];
    const double next = diff[i + 1 == n ? i : i + 1];
    is_max[i] = diff[i] >= prev && diff[i] >= next;
    is_min[i] = diff[i] <= prev && diff[i] <= next;
    if (is_max[i]) maxima.push_back(i);
  }
  if (maxima.empty()) return std::nullopt;
  const double step = sensitivity * (xn[n - 1] - xn[0]) / static_cast<double>(n - 1);

  std::size_t next_max = 0;
  double threshold = 0.0;
  std::size_t threshold_index = 0;
  bool active = true;
  for (std::size_t i = maxima.front(); i + 1 < n; ++i) {
    if (is_max[i]) {
      threshold = diff[maxima[next_max++]] - step;
      threshold_index = i;
      active = true;
    }
    if (is_min[i]) {
      threshold = 0.0;
      active = false;
    }
    if (active && diff[i + 1] < threshold) {
      switch (shape) {
        case KneeShape::ConcaveIncreasing:
        case KneeShape::ConvexDecreasing:
          return threshold_index;
        case KneeShape::ConvexIncreasing:
        case KneeShape::ConcaveDecreasing:
          return n - 1 - threshold_index;
      }
    }
  }
  return std::nullopt;
}

std::optional<double> kneedle_elbow(const std::vector<double>& curve, KneeShape shape,
                                    double sensitivity) {
  if (curve.size() < 3) return std::nullopt;
  const auto idx = kneedle_index(curve, sensitivity, shape);
  if (!idx) return std::nullopt;
  return curve[*idx];
}

namespace {

struct LinkageNode {
  std::size_t left, right;
  double distance;
  std::size_t size;
};

struct CondensedRow {
  std::size_t parent, child;
  double lambda;
  std::size_t size;
};

// Prim's algorithm over mutual-reachability distances, starting at point 0.
std::vector<std::tuple<std::size_t, std::size_t, double>> mutual_reachability_mst(
    const std::vector<Vec3>& pts, const std::vector<double>& core) {
  const std::size_t n = pts.size();
  std::vector<std::tuple<std::size_t, std::size_t, double>> mst;
  mst.reserve(n - 1);
  std::vector<bool> in_tree(n, false);
  std::vector<double> min_reach(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> source(n, 1);
  std::size_t current = 0;
  for (std::size_t it = 0; it + 1 < n; ++it) {
    in_tree[current] = true;
    double best = std::numeric_limits<double>::max();
    std::size_t best_src = 0, best_node = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      const double mr = std::max({core[current], core[j], (pts[current] - pts[j]).norm()});
      if (mr < min_reach[j]) {
        min_reach[j] = mr;
        source[j] = current;
        if (mr < best) {
          best = mr;
          best_src = current;
          best_node = j;
        }
      } else if (min_reach[j] < best) {
        best = min_reach[j];
        best_src = source[j];
        best_node = j;
      }
    }
    mst.emplace_back(best_src, best_node, best);
    current = best_node;
  }
  return mst;
}

std::vector<LinkageNode> single_linkage(
    std::vector<std::tuple<std::size_t, std::size_t, double>> mst, std::size_t n) {
  std::stable_sort(mst.begin(), mst.end(),
                   [](const auto& a, const auto& b) { return std::get<2>(a) < std::get<2>(b); });
  std::vector<std::size_t> parent(2 * n - 1), size(2 * n - 1, 0);
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
  std::fill(size.begin(), size.begin() + static_cast<std::ptrdiff_t>(n), 1);
  auto find = [&](std::size_t x) {
    std::size_t root = x;
    while (parent[root] != root) root = parent[root];
    while (parent[x] != root) {
      const std::size_t next = parent[x];
      parent[x] = root;
      x = next;
    }
    return root;
  };
  std::vector<LinkageNode> out;
  out.reserve(n - 1);
  std::size_t next_label = n;
  for (const auto& [a, b, d] : mst) {
    const std::size_t ca = find(a), cb = find(b);
    out.push_back({ca, cb, d, size[ca] + size[cb]});
    parent[ca] = parent[cb] = next_label;
    size[next_label] = size[ca] + size[cb];
    ++next_label;
  }
  return out;
}

std::vector<std::size_t> bfs_hierarchy(const std::vector<LinkageNode>& h, std::size_t root) {
  const std::size_t n = h.size() + 1;
  std::vector<std::size_t> result, queue{root};
  while (!queue.empty()) {
    result.insert(result.end(), queue.begin(), queue.end());
    std::vector<std::size_t> next;
    for (std::size_t x : queue) {
      if (x >= n) {
        next.push_back(h[x - n].left);
        next.push_back(h[x - n].right);
      }
    }
    queue = std::move(next);
  }
  return result;
}

std::vector<CondensedRow> condense_tree(const std::vector<LinkageNode>& h,
                                        std::size_t min_cluster_size) {
  const std::size_t n = h.size() + 1;
  const std::size_t root = 2 * h.size();
  std::size_t next_label = n + 1;
  const auto nodes = bfs_hierarchy(h, root);
  std::vector<std::size_t> relabel(root + 1, 0);
  relabel[root] = n;
  std::vector<bool> ignore(nodes.size() + root + 1, false);
  std::vector<CondensedRow> rows;

  auto count_of = [&](std::size_t node) { return node >= n ? h[node - n].size : std::size_t{1}; };
  auto emit_points = [&](std::size_t parent_label, std::size_t sub_root, double lambda) {
    for (std::size_t sub : bfs_hierarchy(h, sub_root)) {
      if (sub < n) rows.push_back({parent_label, sub, lambda, 1});
      ignore[sub] = true;
    }
  };

  for (std::size_t node : nodes) {
    if (ignore[node] || node < n) continue;
    const LinkageNode& c = h[node - n];
    const double lambda =
        c.distance > 0.0 ? 1.0 / c.distance : std::numeric_limits<double>::infinity();
    const std::size_t lc = count_of(c.left), rc = count_of(c.right);
    if (lc >= min_cluster_size && rc >= min_cluster_size) {
      relabel[c.left] = next_label++;
      rows.push_back({relabel[node], relabel[c.left], lambda, lc});
      relabel[c.right] = next_label++;
      rows.push_back({relabel[node], relabel[c.right], lambda, rc});
    } else if (lc < min_cluster_size && rc < min_cluster_size) {
      emit_points(relabel[node], c.left, lambda);
      emit_points(relabel[node], c.right, lambda);
    } else if (lc < min_cluster_size) {
      relabel[c.right] = relabel[node];
      emit_points(relabel[node], c.left, lambda);
    } else {
      relabel[c.left] = relabel[node];
      emit_points(relabel[node], c.right, lambda);
    }
  }
  return rows;
}

Clustering extract_clusters(const std::vector<CondensedRow>& rows, std::size_t n_points,
                            double epsilon) {
  const std::size_t root = n_points;
  std::size_t max_id = root;
  for (const auto& r : rows) max_id = std::max({max_id, r.parent, r.child});

  // Birth lambda of each node and the row that created it.
  std::vector<double> birth(max_id + 1, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::size_t> parent_of(max_id + 1, root);
  for (const auto& r : rows) {
    birth[r.child] = r.lambda;
    parent_of[r.child] = r.parent;
  }
  birth[root] = 0.0;

  std::map<std::size_t, double> stability;
  for (const auto& r : rows) stability[r.parent] += (r.lambda - birth[r.parent]) * static_cast<double>(r.size);

  std::map<std::size_t, std::vector<std::size_t>> cluster_children;
  bool has_cluster_rows = false;
  for (const auto& r : rows) {
    if (r.size > 1) {
      cluster_children[r.parent].push_back(r.child);
      has_cluster_rows = true;
    }
  }
  auto descendants = [&](std::size_t node) {
    std::vector<std::size_t> out, queue{node};
    while (!queue.empty()) {
      std::vector<std::size_t> next;
      for (std::size_t q : queue) {
        out.push_back(q);
        auto it = cluster_children.find(q);
        if (it != cluster_children.end()) next.insert(next.end(), it->second.begin(), it->second.end());
      }
      queue = std::move(next);
    }
    return out;
  };

  // Excess of mass, children before parents.
  std::map<std::size_t, bool> is_cluster;
  for (const auto& [id, s] : stability) is_cluster[id] = true;
  for (auto it = stability.rbegin(); it != stability.rend(); ++it) {
    const std::size_t node = it->first;
    double subtree = 0.0;
    if (auto c = cluster_children.find(node); c != cluster_children.end()) {
      for (std::size_t child : c->second) subtree += stability[child];
    }
    if (subtree > stability[node]) {
      is_cluster[node] = false;
      stability[node] = subtree;
    } else {
      for (std::size_t sub : descendants(node)) {
        if (sub != node) is_cluster[sub] = false;
      }
    }
  }

  if (epsilon != 0.0 && has_cluster_rows) {
    std::vector<std::size_t> eom;
    for (const auto& [id, sel] : is_cluster) {
      if (sel) eom.push_back(id);
    }
    std::set<std::size_t> selected;
    if (eom.size() == 1 && eom[0] == root) {
      selected.insert(root);
    } else {
      std::set<std::size_t> processed;
      for (std::size_t leaf : eom) {
        const double eps = 1.0 / birth[leaf];
        if (eps < epsilon) {
          if (processed.count(leaf)) continue;
          std::size_t node = leaf;
          std::size_t chosen = root;
          while (true) {
            const std::size_t parent = parent_of[node];
            if (parent == root) {
              chosen = root;
              break;
            }
            if (1.0 / birth[parent] > epsilon) {
              chosen = parent;
              break;
            }
            node = parent;
          }
          selected.insert(chosen);
          for (std::size_t sub : descendants(chosen)) {
            if (sub != chosen) processed.insert(sub);
          }
        } else {
          selected.insert(leaf);
        }
      }
    }
    for (auto& [id, sel] : is_cluster) sel = selected.count(id) > 0;
  }

  std::vector<std::size_t> clusters;
  for (const auto& [id, sel] : is_cluster) {
    if (sel) clusters.push_back(id);
  }
  std::map<std::size_t, int> label_of;
  for (std::size_t i = 0; i < clusters.size(); ++i) label_of[clusters[i]] = static_cast<int>(i);

  // Each node belongs to its nearest selected ancestor-or-self, or the root.
  std::vector<std::size_t> top(max_id + 1, root);
  for (std::size_t id = root + 1; id <= max_id; ++id) {
    top[id] = label_of.count(id) ? id : top[parent_of[id]];
  }

  double root_max_lambda = 0.0;
  for (const auto& r : rows) {
    if (r.parent == root) root_max_lambda = std::max(root_max_lambda, r.lambda);
  }
  const double single_threshold = epsilon != 0.0 ? 1.0 / epsilon : root_max_lambda;

  Clustering out;
  out.labels.assign(n_points, -1);
  out.probabilities.assign(n_points, 0.0);
  std::vector<double> point_lambda(n_points, 0.0);
  for (const auto& r : rows) {
    if (r.child >= root) continue;
    point_lambda[r.child] = r.lambda;
    const std::size_t t = top[r.parent];
    if (t != root) {
      out.labels[r.child] = label_of.at(t);
    } else if (clusters.size() == 1 && clusters[0] == root && r.lambda >= single_threshold) {
      out.labels[r.child] = label_of.at(root);
    }
  }

  // Largest lambda among each parent's rows, scanning consecutive runs.
  std::vector<double> deaths(max_id + 1, 0.0);
  if (!rows.empty()) {
    std::size_t current = rows[0].parent;
    double max_lambda = rows[0].lambda;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].parent == current) {
        max_lambda = std::max(max_lambda, rows[i].lambda);
      } else {
        deaths[current] = max_lambda;
        current = rows[i].parent;
        max_lambda = rows[i].lambda;
      }
    }
    deaths[current] = max_lambda;
  }
  for (const auto& r : rows) {
    if (r.child >= root) continue;
    const int label = out.labels[r.child];
    if (label < 0) continue;
    const double max_lambda = deaths[clusters[static_cast<std::size_t>(label)]];
    if (max_lambda == 0.0 || std::isinf(r.lambda)) {
      out.probabilities[r.child] = 1.0;
    } else {
      out.probabilities[r.child] = std::min(r.lambda, max_lambda) / max_lambda;
    }
  }
  return out;
}

}  // namespace

std::optional<Clustering> hdbscan_eps(const std::vector<Vec3>& points,
                                      const ClusteringParams& params) {
  const std::size_t n = points.size();
  if (params.min_pts < 2 || n <= static_cast<std::size_t>(params.min_pts)) return std::nullopt;
  std::vector<double> core(n);
  std::vector<double> scratch;
  scratch.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    core[i] = kth_neighbor_distance(points, i, params.min_pts - 1, scratch);
  }
  const auto linkage = single_linkage(mutual_reachability_mst(points, core), n);
  const auto rows = condense_tree(linkage, static_cast<std::size_t>(params.min_pts));
  return extract_clusters(rows, n, params.eps_hat);
}

std::optional<double> estimate_eps(const std::vector<Vec3>& points, int min_pts) {
  const auto curve = kdist_curve(points, min_pts - 1);
  if (!curve) return std::nullopt;
  const auto knee = kneedle_elbow(*curve, KneeShape::ConvexIncreasing);
  if (knee && *knee > 0.0) return *knee;
  // Linear-interpolated 90th percentile.
  const double pos = 0.9 * static_cast<double>(curve->size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, curve->size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return (*curve)[lo] + frac * ((*curve)[hi] - (*curve)[lo]);
}

CodebookObject remove_spatial_outliers(CodebookObject object, const GaussianScene& scene,
                                       const PipelineConfig& cfg, std::vector<Warning>* warnings) {
  if (object.gaussian_indices.size() <= static_cast<std::size_t>(cfg.min_pts)) return object;
  std::vector<Vec3> points;
  points.reserve(object.gaussian_indices.size());
  for (GaussianIndex g : object.gaussian_indices) points.push_back(scene[g].center);

  const auto eps = estimate_eps(points, cfg.min_pts);
  if (!eps || !(*eps > 0.0)) return object;
  const auto clustering = hdbscan_eps(points, {cfg.min_pts, *eps, cfg.membership_cutoff});
  if (!clustering) return object;

  std::vector<GaussianIndex> idx;
  std::vector<double> w;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (clustering->labels[i] < 0 || clustering->probabilities[i] < cfg.membership_cutoff) continue;
    idx.push_back(object.gaussian_indices[i]);
    w.push_back(object.gaussian_weights[i]);
  }
  if (idx.empty()) {
    if (warnings) {
      warnings->push_back({"outlier-removal", "would-empty", "", std::nullopt, object.object_id,
                           "clustering labeled every Gaussian an outlier; object kept unchanged"});
    }
    return object;
  }
  object.gaussian_indices = std::move(idx);
  object.gaussian_weights = std::move(w);
  return object;
}

}  // namespace gsc
