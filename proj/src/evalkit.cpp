#include "gsc/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "gsc/error.hpp"
#include "gsc/parallel.hpp"
#include "gsc/splat.hpp"

namespace gsc {

std::vector<int> solve_assignment(const std::vector<double>& cost, std::size_t rows,
                                  std::size_t cols) {
  if (rows == 0 || cols == 0) return std::vector<int>(rows, -1);
  if (rows > cols) {
    std::vector<double> t(cost.size());
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) t[c * rows + r] = cost[r * cols + c];
    }
    const auto col_to_row = solve_assignment(t, cols, rows);
    std::vector<int> out(rows, -1);
    for (std::size_t c = 0; c < cols; ++c) {
      if (col_to_row[c] >= 0) out[static_cast<std::size_t>(col_to_row[c])] = static_cast<int>(c);
    }
    return out;
  }
  // Shortest augmenting path with potentials; 1-based with a virtual column 0.
  const std::size_t n = rows, m = cols;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> out(n, -1);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] != 0) out[p[j] - 1] = static_cast<int>(j - 1);
  }
  return out;
}

namespace {

// Sorted flat pixel indices of each object's union mask in one view.
using Instances = std::map<ObjectId, std::vector<std::uint32_t>>;

Instances collect_instances(const RelabeledMaskSet& set) {
  std::map<ObjectId, std::vector<std::uint32_t>> raw;
  for (const auto& m : set.masks) {
    if (!m.object_id) continue;
    auto& px = raw[*m.object_id];
    const auto& values = m.region.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i]) px.push_back(static_cast<std::uint32_t>(i));
    }
  }
  for (auto& [id, px] : raw) {
    std::sort(px.begin(), px.end());
    px.erase(std::unique(px.begin(), px.end()), px.end());
  }
  return raw;
}

std::size_t intersect(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
  std::size_t i = 0, j = 0, n = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++n, ++i, ++j;
    }
  }
  return n;
}

struct ViewInstances {
  Instances pred, gt;
};

std::map<std::string, ViewInstances> gather(const RelabeledViews& pred, const RelabeledViews& gt,
                                            const std::set<std::string>* only = nullptr) {
  std::map<std::string, ViewInstances> out;
  for (const auto& [view, set] : pred) {
    if (!only || only->count(view)) out[view].pred = collect_instances(set);
  }
  for (const auto& [view, set] : gt) {
    if (!only || only->count(view)) out[view].gt = collect_instances(set);
  }
  return out;
}

ObjectAssignment match_instances(const std::map<std::string, ViewInstances>& views) {
  std::set<ObjectId> pred_ids, gt_ids;
  for (const auto& [view, vi] : views) {
    for (const auto& [id, px] : vi.pred) pred_ids.insert(id);
    for (const auto& [id, px] : vi.gt) gt_ids.insert(id);
  }
  if (pred_ids.empty() || gt_ids.empty()) return {};
  const std::vector<ObjectId> P(pred_ids.begin(), pred_ids.end());
  const std::vector<ObjectId> G(gt_ids.begin(), gt_ids.end());
  std::map<ObjectId, std::size_t> prow, gcol;
  for (std::size_t i = 0; i < P.size(); ++i) prow[P[i]] = i;
  for (std::size_t j = 0; j < G.size(); ++j) gcol[G[j]] = j;

  std::vector<double> inter(P.size() * G.size(), 0.0);
  for (const auto& [view, vi] : views) {
    for (const auto& [pid, ppx] : vi.pred) {
      for (const auto& [gid, gpx] : vi.gt) {
        inter[prow[pid] * G.size() + gcol[gid]] += static_cast<double>(intersect(ppx, gpx));
      }
    }
  }
  std::vector<double> cost(inter.size());
  for (std::size_t k = 0; k < inter.size(); ++k) cost[k] = -inter[k];
  const auto cols = solve_assignment(cost, P.size(), G.size());
  ObjectAssignment out;
  for (std::size_t i = 0; i < P.size(); ++i) {
    if (cols[i] < 0) continue;
    const auto j = static_cast<std::size_t>(cols[i]);
    if (inter[i * G.size() + j] > 0) out[P[i]] = G[j];
  }
  return out;
}

AssociationReport score_instances(const std::map<std::string, ViewInstances>& views,
                                  const ObjectAssignment& assignment, double iou_threshold) {
  std::map<ObjectId, ObjectId> gt_to_pred;
  for (const auto& [p, g] : assignment) gt_to_pred[g] = p;

  AssociationReport r;
  double iou_sum = 0.0;
  std::set<ObjectId> pred_ids, gt_ids;
  for (const auto& [view, vi] : views) {
    std::set<ObjectId> credited;
    for (const auto& [gid, gpx] : vi.gt) {
      gt_ids.insert(gid);
      bool hit = false;
      if (auto m = gt_to_pred.find(gid); m != gt_to_pred.end()) {
        if (auto p = vi.pred.find(m->second); p != vi.pred.end()) {
          const double inter = static_cast<double>(intersect(p->second, gpx));
          const double uni = static_cast<double>(p->second.size() + gpx.size()) - inter;
          const double iou = uni > 0 ? inter / uni : 0.0;
          if (iou >= iou_threshold) {
            hit = true;
            iou_sum += iou;
            credited.insert(p->first);
          }
        }
      }
      if (hit) {
        ++r.tp;
      } else {
        ++r.fn;
      }
    }
    for (const auto& [pid, ppx] : vi.pred) {
      pred_ids.insert(pid);
      if (!credited.count(pid)) ++r.fp;
    }
  }
  r.unique_pred_masks = pred_ids.size();
  r.unique_gt_masks = gt_ids.size();
  const double tp = static_cast<double>(r.tp);
  if (r.tp + r.fp > 0) {
    r.precision = 100.0 * tp / static_cast<double>(r.tp + r.fp);
  } else {
    r.flags.push_back("precision-undefined");
  }
  if (r.tp + r.fn > 0) {
    r.recall = 100.0 * tp / static_cast<double>(r.tp + r.fn);
  } else {
    r.flags.push_back("recall-undefined");
  }
  if (r.precision + r.recall > 0) {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  } else {
    r.flags.push_back("f1-undefined");
  }
  if (r.tp > 0) {
    r.miou = 100.0 * iou_sum / tp;
  } else {
    r.flags.push_back("miou-undefined");
  }
  return r;
}

}  // namespace

ObjectAssignment match_objects(const RelabeledViews& pred, const RelabeledViews& gt) {
  return match_instances(gather(pred, gt));
}

AssociationReport mask_metrics(const RelabeledViews& pred, const RelabeledViews& gt,
                               const ObjectAssignment& assignment, double iou_threshold) {
  return score_instances(gather(pred, gt), assignment, iou_threshold);
}

AssociationReport evaluate_masks(const RelabeledViews& pred, const RelabeledViews& gt,
                                 double iou_threshold) {
  const auto views = gather(pred, gt);
  return score_instances(views, match_instances(views), iou_threshold);
}

std::string batch_f1_csv(const RelabeledViews& pred, const RelabeledViews& gt,
                         const std::vector<std::size_t>& batch_sizes) {
  std::set<std::string> all;
  for (const auto& [v, s] : pred) all.insert(v);
  for (const auto& [v, s] : gt) all.insert(v);
  const std::vector<std::string> order(all.begin(), all.end());

  std::ostringstream os;
  os << "batch_size,batch,first_view,last_view,f1\n";
  os << std::fixed << std::setprecision(4);
  for (std::size_t size : batch_sizes) {
    if (size == 0) continue;
    for (std::size_t start = 0, b = 0; start < order.size(); start += size, ++b) {
      const std::size_t end = std::min(order.size(), start + size);
      const std::set<std::string> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                        order.begin() + static_cast<std::ptrdiff_t>(end));
      const auto views = gather(pred, gt, &batch);
      const auto r = score_instances(views, match_instances(views), 0.5);
      os << size << ',' << b << ',' << order[start] << ',' << order[end - 1] << ',' << r.f1
         << '\n';
    }
  }
  return os.str();
}

std::optional<BBox> bbox_from_object(const CodebookObject& object, const GaussianScene& scene,
                                     const CameraView& cam, const DepthImage& depth,
                                     const PipelineConfig& cfg) {
  int visible = 0;
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
  double x1 = -x0, y1 = -x0;
  for (GaussianIndex g : object.gaussian_indices) {
    const auto proj = project_gaussian(scene[g], cam, cfg.near);
    if (!proj) continue;
    const double px = std::floor(proj->pixel.x() + 0.5), py = std::floor(proj->pixel.y() + 0.5);
    if (!(px >= 0 && py >= 0 && px < cam.width && py < cam.height)) continue;
    if (!(proj->depth <= depth(static_cast<int>(px), static_cast<int>(py)) + cfg.depth_bound)) {
      continue;
    }
    ++visible;
    const double sx = 2.0 * std::sqrt(std::max(0.0, proj->cov2d(0, 0)));
    const double sy = 2.0 * std::sqrt(std::max(0.0, proj->cov2d(1, 1)));
    x0 = std::min(x0, proj->pixel.x() - sx);
    x1 = std::max(x1, proj->pixel.x() + sx);
    y0 = std::min(y0, proj->pixel.y() - sy);
    y1 = std::max(y1, proj->pixel.y() + sy);
  }
  if (visible < cfg.min_visible) return std::nullopt;
  BBox box;
  box.view_id = cam.view_id;
  box.label = object.final_label;
  box.object_id = object.object_id;
  box.x_min = std::clamp(x0, -0.5, cam.width - 0.5);
  box.x_max = std::clamp(x1, -0.5, cam.width - 0.5);
  box.y_min = std::clamp(y0, -0.5, cam.height - 0.5);
  box.y_max = std::clamp(y1, -0.5, cam.height - 0.5);
  return box;
}

std::map<std::string, std::vector<BBox>> detect_boxes(const ObjectCodebook& codebook,
                                                      const GaussianScene& scene,
                                                      const std::vector<CameraView>& views,
                                                      const PipelineConfig& cfg, int workers) {
  std::vector<std::vector<BBox>> per_view(views.size());
  parallel_for(views.size(), workers, [&](std::size_t v) {
    const DepthImage depth = render_depth(scene, views[v], cfg.near, 1);
    for (const auto& obj : codebook.objects) {
      auto box = bbox_from_object(obj, scene, views[v], depth, cfg);
      if (!box) continue;
      box->confidence = codebook.postprocessed ? obj.object_confidence : 1.0;
      per_view[v].push_back(std::move(*box));
    }
  });
  std::map<std::string, std::vector<BBox>> out;
  for (std::size_t v = 0; v < views.size(); ++v) out[views[v].view_id] = std::move(per_view[v]);
  return out;
}

std::map<std::string, std::vector<BBox>> boxes_from_masks(const RelabeledViews& masks) {
  std::map<std::string, std::vector<BBox>> out;
  for (const auto& [view, set] : masks) {
    std::map<ObjectId, BBox> boxes;
    for (const auto& m : set.masks) {
      if (!m.object_id) continue;
      for (int y = 0; y < m.region.height(); ++y) {
        for (int x = 0; x < m.region.width(); ++x) {
          if (!m.region(x, y)) continue;
          auto [it, fresh] = boxes.try_emplace(*m.object_id);
          BBox& b = it->second;
          if (fresh) {
            b.view_id = view;
            b.label = m.label;
            b.object_id = m.object_id;
            b.confidence = 1.0;
            b.x_min = b.x_max = x;
            b.y_min = b.y_max = y;
          }
          b.x_min = std::min<double>(b.x_min, x);
          b.x_max = std::max<double>(b.x_max, x);
          b.y_min = std::min<double>(b.y_min, y);
          b.y_max = std::max<double>(b.y_max, y);
        }
      }
    }
    auto& dst = out[view];
    for (auto& [id, b] : boxes) {
      b.x_min -= 0.5;
      b.y_min -= 0.5;
      b.x_max += 0.5;
      b.y_max += 0.5;
      dst.push_back(std::move(b));
    }
  }
  return out;
}

namespace {

struct PrPoint {
  std::size_t tp, fp;
};

// Greedy matching in ranked order; returns cumulative counts at the end of
// each run of equal confidence.
std::vector<PrPoint> ranked_counts(std::vector<const BBox*> preds,
                                   const std::vector<const BBox*>& gts, double iou_threshold) {
  std::stable_sort(preds.begin(), preds.end(), [](const BBox* a, const BBox* b) {
    if (a->confidence != b->confidence) return a->confidence > b->confidence;
    const ObjectId ia = a->object_id.value_or(std::numeric_limits<ObjectId>::max());
    const ObjectId ib = b->object_id.value_or(std::numeric_limits<ObjectId>::max());
    if (ia != ib) return ia < ib;
    return a->view_id < b->view_id;
  });
  std::vector<bool> used(gts.size(), false);
  std::vector<PrPoint> out;
  std::size_t tp = 0, fp = 0;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const BBox& p = *preds[k];
    double best = -1.0;
    std::size_t best_g = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (used[g] || gts[g]->view_id != p.view_id) continue;
      const double iou = box_iou(p, *gts[g]);
      if (iou >= iou_threshold && iou > best) {
        best = iou;
        best_g = g;
      }
    }
    if (best_g < gts.size()) {
      used[best_g] = true;
      ++tp;
    } else {
      ++fp;
    }
    if (k + 1 == preds.size() || preds[k + 1]->confidence != p.confidence) {
      out.push_back({tp, fp});
    }
  }
  return out;
}

double all_point_ap(const std::vector<PrPoint>& pts, std::size_t n_gt) {
  std::vector<double> rec{0.0}, prec{1.0};
  for (const auto& p : pts) {
    rec.push_back(static_cast<double>(p.tp) / static_cast<double>(n_gt));
    prec.push_back(static_cast<double>(p.tp) / static_cast<double>(p.tp + p.fp));
  }
  for (std::size_t i = prec.size() - 1; i > 0; --i) prec[i - 1] = std::max(prec[i - 1], prec[i]);
  double ap = 0.0;
  for (std::size_t i = 1; i < rec.size(); ++i) ap += (rec[i] - rec[i - 1]) * prec[i];
  return ap;
}

double log_average_miss_rate(const std::vector<PrPoint>& pts, std::size_t n_gt,
                             std::size_t n_images) {
  double sum = 0.0;
  for (int k = 0; k < 9; ++k) {
    const double ref = std::pow(10.0, -2.0 + 0.25 * k);
    double best = 1.0;
    for (const auto& p : pts) {
      const double fppi = static_cast<double>(p.fp) / static_cast<double>(n_images);
      if (fppi <= ref) {
        best = std::min(best, 1.0 - static_cast<double>(p.tp) / static_cast<double>(n_gt));
      }
    }
    sum += std::log(std::max(best, 1e-10));
  }
  return std::exp(sum / 9.0);
}

}  // namespace

DetectionReport detection_metrics(const std::vector<BBox>& pred, const std::vector<BBox>& gt,
                                  double iou_threshold, std::optional<std::size_t> num_images) {
  std::map<std::string, std::vector<const BBox*>> pred_by, gt_by;
  std::set<std::string> images;
  for (const auto& b : pred) {
    pred_by[fold_label(b.label)].push_back(&b);
    images.insert(b.view_id);
  }
  for (const auto& b : gt) {
    gt_by[fold_label(b.label)].push_back(&b);
    images.insert(b.view_id);
  }
  const std::size_t n_images = std::max<std::size_t>(1, num_images.value_or(images.size()));

  DetectionReport r;
  for (const auto& [label, preds] : pred_by) {
    if (!gt_by.count(label)) r.excluded_classes.push_back(label);
  }
  double ap_sum = 0.0, lamr_sum = 0.0;
  for (const auto& [label, gts] : gt_by) {
    ClassDetection c;
    c.label = label;
    c.gt = gts.size();
    auto it = pred_by.find(label);
    const std::vector<const BBox*> preds = it == pred_by.end() ? std::vector<const BBox*>{} : it->second;
    c.predictions = preds.size();
    const auto pts = ranked_counts(preds, gts, iou_threshold);
    c.ap = all_point_ap(pts, c.gt);
    c.lamr = log_average_miss_rate(pts, c.gt, n_images);
    ap_sum += c.ap;
    lamr_sum += c.lamr;
    r.classes.push_back(std::move(c));
  }
  if (!r.classes.empty()) {
    r.map = 100.0 * ap_sum / static_cast<double>(r.classes.size());
    r.mlamr = 100.0 * lamr_sum / static_cast<double>(r.classes.size());
  }
  return r;
}

nlohmann::json association_report_to_json(const AssociationReport& r) {
  return {{"mIoU", r.miou},
          {"precision", r.precision},
          {"recall", r.recall},
          {"f1", r.f1},
          {"tp", r.tp},
          {"fp", r.fp},
          {"fn", r.fn},
          {"unique_pred_masks", r.unique_pred_masks},
          {"unique_gt_masks", r.unique_gt_masks},
          {"flags", r.flags}};
}

nlohmann::json detection_report_to_json(const DetectionReport& r) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& c : r.classes) {
    classes.push_back({{"label", c.label},
                       {"gt", c.gt},
                       {"predictions", c.predictions},
                       {"ap", 100.0 * c.ap},
                       {"lamr", 100.0 * c.lamr}});
  }
  return {{"mAP", r.map},
          {"mLAMR", r.mlamr},
          {"classes", classes},
          {"excluded_classes", r.excluded_classes}};
}

std::string association_table(const AssociationReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << std::setw(8) << "mIoU" << std::setw(8) << "Prec." << std::setw(8) << "Rec."
     << std::setw(8) << "F1" << std::setw(10) << "#pred" << std::setw(8) << "#gt" << '\n';
  os << std::setw(8) << r.miou << std::setw(8) << r.precision << std::setw(8) << r.recall
     << std::setw(8) << r.f1 << std::setw(10) << r.unique_pred_masks << std::setw(8)
     << r.unique_gt_masks << '\n';
  return os.str();
}

std::string detection_table(const DetectionReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << std::setw(8) << "mAP" << std::setw(8) << "mLAMR" << '\n';
  os << std::setw(8) << r.map << std::setw(8) << r.mlamr << '\n';
  return os.str();
}

}  // namespace gsc
