#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sagseg/errors.hpp"
#include "sagseg/labeler.hpp"
#include "sagseg/rasterizer.hpp"
#include "sagseg/refiner.hpp"
#include "sagseg/synth.hpp"
#include "sagseg/types.hpp"

namespace sagseg {

enum class MatchMode {
  kIdentity,   // prediction ID k is compared against ground-truth ID k
  kHungarian,  // prediction IDs remapped by a maximum-IoU assignment first
};

struct SegMetrics {
  double miou = 0.0;
  double macc = 0.0;
  std::map<InstanceId, double> per_instance_iou;
  bool empty = false;  // ground truth has no nonzero IDs
};

namespace detail {

// Minimum-cost assignment on a square matrix (Hungarian / Kuhn-Munkres,
// potentials formulation). Returns row -> column.
inline std::vector<int> hungarian(const std::vector<std::vector<double>>& cost) {
  const int n = int(cost.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(std::size_t(n) + 1, 0.0), v(std::size_t(n) + 1, 0.0);
  std::vector<int> p(std::size_t(n) + 1, 0), way(std::size_t(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(std::size_t(n) + 1, inf);
    std::vector<char> used(std::size_t(n) + 1, 0);
    do {
      used[std::size_t(j0)] = 1;
      const int i0 = p[std::size_t(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[std::size_t(j)]) continue;
        const double cur = cost[std::size_t(i0 - 1)][std::size_t(j - 1)] - u[std::size_t(i0)] -
                           v[std::size_t(j)];
        if (cur < minv[std::size_t(j)]) {
          minv[std::size_t(j)] = cur;
          way[std::size_t(j)] = j0;
        }
        if (minv[std::size_t(j)] < delta) {
          delta = minv[std::size_t(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[std::size_t(j)]) {
          u[std::size_t(p[std::size_t(j)])] += delta;
          v[std::size_t(j)] -= delta;
        } else {
          minv[std::size_t(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[std::size_t(j0)] != 0);
    do {
      const int j1 = way[std::size_t(j0)];
      p[std::size_t(j0)] = p[std::size_t(j1)];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(std::size_t(n), -1);
  for (int j = 1; j <= n; ++j) {
    if (p[std::size_t(j)] > 0) row_to_col[std::size_t(p[std::size_t(j)] - 1)] = j - 1;
  }
  return row_to_col;
}

inline InstanceMask2D hungarian_relabel(const InstanceMask2D& pred, const InstanceMask2D& gt) {
  const auto gt_ids = gt.instance_ids();
  const auto pred_ids = pred.instance_ids();
  const std::size_t n = std::max(gt_ids.size(), pred_ids.size());
  if (n == 0) return pred;
  std::map<std::pair<InstanceId, InstanceId>, std::size_t> inter;
  std::map<InstanceId, std::size_t> gt_area, pred_area;
  for (std::size_t p = 0; p < gt.pixel_count(); ++p) {
    ++gt_area[gt.ids[p]];
    ++pred_area[pred.ids[p]];
    if (gt.ids[p] != 0 && pred.ids[p] != 0) ++inter[{gt.ids[p], pred.ids[p]}];
  }
  std::vector<std::vector<double>> cost(n, std::vector<double>(n, 1.0));
  for (std::size_t r = 0; r < gt_ids.size(); ++r) {
    for (std::size_t c = 0; c < pred_ids.size(); ++c) {
      auto it = inter.find({gt_ids[r], pred_ids[c]});
      if (it == inter.end()) continue;
      const double i = double(it->second);
      cost[r][c] = 1.0 - i / (double(gt_area[gt_ids[r]] + pred_area[pred_ids[c]]) - i);
    }
  }
  const auto assign = hungarian(cost);
  std::map<InstanceId, InstanceId> remap;
  for (std::size_t r = 0; r < gt_ids.size(); ++r) {
    const int c = assign[r];
    if (c >= 0 && std::size_t(c) < pred_ids.size() && cost[r][std::size_t(c)] < 1.0) {
      remap[pred_ids[std::size_t(c)]] = gt_ids[r];
    }
  }
  // Unmatched prediction IDs cannot hit any GT ID; park them on an unused one.
  InstanceId spare = 1;
  auto used = [&](InstanceId id) {
    return std::binary_search(gt_ids.begin(), gt_ids.end(), id);
  };
  InstanceMask2D out = pred;
  for (InstanceId& v : out.ids) {
    if (v == 0) continue;
    auto it = remap.find(v);
    if (it != remap.end()) {
      v = it->second;
    } else {
      while (used(spare)) ++spare;
      v = spare;
    }
  }
  return out;
}

}  // namespace detail

/**
 * Per-instance IoU for every nonzero ground-truth ID, mIoU as their mean and
 * mAcc as plain pixel accuracy over the whole image (background included).
 * With no nonzero ground-truth IDs the result is flagged empty and mIoU is 1
 * when the prediction is also empty, else 0.
 */
inline SegMetrics compute_metrics(const InstanceMask2D& pred, const InstanceMask2D& gt,
                                  MatchMode match = MatchMode::kIdentity) {
  if (pred.width != gt.width || pred.height != gt.height) {
    throw ContractError("compute_metrics: prediction " + std::to_string(pred.width) + "x" +
                        std::to_string(pred.height) + " vs ground truth " +
                        std::to_string(gt.width) + "x" + std::to_string(gt.height));
  }
  const InstanceMask2D p =
      match == MatchMode::kHungarian ? detail::hungarian_relabel(pred, gt) : pred;
  SegMetrics m;
  std::size_t correct = 0;
  std::map<InstanceId, std::size_t> inter, uni;
  const auto gt_ids = gt.instance_ids();
  for (InstanceId id : gt_ids) inter[id] = uni[id] = 0;
  for (std::size_t i = 0; i < gt.pixel_count(); ++i) {
    const InstanceId g = gt.ids[i], q = p.ids[i];
    if (g == q) ++correct;
    if (g != 0) {
      ++uni[g];
      if (q == g) ++inter[g];
    }
    if (q != 0 && q != g && uni.count(q)) ++uni[q];
  }
  m.macc = gt.pixel_count() == 0 ? 1.0 : double(correct) / double(gt.pixel_count());
  if (gt_ids.empty()) {
    m.empty = true;
    m.miou = p.instance_ids().empty() ? 1.0 : 0.0;
    return m;
  }
  double sum = 0.0;
  for (InstanceId id : gt_ids) {
    const double iou = double(inter[id]) / double(uni[id]);
    m.per_instance_iou[id] = iou;
    sum += iou;
  }
  m.miou = sum / double(gt_ids.size());
  return m;
}

inline nlohmann::json to_json(const SegMetrics& m) {
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [id, iou] : m.per_instance_iou) per[std::to_string(id)] = iou;
  return {{"miou", m.miou}, {"macc", m.macc}, {"empty", m.empty}, {"per_instance_iou", per}};
}

//
// Timing helpers
//

struct PhaseStats {
  std::vector<double> samples_ms;
  double median = 0.0;
  double p95 = 0.0;
};

inline PhaseStats summarize(std::vector<double> samples) {
  PhaseStats s;
  s.samples_ms = samples;
  if (samples.empty()) return s;
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  s.median = n % 2 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
  const auto rank = std::size_t(std::ceil(0.95 * double(n)));
  s.p95 = samples[std::max<std::size_t>(rank, 1) - 1];
  return s;
}

inline nlohmann::json to_json(const PhaseStats& s) {
  return {{"median_ms", s.median}, {"p95_ms", s.p95}, {"samples_ms", s.samples_ms}};
}

template <typename Fn>
double time_ms(Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

/// Configuration bundle shared by the experiments.
struct PipelineConfig {
  RasterConfig raster;
  AggregationConfig aggregation;
  RefineConfig refine;
};

//
// Stage agreement
//

struct StageAgreementReport {
  std::vector<SegMetrics> per_view;
  double macc = 0.0;
  double miou = 0.0;
  bool empty = false;  // no view had ground-truth instances
  LabelAssignment labels;
};

/**
 * Treats the input masks (stage 1) as ground truth, aggregates them into
 * Gaussian labels, renders and refines a mask per view (stage 2) and reports
 * the mean metrics of stage 2 against stage 1. mIoU averages only views with
 * ground-truth instances.
 */
inline StageAgreementReport stage_agreement_experiment(const GaussianScene& scene,
                                                       const ViewSet& views,
                                                       std::span<const InstanceMask2D> masks,
                                                       const PipelineConfig& cfg = {}) {
  StageAgreementReport r;
  r.labels = aggregate_labels(scene, views, masks, cfg.aggregation, cfg.raster);
  r.per_view.resize(views.size());
  RasterConfig inner = cfg.raster;
  const int threads = cfg.raster.threads > 0 ? cfg.raster.threads : default_threads();
  inner.threads = views.size() > 1 ? 1 : threads;
  parallel_for(
      views.size(),
      [&](std::size_t t) {
        const auto out =
            refine_assignment_outputs(scene, r.labels, views.cameras[t], inner, cfg.refine);
        r.per_view[t] = compute_metrics(out.refined, masks[t]);
      },
      threads);
  double acc = 0.0, iou = 0.0;
  std::size_t nonempty = 0;
  for (const auto& m : r.per_view) {
    acc += m.macc;
    if (!m.empty) {
      iou += m.miou;
      ++nonempty;
    }
  }
  r.macc = acc / double(r.per_view.size());
  r.empty = nonempty == 0;
  r.miou = r.empty ? 1.0 : iou / double(nonempty);
  return r;
}

inline nlohmann::json to_json(const StageAgreementReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t t = 0; t < r.per_view.size(); ++t) {
    auto j = to_json(r.per_view[t]);
    j["view"] = t;
    rows.push_back(j);
  }
  return {{"macc", r.macc}, {"miou", r.miou}, {"empty", r.empty}, {"rows", rows}};
}

//
// Robustness versus number of input masks
//

struct RobustnessRow {
  std::size_t subset_size = 0;
  std::vector<std::size_t> views;
  double agreement = 0.0;
  PhaseStats ms;
};

struct RobustnessReport {
  std::uint64_t seed = 0;
  std::size_t total_views = 0;
  LabelAssignment full_labels;
  std::vector<RobustnessRow> rows;
};

/**
 * For each subset size, draws that many (view, mask) pairs uniformly without
 * replacement, aggregates them, and compares against the labels from all
 * views. Subsets are drawn sequentially from one SplitMix64(seed) stream;
 * each aggregation is timed `reps` times.
 */
inline RobustnessReport robustness_experiment(const GaussianScene& scene, const ViewSet& views,
                                              std::span<const InstanceMask2D> masks,
                                              const std::vector<std::size_t>& subset_sizes,
                                              std::uint64_t seed, const PipelineConfig& cfg = {},
                                              int reps = 1) {
  if (reps < 1) throw ContractError("robustness_experiment: reps must be >= 1");
  for (std::size_t s : subset_sizes) {
    if (s < 1 || s > views.size()) {
      throw ContractError("subset size " + std::to_string(s) + " outside [1, " +
                          std::to_string(views.size()) + "]");
    }
  }
  RobustnessReport report;
  report.seed = seed;
  report.total_views = views.size();
  report.full_labels = aggregate_labels(scene, views, masks, cfg.aggregation, cfg.raster);

  SplitMix64 rng(seed);
  for (std::size_t size : subset_sizes) {
    std::vector<std::size_t> pool(views.size());
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < size; ++i) {
      const auto j = std::size_t(rng.uniform_int(std::int64_t(i), std::int64_t(pool.size() - 1)));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(size);

    ViewSet sub;
    std::vector<InstanceMask2D> sub_masks;
    for (std::size_t v : pool) {
      sub.cameras.push_back(views.cameras[v]);
      sub_masks.push_back(masks[v]);
    }
    LabelAssignment labels;
    std::vector<double> samples;
    for (int r = 0; r < reps; ++r) {
      samples.push_back(time_ms(
          [&] { labels = aggregate_labels(scene, sub, sub_masks, cfg.aggregation, cfg.raster); }));
    }
    RobustnessRow row;
    row.subset_size = size;
    row.views = pool;
    row.agreement = label_agreement(report.full_labels, labels);
    row.ms = summarize(samples);
    report.rows.push_back(std::move(row));
  }
  return report;
}

inline nlohmann::json to_json(const RobustnessReport& r, const std::string& scene_name = "") {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"subset_size", row.subset_size},
                    {"views", row.views},
                    {"agreement", row.agreement},
                    {"median_ms", row.ms.median},
                    {"p95_ms", row.ms.p95}});
  }
  return {{"experiment", "robustness"},
          {"seed", r.seed},
          {"scene", scene_name},
          {"total_views", r.total_views},
          {"rows", rows}};
}

inline std::string to_csv(const RobustnessReport& r) {
  std::ostringstream os;
  os << "subset_size,agreement,median_ms,p95_ms\n";
  for (const auto& row : r.rows) {
    os << row.subset_size << "," << row.agreement << "," << row.ms.median << "," << row.ms.p95
       << "\n";
  }
  return os.str();
}

//
// Benchmark
//

struct BenchReport {
  PhaseStats aggregation;  // whole 2D -> 3D label step, per repetition
  PhaseStats render;       // label render, per frame
  PhaseStats refine;       // refinement, per frame
  PhaseStats frame;        // render + refine, per frame
  std::size_t views = 0;
  int width = 0;
  int height = 0;
  std::size_t num_gaussians = 0;
  int reps = 0;
};

/// Times aggregation once per repetition and the render + refine path once
/// per view per repetition.
inline BenchReport bench_pipeline(const GaussianScene& scene, const ViewSet& views,
                                  std::span<const InstanceMask2D> masks,
                                  const PipelineConfig& cfg = {}, int reps = 3) {
  if (reps < 3) throw ContractError("bench_pipeline: reps must be >= 3");
  BenchReport b;
  b.views = views.size();
  b.width = views.width();
  b.height = views.height();
  b.num_gaussians = scene.size();
  b.reps = reps;
  std::vector<double> agg, render, refine, frame;
  LabelAssignment labels;
  for (int r = 0; r < reps; ++r) {
    agg.push_back(time_ms(
        [&] { labels = aggregate_labels(scene, views, masks, cfg.aggregation, cfg.raster); }));
  }
  for (int r = 0; r < reps; ++r) {
    for (const Camera& cam : views.cameras) {
      InstanceMask2D coarse;
      const double t_render =
          time_ms([&] { coarse = render_instance_mask(scene, labels, cam, cfg.raster); });
      const double t_refine =
          time_ms([&] { (void)refine_mask(coarse, std::nullopt, cfg.refine); });
      render.push_back(t_render);
      refine.push_back(t_refine);
      frame.push_back(t_render + t_refine);
    }
  }
  b.aggregation = summarize(agg);
  b.render = summarize(render);
  b.refine = summarize(refine);
  b.frame = summarize(frame);
  return b;
}

inline nlohmann::json to_json(const BenchReport& b, std::uint64_t seed = 0,
                              const std::string& scene_name = "") {
  auto phase = [](const PhaseStats& s) {
    return nlohmann::json{{"median_ms", s.median}, {"p95_ms", s.p95}};
  };
  return {{"experiment", "bench"},
          {"seed", seed},
          {"scene", scene_name},
          {"views", b.views},
          {"width", b.width},
          {"height", b.height},
          {"num_gaussians", b.num_gaussians},
          {"reps", b.reps},
          {"rows",
           {{{"phase", "aggregation"}, {"median_ms", b.aggregation.median},
             {"p95_ms", b.aggregation.p95}},
            {{"phase", "render"}, {"median_ms", b.render.median}, {"p95_ms", b.render.p95}},
            {{"phase", "refine"}, {"median_ms", b.refine.median}, {"p95_ms", b.refine.p95}},
            {{"phase", "frame"}, {"median_ms", b.frame.median}, {"p95_ms", b.frame.p95}}}},
          {"aggregation", phase(b.aggregation)},
          {"render", phase(b.render)},
          {"refine", phase(b.refine)},
          {"frame", phase(b.frame)}};
}

}  // namespace sagseg
