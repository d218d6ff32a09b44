#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sagseg/errors.hpp"
#include "sagseg/geometry.hpp"
#include "sagseg/parallel.hpp"
#include "sagseg/rasterizer.hpp"
#include "sagseg/types.hpp"

namespace sagseg {

/**
 * Sparse (gaussian, instance) -> vote count table.
 *
 * Stands in for the dense |G| x K count matrix; only pairs that actually
 * received votes are stored.
 */
class VoteHistogram {
public:
  VoteHistogram() = default;
  explicit VoteHistogram(std::size_t num_gaussians) : num_gaussians_(num_gaussians) {}

  std::size_t num_gaussians() const { return num_gaussians_; }
  InstanceId max_id_seen() const { return max_id_seen_; }
  std::uint64_t total_votes() const { return total_votes_; }
  std::size_t num_pairs() const { return counts_.size(); }

  std::uint64_t count(std::uint32_t index, InstanceId id) const {
    auto it = counts_.find(key(index, id));
    return it == counts_.end() ? 0 : it->second;
  }

  /// Adds one view's votes. `view` only labels the error message.
  void accumulate(std::span<const Vote> votes, std::size_t view = 0) {
    for (const Vote& v : votes) {
      if (v.index >= num_gaussians_) {
        throw ContractError("view " + std::to_string(view) + ": vote for gaussian " +
                            std::to_string(v.index) + " but the scene has " +
                            std::to_string(num_gaussians_));
      }
    }
    for (const Vote& v : votes) {
      if (v.count == 0) continue;
      counts_[key(v.index, v.id)] += v.count;
      total_votes_ += v.count;
      max_id_seen_ = std::max(max_id_seen_, v.id);
    }
  }

  void merge(const VoteHistogram& other) {
    if (other.num_gaussians_ != num_gaussians_) {
      throw ContractError("cannot merge histograms over different scenes");
    }
    for (const auto& [k, c] : other.counts_) counts_[k] += c;
    total_votes_ += other.total_votes_;
    max_id_seen_ = std::max(max_id_seen_, other.max_id_seen_);
  }

  /// Visits every stored (index, id, count), in unspecified order.
  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (const auto& [k, c] : counts_) fn(std::uint32_t(k >> 16), InstanceId(k & 0xFFFF), c);
  }

  friend bool operator==(const VoteHistogram& a, const VoteHistogram& b) {
    return a.num_gaussians_ == b.num_gaussians_ && a.total_votes_ == b.total_votes_ &&
           a.max_id_seen_ == b.max_id_seen_ && a.counts_ == b.counts_;
  }

private:
  static std::uint64_t key(std::uint32_t index, InstanceId id) {
    return (std::uint64_t(index) << 16) | id;
  }

  std::size_t num_gaussians_ = 0;
  std::uint64_t total_votes_ = 0;
  InstanceId max_id_seen_ = 0;
  std::unordered_map<std::uint64_t, std::uint64_t> counts_;
};

inline VoteHistogram& accumulate_view(VoteHistogram& hist, std::span<const Vote> votes,
                                      std::size_t view = 0) {
  hist.accumulate(votes, view);
  return hist;
}

struct AggregationConfig {
  AggregationMode mode = AggregationMode::kRender;
  // Relative depth slack for the centroid-mode occlusion test.
  double occlusion_epsilon = 0.01;
  std::uint64_t min_votes = 1;
  int threads = 0;

  void validate() const {
    if (min_votes < 1) throw ConfigError("aggregation.min_votes must be >= 1");
    if (!(occlusion_epsilon >= 0.0)) {
      throw ConfigError("aggregation.occlusion_epsilon must be non-negative");
    }
  }
};

/// Per-Gaussian argmax over the histogram; ties go to the smaller ID and
/// Gaussians with fewer than min_votes total votes get 0.
inline LabelAssignment resolve_labels(const VoteHistogram& hist, std::uint64_t min_votes = 1) {
  const std::size_t n = hist.num_gaussians();
  std::vector<std::uint64_t> best_count(n, 0), total(n, 0);
  std::vector<InstanceId> best_id(n, 0);
  hist.for_each([&](std::uint32_t i, InstanceId id, std::uint64_t c) {
    total[i] += c;
    if (c > best_count[i] || (c == best_count[i] && id < best_id[i])) {
      best_count[i] = c;
      best_id[i] = id;
    }
  });
  LabelAssignment out;
  out.labels.resize(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (total[i] >= min_votes) out.labels[i] = best_id[i];
  }
  out.update_num_instances();
  return out;
}

namespace detail {

inline void check_views(const ViewSet& views, std::span<const InstanceMask2D> masks) {
  if (views.cameras.empty()) throw ContractError("aggregation needs at least one view");
  if (masks.size() != views.cameras.size()) {
    throw ContractError("got " + std::to_string(masks.size()) + " masks for " +
                        std::to_string(views.cameras.size()) + " views");
  }
  const int w = views.cameras.front().width;
  const int h = views.cameras.front().height;
  for (std::size_t t = 0; t < masks.size(); ++t) {
    const Camera& c = views.cameras[t];
    if (c.width != w || c.height != h) {
      throw ContractError("view " + std::to_string(t) + " resolution differs from view 0");
    }
    if (masks[t].width != w || masks[t].height != h) {
      throw ContractError("mask " + std::to_string(t) + " is " + std::to_string(masks[t].width) +
                          "x" + std::to_string(masks[t].height) + ", expected " +
                          std::to_string(w) + "x" + std::to_string(h));
    }
  }
}

/// One vote per unoccluded, in-frustum centroid: id = mask(floor(pi(c))).
/// A centroid is occluded when it lies more than epsilon (relative) behind the
/// rendered depth at its pixel.
inline std::vector<Vote> centroid_votes(const GaussianScene& scene, const Camera& cam,
                                        const InstanceMask2D& mask, double epsilon,
                                        const RasterConfig& rc) {
  const RenderOutput r = rasterize(scene, cam, rc);
  std::vector<Vote> votes;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const auto uv = project_point(cam, scene.position[i]);
    if (!uv) continue;
    const int x = std::min(cam.width - 1, int(std::floor(uv->x())));
    const int y = std::min(cam.height - 1, int(std::floor(uv->y())));
    const std::size_t p = r.pixel(x, y);
    const double z = cam.to_camera(scene.position[i]).z();
    if (r.alpha[p] > 0.0f && z > double(r.depth[p]) * (1.0 + epsilon)) continue;
    votes.push_back({std::uint32_t(i), mask.at(x, y), 1});
  }
  return votes;
}

}  // namespace detail

struct AggregationResult {
  LabelAssignment labels;
  VoteHistogram histogram;
};

/**
 * Instance label aggregation.
 *
 * render mode: every view is rendered, each occupied pixel pairs its index-map
 * Gaussian with the mask ID under it, and the pairs are tallied.
 * centroid mode: each visible, unoccluded centroid casts one vote per view.
 * Labels are the per-Gaussian argmax (smallest ID on ties).
 *
 * Views are processed in parallel; the per-view vote lists are merged in view
 * order, and the argmax does not depend on merge order anyway.
 */
inline AggregationResult aggregate(const GaussianScene& scene, const ViewSet& views,
                                   std::span<const InstanceMask2D> masks,
                                   const AggregationConfig& cfg = {},
                                   const RasterConfig& raster = {}) {
  cfg.validate();
  detail::check_views(views, masks);
  const std::size_t t_count = views.cameras.size();
  int threads = cfg.threads > 0 ? cfg.threads : default_threads();

  RasterConfig inner = raster;
  // Parallelism goes over views; keep each render single-threaded unless
  // there is only one view.
  inner.threads = t_count > 1 && threads > 1 ? 1 : threads;

  std::vector<std::vector<Vote>> per_view(t_count);
  parallel_for(
      t_count,
      [&](std::size_t t) {
        per_view[t] = cfg.mode == AggregationMode::kRender
                          ? render_idx_votes(scene, views.cameras[t], masks[t], inner)
                          : detail::centroid_votes(scene, views.cameras[t], masks[t],
                                                   cfg.occlusion_epsilon, inner);
      },
      threads);

  AggregationResult out;
  out.histogram = VoteHistogram(scene.size());
  for (std::size_t t = 0; t < t_count; ++t) out.histogram.accumulate(per_view[t], t);
  out.labels = resolve_labels(out.histogram, cfg.min_votes);
  out.labels.provenance.mode = to_string(cfg.mode);
  out.labels.provenance.views = t_count;
  out.labels.provenance.tie_break = "smallest_id";
  return out;
}

inline LabelAssignment aggregate_labels(const GaussianScene& scene, const ViewSet& views,
                                        std::span<const InstanceMask2D> masks,
                                        const AggregationConfig& cfg = {},
                                        const RasterConfig& raster = {}) {
  return aggregate(scene, views, masks, cfg, raster).labels;
}

/**
 * Fraction of Gaussians whose labels agree. With `nonzero_reference_only`
 * only Gaussians labeled nonzero in `reference` are counted. Returns 1.0 when
 * nothing is counted.
 */
inline double label_agreement(const LabelAssignment& reference, const LabelAssignment& other,
                              bool nonzero_reference_only = false) {
  if (reference.size() != other.size()) {
    throw ContractError("label_agreement: lengths " + std::to_string(reference.size()) + " and " +
                        std::to_string(other.size()) + " differ");
  }
  std::size_t counted = 0, same = 0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (nonzero_reference_only && reference.labels[i] == 0) continue;
    ++counted;
    if (reference.labels[i] == other.labels[i]) ++same;
  }
  return counted == 0 ? 1.0 : double(same) / double(counted);
}

}  // namespace sagseg
