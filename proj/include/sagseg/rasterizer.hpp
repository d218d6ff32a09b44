#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sagseg/errors.hpp"
#include "sagseg/geometry.hpp"
#include "sagseg/parallel.hpp"
#include "sagseg/types.hpp"

namespace sagseg {

/// Which Gaussian a pixel's index map entry names.
enum class IndexMode {
  kMaxWeight,  // contributor with the largest blending weight alpha_i * T_i
  kFirstHit,   // front-most contributor (ablation only)
};

struct RasterConfig {
  int tile_size = 16;
  double alpha_cutoff = 1.0 / 255.0;
  double transmittance_stop = 1e-4;
  double contribution_floor = 0.5;
  double footprint_radius_sigma = 3.0;
  double max_alpha = 0.99;
  double cov2d_regularization = kCov2dRegularization;
  IndexMode index_mode = IndexMode::kMaxWeight;
  Eigen::Vector3d background = Eigen::Vector3d::Zero();
  int threads = 0;  // 0: default_threads()

  void validate() const {
    auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
    if (tile_size < 4) throw ConfigError("raster.tile_size must be >= 4");
    if (!in_unit(alpha_cutoff)) throw ConfigError("raster.alpha_cutoff must be in (0,1)");
    if (!in_unit(transmittance_stop)) {
      throw ConfigError("raster.transmittance_stop must be in (0,1)");
    }
    if (!in_unit(contribution_floor)) {
      throw ConfigError("raster.contribution_floor must be in (0,1)");
    }
    if (!in_unit(max_alpha)) throw ConfigError("raster.max_alpha must be in (0,1)");
    if (!(footprint_radius_sigma > 0.0)) {
      throw ConfigError("raster.footprint_radius_sigma must be positive");
    }
    if (!(cov2d_regularization >= 0.0)) {
      throw ConfigError("raster.cov2d_regularization must be non-negative");
    }
  }
};

struct RenderStats {
  std::size_t input = 0;
  std::size_t rendered = 0;
  std::size_t culled = 0;
  std::size_t skipped_non_psd = 0;
  double ms = 0.0;
};

struct RenderOutput {
  int width = 0;
  int height = 0;
  std::vector<float> color;       // H*W*3, row-major RGB
  std::vector<float> alpha;       // H*W
  std::vector<float> depth;       // H*W, weight-averaged camera depth
  std::vector<std::int32_t> idx;  // H*W, -1 where unoccupied
  RenderStats stats;

  std::size_t pixel(int x, int y) const { return std::size_t(y) * width + x; }
};

/// One (gaussian, instance) pair tallied over the pixels of a view.
struct Vote {
  std::uint32_t index = 0;
  InstanceId id = 0;
  std::uint32_t count = 0;

  friend bool operator==(const Vote&, const Vote&) = default;
};

/// Single composited splat at a pixel, for inspection.
struct Contribution {
  std::uint32_t index = 0;
  double alpha = 0.0;
  double transmittance_before = 1.0;
  double weight = 0.0;
  double mahalanobis_sq = 0.0;
};

namespace detail {

struct Splat {
  Eigen::Vector2d mean;
  double conic_xx, conic_xy, conic_yy;  // inverse 2D covariance
  double depth;
  double opacity;
  std::uint32_t index;
  int x0, y0, x1, y1;  // inclusive pixel bounds of the footprint
};

struct PreparedFrame {
  int width = 0;
  int height = 0;
  int tile_size = 16;
  int tiles_x = 0;
  int tiles_y = 0;
  std::vector<Splat> splats;                      // front-to-back
  std::vector<std::vector<std::uint32_t>> tiles;  // indices into splats
  RenderStats stats;
};

inline PreparedFrame prepare_frame(const GaussianScene& scene, const Camera& cam,
                                   const RasterConfig& cfg) {
  cfg.validate();
  PreparedFrame f;
  f.width = cam.width;
  f.height = cam.height;
  f.tile_size = cfg.tile_size;
  f.tiles_x = (cam.width + cfg.tile_size - 1) / cfg.tile_size;
  f.tiles_y = (cam.height + cfg.tile_size - 1) / cfg.tile_size;
  f.stats.input = scene.size();
  f.splats.reserve(scene.size());

  const Eigen::Matrix3d rot = cam.rotation();
  const double k = cfg.footprint_radius_sigma;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const Eigen::Vector3d pc = cam.to_camera(scene.position[i]);
    if (!(pc.z() > cam.near_plane)) {
      ++f.stats.culled;
      continue;
    }
    const Eigen::Matrix3d cov3d = world_covariance(scene.scale[i], scene.rotation[i]);
    const Eigen::Matrix<double, 2, 3> t = pinhole_jacobian(cam, pc) * rot;
    Eigen::Matrix2d cov = t * cov3d * t.transpose();
    const double a = cov(0, 0) + cfg.cov2d_regularization;
    const double b = 0.5 * (cov(0, 1) + cov(1, 0));
    const double c = cov(1, 1) + cfg.cov2d_regularization;
    const double det = a * c - b * b;
    if (!(det > 0.0) || !(a > 0.0) || !(c > 0.0) || !std::isfinite(det)) {
      ++f.stats.skipped_non_psd;
      continue;
    }
    const double mid = 0.5 * (a + c);
    const double lambda_max = mid + std::sqrt(std::max(0.0, mid * mid - det));
    const double radius = k * std::sqrt(lambda_max);
    const Eigen::Vector2d uv = pinhole(cam, pc);
    // Pixels whose centers (x + 0.5) can fall inside the footprint.
    const double fx0 = std::ceil(uv.x() - radius - 0.5);
    const double fx1 = std::floor(uv.x() + radius - 0.5);
    const double fy0 = std::ceil(uv.y() - radius - 0.5);
    const double fy1 = std::floor(uv.y() + radius - 0.5);
    if (!(fx1 >= 0.0 && fx0 <= cam.width - 1 && fy1 >= 0.0 && fy0 <= cam.height - 1)) {
      ++f.stats.culled;
      continue;
    }
    Splat s;
    s.mean = uv;
    s.conic_xx = c / det;
    s.conic_xy = -b / det;
    s.conic_yy = a / det;
    s.depth = pc.z();
    s.opacity = scene.opacity[i];
    s.index = std::uint32_t(i);
    s.x0 = int(std::max(0.0, fx0));
    s.x1 = int(std::min<double>(cam.width - 1, fx1));
    s.y0 = int(std::max(0.0, fy0));
    s.y1 = int(std::min<double>(cam.height - 1, fy1));
    f.splats.push_back(s);
  }
  std::sort(f.splats.begin(), f.splats.end(), [](const Splat& l, const Splat& r) {
    return l.depth < r.depth || (l.depth == r.depth && l.index < r.index);
  });
  f.stats.rendered = f.splats.size();

  f.tiles.assign(std::size_t(f.tiles_x) * f.tiles_y, {});
  for (std::uint32_t s = 0; s < f.splats.size(); ++s) {
    const Splat& sp = f.splats[s];
    for (int ty = sp.y0 / f.tile_size; ty <= sp.y1 / f.tile_size; ++ty) {
      for (int tx = sp.x0 / f.tile_size; tx <= sp.x1 / f.tile_size; ++tx) {
        f.tiles[std::size_t(ty) * f.tiles_x + tx].push_back(s);
      }
    }
  }
  return f;
}

/**
 * Front-to-back compositing of one pixel. Calls sink.add(splat, weight) for
 * every splat that passes the footprint and alpha tests and returns the final
 * transmittance.
 */
template <typename Sink>
double composite_pixel(const PreparedFrame& f, const std::vector<std::uint32_t>& list, int x,
                       int y, const RasterConfig& cfg, Sink& sink) {
  const double px = x + 0.5;
  const double py = y + 0.5;
  const double max_q = cfg.footprint_radius_sigma * cfg.footprint_radius_sigma;
  double transmittance = 1.0;
  for (std::uint32_t s : list) {
    const Splat& sp = f.splats[s];
    if (x < sp.x0 || x > sp.x1 || y < sp.y0 || y > sp.y1) continue;
    const double dx = px - sp.mean.x();
    const double dy = py - sp.mean.y();
    const double q = sp.conic_xx * dx * dx + 2.0 * sp.conic_xy * dx * dy + sp.conic_yy * dy * dy;
    if (!(q <= max_q)) continue;
    const double alpha = std::min(cfg.max_alpha, sp.opacity * std::exp(-0.5 * q));
    if (alpha < cfg.alpha_cutoff) continue;
    const double weight = alpha * transmittance;
    sink.add(sp, weight, alpha, transmittance, q);
    transmittance *= 1.0 - alpha;
    if (transmittance < cfg.transmittance_stop) break;
  }
  return transmittance;
}

/// Runs make_sink(tile) -> sink, then composites every pixel of that tile.
/// sink.finish(x, y, transmittance) is called once per pixel.
template <typename MakeSink>
auto for_each_tile(const PreparedFrame& f, const RasterConfig& cfg, MakeSink&& make_sink) {
  using SinkT = decltype(make_sink(std::size_t{0}));
  std::vector<SinkT> sinks;
  sinks.reserve(f.tiles.size());
  for (std::size_t t = 0; t < f.tiles.size(); ++t) sinks.push_back(make_sink(t));
  parallel_for(
      f.tiles.size(),
      [&](std::size_t t) {
        const int tx = int(t % f.tiles_x);
        const int ty = int(t / f.tiles_x);
        const int x_end = std::min(f.width, (tx + 1) * f.tile_size);
        const int y_end = std::min(f.height, (ty + 1) * f.tile_size);
        auto& sink = sinks[t];
        for (int y = ty * f.tile_size; y < y_end; ++y) {
          for (int x = tx * f.tile_size; x < x_end; ++x) {
            sink.begin(x, y);
            const double tr = composite_pixel(f, f.tiles[t], x, y, cfg, sink);
            sink.finish(x, y, tr);
          }
        }
      },
      cfg.threads);
  return sinks;
}

// Tracks the index-map winner for the current pixel.
struct IndexPicker {
  IndexMode mode = IndexMode::kMaxWeight;
  double best_weight = -1.0;
  std::int32_t best = -1;

  void reset() {
    best_weight = -1.0;
    best = -1;
  }
  void offer(const Splat& sp, double weight) {
    if (mode == IndexMode::kFirstHit) {
      if (best < 0) best = std::int32_t(sp.index);
    } else if (weight > best_weight) {
      best_weight = weight;
      best = std::int32_t(sp.index);
    }
  }
  std::int32_t result(double transmittance, double floor) const {
    return (1.0 - transmittance) >= floor ? best : -1;
  }
};

inline void check_camera_for_render(const Camera& cam) {
  if (cam.width <= 0 || cam.height <= 0) {
    throw ContractError("camera '" + cam.id + "' has an empty image");
  }
}

}  // namespace detail

/**
 * Tile-based software splatting renderer.
 *
 * Primitives are culled against the near plane and the image, projected,
 * sorted globally front-to-back by (depth, index) and binned to tiles by their
 * footprint. Each pixel composites c += T * alpha_i * color_i. The index map
 * names the Gaussian with the largest blending weight alpha_i * T_i, or -1
 * where the accumulated alpha stays below contribution_floor.
 */
inline RenderOutput rasterize(const GaussianScene& scene, const Camera& cam,
                              const RasterConfig& cfg = {}) {
  detail::check_camera_for_render(cam);
  const auto start = std::chrono::steady_clock::now();
  const detail::PreparedFrame f = detail::prepare_frame(scene, cam, cfg);

  RenderOutput out;
  out.width = cam.width;
  out.height = cam.height;
  const std::size_t n = std::size_t(cam.width) * cam.height;
  out.color.assign(3 * n, 0.0f);
  out.alpha.assign(n, 0.0f);
  out.depth.assign(n, 0.0f);
  out.idx.assign(n, -1);

  struct Sink {
    RenderOutput* out;
    const GaussianScene* scene;
    const RasterConfig* cfg;
    detail::IndexPicker picker;
    Eigen::Vector3d rgb;
    double wsum = 0.0, zsum = 0.0;

    void begin(int, int) {
      picker.reset();
      rgb.setZero();
      wsum = zsum = 0.0;
    }
    void add(const detail::Splat& sp, double w, double, double, double) {
      rgb += w * scene->color[sp.index];
      wsum += w;
      zsum += w * sp.depth;
      picker.offer(sp, w);
    }
    void finish(int x, int y, double tr) {
      const std::size_t p = out->pixel(x, y);
      const Eigen::Vector3d c = rgb + tr * cfg->background;
      out->color[3 * p + 0] = float(c.x());
      out->color[3 * p + 1] = float(c.y());
      out->color[3 * p + 2] = float(c.z());
      out->alpha[p] = float(std::clamp(1.0 - tr, 0.0, 1.0));
      out->depth[p] = wsum > 0.0 ? float(zsum / wsum) : 0.0f;
      out->idx[p] = picker.result(tr, cfg->contribution_floor);
    }
  };

  detail::for_each_tile(f, cfg, [&](std::size_t) {
    Sink s{&out, &scene, &cfg, {cfg.index_mode}, Eigen::Vector3d::Zero()};
    return s;
  });
  out.stats = f.stats;
  out.stats.ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

/**
 * Renders instance labels directly. Per pixel the blending weight of each
 * label is accumulated over the same traversal as rasterize(); unlabeled
 * Gaussians and the residual transmittance feed the background bucket. The
 * pixel takes the heaviest bucket (ties toward the smaller ID) if that
 * bucket's share exceeds contribution_floor of the total, else 0.
 */
inline InstanceMask2D render_instance_mask(const GaussianScene& scene,
                                           const LabelAssignment& labels, const Camera& cam,
                                           const RasterConfig& cfg = {},
                                           RenderStats* stats = nullptr) {
  check_consistent(labels, scene);
  detail::check_camera_for_render(cam);
  const auto start = std::chrono::steady_clock::now();
  const detail::PreparedFrame f = detail::prepare_frame(scene, cam, cfg);
  InstanceMask2D mask(cam.width, cam.height);

  struct Sink {
    InstanceMask2D* mask;
    const std::vector<InstanceId>* labels;
    double floor;
    std::vector<std::pair<InstanceId, double>> buckets;

    void begin(int, int) { buckets.clear(); }
    void add(const detail::Splat& sp, double w, double, double, double) {
      const InstanceId id = (*labels)[sp.index];
      for (auto& b : buckets) {
        if (b.first == id) {
          b.second += w;
          return;
        }
      }
      buckets.emplace_back(id, w);
    }
    void finish(int x, int y, double tr) {
      double total = tr;
      double background = tr;
      for (const auto& b : buckets) {
        total += b.second;
        if (b.first == 0) background += b.second;
      }
      InstanceId best = 0;
      double best_w = background;
      for (const auto& b : buckets) {
        if (b.first == 0) continue;
        if (b.second > best_w || (b.second == best_w && b.first < best)) {
          best = b.first;
          best_w = b.second;
        }
      }
      mask->at(x, y) = (best != 0 && best_w > floor * total) ? best : InstanceId(0);
    }
  };

  detail::for_each_tile(f, cfg, [&](std::size_t) {
    return Sink{&mask, &labels.labels, cfg.contribution_floor, {}};
  });
  if (stats) {
    *stats = f.stats;
    stats->ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                    .count();
  }
  return mask;
}

/**
 * Fused index-map render and (gaussian, instance) group-by for one view.
 * Equivalent to rasterize() followed by pairing idx with mask over pixels with
 * idx >= 0 and counting duplicates. Mask value 0 is a vote like any other.
 * Output is sorted by (index, id).
 */
inline std::vector<Vote> render_idx_votes(const GaussianScene& scene, const Camera& cam,
                                          const InstanceMask2D& mask,
                                          const RasterConfig& cfg = {},
                                          RenderStats* stats = nullptr) {
  detail::check_camera_for_render(cam);
  if (mask.width != cam.width || mask.height != cam.height) {
    throw ContractError("mask " + std::to_string(mask.width) + "x" +
                        std::to_string(mask.height) + " does not match camera '" + cam.id +
                        "' " + std::to_string(cam.width) + "x" + std::to_string(cam.height));
  }
  const auto start = std::chrono::steady_clock::now();
  const detail::PreparedFrame f = detail::prepare_frame(scene, cam, cfg);

  struct Sink {
    const InstanceMask2D* mask;
    double floor;
    detail::IndexPicker picker;
    std::vector<std::uint64_t> keys;

    void begin(int, int) { picker.reset(); }
    void add(const detail::Splat& sp, double w, double, double, double) { picker.offer(sp, w); }
    void finish(int x, int y, double tr) {
      const std::int32_t idx = picker.result(tr, floor);
      if (idx >= 0) keys.push_back((std::uint64_t(std::uint32_t(idx)) << 16) | mask->at(x, y));
    }
  };

  auto sinks = detail::for_each_tile(f, cfg, [&](std::size_t) {
    return Sink{&mask, cfg.contribution_floor, {cfg.index_mode}, {}};
  });
  std::vector<std::uint64_t> keys;
  for (auto& s : sinks) keys.insert(keys.end(), s.keys.begin(), s.keys.end());
  std::sort(keys.begin(), keys.end());

  std::vector<Vote> votes;
  for (std::size_t i = 0; i < keys.size();) {
    std::size_t j = i;
    while (j < keys.size() && keys[j] == keys[i]) ++j;
    votes.push_back({std::uint32_t(keys[i] >> 16), InstanceId(keys[i] & 0xFFFF),
                     std::uint32_t(j - i)});
    i = j;
  }
  if (stats) {
    *stats = f.stats;
    stats->ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                    .count();
  }
  return votes;
}

/// Every splat composited at pixel (x, y), in traversal order.
inline std::vector<Contribution> trace_pixel(const GaussianScene& scene, const Camera& cam, int x,
                                             int y, const RasterConfig& cfg = {}) {
  const detail::PreparedFrame f = detail::prepare_frame(scene, cam, cfg);
  struct Sink {
    std::vector<Contribution> out;
    void add(const detail::Splat& sp, double w, double a, double t, double q) {
      out.push_back({sp.index, a, t, w, q});
    }
  } sink;
  const int t = (y / f.tile_size) * f.tiles_x + x / f.tile_size;
  detail::composite_pixel(f, f.tiles[std::size_t(t)], x, y, cfg, sink);
  return sink.out;
}

}  // namespace sagseg
