#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "sagseg/errors.hpp"
#include "sagseg/geometry.hpp"
#include "sagseg/parallel.hpp"
#include "sagseg/rasterizer.hpp"
#include "sagseg/types.hpp"

namespace sagseg {

/**
 * SplitMix64. State advances by 0x9E3779B97F4A7C15; output is the state
 * passed through the two xor-shift-multiply rounds below. Doubles take the top
 * 53 bits. Ports must reproduce this exactly for fixtures to match.
 */
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = std::uint64_t(hi - lo) + 1;
    return lo + std::int64_t(next() % span);
  }

  bool bernoulli(double p) { return uniform() < p; }

private:
  std::uint64_t state_;
};

/// Derives an independent stream seed for sub-generator `stream`.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  SplitMix64 g(seed ^ (stream * 0xD1B54A32D192ED03ull + 0x8CB92BA72F3D8DD7ull));
  return g.next();
}

struct SynthSpec {
  int num_instances = 4;
  int primitives_min = 120;
  int primitives_max = 120;
  double cluster_spread = 0.35;
  double box_half_extent = 1.0;
  double opacity_min = 0.6;
  double opacity_max = 0.95;
  double scale_min = 0.03;
  double scale_max = 0.08;
  int camera_count = 24;
  double orbit_radius = 5.0;
  double orbit_height = 1.5;
  double fov_deg = 50.0;
  int width = 128;
  int height = 128;
  std::uint64_t seed = 7;

  void validate() const {
    if (num_instances < 1) throw ConfigError("synth: num_instances must be >= 1");
    if (primitives_min < 1 || primitives_max < primitives_min) {
      throw ConfigError("synth: primitives range must be nonempty and positive");
    }
    if (!(cluster_spread > 0.0) || !(box_half_extent > 0.0)) {
      throw ConfigError("synth: cluster_spread and box_half_extent must be positive");
    }
    if (!(opacity_min > 0.0) || opacity_max < opacity_min || opacity_max > 1.0) {
      throw ConfigError("synth: opacity range must be nonempty within (0,1]");
    }
    if (!(scale_min > 0.0) || scale_max < scale_min) {
      throw ConfigError("synth: scale range must be nonempty and positive");
    }
    if (camera_count < 1) throw ConfigError("synth: camera_count must be >= 1");
    if (!(orbit_radius > 0.0)) throw ConfigError("synth: orbit_radius must be positive");
    if (!(fov_deg > 0.0 && fov_deg < 180.0)) throw ConfigError("synth: fov_deg out of range");
    if (width < 1 || height < 1) throw ConfigError("synth: resolution must be positive");
  }
};

inline void to_json(nlohmann::json& j, const SynthSpec& s) {
  j = {{"num_instances", s.num_instances},
       {"primitives_per_instance", {s.primitives_min, s.primitives_max}},
       {"cluster_spread", s.cluster_spread},
       {"box_half_extent", s.box_half_extent},
       {"opacity", {s.opacity_min, s.opacity_max}},
       {"scale", {s.scale_min, s.scale_max}},
       {"camera_count", s.camera_count},
       {"orbit_radius", s.orbit_radius},
       {"orbit_height", s.orbit_height},
       {"fov_deg", s.fov_deg},
       {"resolution", {s.width, s.height}},
       {"seed", s.seed}};
}

inline void from_json(const nlohmann::json& j, SynthSpec& s) {
  static const std::vector<std::string> known = {
      "num_instances", "primitives_per_instance", "cluster_spread", "box_half_extent",
      "opacity",       "scale",                   "camera_count",   "orbit_radius",
      "orbit_height",  "fov_deg",                 "resolution",     "seed"};
  for (const auto& [k, v] : j.items()) {
    if (std::find(known.begin(), known.end(), k) == known.end()) {
      throw ConfigError("synth spec: unknown key '" + k + "'");
    }
  }
  auto pair = [&](const char* key, auto& lo, auto& hi) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 2) {
      throw ConfigError(std::string("synth spec: '") + key + "' must be a 2-element list");
    }
    v[0].get_to(lo);
    v[1].get_to(hi);
  };
  try {
    if (j.contains("num_instances")) j.at("num_instances").get_to(s.num_instances);
    pair("primitives_per_instance", s.primitives_min, s.primitives_max);
    if (j.contains("cluster_spread")) j.at("cluster_spread").get_to(s.cluster_spread);
    if (j.contains("box_half_extent")) j.at("box_half_extent").get_to(s.box_half_extent);
    pair("opacity", s.opacity_min, s.opacity_max);
    pair("scale", s.scale_min, s.scale_max);
    if (j.contains("camera_count")) j.at("camera_count").get_to(s.camera_count);
    if (j.contains("orbit_radius")) j.at("orbit_radius").get_to(s.orbit_radius);
    if (j.contains("orbit_height")) j.at("orbit_height").get_to(s.orbit_height);
    if (j.contains("fov_deg")) j.at("fov_deg").get_to(s.fov_deg);
    pair("resolution", s.width, s.height);
    if (j.contains("seed")) j.at("seed").get_to(s.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth spec: ") + e.what());
  }
}

inline SynthSpec load_synth_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  SynthSpec s = j.get<SynthSpec>();
  s.validate();
  return s;
}

struct SynthScene {
  GaussianScene scene;
  LabelAssignment ground_truth;
  std::vector<Eigen::Vector3d> centers;
};

namespace detail {

inline Eigen::Quaterniond random_rotation(SplitMix64& rng) {
  // Shoemake's uniform quaternion.
  const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
  const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
  const double t2 = 2.0 * std::numbers::pi * u2, t3 = 2.0 * std::numbers::pi * u3;
  return Eigen::Quaterniond(b * std::cos(t3), a * std::sin(t2), a * std::cos(t2),
                            b * std::sin(t3));
}

inline Eigen::Vector3d in_ball(SplitMix64& rng, double radius) {
  for (;;) {
    Eigen::Vector3d p(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    if (p.squaredNorm() <= 1.0) return radius * p;
  }
}

inline Eigen::Vector3d hue_color(double h) {
  // HSV with s = 0.8, v = 0.9.
  const double s = 0.8, v = 0.9;
  const double hh = std::fmod(h, 1.0) * 6.0;
  const int sector = int(hh);
  const double f = hh - sector;
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  switch (sector % 6) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

}  // namespace detail

/**
 * K clusters of Gaussians, one instance per cluster. Cluster centers sit in
 * the box [-b, b]^3 with pairwise separation >= 4 * spread;
 * primitives are uniform in a ball of radius `spread` around their center.
 */
inline SynthScene generate_scene(const SynthSpec& spec) {
  spec.validate();
  SplitMix64 rng(spec.seed);
  const double lim = spec.box_half_extent;
  const double min_sep = 4.0 * spec.cluster_spread;

  SynthScene out;
  constexpr int kRestarts = 64, kTries = 4096;
  bool placed = false;
  for (int restart = 0; restart < kRestarts && !placed; ++restart) {
    out.centers.clear();
    for (int k = 0; k < spec.num_instances; ++k) {
      bool ok = false;
      for (int t = 0; t < kTries && !ok; ++t) {
        Eigen::Vector3d c(rng.uniform(-lim, lim), rng.uniform(-lim, lim), rng.uniform(-lim, lim));
        ok = true;
        for (const auto& o : out.centers) {
          if ((c - o).norm() < min_sep) {
            ok = false;
            break;
          }
        }
        if (ok) out.centers.push_back(c);
      }
      if (!ok) break;
    }
    placed = int(out.centers.size()) == spec.num_instances;
  }
  if (!placed) {
    throw ConfigError("synth: cannot place " + std::to_string(spec.num_instances) +
                      " clusters with separation " + std::to_string(min_sep) +
                      " in the box; use a smaller num_instances or cluster_spread");
  }

  const double log_lo = std::log(spec.scale_min), log_hi = std::log(spec.scale_max);
  for (int k = 0; k < spec.num_instances; ++k) {
    const int count = int(rng.uniform_int(spec.primitives_min, spec.primitives_max));
    const Eigen::Vector3d base = detail::hue_color(double(k) / spec.num_instances);
    for (int p = 0; p < count; ++p) {
      const Eigen::Vector3d pos = out.centers[std::size_t(k)] + detail::in_ball(rng, spec.cluster_spread);
      const Eigen::Vector3d scl(std::exp(rng.uniform(log_lo, log_hi)),
                                std::exp(rng.uniform(log_lo, log_hi)),
                                std::exp(rng.uniform(log_lo, log_hi)));
      const Eigen::Quaterniond q = detail::random_rotation(rng);
      const double op = rng.uniform(spec.opacity_min, spec.opacity_max);
      const Eigen::Vector3d jitter(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05),
                                   rng.uniform(-0.05, 0.05));
      out.scene.add(pos, scl, q, op, base + jitter);
      out.ground_truth.labels.push_back(InstanceId(k + 1));
    }
  }
  // Activated values from the stored float parameters, as a PLY reload would
  // produce them.
  out.scene.activate();
  out.ground_truth.update_num_instances();
  out.ground_truth.provenance.mode = "ground_truth";
  return out;
}

inline Eigen::Vector3d scene_centroid(const GaussianScene& scene) {
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (const auto& p : scene.position) c += p;
  return scene.empty() ? c : Eigen::Vector3d(c / double(scene.size()));
}

/// T cameras on a horizontal circle around `target`, azimuth 360 t / T,
/// all looking at `target` with +z up.
inline ViewSet generate_orbit(const SynthSpec& spec,
                              const Eigen::Vector3d& target = Eigen::Vector3d::Zero()) {
  spec.validate();
  ViewSet vs;
  const double f = 0.5 * spec.width / std::tan(0.5 * spec.fov_deg * std::numbers::pi / 180.0);
  for (int t = 0; t < spec.camera_count; ++t) {
    const double az = 2.0 * std::numbers::pi * t / spec.camera_count;
    const Eigen::Vector3d eye =
        target + Eigen::Vector3d(spec.orbit_radius * std::cos(az),
                                 spec.orbit_radius * std::sin(az), spec.orbit_height);
    Camera c;
    c.id = std::to_string(t);
    c.width = spec.width;
    c.height = spec.height;
    c.fx = c.fy = f;
    c.cx = 0.5 * spec.width;
    c.cy = 0.5 * spec.height;
    c.world_to_camera = look_at(eye, target, Eigen::Vector3d::UnitZ());
    vs.cameras.push_back(c);
  }
  vs.validate();
  return vs;
}

/// Ideal input masks: ground-truth labels rendered in every view.
inline std::vector<InstanceMask2D> generate_gt_masks(const GaussianScene& scene,
                                                     const LabelAssignment& gt,
                                                     const ViewSet& views,
                                                     const RasterConfig& raster = {}) {
  check_consistent(gt, scene);
  std::vector<InstanceMask2D> masks(views.size());
  RasterConfig inner = raster;
  const int threads = raster.threads > 0 ? raster.threads : default_threads();
  inner.threads = views.size() > 1 ? 1 : threads;
  parallel_for(
      views.size(),
      [&](std::size_t t) { masks[t] = render_instance_mask(scene, gt, views.cameras[t], inner); },
      threads);
  return masks;
}

struct CorruptionModel {
  double dropout = 0.0;    // probability a nonzero pixel becomes 0
  int erosion_radius = 0;  // disk erosion of each ID region
  double flip = 0.0;       // probability a nonzero pixel takes another ID
};

/**
 * Seeded mask corruption, applied per mask in the order erosion, dropout,
 * flips. Mask t draws from its own stream stream_seed(seed, t). Flips pick a
 * uniformly random ID from {1..K} minus the current one, K being the largest
 * ID over all masks.
 */
inline std::vector<InstanceMask2D> corrupt_masks(const std::vector<InstanceMask2D>& masks,
                                                 const CorruptionModel& model,
                                                 std::uint64_t seed) {
  if (!(model.dropout >= 0.0 && model.dropout <= 1.0) ||
      !(model.flip >= 0.0 && model.flip <= 1.0) || model.erosion_radius < 0) {
    throw ConfigError("corruption parameters out of range");
  }
  InstanceId k_max = 0;
  for (const auto& m : masks) {
    for (InstanceId v : m.ids) k_max = std::max(k_max, v);
  }
  std::vector<InstanceMask2D> out = masks;
  for (std::size_t t = 0; t < out.size(); ++t) {
    SplitMix64 rng(stream_seed(seed, t));
    InstanceMask2D& m = out[t];
    if (model.erosion_radius > 0) {
      const int r = model.erosion_radius;
      const InstanceMask2D src = m;
      for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
          const InstanceId id = src.at(x, y);
          if (id == 0) continue;
          bool interior = true;
          for (int dy = -r; dy <= r && interior; ++dy) {
            for (int dx = -r; dx <= r; ++dx) {
              if (dx * dx + dy * dy > r * r) continue;
              const int xx = x + dx, yy = y + dy;
              if (xx < 0 || xx >= m.width || yy < 0 || yy >= m.height) continue;
              if (src.at(xx, yy) != id) {
                interior = false;
                break;
              }
            }
          }
          if (!interior) m.at(x, y) = 0;
        }
      }
    }
    for (InstanceId& v : m.ids) {
      if (v == 0) continue;
      if (model.dropout > 0.0 && rng.bernoulli(model.dropout)) {
        v = 0;
        continue;
      }
      if (model.flip > 0.0 && k_max >= 2 && rng.bernoulli(model.flip)) {
        auto other = InstanceId(rng.uniform_int(1, k_max - 1));
        if (other >= v) ++other;
        v = other;
      }
    }
  }
  return out;
}

/**
 * Keeps a seeded random fraction of primitives and shrinks their scales,
 * producing speckled label renders of the same layout.
 */
inline SynthScene sparsify(const SynthScene& in, double keep_fraction, double scale_factor,
                           std::uint64_t seed) {
  SplitMix64 rng(seed);
  SynthScene out;
  out.centers = in.centers;
  const GaussianScene& s = in.scene;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!rng.bernoulli(keep_fraction)) continue;
    out.scene.add(s.position[i], s.scale[i] * scale_factor, s.rotation[i], s.opacity[i],
                  s.color[i]);
    out.ground_truth.labels.push_back(in.ground_truth.labels[i]);
  }
  out.scene.activate();
  out.ground_truth.update_num_instances();
  out.ground_truth.provenance = in.ground_truth.provenance;
  return out;
}

/// Scene, orbit and ideal masks for a spec: the closed-loop test fixture.
struct Fixture {
  SynthSpec spec;
  SynthScene synth;
  ViewSet views;
  std::vector<InstanceMask2D> masks;
};

inline Fixture make_fixture(const SynthSpec& spec, const RasterConfig& raster = {}) {
  Fixture f;
  f.spec = spec;
  f.synth = generate_scene(spec);
  f.views = generate_orbit(spec, scene_centroid(f.synth.scene));
  f.masks = generate_gt_masks(f.synth.scene, f.synth.ground_truth, f.views, raster);
  return f;
}

}  // namespace sagseg
