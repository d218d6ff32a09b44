#pragma once

// Reference implementations used only by the tests. They share no code with
// the library beyond the data types: every pixel is composited against every
// primitive with no tiling, binning or bounding boxes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "sagseg/sagseg.hpp"

namespace oracle {

using sagseg::InstanceId;

struct Hit {
  std::uint32_t index;
  double alpha;
  double transmittance_before;
  double weight;
};

struct Pixel {
  std::vector<Hit> hits;
  double transmittance = 1.0;
  int idx = -1;
};

struct Frame {
  int width = 0;
  int height = 0;
  std::vector<Pixel> pixels;
  const Pixel& at(int x, int y) const { return pixels[std::size_t(y) * width + x]; }
};

struct Projected {
  std::uint32_t index;
  double depth;
  Eigen::Vector2d mean;
  Eigen::Matrix2d inverse;
  double opacity;
};

inline std::vector<Projected> project_all(const sagseg::GaussianScene& scene,
                                          const sagseg::Camera& cam, double reg) {
  std::vector<Projected> out;
  const Eigen::Matrix3d w = cam.world_to_camera.topLeftCorner<3, 3>();
  const Eigen::Vector3d t = cam.world_to_camera.topRightCorner<3, 1>();
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const Eigen::Vector3d p = w * scene.position[i] + t;
    if (p.z() <= cam.near_plane) continue;
    Eigen::Matrix<double, 2, 3> j;
    j << cam.fx / p.z(), 0, -cam.fx * p.x() / (p.z() * p.z()), 0, cam.fy / p.z(),
        -cam.fy * p.y() / (p.z() * p.z());
    const Eigen::Matrix3d r = scene.rotation[i].toRotationMatrix();
    const Eigen::Matrix3d s = scene.scale[i].asDiagonal();
    const Eigen::Matrix3d sigma = r * s * s * r.transpose();
    Eigen::Matrix2d cov = j * w * sigma * w.transpose() * j.transpose();
    cov(0, 1) = cov(1, 0) = 0.5 * (cov(0, 1) + cov(1, 0));
    cov += reg * Eigen::Matrix2d::Identity();
    if (!(cov.determinant() > 0.0)) continue;
    out.push_back({std::uint32_t(i), p.z(),
                   {cam.fx * p.x() / p.z() + cam.cx, cam.fy * p.y() / p.z() + cam.cy},
                   cov.inverse(), scene.opacity[i]});
  }
  std::sort(out.begin(), out.end(), [](const Projected& a, const Projected& b) {
    return a.depth < b.depth || (a.depth == b.depth && a.index < b.index);
  });
  return out;
}

inline Frame render(const sagseg::GaussianScene& scene, const sagseg::Camera& cam,
                    const sagseg::RasterConfig& cfg = {}) {
  const auto prims = project_all(scene, cam, cfg.cov2d_regularization);
  const double max_q = cfg.footprint_radius_sigma * cfg.footprint_radius_sigma;
  Frame f;
  f.width = cam.width;
  f.height = cam.height;
  f.pixels.resize(std::size_t(cam.width) * cam.height);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      Pixel& px = f.pixels[std::size_t(y) * cam.width + x];
      const Eigen::Vector2d c(x + 0.5, y + 0.5);
      double best = -1.0;
      for (const Projected& p : prims) {
        const Eigen::Vector2d d = c - p.mean;
        const double q = d.dot(p.inverse * d);
        if (!(q <= max_q)) continue;
        const double a = std::min(cfg.max_alpha, p.opacity * std::exp(-0.5 * q));
        if (a < cfg.alpha_cutoff) continue;
        const double wgt = a * px.transmittance;
        px.hits.push_back({p.index, a, px.transmittance, wgt});
        if (cfg.index_mode == sagseg::IndexMode::kFirstHit) {
          if (px.idx < 0) px.idx = int(p.index);
        } else if (wgt > best) {
          best = wgt;
          px.idx = int(p.index);
        }
        px.transmittance *= 1.0 - a;
        if (px.transmittance < cfg.transmittance_stop) break;
      }
      if (1.0 - px.transmittance < cfg.contribution_floor) px.idx = -1;
    }
  }
  return f;
}

/// Per-ID weight buckets; background collects label-0 weight and residual T.
inline sagseg::InstanceMask2D label_mask(const Frame& f, const std::vector<InstanceId>& labels,
                                         double floor = 0.5) {
  sagseg::InstanceMask2D m(f.width, f.height);
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) {
      const Pixel& px = f.at(x, y);
      std::map<InstanceId, double> bucket{{InstanceId(0), px.transmittance}};
      double total = px.transmittance;
      for (const Hit& h : px.hits) {
        bucket[labels[h.index]] += h.weight;
        total += h.weight;
      }
      InstanceId best = 0;
      double best_w = bucket[0];
      for (const auto& [id, w] : bucket) {
        if (id != 0 && w > best_w) {
          best = id;
          best_w = w;
        }
      }
      m.at(x, y) = (best != 0 && best_w > floor * total) ? best : InstanceId(0);
    }
  }
  return m;
}

/// Dense |G| x (K+1) count matrix from full index-map renders, then a
/// row argmax with the smallest ID winning ties.
inline std::vector<InstanceId> dense_vote_labels(const sagseg::GaussianScene& scene,
                                                 const sagseg::ViewSet& views,
                                                 const std::vector<sagseg::InstanceMask2D>& masks,
                                                 std::uint64_t min_votes = 1,
                                                 const sagseg::RasterConfig& cfg = {}) {
  InstanceId k = 0;
  for (const auto& m : masks) {
    for (InstanceId v : m.ids) k = std::max(k, v);
  }
  const std::size_t n = scene.size();
  std::vector<std::vector<std::uint64_t>> c(n, std::vector<std::uint64_t>(std::size_t(k) + 1, 0));
  for (std::size_t t = 0; t < views.size(); ++t) {
    const Frame f = render(scene, views.cameras[t], cfg);
    for (int y = 0; y < f.height; ++y) {
      for (int x = 0; x < f.width; ++x) {
        const int idx = f.at(x, y).idx;
        if (idx >= 0) ++c[std::size_t(idx)][masks[t].at(x, y)];
      }
    }
  }
  std::vector<InstanceId> labels(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t total = 0, best = 0;
    InstanceId arg = 0;
    for (std::size_t id = 0; id <= k; ++id) {
      total += c[i][id];
      if (c[i][id] > best) {
        best = c[i][id];
        arg = InstanceId(id);
      }
    }
    labels[i] = total >= min_votes ? arg : InstanceId(0);
  }
  return labels;
}

/// Random scene of n primitives inside a cube of half-extent `extent`.
inline sagseg::GaussianScene random_scene(sagseg::SplitMix64& rng, std::size_t n,
                                          double extent = 1.0, double smin = 0.03,
                                          double smax = 0.15) {
  sagseg::GaussianScene s;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d p(rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                            rng.uniform(-extent, extent));
    const Eigen::Vector3d sc(rng.uniform(smin, smax), rng.uniform(smin, smax),
                             rng.uniform(smin, smax));
    Eigen::Quaterniond q(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
                         rng.uniform(-1, 1));
    if (q.norm() < 1e-3) q = Eigen::Quaterniond::Identity();
    q.normalize();
    s.add(p, sc, q, rng.uniform(0.05, 1.0),
          {rng.uniform(), rng.uniform(), rng.uniform()});
  }
  s.activate();
  return s;
}

/// Camera on a sphere of radius `dist` looking at the origin.
inline sagseg::Camera random_camera(sagseg::SplitMix64& rng, int w, int h, double dist = 4.0) {
  Eigen::Vector3d eye;
  do {
    eye = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
  } while (eye.norm() < 0.1 || eye.norm() > 1.0);
  eye = eye.normalized() * dist;
  sagseg::Camera c;
  c.width = w;
  c.height = h;
  const double f = rng.uniform(0.6, 1.4) * w;
  c.fx = f;
  c.fy = f * rng.uniform(0.9, 1.1);
  c.cx = w * rng.uniform(0.4, 0.6);
  c.cy = h * rng.uniform(0.4, 0.6);
  c.world_to_camera = sagseg::look_at(eye, Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ());
  return c;
}

}  // namespace oracle
