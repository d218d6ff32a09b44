#pragma once

// Property checks shared by the unit tests and the acceptance runner. Each
// returns an empty string on success or a description of the first failure.

#include <cmath>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "sagseg/sagseg.hpp"

namespace checks {

inline bool same_output(const sagseg::RenderOutput& a, const sagseg::RenderOutput& b) {
  return a.color == b.color && a.alpha == b.alpha && a.depth == b.depth && a.idx == b.idx;
}

/// One fuzzed case: a small random scene seen by a random camera.
inline std::string rasterizer_case(std::uint64_t seed) {
  using namespace sagseg;
  SplitMix64 rng(stream_seed(seed, 0x7261));
  const auto n = std::size_t(rng.uniform_int(1, 24));
  const GaussianScene scene = oracle::random_scene(rng, n, 1.0, 0.02, 0.4);
  const int w = int(rng.uniform_int(8, 48)), h = int(rng.uniform_int(8, 48));
  const Camera cam = oracle::random_camera(rng, w, h, rng.uniform(0.8, 5.0));
  RasterConfig cfg;
  std::ostringstream err;
  err << "seed " << seed << ": ";

  cfg.threads = 1;
  const RenderOutput ref = rasterize(scene, cam, cfg);
  for (int tile : {4, 8, 16, 32}) {
    for (int threads : {1, 3, 8}) {
      RasterConfig c = cfg;
      c.tile_size = tile;
      c.threads = threads;
      if (!same_output(ref, rasterize(scene, cam, c))) {
        err << "output differs at tile " << tile << " threads " << threads;
        return err.str();
      }
    }
  }

  const oracle::Frame bf = oracle::render(scene, cam, cfg);
  const auto prims = oracle::project_all(scene, cam, cfg.cov2d_regularization);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = ref.pixel(x, y);
      const float a = ref.alpha[p];
      if (!(a >= 0.0f && a <= 1.0f)) {
        err << "alpha " << a << " at " << x << "," << y;
        return err.str();
      }
      if (std::abs(double(a) - (1.0 - bf.at(x, y).transmittance)) > 1e-6) {
        err << "alpha mismatch with brute force at " << x << "," << y;
        return err.str();
      }
      if (ref.idx[p] != bf.at(x, y).idx) {
        err << "idx " << ref.idx[p] << " vs brute force " << bf.at(x, y).idx << " at " << x << ","
            << y;
        return err.str();
      }
      if ((ref.idx[p] < 0) != (double(a) < cfg.contribution_floor) &&
          std::abs(double(a) - cfg.contribution_floor) > 1e-6) {
        err << "idx sentinel disagrees with alpha floor at " << x << "," << y;
        return err.str();
      }
      if (ref.idx[p] >= 0) {
        bool covered = false;
        for (const auto& pr : prims) {
          if (pr.index != std::uint32_t(ref.idx[p])) continue;
          const Eigen::Vector2d d = Eigen::Vector2d(x + 0.5, y + 0.5) - pr.mean;
          covered = d.dot(pr.inverse * d) <= 9.0 + 1e-9;
        }
        if (!covered) {
          err << "idx " << ref.idx[p] << " does not cover " << x << "," << y;
          return err.str();
        }
      }
      const auto trace = trace_pixel(scene, cam, x, y, cfg);
      double prev = 1.0;
      for (const auto& c : trace) {
        if (c.transmittance_before > prev || c.alpha < 0.0 || c.alpha > 1.0) {
          err << "transmittance not monotone at " << x << "," << y;
          return err.str();
        }
        prev = c.transmittance_before;
      }
      if (!trace.empty() && prev * (1.0 - trace.back().alpha) > prev) {
        err << "final transmittance grew at " << x << "," << y;
        return err.str();
      }
    }
  }
  return {};
}

}  // namespace checks
