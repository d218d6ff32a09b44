#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "sagseg/errors.hpp"
#include "sagseg/geometry.hpp"
#include "sagseg/rasterizer.hpp"
#include "sagseg/types.hpp"

namespace sagseg {

struct RefineConfig {
  int majority_radius = 2;
  int closing_radius = 3;
  int min_component_area = 16;
  int passes = 2;

  void validate() const {
    if (majority_radius < 0) throw ConfigError("refine.majority_radius must be >= 0");
    if (closing_radius < 0) throw ConfigError("refine.closing_radius must be >= 0");
    if (min_component_area < 0) throw ConfigError("refine.min_component_area must be >= 0");
    if (passes < 1) throw ConfigError("refine.passes must be >= 1");
  }
};

namespace detail {

// Mode filter over a (2r+1)^2 window clipped to the image. A labeled pixel
// takes the most frequent nonzero ID of its window (smallest on ties) and is
// never cleared. A background pixel stays background when background holds a
// strict majority of the window, else it takes the most frequent nonzero ID.
// Isolated false positives are left to absorb_small_components().
inline InstanceMask2D majority_filter(const InstanceMask2D& in, int r) {
  InstanceMask2D out(in.width, in.height);
  std::vector<std::pair<InstanceId, int>> counts;
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      counts.clear();
      int n = 0, zeros = 0;
      for (int yy = std::max(0, y - r); yy <= std::min(in.height - 1, y + r); ++yy) {
        for (int xx = std::max(0, x - r); xx <= std::min(in.width - 1, x + r); ++xx) {
          ++n;
          const InstanceId id = in.at(xx, yy);
          if (id == 0) {
            ++zeros;
            continue;
          }
          auto it = std::find_if(counts.begin(), counts.end(),
                                 [id](const auto& c) { return c.first == id; });
          if (it == counts.end()) {
            counts.emplace_back(id, 1);
          } else {
            ++it->second;
          }
        }
      }
      const InstanceId self = in.at(x, y);
      InstanceId best = 0;
      if (self != 0 || 2 * zeros <= n) {
        int best_n = 0;
        for (const auto& [id, c] : counts) {
          if (c > best_n || (c == best_n && id < best)) {
            best = id;
            best_n = c;
          }
        }
      }
      out.at(x, y) = best;
    }
  }
  return out;
}

// Square (Chebyshev) structuring element of radius r. Axis-aligned edges
// survive closing exactly and straight-edge gaps up to 2r pixels are bridged.
inline std::vector<std::pair<int, int>> square_offsets(int r) {
  std::vector<std::pair<int, int>> d;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      d.emplace_back(dx, dy);
    }
  }
  return d;
}

// Binary closing with a square. Pixels outside the image count as unset for
// the dilation and as set for the erosion, so the result is a superset of
// the input.
inline std::vector<std::uint8_t> close_binary(const std::vector<std::uint8_t>& in, int w, int h,
                                              int r) {
  if (r == 0) return in;
  const auto se = square_offsets(r);
  std::vector<std::uint8_t> dil(in.size(), 0), out(in.size(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (const auto& [dx, dy] : se) {
        const int xx = x + dx, yy = y + dy;
        if (xx >= 0 && xx < w && yy >= 0 && yy < h && in[std::size_t(yy) * w + xx]) {
          dil[std::size_t(y) * w + x] = 1;
          break;
        }
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool keep = true;
      for (const auto& [dx, dy] : se) {
        const int xx = x + dx, yy = y + dy;
        if (xx >= 0 && xx < w && yy >= 0 && yy < h && !dil[std::size_t(yy) * w + xx]) {
          keep = false;
          break;
        }
      }
      out[std::size_t(y) * w + x] = keep ? 1 : 0;
    }
  }
  return out;
}

inline InstanceMask2D close_per_id(const InstanceMask2D& in, int r) {
  const auto ids = in.instance_ids();
  if (ids.empty() || r == 0) return in;
  const int w = in.width, h = in.height;
  std::vector<std::size_t> area(ids.size(), 0);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    area[k] = std::size_t(std::count(in.ids.begin(), in.ids.end(), ids[k]));
  }
  // Claim priority: larger pre-closing area first, then smaller ID.
  std::vector<std::size_t> order(ids.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return area[a] > area[b]; });

  InstanceMask2D out(w, h);
  std::vector<std::uint8_t> claimed(in.pixel_count(), 0);
  std::vector<std::uint8_t> bin(in.pixel_count());
  for (std::size_t k : order) {
    for (std::size_t p = 0; p < bin.size(); ++p) bin[p] = in.ids[p] == ids[k];
    const auto closed = close_binary(bin, w, h, r);
    for (std::size_t p = 0; p < closed.size(); ++p) {
      if (closed[p] && !claimed[p]) {
        claimed[p] = 1;
        out.ids[p] = ids[k];
      }
    }
  }
  return out;
}

// Reassigns 8-connected components (any ID, background included) smaller
// than min_area to the most common ID bordering them. Neighbour majorities
// are read from the input raster, so the result is order-independent.
inline InstanceMask2D absorb_small_components(const InstanceMask2D& in, int min_area) {
  InstanceMask2D out = in;
  if (min_area <= 1) return out;
  const int w = in.width, h = in.height;
  std::vector<std::int32_t> comp(in.pixel_count(), -1);
  std::vector<std::size_t> stack, members;
  std::vector<std::pair<InstanceId, int>> border;
  std::int32_t next = 0;
  for (std::size_t seed = 0; seed < in.pixel_count(); ++seed) {
    if (comp[seed] >= 0) continue;
    const InstanceId id = in.ids[seed];
    members.clear();
    stack.assign(1, seed);
    comp[seed] = next;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      members.push_back(p);
      const int x = int(p % std::size_t(w)), y = int(p / std::size_t(w));
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = x + dx, yy = y + dy;
          if (xx < 0 || xx >= w || yy < 0 || yy >= h) continue;
          const std::size_t q = std::size_t(yy) * w + xx;
          if (comp[q] < 0 && in.ids[q] == id) {
            comp[q] = next;
            stack.push_back(q);
          }
        }
      }
    }
    if (int(members.size()) < min_area) {
      border.clear();
      for (std::size_t p : members) {
        const int x = int(p % std::size_t(w)), y = int(p / std::size_t(w));
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int xx = x + dx, yy = y + dy;
            if (xx < 0 || xx >= w || yy < 0 || yy >= h) continue;
            const std::size_t q = std::size_t(yy) * w + xx;
            if (comp[q] == next) continue;
            const InstanceId nid = in.ids[q];
            auto it = std::find_if(border.begin(), border.end(),
                                   [nid](const auto& b) { return b.first == nid; });
            if (it == border.end()) {
              border.emplace_back(nid, 1);
            } else {
              ++it->second;
            }
          }
        }
      }
      if (!border.empty()) {
        InstanceId best = border.front().first;
        int best_n = border.front().second;
        for (const auto& [nid, c] : border) {
          if (c > best_n || (c == best_n && nid < best)) {
            best = nid;
            best_n = c;
          }
        }
        for (std::size_t p : members) out.ids[p] = best;
      }
    }
    ++next;
  }
  return out;
}

}  // namespace detail

/**
 * Classical mask refiner: turns speckled coarse label renders into
 * continuous masks.
 *
 *  1. `passes` rounds of a (2r+1)^2 majority filter;
 *  2. per-ID morphological closing with a (2r+1)^2 square, overlaps going to the ID with
 *     the larger area before closing (smaller ID on ties);
 *  3. 8-connected components below min_component_area absorbed by their
 *     bordering majority.
 *
 * Output IDs are a subset of the input IDs plus 0. `alpha` is accepted for
 * interface parity with learned refiners that consume the rendering; the
 * classical path ignores it beyond a size check.
 */
inline InstanceMask2D refine_mask(const InstanceMask2D& coarse,
                                  std::optional<std::span<const float>> alpha = std::nullopt,
                                  const RefineConfig& cfg = {}) {
  cfg.validate();
  if (alpha && alpha->size() != coarse.pixel_count()) {
    throw ContractError("alpha channel size does not match the mask");
  }
  InstanceMask2D m = coarse;
  if (cfg.majority_radius > 0) {
    for (int i = 0; i < cfg.passes; ++i) m = detail::majority_filter(m, cfg.majority_radius);
  }
  m = detail::close_per_id(m, cfg.closing_radius);
  m = detail::absorb_small_components(m, cfg.min_component_area);
  return m;
}

struct CoarseAndRefined {
  InstanceMask2D coarse;
  InstanceMask2D refined;
};

/// Label render followed by refinement, both kept for side-by-side checks.
inline CoarseAndRefined refine_assignment_outputs(const GaussianScene& scene,
                                                  const LabelAssignment& labels,
                                                  const Camera& cam,
                                                  const RasterConfig& raster = {},
                                                  const RefineConfig& refine = {}) {
  CoarseAndRefined out;
  out.coarse = render_instance_mask(scene, labels, cam, raster);
  out.refined = refine_mask(out.coarse, std::nullopt, refine);
  return out;
}

}  // namespace sagseg
