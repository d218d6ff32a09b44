#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sagseg/errors.hpp"

namespace sagseg {

using InstanceId = std::uint16_t;

// Zeroth-order spherical harmonic basis constant, 1 / (2 sqrt(pi)).
inline constexpr double kShC0 = 0.28209479177387814;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double logit(double p) {
  p = std::clamp(p, 1e-7, 1.0 - 1e-7);
  return std::log(p / (1.0 - p));
}

/// Extra per-vertex PLY properties that are carried through unchanged
/// (normals, higher SH bands, ...). Stored row-major, one row per primitive.
struct ExtraProperties {
  std::vector<std::string> names;
  std::vector<float> values;

  std::size_t width() const { return names.size(); }
};

/**
 * Explicit Gaussian scene.
 *
 * Two views of the same primitives are kept side by side: the stored
 * parameters exactly as they appear on disk (log-scales, opacity logits,
 * raw quaternions, SH-DC coefficients) and their activated counterparts used
 * for rendering. Keeping the stored form makes PLY round trips bit-exact.
 */
struct GaussianScene {
  // Stored parameters (as serialized).
  std::vector<std::array<float, 3>> xyz;
  std::vector<std::array<float, 3>> log_scale;
  std::vector<std::array<float, 4>> rot;  // w, x, y, z (not necessarily unit)
  std::vector<float> opacity_logit;
  std::vector<std::array<float, 3>> f_dc;
  ExtraProperties extras;

  // Activated parameters.
  std::vector<Eigen::Vector3d> position;
  std::vector<Eigen::Vector3d> scale;
  std::vector<Eigen::Quaterniond> rotation;
  std::vector<double> opacity;
  std::vector<Eigen::Vector3d> color;

  std::size_t size() const { return position.size(); }
  bool empty() const { return position.empty(); }

  /// Append a primitive given activated values. Stored parameters are
  /// derived by inverting the activations.
  void add(const Eigen::Vector3d& pos, const Eigen::Vector3d& scl,
           const Eigen::Quaterniond& q, double alpha,
           const Eigen::Vector3d& rgb) {
    xyz.push_back({float(pos.x()), float(pos.y()), float(pos.z())});
    log_scale.push_back({float(std::log(scl.x())), float(std::log(scl.y())),
                         float(std::log(scl.z()))});
    rot.push_back({float(q.w()), float(q.x()), float(q.y()), float(q.z())});
    opacity_logit.push_back(float(logit(alpha)));
    f_dc.push_back({float((rgb.x() - 0.5) / kShC0),
                    float((rgb.y() - 0.5) / kShC0),
                    float((rgb.z() - 0.5) / kShC0)});
    extras.values.resize(extras.values.size() + extras.width(), 0.0f);
    position.push_back(pos);
    scale.push_back(scl);
    rotation.push_back(q.normalized());
    opacity.push_back(std::clamp(alpha, 0.0, 1.0));
    color.push_back(rgb.cwiseMax(0.0).cwiseMin(1.0));
  }

  /// Recompute every activated array from the stored parameters.
  /// Throws DataError naming the primitive on non-finite input.
  void activate() {
    const std::size_t n = xyz.size();
    if (log_scale.size() != n || rot.size() != n || opacity_logit.size() != n ||
        f_dc.size() != n || extras.values.size() != n * extras.width()) {
      throw ContractError("scene arrays have inconsistent lengths");
    }
    position.resize(n);
    scale.resize(n);
    rotation.resize(n);
    opacity.resize(n);
    color.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto finite3 = [](const std::array<float, 3>& a) {
        return std::isfinite(a[0]) && std::isfinite(a[1]) && std::isfinite(a[2]);
      };
      const auto& r = rot[i];
      bool ok = finite3(xyz[i]) && finite3(log_scale[i]) && finite3(f_dc[i]) &&
                std::isfinite(opacity_logit[i]) && std::isfinite(r[0]) &&
                std::isfinite(r[1]) && std::isfinite(r[2]) && std::isfinite(r[3]);
      if (!ok) {
        throw DataError("non-finite value in primitive " + std::to_string(i));
      }
      position[i] = {xyz[i][0], xyz[i][1], xyz[i][2]};
      scale[i] = {std::exp(double(log_scale[i][0])), std::exp(double(log_scale[i][1])),
                  std::exp(double(log_scale[i][2]))};
      if (!(scale[i].minCoeff() > 0.0) || !std::isfinite(scale[i].maxCoeff())) {
        throw DataError("degenerate scale in primitive " + std::to_string(i));
      }
      Eigen::Quaterniond q(r[0], r[1], r[2], r[3]);
      if (!(q.norm() > 0.0)) {
        throw DataError("zero quaternion in primitive " + std::to_string(i));
      }
      rotation[i] = q.normalized();
      opacity[i] = sigmoid(opacity_logit[i]);
      for (int c = 0; c < 3; ++c) {
        color[i][c] = std::clamp(0.5 + kShC0 * double(f_dc[i][c]), 0.0, 1.0);
      }
    }
  }
};

/// H x W raster of instance IDs; 0 is background.
struct InstanceMask2D {
  int width = 0;
  int height = 0;
  std::vector<InstanceId> ids;

  InstanceMask2D() = default;
  InstanceMask2D(int w, int h, InstanceId fill = 0)
      : width(w), height(h), ids(std::size_t(w) * std::size_t(h), fill) {
    if (w < 0 || h < 0) throw ContractError("negative mask dimensions");
  }

  InstanceId& at(int x, int y) { return ids[std::size_t(y) * width + x]; }
  InstanceId at(int x, int y) const { return ids[std::size_t(y) * width + x]; }
  std::size_t pixel_count() const { return ids.size(); }

  /// Nonzero IDs present in the raster, ascending.
  std::vector<InstanceId> instance_ids() const {
    std::vector<bool> seen(std::numeric_limits<InstanceId>::max() + 1, false);
    for (InstanceId v : ids) seen[v] = true;
    std::vector<InstanceId> out;
    for (std::size_t v = 1; v < seen.size(); ++v) {
      if (seen[v]) out.push_back(InstanceId(v));
    }
    return out;
  }

  friend bool operator==(const InstanceMask2D&, const InstanceMask2D&) = default;
};

enum class AggregationMode { kRender, kCentroid };

inline const char* to_string(AggregationMode m) {
  return m == AggregationMode::kRender ? "render" : "centroid";
}

inline AggregationMode parse_mode(const std::string& s) {
  if (s == "render") return AggregationMode::kRender;
  if (s == "centroid") return AggregationMode::kCentroid;
  throw ConfigError("unknown aggregation mode '" + s + "' (expected render|centroid)");
}

struct Provenance {
  std::string mode = "none";
  std::size_t views = 0;
  std::string tie_break = "smallest_id";
  std::string timestamp = "none";

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// Per-Gaussian instance labels. labels[i] in {0..num_instances}.
struct LabelAssignment {
  std::vector<InstanceId> labels;
  InstanceId num_instances = 0;
  Provenance provenance;

  std::size_t size() const { return labels.size(); }

  /// Recompute num_instances as the largest assigned ID.
  void update_num_instances() {
    num_instances = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
  }

  friend bool operator==(const LabelAssignment&, const LabelAssignment&) = default;
};

inline void check_consistent(const LabelAssignment& labels, const GaussianScene& scene) {
  if (labels.size() != scene.size()) {
    throw ContractError("label count " + std::to_string(labels.size()) +
                        " does not match scene size " + std::to_string(scene.size()));
  }
}

}  // namespace sagseg
