#pragma once

#include <fstream>
#include <functional>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "sagseg/errors.hpp"
#include "sagseg/evalkit.hpp"

namespace sagseg {

namespace detail {

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + v + "' is not a number");
  }
}

inline long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long i = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + v + "' is not an integer");
  }
}

using Setter = std::function<void(PipelineConfig&, const std::string&)>;

inline const std::map<std::string, Setter>& config_setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto dbl = [&t](const std::string& key, auto member) {
      t[key] = [key, member](PipelineConfig& c, const std::string& v) {
        member(c) = parse_double(key, v);
      };
    };
    auto integer = [&t](const std::string& key, auto member) {
      t[key] = [key, member](PipelineConfig& c, const std::string& v) {
        member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(parse_int(key, v));
      };
    };
    integer("raster.tile_size", [](PipelineConfig& c) -> int& { return c.raster.tile_size; });
    dbl("raster.alpha_cutoff", [](PipelineConfig& c) -> double& { return c.raster.alpha_cutoff; });
    dbl("raster.transmittance_stop",
        [](PipelineConfig& c) -> double& { return c.raster.transmittance_stop; });
    dbl("raster.contribution_floor",
        [](PipelineConfig& c) -> double& { return c.raster.contribution_floor; });
    dbl("raster.footprint_radius_sigma",
        [](PipelineConfig& c) -> double& { return c.raster.footprint_radius_sigma; });
    dbl("raster.max_alpha", [](PipelineConfig& c) -> double& { return c.raster.max_alpha; });
    dbl("raster.cov2d_regularization",
        [](PipelineConfig& c) -> double& { return c.raster.cov2d_regularization; });
    t["raster.index_mode"] = [](PipelineConfig& c, const std::string& v) {
      if (v == "max_weight") {
        c.raster.index_mode = IndexMode::kMaxWeight;
      } else if (v == "first_hit") {
        c.raster.index_mode = IndexMode::kFirstHit;
      } else {
        throw ConfigError("raster.index_mode must be max_weight or first_hit");
      }
    };
    t["aggregation.mode"] = [](PipelineConfig& c, const std::string& v) {
      c.aggregation.mode = parse_mode(v);
    };
    integer("aggregation.min_votes",
            [](PipelineConfig& c) -> std::uint64_t& { return c.aggregation.min_votes; });
    dbl("aggregation.occlusion_epsilon",
        [](PipelineConfig& c) -> double& { return c.aggregation.occlusion_epsilon; });
    integer("refine.majority_radius",
            [](PipelineConfig& c) -> int& { return c.refine.majority_radius; });
    integer("refine.closing_radius",
            [](PipelineConfig& c) -> int& { return c.refine.closing_radius; });
    integer("refine.min_component_area",
            [](PipelineConfig& c) -> int& { return c.refine.min_component_area; });
    integer("refine.passes", [](PipelineConfig& c) -> int& { return c.refine.passes; });
    return t;
  }();
  return table;
}

}  // namespace detail

/// Applies one `section.field=value` override. Unknown keys are rejected.
inline void apply_override(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  const auto& table = detail::config_setters();
  auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(cfg, value);
}

inline void apply_override(PipelineConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  apply_override(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
}

/// Applies a JSON config, either flat ({"raster.tile_size": 8}) or nested
/// ({"raster": {"tile_size": 8}}).
inline void apply_config_json(PipelineConfig& cfg, const nlohmann::json& j,
                              const std::string& prefix = "") {
  if (!j.is_object()) throw ConfigError("config document must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    const std::string key = prefix.empty() ? k : prefix + "." + k;
    if (v.is_object()) {
      apply_config_json(cfg, v, key);
    } else if (v.is_string()) {
      apply_override(cfg, key, v.get<std::string>());
    } else if (v.is_number_integer()) {
      apply_override(cfg, key, std::to_string(v.get<long long>()));
    } else if (v.is_number()) {
      apply_override(cfg, key, v.dump());
    } else {
      throw ConfigError("config key '" + key + "' has an unsupported value type");
    }
  }
}

inline void apply_config_file(PipelineConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  apply_config_json(cfg, j);
}

inline void validate(const PipelineConfig& cfg) {
  cfg.raster.validate();
  cfg.aggregation.validate();
  cfg.refine.validate();
}

}  // namespace sagseg
