#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <png.h>

#include <nlohmann/json.hpp>

#include "sagseg/errors.hpp"
#include "sagseg/geometry.hpp"
#include "sagseg/types.hpp"

namespace sagseg {

namespace fs = std::filesystem;

//
// PLY
//

namespace ply {

enum class Type { kInt8, kUInt8, kInt16, kUInt16, kInt32, kUInt32, kFloat32, kFloat64 };

inline std::size_t type_size(Type t) {
  switch (t) {
    case Type::kInt8:
    case Type::kUInt8: return 1;
    case Type::kInt16:
    case Type::kUInt16: return 2;
    case Type::kInt32:
    case Type::kUInt32:
    case Type::kFloat32: return 4;
    case Type::kFloat64: return 8;
  }
  return 0;
}

inline Type parse_type(const std::string& s) {
  static const std::map<std::string, Type> table = {
      {"char", Type::kInt8},     {"int8", Type::kInt8},       {"uchar", Type::kUInt8},
      {"uint8", Type::kUInt8},   {"short", Type::kInt16},     {"int16", Type::kInt16},
      {"ushort", Type::kUInt16}, {"uint16", Type::kUInt16},   {"int", Type::kInt32},
      {"int32", Type::kInt32},   {"uint", Type::kUInt32},     {"uint32", Type::kUInt32},
      {"float", Type::kFloat32}, {"float32", Type::kFloat32}, {"double", Type::kFloat64},
      {"float64", Type::kFloat64}};
  auto it = table.find(s);
  if (it == table.end()) throw FormatError("unknown PLY property type '" + s + "'");
  return it->second;
}

inline double read_value(const unsigned char* p, Type t) {
  // Host is assumed little-endian, as is the file.
  switch (t) {
    case Type::kInt8: { std::int8_t v; std::memcpy(&v, p, 1); return v; }
    case Type::kUInt8: { std::uint8_t v; std::memcpy(&v, p, 1); return v; }
    case Type::kInt16: { std::int16_t v; std::memcpy(&v, p, 2); return v; }
    case Type::kUInt16: { std::uint16_t v; std::memcpy(&v, p, 2); return v; }
    case Type::kInt32: { std::int32_t v; std::memcpy(&v, p, 4); return v; }
    case Type::kUInt32: { std::uint32_t v; std::memcpy(&v, p, 4); return v; }
    case Type::kFloat32: { float v; std::memcpy(&v, p, 4); return v; }
    case Type::kFloat64: { double v; std::memcpy(&v, p, 8); return v; }
  }
  return 0.0;
}

struct Property {
  std::string name;
  Type type = Type::kFloat32;
  bool is_list = false;
  Type count_type = Type::kUInt8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

struct Header {
  std::vector<std::string> comments;
  std::vector<Element> elements;
};

inline Header read_header(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line) || line.substr(0, 3) != "ply") {
    throw FormatError(path + ": not a PLY file");
  }
  Header h;
  bool format_ok = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "end_header") {
      if (!format_ok) throw FormatError(path + ": missing or unsupported PLY format line");
      return h;
    }
    if (key == "format") {
      std::string fmt, version;
      ls >> fmt >> version;
      if (fmt != "binary_little_endian") {
        throw FormatError(path + ": only binary_little_endian PLY is supported, got '" + fmt +
                          "'");
      }
      format_ok = true;
    } else if (key == "comment" || key == "obj_info") {
      std::string rest;
      std::getline(ls, rest);
      if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
      h.comments.push_back(rest);
    } else if (key == "element") {
      Element e;
      ls >> e.name >> e.count;
      if (!ls) throw FormatError(path + ": malformed element line '" + line + "'");
      h.elements.push_back(std::move(e));
    } else if (key == "property") {
      if (h.elements.empty()) throw FormatError(path + ": property before any element");
      Property p;
      std::string t;
      ls >> t;
      if (t == "list") {
        std::string ct, vt;
        ls >> ct >> vt >> p.name;
        p.is_list = true;
        p.count_type = parse_type(ct);
        p.type = parse_type(vt);
      } else {
        p.type = parse_type(t);
        ls >> p.name;
      }
      h.elements.back().properties.push_back(p);
    } else if (!key.empty()) {
      throw FormatError(path + ": unexpected PLY header line '" + line + "'");
    }
  }
  throw FormatError(path + ": PLY header has no end_header");
}

// Vertex table read into doubles, one column per scalar property.
struct VertexTable {
  std::size_t count = 0;
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  std::vector<std::string> comments;

  const std::vector<double>* find(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return &columns[i];
    }
    return nullptr;
  }
};

inline VertexTable read_vertices(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  const Header h = read_header(in, path);
  VertexTable table;
  table.comments = h.comments;
  for (const Element& e : h.elements) {
    if (e.name != "vertex") {
      // Skip the element's data; list properties need per-row parsing.
      for (std::size_t r = 0; r < e.count; ++r) {
        for (const Property& p : e.properties) {
          if (p.is_list) {
            unsigned char buf[8];
            in.read(reinterpret_cast<char*>(buf), std::streamsize(type_size(p.count_type)));
            const auto n = std::size_t(read_value(buf, p.count_type));
            in.seekg(std::streamoff(n * type_size(p.type)), std::ios::cur);
          } else {
            in.seekg(std::streamoff(type_size(p.type)), std::ios::cur);
          }
        }
        if (!in) throw FormatError(path + ": truncated PLY element '" + e.name + "'");
      }
      continue;
    }
    std::size_t stride = 0;
    for (const Property& p : e.properties) {
      if (p.is_list) throw FormatError(path + ": list property '" + p.name + "' on vertex");
      table.names.push_back(p.name);
      stride += type_size(p.type);
    }
    table.count = e.count;
    table.columns.assign(e.properties.size(), std::vector<double>(e.count));
    std::vector<unsigned char> row(stride);
    for (std::size_t r = 0; r < e.count; ++r) {
      in.read(reinterpret_cast<char*>(row.data()), std::streamsize(stride));
      if (!in) {
        throw FormatError(path + ": truncated vertex data at row " + std::to_string(r));
      }
      std::size_t off = 0;
      for (std::size_t c = 0; c < e.properties.size(); ++c) {
        table.columns[c][r] = read_value(row.data() + off, e.properties[c].type);
        off += type_size(e.properties[c].type);
      }
    }
    return table;
  }
  throw FormatError(path + ": PLY has no vertex element");
}

inline const std::vector<std::string>& core_properties() {
  static const std::vector<std::string> names = {
      "x",       "y",       "z",       "f_dc_0",  "f_dc_1", "f_dc_2", "opacity",
      "scale_0", "scale_1", "scale_2", "rot_0",   "rot_1",  "rot_2",  "rot_3"};
  return names;
}

inline constexpr const char* kInstanceProperty = "instance_id";
inline constexpr const char* kProvenanceTag = "sagseg";

}  // namespace ply

struct LabeledScene {
  GaussianScene scene;
  std::optional<LabelAssignment> labels;
};

/**
 * Loads a 3DGS-convention PLY (binary little-endian) and applies the
 * activations: exp on scales, sigmoid on opacity, 0.5 + C0 * f_dc for color.
 * Higher SH bands and other unknown properties are carried as extras.
 * When an `instance_id` property is present the labels are returned too.
 */
inline LabeledScene load_labeled_scene(const std::string& path) {
  const ply::VertexTable t = ply::read_vertices(path);
  std::vector<const std::vector<double>*> cols;
  for (const std::string& name : ply::core_properties()) {
    const auto* c = t.find(name);
    if (!c) throw FormatError(path + ": missing vertex property '" + name + "'");
    cols.push_back(c);
  }
  const std::size_t n = t.count;
  LabeledScene out;
  GaussianScene& s = out.scene;
  s.xyz.resize(n);
  s.f_dc.resize(n);
  s.opacity_logit.resize(n);
  s.log_scale.resize(n);
  s.rot.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto v = [&](int k) { return float((*cols[std::size_t(k)])[i]); };
    s.xyz[i] = {v(0), v(1), v(2)};
    s.f_dc[i] = {v(3), v(4), v(5)};
    s.opacity_logit[i] = v(6);
    s.log_scale[i] = {v(7), v(8), v(9)};
    s.rot[i] = {v(10), v(11), v(12), v(13)};
  }
  const auto& core = ply::core_properties();
  std::vector<std::size_t> extra_cols;
  for (std::size_t c = 0; c < t.names.size(); ++c) {
    if (t.names[c] == ply::kInstanceProperty) continue;
    if (std::find(core.begin(), core.end(), t.names[c]) != core.end()) continue;
    s.extras.names.push_back(t.names[c]);
    extra_cols.push_back(c);
  }
  s.extras.values.resize(n * extra_cols.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t e = 0; e < extra_cols.size(); ++e) {
      s.extras.values[i * extra_cols.size() + e] = float(t.columns[extra_cols[e]][i]);
    }
  }
  s.activate();

  if (const auto* ids = t.find(ply::kInstanceProperty)) {
    LabelAssignment a;
    a.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = (*ids)[i];
      if (!(v >= 0.0 && v <= 65535.0) || v != std::floor(v)) {
        throw DataError(path + ": instance_id out of range at primitive " + std::to_string(i));
      }
      a.labels[i] = InstanceId(v);
    }
    a.update_num_instances();
    for (const std::string& c : t.comments) {
      std::istringstream cs(c);
      std::string tag, key, value;
      cs >> tag >> key;
      std::getline(cs, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      if (tag != ply::kProvenanceTag) continue;
      if (key == "mode") a.provenance.mode = value;
      if (key == "views") a.provenance.views = std::stoul(value);
      if (key == "tie_break") a.provenance.tie_break = value;
      if (key == "timestamp") a.provenance.timestamp = value;
    }
    out.labels = std::move(a);
  }
  return out;
}

inline GaussianScene load_scene(const std::string& path) {
  return load_labeled_scene(path).scene;
}

/// Reads the instance_id column; ContractError when the PLY has none.
inline LabelAssignment load_labels(const std::string& path) {
  auto ls = load_labeled_scene(path);
  if (!ls.labels) {
    throw ContractError(path + ": PLY has no instance_id property (run `label` first)");
  }
  return std::move(*ls.labels);
}

namespace detail {

inline void write_ply(const GaussianScene& scene, const LabelAssignment* labels,
                      const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  const std::size_t n = scene.xyz.size();
  out << "ply\nformat binary_little_endian 1.0\n";
  if (labels) {
    const Provenance& p = labels->provenance;
    out << "comment " << ply::kProvenanceTag << " mode " << p.mode << "\n";
    out << "comment " << ply::kProvenanceTag << " views " << p.views << "\n";
    out << "comment " << ply::kProvenanceTag << " tie_break " << p.tie_break << "\n";
    out << "comment " << ply::kProvenanceTag << " timestamp " << p.timestamp << "\n";
  }
  out << "element vertex " << n << "\n";
  for (const std::string& name : ply::core_properties()) out << "property float " << name << "\n";
  for (const std::string& name : scene.extras.names) out << "property float " << name << "\n";
  if (labels) out << "property uint " << ply::kInstanceProperty << "\n";
  out << "end_header\n";

  const std::size_t e = scene.extras.width();
  std::vector<float> row(14 + e);
  for (std::size_t i = 0; i < n; ++i) {
    row[0] = scene.xyz[i][0];
    row[1] = scene.xyz[i][1];
    row[2] = scene.xyz[i][2];
    row[3] = scene.f_dc[i][0];
    row[4] = scene.f_dc[i][1];
    row[5] = scene.f_dc[i][2];
    row[6] = scene.opacity_logit[i];
    row[7] = scene.log_scale[i][0];
    row[8] = scene.log_scale[i][1];
    row[9] = scene.log_scale[i][2];
    for (int k = 0; k < 4; ++k) row[10 + std::size_t(k)] = scene.rot[i][std::size_t(k)];
    for (std::size_t k = 0; k < e; ++k) row[14 + k] = scene.extras.values[i * e + k];
    out.write(reinterpret_cast<const char*>(row.data()),
              std::streamsize(row.size() * sizeof(float)));
    if (labels) {
      const std::uint32_t id = labels->labels[i];
      out.write(reinterpret_cast<const char*>(&id), sizeof(id));
    }
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace detail

/// Writes the scene without labels.
inline void save_scene(const GaussianScene& scene, const std::string& path) {
  detail::write_ply(scene, nullptr, path);
}

/// Writes the scene with an appended `property uint instance_id` and the
/// provenance as header comments.
inline void save_labels(const LabelAssignment& labels, const GaussianScene& scene,
                        const std::string& path) {
  check_consistent(labels, scene);
  detail::write_ply(scene, &labels, path);
}

/// Plain-text export: one instance ID per line.
inline void save_label_sidecar(const LabelAssignment& labels, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  for (InstanceId id : labels.labels) out << id << "\n";
}

inline LabelAssignment load_label_sidecar(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  LabelAssignment a;
  long long v;
  while (in >> v) {
    if (v < 0 || v > 65535) throw DataError(path + ": instance ID out of range");
    a.labels.push_back(InstanceId(v));
  }
  if (!in.eof()) throw FormatError(path + ": non-integer entry in label sidecar");
  a.update_num_instances();
  return a;
}

//
// Masks
//

namespace detail {

inline InstanceMask2D read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  auto next_token = [&]() {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
      if (ch == '#') {
        while ((ch = in.get()) != EOF && ch != '\n') {
        }
        continue;
      }
      if (std::isspace(ch)) {
        if (!tok.empty()) break;
        continue;
      }
      tok.push_back(char(ch));
    }
    return tok;
  };
  if (next_token() != "P5") throw FormatError(path + ": not a binary PGM (P5)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token());
    h = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw FormatError(path + ": malformed PGM header");
  }
  if (w < 0 || h < 0 || maxval <= 0 || maxval > 65535) {
    throw FormatError(path + ": unsupported PGM dimensions or maxval");
  }
  InstanceMask2D m(w, h);
  const std::size_t bytes = maxval < 256 ? 1 : 2;
  std::vector<unsigned char> buf(m.pixel_count() * bytes);
  in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
  if (!in) throw FormatError(path + ": truncated PGM data");
  for (std::size_t i = 0; i < m.pixel_count(); ++i) {
    m.ids[i] = bytes == 1 ? buf[i] : InstanceId((buf[2 * i] << 8) | buf[2 * i + 1]);
  }
  return m;
}

inline void write_pgm(const InstanceMask2D& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "P5\n" << m.width << " " << m.height << "\n65535\n";
  std::vector<unsigned char> buf(m.pixel_count() * 2);
  for (std::size_t i = 0; i < m.pixel_count(); ++i) {
    buf[2 * i] = static_cast<unsigned char>(m.ids[i] >> 8);
    buf[2 * i + 1] = static_cast<unsigned char>(m.ids[i] & 0xFF);
  }
  out.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline InstanceMask2D read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open '" + path + "'");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};
  if (!info) throw IoError("libpng initialisation failed");

  std::string error;
  std::uint32_t width = 0, height = 0;
  int bit_depth = 0, color_type = 0;
  std::vector<unsigned char> data;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    throw FormatError(path + ": corrupt PNG");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  bit_depth = png_get_bit_depth(png, info);
  color_type = png_get_color_type(png, info);
  if (color_type != PNG_COLOR_TYPE_GRAY) {
    error = path + ": mask PNG must be single-channel grayscale";
  } else if (bit_depth != 8 && bit_depth != 16) {
    error = path + ": unsupported PNG bit depth " + std::to_string(bit_depth) +
            " (expected 8 or 16)";
  }
  if (!error.empty()) throw FormatError(error);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  data.resize(row_bytes * height);
  rows.resize(height);
  for (std::uint32_t y = 0; y < height; ++y) rows[y] = data.data() + y * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);

  InstanceMask2D m{int(width), int(height)};
  for (std::uint32_t y = 0; y < height; ++y) {
    const unsigned char* r = rows[y];
    for (std::uint32_t x = 0; x < width; ++x) {
      m.at(int(x), int(y)) =
          bit_depth == 8 ? r[x] : InstanceId((r[2 * x] << 8) | r[2 * x + 1]);
    }
  }
  return m;
}

inline void write_png(const InstanceMask2D& m, const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot write '" + path + "'");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};
  if (!info) throw IoError("libpng initialisation failed");

  std::vector<unsigned char> data(m.pixel_count() * 2);
  for (std::size_t i = 0; i < m.pixel_count(); ++i) {
    data[2 * i] = static_cast<unsigned char>(m.ids[i] >> 8);
    data[2 * i + 1] = static_cast<unsigned char>(m.ids[i] & 0xFF);
  }
  std::vector<png_bytep> rows(std::size_t(m.height));
  for (int y = 0; y < m.height; ++y) rows[std::size_t(y)] = data.data() + std::size_t(y) * m.width * 2;
  if (setjmp(png_jmpbuf(png))) {
    throw IoError("failed writing '" + path + "'");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, png_uint_32(m.width), png_uint_32(m.height), 16, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
}

inline std::string lower_extension(const std::string& path) {
  std::string ext = fs::path(path).extension().string();
  for (char& c : ext) c = char(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

}  // namespace detail

/// Reads a 16- or 8-bit grayscale PNG or a binary PGM. Pixel value = ID.
/// The format is detected from the file's magic bytes.
inline InstanceMask2D load_mask(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open mask '" + path + "'");
  unsigned char magic[8] = {};
  in.read(reinterpret_cast<char*>(magic), 8);
  in.close();
  if (magic[0] == 'P' && magic[1] == '5') return detail::read_pgm(path);
  if (png_sig_cmp(magic, 0, 8) == 0) return detail::read_png(path);
  throw FormatError(path + ": mask is neither PNG nor binary PGM");
}

/// Writes a 16-bit PNG for `.png` paths, PGM (maxval 65535) otherwise.
inline void save_mask(const InstanceMask2D& mask, const std::string& path) {
  if (detail::lower_extension(path) == ".png") {
    detail::write_png(mask, path);
  } else {
    detail::write_pgm(mask, path);
  }
}

//
// Cameras
//

inline Camera camera_from_json(const nlohmann::json& j) {
  Camera c;
  try {
    const auto& id = j.at("id");
    c.id = id.is_string() ? id.get<std::string>() : id.dump();
    c.width = j.at("width").get<int>();
    c.height = j.at("height").get<int>();
    c.fx = j.at("fx").get<double>();
    c.fy = j.at("fy").get<double>();
    c.cx = j.at("cx").get<double>();
    c.cy = j.at("cy").get<double>();
    if (j.contains("near_plane")) c.near_plane = j.at("near_plane").get<double>();
    const auto m = j.at("world_to_camera").get<std::vector<double>>();
    if (m.size() != 16) throw ConfigError("world_to_camera must have 16 entries");
    for (int r = 0; r < 4; ++r) {
      for (int k = 0; k < 4; ++k) c.world_to_camera(r, k) = m[std::size_t(4 * r + k)];
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid camera entry: ") + e.what());
  }
  c.validate();
  return c;
}

inline nlohmann::json camera_to_json(const Camera& c) {
  std::vector<double> m(16);
  for (int r = 0; r < 4; ++r) {
    for (int k = 0; k < 4; ++k) m[std::size_t(4 * r + k)] = c.world_to_camera(r, k);
  }
  return {{"id", c.id},     {"width", c.width}, {"height", c.height},
          {"fx", c.fx},     {"fy", c.fy},       {"cx", c.cx},
          {"cy", c.cy},     {"near_plane", c.near_plane},
          {"world_to_camera", m}};
}

inline ViewSet cameras_from_json(const nlohmann::json& doc) {
  const nlohmann::json& list = doc.is_object() && doc.contains("cameras") ? doc["cameras"] : doc;
  if (!list.is_array()) throw ConfigError("camera document must be a JSON list");
  ViewSet vs;
  for (const auto& entry : list) vs.cameras.push_back(camera_from_json(entry));
  vs.validate();
  return vs;
}

inline ViewSet load_cameras(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return cameras_from_json(doc);
}

inline void save_cameras(const ViewSet& views, const std::string& path) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& c : views.cameras) list.push_back(camera_to_json(c));
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << list.dump(2) << "\n";
}

/// Mask file name for a camera id in a masks directory.
inline std::string mask_filename(const Camera& cam, const std::string& ext = ".pgm") {
  return "mask_" + cam.id + ext;
}

}  // namespace sagseg
