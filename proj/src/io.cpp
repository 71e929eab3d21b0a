#include "o2s/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "o2s/catalog.hpp"
#include "o2s/error.hpp"

namespace o2s::io {
namespace fs = std::filesystem;

namespace {

[[noreturn]] void parse_fail(const std::string& context, const std::string& what) {
  throw Error(ErrorCode::ParseError, context + ": " + what);
}

const Json& require(const Json& j, const char* key, const std::string& ctx) {
  if (!j.is_object()) parse_fail(ctx, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) parse_fail(ctx, std::string("missing field '") + key + "'");
  return *it;
}

template <class T>
T get_as(const Json& v, const std::string& ctx, const char* key) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    parse_fail(ctx, std::string("field '") + key + "' has the wrong type");
  }
}

template <class T>
T field(const Json& j, const char* key, const std::string& ctx) {
  return get_as<T>(require(j, key, ctx), ctx, key);
}

template <class T>
T field_or(const Json& j, const char* key, T fallback, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  return get_as<T>(j.at(key), ctx, key);
}

void check_version(const Json& j, const std::string& ctx) {
  const int v = field<int>(j, "format_version", ctx);
  if (v != kFormatVersion) parse_fail(ctx, "unsupported format_version " + std::to_string(v));
}

Vec3 vec3_from(const Json& v, const std::string& ctx, const char* key) {
  const auto a = get_as<std::vector<double>>(v, ctx, key);
  if (a.size() != 3) parse_fail(ctx, std::string("field '") + key + "' must have 3 entries");
  return {a[0], a[1], a[2]};
}

Json vec3_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

TokenSpan span_from(const Json& v, const std::string& ctx, const char* key) {
  const auto a = get_as<std::vector<std::size_t>>(v, ctx, key);
  if (a.size() != 2 || a[0] > a[1]) parse_fail(ctx, std::string("field '") + key + "' must be [first, last]");
  return {a[0], a[1]};
}

Json span_json(const TokenSpan& s) { return Json::array({s.first, s.last}); }

Matrix matrix_from(const Json& v, const std::string& ctx, const char* key) {
  const auto rows = get_as<std::vector<std::vector<double>>>(v, ctx, key);
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) parse_fail(ctx, std::string("ragged matrix in '") + key + "'");
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

// Pixel colors stored as bytes or unit floats.
float color_channel(double v, bool bytes) { return static_cast<float>(bytes ? v / 255.0 : v); }

struct PointRef {
  std::vector<Vec3> points;
  std::vector<Rgb> colors;
};

PointDType dtype_from(const std::string& s, const std::string& ctx) {
  if (s == "f32") return PointDType::F32;
  if (s == "f64") return PointDType::F64;
  parse_fail(ctx, "unknown dtype '" + s + "'");
}

PointRef read_point_ref(const Json& j, const fs::path& base, const std::string& ctx) {
  const Json& pts = require(j, "points", ctx);
  PointRef out;
  if (pts.is_object()) {
    const auto file = field<std::string>(pts, "file", ctx);
    const auto count = field<std::size_t>(pts, "count", ctx);
    const auto dtype = dtype_from(field_or<std::string>(pts, "dtype", "f32", ctx), ctx);
    out.points = read_points_binary(base / file, count, dtype);
  } else if (pts.is_array()) {
    out.points.reserve(pts.size());
    for (const auto& p : pts) out.points.push_back(vec3_from(p, ctx, "points"));
  } else {
    parse_fail(ctx, "field 'points' must be an object or an array");
  }
  if (j.contains("colors")) {
    for (const auto& c : require(j, "colors", ctx)) {
      const Vec3 v = vec3_from(c, ctx, "colors");
      out.colors.push_back({static_cast<float>(v.x), static_cast<float>(v.y), static_cast<float>(v.z)});
    }
    if (out.colors.size() != out.points.size()) parse_fail(ctx, "colors and points differ in length");
  }
  return out;
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return out;
}

template <class T>
T byteswap_value(T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  std::reverse(b, b + sizeof(T));
  std::memcpy(&v, b, sizeof(T));
  return v;
}

template <class T>
T read_le(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if constexpr (std::endian::native == std::endian::big) v = byteswap_value(v);
  return v;
}

template <class T>
void write_le(std::ostream& out, T v) {
  if constexpr (std::endian::native == std::endian::big) v = byteswap_value(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace

// ---- primitives -----------------------------------------------------------

Json to_json(const Box3& box) {
  Json j;
  j["center"] = vec3_json(box.center());
  j["size"] = vec3_json(box.size());
  j["heading"] = box.heading();
  return j;
}

Box3 box_from_json(const Json& j, const std::string& ctx) {
  const Vec3 size = vec3_from(require(j, "size", ctx), ctx, "size");
  if (!(size.x > 0 && size.y > 0 && size.z > 0)) parse_fail(ctx, "box size must be positive");
  return Box3(vec3_from(require(j, "center", ctx), ctx, "center"), size, field_or<double>(j, "heading", 0.0, ctx));
}

void write_points_binary(const fs::path& path, const std::vector<Vec3>& points, PointDType dtype) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write " + path.string());
  for (const auto& p : points) {
    if (dtype == PointDType::F32) {
      write_le(out, static_cast<float>(p.x));
      write_le(out, static_cast<float>(p.y));
      write_le(out, static_cast<float>(p.z));
    } else {
      write_le(out, p.x);
      write_le(out, p.y);
      write_le(out, p.z);
    }
  }
}

std::vector<Vec3> read_points_binary(const fs::path& path, std::size_t count, PointDType dtype) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, path.string() + ": cannot open point payload");
  const std::size_t width = dtype == PointDType::F32 ? 4 : 8;
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes != count * 3 * width) {
    throw Error(ErrorCode::ParseError, path.string() + ": expected " + std::to_string(count) + " points, file has " +
                                           std::to_string(bytes) + " bytes");
  }
  in.seekg(0);
  std::vector<Vec3> pts(count);
  if (dtype == PointDType::F32) {
    std::vector<float> raw(count * 3);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes));
    for (std::size_t i = 0; i < count; ++i) {
      float v[3] = {raw[3 * i], raw[3 * i + 1], raw[3 * i + 2]};
      if constexpr (std::endian::native == std::endian::big) {
        for (float& f : v) f = byteswap_value(f);
      }
      pts[i] = {v[0], v[1], v[2]};
    }
  } else {
    for (auto& p : pts) {
      p.x = read_le<double>(in);
      p.y = read_le<double>(in);
      p.z = read_le<double>(in);
    }
  }
  for (const auto& p : pts) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw Error(ErrorCode::ParseError, path.string() + ": non-finite coordinate");
    }
  }
  return pts;
}

PointCloud read_ply(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  const std::string ctx = path.string();
  if (!in) parse_fail(ctx, "cannot open");
  std::string line;
  std::getline(in, line);
  if (line.rfind("ply", 0) != 0) parse_fail(ctx, "not a PLY file");

  struct Property {
    std::string type;
    std::string name;
  };
  bool binary = false;
  std::size_t vertex_count = 0;
  bool in_vertex = false;
  bool vertex_seen = false;
  std::vector<Property> props;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::string kw;
    ss >> kw;
    if (kw == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt == "binary_little_endian") {
        binary = true;
      } else if (fmt != "ascii") {
        parse_fail(ctx, "unsupported PLY format " + fmt);
      }
    } else if (kw == "element") {
      std::string name;
      std::size_t n = 0;
      ss >> name >> n;
      if (name == "vertex") {
        if (vertex_seen) parse_fail(ctx, "duplicate vertex element");
        vertex_seen = true;
        in_vertex = true;
        vertex_count = n;
      } else {
        if (!vertex_seen) parse_fail(ctx, "vertex element must come first");
        in_vertex = false;
      }
    } else if (kw == "property" && in_vertex) {
      Property p;
      ss >> p.type;
      if (p.type == "list") parse_fail(ctx, "list properties on vertices are not supported");
      ss >> p.name;
      props.push_back(p);
    } else if (kw == "end_header") {
      break;
    }
  }
  if (!vertex_seen) parse_fail(ctx, "no vertex element");

  auto index_of = [&](const char* name) -> long {
    for (std::size_t i = 0; i < props.size(); ++i) {
      if (props[i].name == name) return static_cast<long>(i);
    }
    return -1;
  };
  const long ix = index_of("x"), iy = index_of("y"), iz = index_of("z");
  if (ix < 0 || iy < 0 || iz < 0) parse_fail(ctx, "vertex element lacks x/y/z");
  const long ir = index_of("red"), ig = index_of("green"), ib = index_of("blue");
  const bool has_color = ir >= 0 && ig >= 0 && ib >= 0;
  const bool color_bytes = has_color && (props[ir].type == "uchar" || props[ir].type == "uint8");

  auto read_binary = [&](const std::string& type) -> double {
    if (type == "char" || type == "int8") return read_le<std::int8_t>(in);
    if (type == "uchar" || type == "uint8") return read_le<std::uint8_t>(in);
    if (type == "short" || type == "int16") return read_le<std::int16_t>(in);
    if (type == "ushort" || type == "uint16") return read_le<std::uint16_t>(in);
    if (type == "int" || type == "int32") return read_le<std::int32_t>(in);
    if (type == "uint" || type == "uint32") return read_le<std::uint32_t>(in);
    if (type == "float" || type == "float32") return read_le<float>(in);
    if (type == "double" || type == "float64") return read_le<double>(in);
    parse_fail(ctx, "unsupported property type " + type);
  };

  PointCloud cloud;
  cloud.points.reserve(vertex_count);
  std::vector<double> values(props.size());
  for (std::size_t v = 0; v < vertex_count; ++v) {
    if (binary) {
      for (std::size_t i = 0; i < props.size(); ++i) values[i] = read_binary(props[i].type);
    } else {
      if (!std::getline(in, line)) parse_fail(ctx, "truncated vertex list");
      std::istringstream ss(line);
      for (auto& x : values) {
        if (!(ss >> x)) parse_fail(ctx, "malformed vertex line " + std::to_string(v));
      }
    }
    if (!in) parse_fail(ctx, "truncated vertex data");
    cloud.points.push_back({values[ix], values[iy], values[iz]});
    if (has_color) {
      cloud.colors.push_back({color_channel(values[ir], color_bytes), color_channel(values[ig], color_bytes),
                              color_channel(values[ib], color_bytes)});
    }
  }
  return cloud;
}

void write_ply_ascii(const fs::path& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write " + path.string());
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
      << "\nproperty float x\nproperty float y\nproperty float z\n";
  if (cloud.has_colors()) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "end_header\n";
  char buf[128];
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    int n = std::snprintf(buf, sizeof buf, "%.6f %.6f %.6f", p.x, p.y, p.z);
    out.write(buf, n);
    if (cloud.has_colors()) {
      const auto& c = cloud.colors[i];
      auto byte = [](float f) { return static_cast<int>(std::lround(std::clamp(f, 0.0f, 1.0f) * 255.0f)); };
      n = std::snprintf(buf, sizeof buf, " %d %d %d", byte(c.r), byte(c.g), byte(c.b));
      out.write(buf, n);
    }
    out << '\n';
  }
}

PointCloud read_xyz(const fs::path& path) {
  std::ifstream in(path);
  if (!in) parse_fail(path.string(), "cannot open");
  PointCloud cloud;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    std::istringstream ss(line);
    Vec3 p;
    if (!(ss >> p.x >> p.y >> p.z)) parse_fail(path.string(), "malformed line " + std::to_string(lineno));
    cloud.points.push_back(p);
  }
  return cloud;
}

Json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, path.string() + ": cannot open");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write " + path.string());
  out << text;
}

// ---- scenes ---------------------------------------------------------------

Json to_json(const ObjectAnnotation& o) {
  Json j;
  j["instance_id"] = o.instance_id;
  j["category"] = o.category;
  j["box"] = to_json(o.box);
  j["role"] = std::string(to_string(o.role));
  j["source"] = o.source;
  j["heading_known"] = o.heading_known;
  j["inserted"] = o.inserted;
  Json exprs = Json::array();
  for (const auto& e : o.referring_expressions) {
    Json je;
    je["text"] = e.text;
    je["main_span"] = span_json(e.main_span);
    je["main_category"] = e.main_category;
    exprs.push_back(je);
  }
  j["referring_expressions"] = exprs;
  return j;
}

ObjectAnnotation annotation_from_json(const Json& j, const std::string& ctx) {
  ObjectAnnotation o;
  o.instance_id = field<std::string>(j, "instance_id", ctx);
  const std::string octx = ctx + " object '" + o.instance_id + "'";
  o.category = field<std::string>(j, "category", octx);
  if (o.category.empty()) parse_fail(octx, "empty category");
  o.box = box_from_json(require(j, "box", octx), octx + " box");
  if (j.contains("role")) {
    try {
      o.role = parse_support_role(field<std::string>(j, "role", octx));
    } catch (const Error& e) {
      parse_fail(octx, e.what());
    }
  } else {
    o.role = catalog::default_role(o.category).value_or(SupportRole::Stander);
  }
  o.source = field_or<std::string>(j, "source", "scene", octx);
  o.heading_known = field_or<bool>(j, "heading_known", false, octx);
  o.inserted = field_or<bool>(j, "inserted", false, octx);
  if (j.contains("referring_expressions")) {
    for (const auto& e : j.at("referring_expressions")) {
      AnchorExpression expr;
      try {
        if (e.is_string()) {
          expr = parse_template_expression(e.get<std::string>());
        } else {
          expr.text = field<std::string>(e, "text", octx);
          expr.main_span = span_from(require(e, "main_span", octx), octx, "main_span");
          expr.main_category = field_or<std::string>(e, "main_category", o.category, octx);
          validate_expression(expr);
        }
      } catch (const Error& err) {
        if (err.code() == ErrorCode::ParseError) throw;
        parse_fail(octx, err.what());
      }
      o.referring_expressions.push_back(std::move(expr));
    }
  }
  return o;
}

Json to_json(const InsertionRecord& r) {
  Json j;
  j["anchor_id"] = r.anchor_id;
  j["asset_id"] = r.asset_id;
  j["target_id"] = r.target.instance_id;
  Json p;
  p["centroid"] = vec3_json(r.placement.centroid);
  p["heading"] = r.placement.heading;
  p["support_surface_z"] = r.placement.support_surface_z;
  p["supported_by"] = r.placement.supported_by ? Json(*r.placement.supported_by) : Json(nullptr);
  j["placement"] = p;
  return j;
}

SceneDocument read_scene_document(const fs::path& path) {
  const std::string ctx = path.string();
  const Json j = read_json_file(path);
  check_version(j, ctx);
  SceneDocument doc;
  Scene& s = doc.scene;
  s.scene_id = field<std::string>(j, "scene_id", ctx);
  s.floor_z = field_or<double>(j, "floor_z", 0.0, ctx);
  PointRef pts = read_point_ref(j, path.parent_path(), ctx);
  s.cloud.points = std::move(pts.points);
  s.cloud.colors = std::move(pts.colors);
  for (const auto& o : field_or<Json>(j, "objects", Json::array(), ctx)) {
    s.objects.push_back(annotation_from_json(o, ctx));
  }
  s.bounds = j.contains("bounds") ? box_from_json(j.at("bounds"), ctx + " bounds")
                                  : compute_scene_bounds(s.cloud, s.objects);
  if (auto problem = validate_scene(s)) parse_fail(ctx, *problem);

  for (const auto& r : field_or<Json>(j, "insertions", Json::array(), ctx)) {
    InsertionRecord rec;
    rec.anchor_id = field<std::string>(r, "anchor_id", ctx);
    rec.asset_id = field_or<std::string>(r, "asset_id", "", ctx);
    const auto target_id = field<std::string>(r, "target_id", ctx);
    const auto* target = s.find(target_id);
    if (target == nullptr || s.find(rec.anchor_id) == nullptr) {
      parse_fail(ctx, "insertion record references unknown instance");
    }
    rec.target = *target;
    const Json& p = require(r, "placement", ctx);
    rec.placement.centroid = vec3_from(require(p, "centroid", ctx), ctx, "centroid");
    rec.placement.heading = field<double>(p, "heading", ctx);
    rec.placement.support_surface_z = field<double>(p, "support_surface_z", ctx);
    if (p.contains("supported_by") && !p.at("supported_by").is_null()) {
      rec.placement.supported_by = field<std::string>(p, "supported_by", ctx);
    }
    doc.insertions.push_back(std::move(rec));
  }
  return doc;
}

void write_scene_document(const SceneDocument& doc, const fs::path& path, bool binary_points) {
  const Scene& s = doc.scene;
  Json j;
  j["format_version"] = kFormatVersion;
  j["scene_id"] = s.scene_id;
  j["floor_z"] = s.floor_z;
  if (binary_points) {
    fs::path bin = path;
    bin.replace_extension(".bin");
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_points_binary(bin, s.cloud.points, PointDType::F32);
    Json p;
    p["file"] = bin.filename().string();
    p["count"] = s.cloud.size();
    p["dtype"] = "f32";
    j["points"] = p;
  } else {
    Json p = Json::array();
    for (const auto& v : s.cloud.points) p.push_back(vec3_json(v));
    j["points"] = p;
    if (s.cloud.has_colors()) {
      Json c = Json::array();
      for (const auto& v : s.cloud.colors) c.push_back(Json::array({v.r, v.g, v.b}));
      j["colors"] = c;
    }
  }
  j["bounds"] = to_json(s.bounds);
  Json objs = Json::array();
  for (const auto& o : s.objects) objs.push_back(to_json(o));
  j["objects"] = objs;
  Json ins = Json::array();
  for (const auto& r : doc.insertions) ins.push_back(to_json(r));
  j["insertions"] = ins;
  write_text_file(path, j.dump(1) + "\n");
}

std::vector<fs::path> list_scene_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::ParseError, dir.string() + ": not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

// ---- assets ---------------------------------------------------------------

void write_asset_bank(const AssetBank& bank, const fs::path& manifest_path) {
  const fs::path base = manifest_path.parent_path();
  fs::create_directories(base / "assets");
  Json j;
  j["format_version"] = kFormatVersion;
  Json list = Json::array();
  for (std::size_t i = 0; i < bank.assets().size(); ++i) {
    const auto& a = bank.assets()[i];
    const std::string rel = "assets/" + std::to_string(i) + "_" + sanitize(a.asset_id()) + ".bin";
    write_points_binary(base / rel, a.cloud().points, PointDType::F64);
    Json e;
    e["asset_id"] = a.asset_id();
    e["category"] = a.category();
    e["source"] = a.source();
    e["up_axis"] = "z";
    Json p;
    p["file"] = rel;
    p["count"] = a.cloud().size();
    p["dtype"] = "f64";
    e["points"] = p;
    list.push_back(e);
  }
  j["assets"] = list;
  write_text_file(manifest_path, j.dump(1) + "\n");
}

}  // namespace o2s::io

namespace o2s {

AssetBank load_asset_bank(const std::filesystem::path& manifest_path) {
  using namespace io;
  const std::string ctx = manifest_path.string();
  const Json j = read_json_file(manifest_path);
  check_version(j, ctx);
  std::vector<ObjectAsset> assets;
  for (const auto& e : require(j, "assets", ctx)) {
    const auto id = field<std::string>(e, "asset_id", ctx);
    const std::string actx = ctx + " asset '" + id + "'";
    const auto category = field<std::string>(e, "category", actx);
    const auto source = field_or<std::string>(e, "source", "unknown", actx);
    const auto up = field_or<std::string>(e, "up_axis", "z", actx);
    PointRef ref = read_point_ref(e, manifest_path.parent_path(), actx);
    PointCloud cloud{std::move(ref.points), std::move(ref.colors)};
    if (cloud.empty()) parse_fail(actx, "no points");
    if (up == "y") {
      for (auto& p : cloud.points) p = {p.x, -p.z, p.y};
    } else if (up != "z") {
      parse_fail(actx, "up_axis must be 'z' or 'y'");
    }
    Vec3 c;
    for (const auto& p : cloud.points) c = c + p;
    c = c * (1.0 / static_cast<double>(cloud.size()));
    if (c.norm() > 1e-9) cloud = center_at_centroid(std::move(cloud));
    assets.emplace_back(id, category, source, std::move(cloud));
  }
  try {
    return AssetBank(std::move(assets));
  } catch (const Error& e) {
    parse_fail(ctx, e.what());
  }
}

std::vector<Scene> load_scenes(const std::filesystem::path& dir) {
  std::vector<Scene> scenes;
  for (const auto& f : io::list_scene_files(dir)) scenes.push_back(io::read_scene_document(f).scene);
  return scenes;
}

}  // namespace o2s

namespace o2s::io {

// ---- tables and splits ----------------------------------------------------

Json to_json(const CategoryTable& table) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["default_point_count"] = table.default_point_count;
  Json cats = Json::array();
  for (const auto& [name, info] : table.categories) {
    Json c;
    c["name"] = name;
    c["split"] = info.split == CategorySplit::Seen ? "seen" : "unseen";
    c["role"] = std::string(to_string(info.role));
    c["similar_seen_category"] = info.similar_seen_category ? Json(*info.similar_seen_category) : Json(nullptr);
    c["avg_size"] = info.avg_size ? vec3_json(*info.avg_size) : Json(nullptr);
    c["avg_point_count"] = info.avg_point_count ? Json(*info.avg_point_count) : Json(nullptr);
    cats.push_back(c);
  }
  j["categories"] = cats;
  return j;
}

CategoryTable table_from_json(const Json& j, const std::string& ctx) {
  check_version(j, ctx);
  CategoryTable t;
  t.default_point_count = field_or<long>(j, "default_point_count", kDefaultPointCount, ctx);
  for (const auto& c : require(j, "categories", ctx)) {
    const auto name = field<std::string>(c, "name", ctx);
    const std::string cctx = ctx + " category '" + name + "'";
    CategoryInfo info;
    const auto split = field<std::string>(c, "split", cctx);
    if (split != "seen" && split != "unseen") parse_fail(cctx, "split must be 'seen' or 'unseen'");
    info.split = split == "seen" ? CategorySplit::Seen : CategorySplit::Unseen;
    try {
      info.role = parse_support_role(field_or<std::string>(c, "role", "stander", cctx));
    } catch (const Error& e) {
      parse_fail(cctx, e.what());
    }
    if (c.contains("similar_seen_category") && !c.at("similar_seen_category").is_null()) {
      info.similar_seen_category = field<std::string>(c, "similar_seen_category", cctx);
    }
    if (c.contains("avg_size") && !c.at("avg_size").is_null()) {
      info.avg_size = vec3_from(c.at("avg_size"), cctx, "avg_size");
      if (!(info.avg_size->x > 0 && info.avg_size->y > 0 && info.avg_size->z > 0)) {
        parse_fail(cctx, "avg_size must be positive");
      }
    }
    if (c.contains("avg_point_count") && !c.at("avg_point_count").is_null()) {
      info.avg_point_count = field<long>(c, "avg_point_count", cctx);
    }
    t.categories[name] = info;
  }
  for (const auto& [name, info] : t.categories) {
    if (info.similar_seen_category) {
      const auto* s = t.find(*info.similar_seen_category);
      if (s == nullptr || s->split != CategorySplit::Seen) {
        parse_fail(ctx, "similar category of '" + name + "' is not a seen category");
      }
    }
  }
  return t;
}

CategoryTable read_category_table(const fs::path& path) { return table_from_json(read_json_file(path), path.string()); }

Json to_json(const BenchmarkSplit& split) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["name"] = split.name;
  j["seen"] = split.seen;
  j["unseen"] = split.unseen;
  Json roles = Json::object();
  for (const auto& [c, r] : split.roles) roles[c] = std::string(to_string(r));
  j["roles"] = roles;
  Json similar = Json::object();
  for (const auto& [c, s] : split.similar) similar[c] = s;
  j["similar"] = similar;
  return j;
}

BenchmarkSplit split_from_json(const Json& j, const std::string& ctx) {
  check_version(j, ctx);
  BenchmarkSplit s;
  s.name = field_or<std::string>(j, "name", "", ctx);
  s.seen = field<std::vector<std::string>>(j, "seen", ctx);
  s.unseen = field<std::vector<std::string>>(j, "unseen", ctx);
  for (const auto& [c, r] : field_or<std::map<std::string, std::string>>(j, "roles", {}, ctx)) {
    try {
      s.roles[c] = parse_support_role(r);
    } catch (const Error& e) {
      parse_fail(ctx, e.what());
    }
  }
  s.similar = field_or<std::map<std::string, std::string>>(j, "similar", {}, ctx);
  try {
    s.validate();
  } catch (const Error& e) {
    parse_fail(ctx, e.what());
  }
  return s;
}

BenchmarkSplit read_split(const fs::path& path) { return split_from_json(read_json_file(path), path.string()); }

// ---- samples --------------------------------------------------------------

Json to_json(const GroundingSample& s) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["scene_id"] = s.scene_id;
  j["prompt"] = s.prompt;
  j["prompt_type"] = std::string(to_string(s.prompt_type));
  Json tokens = Json::array();
  Json offsets = Json::array();
  for (const auto& t : s.tokens) {
    tokens.push_back(t.text);
    offsets.push_back(Json::array({t.begin, t.end}));
  }
  j["tokens"] = tokens;
  j["token_offsets"] = offsets;
  Json targets = Json::array();
  for (const auto& t : s.targets) {
    Json jt;
    jt["instance_id"] = t.instance_id;
    jt["box"] = to_json(t.box);
    jt["token_span"] = span_json(t.token_span);
    targets.push_back(jt);
  }
  j["targets"] = targets;
  Json rows = Json::array();
  for (std::size_t r = 0; r < s.alignment.rows.size(); ++r) rows.push_back(s.alignment.row_string(r));
  j["alignment"] = rows;
  return j;
}

std::string to_json_line(const GroundingSample& s) { return to_json(s).dump(); }

GroundingSample sample_from_json(const Json& j, const std::string& ctx) {
  check_version(j, ctx);
  GroundingSample s;
  s.scene_id = field<std::string>(j, "scene_id", ctx);
  s.prompt = field<std::string>(j, "prompt", ctx);
  try {
    s.prompt_type = parse_prompt_type(field<std::string>(j, "prompt_type", ctx));
  } catch (const Error& e) {
    parse_fail(ctx, e.what());
  }
  const auto tokens = field<std::vector<std::string>>(j, "tokens", ctx);
  const auto offsets = field<std::vector<std::vector<std::size_t>>>(j, "token_offsets", ctx);
  if (tokens.size() != offsets.size()) parse_fail(ctx, "tokens and token_offsets differ in length");
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (offsets[i].size() != 2) parse_fail(ctx, "token offset must be [begin, end]");
    s.tokens.push_back({tokens[i], offsets[i][0], offsets[i][1]});
  }
  for (const auto& t : require(j, "targets", ctx)) {
    SampleTarget st;
    st.instance_id = field<std::string>(t, "instance_id", ctx);
    st.box = box_from_json(require(t, "box", ctx), ctx);
    st.token_span = span_from(require(t, "token_span", ctx), ctx, "token_span");
    s.targets.push_back(st);
  }
  const auto rows = field<std::vector<std::string>>(j, "alignment", ctx);
  s.alignment.cols = s.tokens.size();
  for (const auto& r : rows) {
    if (r.size() != s.tokens.size()) parse_fail(ctx, "alignment row length differs from token count");
    std::vector<std::uint8_t> row;
    for (char c : r) {
      if (c != '0' && c != '1') parse_fail(ctx, "alignment rows must be binary strings");
      row.push_back(c == '1');
    }
    s.alignment.rows.push_back(row);
  }
  return s;
}

std::optional<std::string> validate_sample_json(const Json& j) {
  GroundingSample s;
  try {
    s = sample_from_json(j, "sample");
  } catch (const Error& e) {
    return std::string(e.what());
  }
  if (s.targets.empty()) return "sample has no targets";
  if (s.alignment.rows.size() != s.targets.size()) return "alignment rows differ from target count";
  std::vector<Token> expected;
  try {
    expected = tokenize(s.prompt);
  } catch (const Error& e) {
    return std::string(e.what());
  }
  if (expected != s.tokens) return "tokens do not match the prompt";
  for (std::size_t r = 0; r < s.targets.size(); ++r) {
    const TokenSpan& span = s.targets[r].token_span;
    if (span.last >= s.tokens.size()) return "token span out of range";
    for (std::size_t c = 0; c < s.tokens.size(); ++c) {
      if ((s.alignment.rows[r][c] == 1) != span.contains(c)) return "alignment row does not match its token span";
    }
  }
  return std::nullopt;
}

// ---- evaluation and losses ------------------------------------------------

std::vector<Detection> read_detections(const fs::path& path) {
  const std::string ctx = path.string();
  const Json j = read_json_file(path);
  check_version(j, ctx);
  std::vector<Detection> out;
  for (const auto& d : require(j, "detections", ctx)) {
    Detection det;
    det.scene_id = field<std::string>(d, "scene_id", ctx);
    det.category = field<std::string>(d, "category", ctx);
    det.box = box_from_json(require(d, "box", ctx), ctx);
    det.score = field<double>(d, "score", ctx);
    if (!std::isfinite(det.score)) parse_fail(ctx, "non-finite score");
    out.push_back(std::move(det));
  }
  return out;
}

std::vector<GroundTruth> read_ground_truth(const fs::path& path) {
  const std::string ctx = path.string();
  const Json j = read_json_file(path);
  check_version(j, ctx);
  std::vector<GroundTruth> out;
  for (const auto& g : require(j, "ground_truth", ctx)) {
    out.push_back({field<std::string>(g, "scene_id", ctx), field<std::string>(g, "category", ctx),
                   box_from_json(require(g, "box", ctx), ctx)});
  }
  return out;
}

Json to_json(const EvalReport& report) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["iou_threshold"] = report.iou_threshold;
  Json cats = Json::object();
  for (const auto& [c, r] : report.per_category) {
    Json jc;
    jc["ap"] = r.ap ? Json(*r.ap) : Json(nullptr);
    jc["num_gt"] = r.num_gt;
    jc["num_detections"] = r.num_detections;
    jc["num_matched"] = r.num_matched;
    cats[c] = jc;
  }
  j["per_category"] = cats;
  j["mAP"] = report.mean_ap ? Json(*report.mean_ap) : Json(nullptr);
  j["mAP_categories"] = report.mean_ap_categories;
  return j;
}

LossBatchFile read_loss_batch(const fs::path& path) {
  const std::string ctx = path.string();
  const Json j = read_json_file(path);
  check_version(j, ctx);
  LossBatchFile out;
  if (j.contains("contrastive")) {
    const Json& c = j.at("contrastive");
    const std::string cctx = ctx + " contrastive";
    FeatureBatch b;
    b.features = matrix_from(require(c, "features", cctx), cctx, "features");
    // Labels may be integers or names; names map to ids by first appearance.
    std::map<std::string, int> ids;
    for (const auto& l : require(c, "labels", cctx)) {
      if (l.is_number_integer()) {
        b.labels.push_back(l.get<int>());
      } else if (l.is_string()) {
        const auto it = ids.emplace(l.get<std::string>(), static_cast<int>(ids.size())).first;
        b.labels.push_back(it->second);
      } else {
        parse_fail(cctx, "labels must be integers or strings");
      }
    }
    b.sources = field_or<std::vector<std::string>>(c, "sources", {}, cctx);
    b.temperature = field_or<double>(c, "temperature", kDefaultTemperature, cctx);
    out.contrastive = std::move(b);
  }
  if (j.contains("alignment")) {
    const Json& a = j.at("alignment");
    const std::string actx = ctx + " alignment";
    AlignmentBatch b;
    b.object_features = matrix_from(require(a, "object_features", actx), actx, "object_features");
    b.text_features = matrix_from(require(a, "text_features", actx), actx, "text_features");
    b.target = matrix_from(require(a, "target", actx), actx, "target");
    out.alignment = std::move(b);
  }
  if (j.contains("localization")) {
    const Json& l = j.at("localization");
    const std::string lctx = ctx + " localization";
    BoxRegressionBatch b;
    for (const auto& p : require(l, "predicted", lctx)) b.predicted.push_back(box_from_json(p, lctx));
    for (const auto& g : require(l, "ground_truth", lctx)) b.ground_truth.push_back(box_from_json(g, lctx));
    if (l.contains("weights")) {
      out.weights.l1 = field_or<double>(l.at("weights"), "l1", out.weights.l1, lctx);
      out.weights.giou = field_or<double>(l.at("weights"), "giou", out.weights.giou, lctx);
    }
    out.localization = std::move(b);
  }
  return out;
}

}  // namespace o2s::io
