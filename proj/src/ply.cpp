#include "tpcs/ply.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <vector>

namespace tpcs {
namespace {

enum class ScalarType { kInt8, kUInt8, kInt16, kUInt16, kInt32, kUInt32, kFloat32, kFloat64 };

std::optional<ScalarType> scalar_type(std::string_view name)
{
  if (name == "char" || name == "int8") return ScalarType::kInt8;
  if (name == "uchar" || name == "uint8") return ScalarType::kUInt8;
  if (name == "short" || name == "int16") return ScalarType::kInt16;
  if (name == "ushort" || name == "uint16") return ScalarType::kUInt16;
  if (name == "int" || name == "int32") return ScalarType::kInt32;
  if (name == "uint" || name == "uint32") return ScalarType::kUInt32;
  if (name == "float" || name == "float32") return ScalarType::kFloat32;
  if (name == "double" || name == "float64") return ScalarType::kFloat64;
  return std::nullopt;
}

std::size_t scalar_size(ScalarType t)
{
  switch (t) {
    case ScalarType::kInt8:
    case ScalarType::kUInt8: return 1;
    case ScalarType::kInt16:
    case ScalarType::kUInt16: return 2;
    case ScalarType::kInt32:
    case ScalarType::kUInt32:
    case ScalarType::kFloat32: return 4;
    case ScalarType::kFloat64: return 8;
  }
  return 0;
}

double read_scalar(const char* p, ScalarType t)
{
  auto get = [p]<typename T>(T) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return static_cast<double>(v);
  };
  switch (t) {
    case ScalarType::kInt8: return get(std::int8_t{});
    case ScalarType::kUInt8: return get(std::uint8_t{});
    case ScalarType::kInt16: return get(std::int16_t{});
    case ScalarType::kUInt16: return get(std::uint16_t{});
    case ScalarType::kInt32: return get(std::int32_t{});
    case ScalarType::kUInt32: return get(std::uint32_t{});
    case ScalarType::kFloat32: return get(float{});
    case ScalarType::kFloat64: return get(double{});
  }
  return 0.0;
}

struct Property {
  std::string name;
  ScalarType type;
  bool is_list = false;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

struct Header {
  PlyFormat format = PlyFormat::kAscii;
  std::vector<Element> elements;
  std::size_t body_offset = 0;
  std::optional<std::uint32_t> frame_index;
  std::optional<double> capture_ts_ms;
};

[[noreturn]] void fail(PlyErrorKind kind, const std::string& msg) { throw PlyError(kind, msg); }

std::vector<std::string_view> split_ws(std::string_view line)
{
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out)
{
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

Header parse_header(std::string_view text)
{
  Header h;
  std::size_t pos = 0;
  int line_no = 0;
  bool saw_format = false;
  auto next_line = [&](std::string_view& line) {
    if (pos >= text.size()) return false;
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos)
      fail(PlyErrorKind::kMalformedHeader, "header: missing end_header");
    line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = nl + 1;
    ++line_no;
    return true;
  };

  std::string_view line;
  if (!next_line(line) || line != "ply")
    fail(PlyErrorKind::kMalformedHeader, "header: first line must be 'ply'");

  while (true) {
    if (!next_line(line))
      fail(PlyErrorKind::kMalformedHeader, "header: missing end_header");
    auto tok = split_ws(line);
    if (tok.empty()) continue;
    auto where = " (header line " + std::to_string(line_no) + ")";
    if (tok[0] == "end_header") break;
    if (tok[0] == "comment" || tok[0] == "obj_info") {
      if (tok.size() == 3 && tok[1] == "frame_index") {
        std::uint32_t v;
        if (parse_number(tok[2], v)) h.frame_index = v;
      } else if (tok.size() == 3 && tok[1] == "capture_ts_ms") {
        double v;
        if (parse_number(tok[2], v)) h.capture_ts_ms = v;
      }
      continue;
    }
    if (tok[0] == "format") {
      if (tok.size() != 3 || tok[2] != "1.0")
        fail(PlyErrorKind::kMalformedHeader, "header: bad format line" + where);
      if (tok[1] == "ascii")
        h.format = PlyFormat::kAscii;
      else if (tok[1] == "binary_little_endian")
        h.format = PlyFormat::kBinaryLittleEndian;
      else
        fail(PlyErrorKind::kMalformedHeader,
             "header: unsupported format '" + std::string(tok[1]) + "'" + where);
      saw_format = true;
      continue;
    }
    if (tok[0] == "element") {
      std::size_t count = 0;
      if (tok.size() != 3 || !parse_number(tok[2], count))
        fail(PlyErrorKind::kMalformedHeader, "header: bad element line" + where);
      h.elements.push_back({std::string(tok[1]), count, {}});
      continue;
    }
    if (tok[0] == "property") {
      if (h.elements.empty())
        fail(PlyErrorKind::kMalformedHeader, "header: property before any element" + where);
      Element& el = h.elements.back();
      if (tok.size() == 5 && tok[1] == "list") {
        auto t = scalar_type(tok[3]);
        if (!t || !scalar_type(tok[2]))
          fail(PlyErrorKind::kMalformedHeader,
               "header: unknown list type in element '" + el.name + "'" + where);
        el.properties.push_back({std::string(tok[4]), *t, true});
        continue;
      }
      if (tok.size() != 3)
        fail(PlyErrorKind::kMalformedHeader,
             "header: bad property line in element '" + el.name + "'" + where);
      auto t = scalar_type(tok[1]);
      if (!t)
        fail(PlyErrorKind::kMalformedHeader, "header: unknown type '" + std::string(tok[1]) +
                                                 "' in element '" + el.name + "'" + where);
      el.properties.push_back({std::string(tok[2]), *t, false});
      continue;
    }
    fail(PlyErrorKind::kMalformedHeader,
         "header: unexpected keyword '" + std::string(tok[0]) + "'" + where);
  }
  if (!saw_format) fail(PlyErrorKind::kMalformedHeader, "header: missing format line");
  h.body_offset = pos;
  return h;
}

struct VertexLayout {
  int x = -1, y = -1, z = -1, red = -1, green = -1, blue = -1, sensor = -1;
};

VertexLayout resolve_layout(const Element& el)
{
  VertexLayout l;
  for (std::size_t i = 0; i < el.properties.size(); ++i) {
    const Property& p = el.properties[i];
    if (p.is_list)
      fail(PlyErrorKind::kMalformedHeader,
           "element 'vertex': list property '" + p.name + "' not supported");
    int idx = static_cast<int>(i);
    if (p.name == "x") l.x = idx;
    else if (p.name == "y") l.y = idx;
    else if (p.name == "z") l.z = idx;
    else if (p.name == "red") l.red = idx;
    else if (p.name == "green") l.green = idx;
    else if (p.name == "blue") l.blue = idx;
    else if (p.name == "sensor_id") l.sensor = idx;
  }
  const std::pair<int, const char*> required[] = {{l.x, "x"},     {l.y, "y"},       {l.z, "z"},
                                                  {l.red, "red"}, {l.green, "green"}, {l.blue, "blue"}};
  for (auto [idx, name] : required)
    if (idx < 0)
      fail(PlyErrorKind::kMissingProperty,
           std::string("missing property '") + name + "' in element 'vertex'");
  return l;
}

Point make_point(const std::vector<double>& v, const VertexLayout& l, std::size_t row)
{
  auto color = [&](int idx, const char* name) {
    double c = v[idx];
    if (!(c >= 0.0 && c <= 255.0))
      fail(PlyErrorKind::kBadValue, std::string("element 'vertex' row ") + std::to_string(row) +
                                        ": " + name + " out of range");
    return static_cast<std::uint8_t>(c);
  };
  Point p;
  p.position = {static_cast<float>(v[l.x]), static_cast<float>(v[l.y]), static_cast<float>(v[l.z])};
  for (float c : p.position)
    if (!std::isfinite(c))
      fail(PlyErrorKind::kBadValue,
           "element 'vertex' row " + std::to_string(row) + ": non-finite position");
  p.color = {color(l.red, "red"), color(l.green, "green"), color(l.blue, "blue")};
  if (l.sensor >= 0) p.sensor_id = color(l.sensor, "sensor_id");
  return p;
}

}  // namespace

PointCloudFrame parse_ply(std::string_view text)
{
  Header h = parse_header(text);
  auto vit = std::find_if(h.elements.begin(), h.elements.end(),
                          [](const Element& e) { return e.name == "vertex"; });
  if (vit == h.elements.end())
    fail(PlyErrorKind::kMissingProperty, "missing element 'vertex'");
  if (vit != h.elements.begin()) {
    for (auto it = h.elements.begin(); it != vit; ++it)
      if (it->count != 0)
        fail(PlyErrorKind::kMalformedHeader,
             "element '" + it->name + "' precedes 'vertex' and is not supported");
  }
  const Element& vertex = *vit;
  VertexLayout layout = resolve_layout(vertex);

  PointCloudFrame frame;
  frame.frame_index = h.frame_index.value_or(0);
  frame.capture_timestamp_ms = h.capture_ts_ms.value_or(0.0);
  frame.points.reserve(vertex.count);
  std::vector<double> values(vertex.properties.size());
  std::string_view body = text.substr(h.body_offset);

  if (h.format == PlyFormat::kBinaryLittleEndian) {
    std::vector<std::size_t> offsets;
    std::size_t stride = 0;
    for (const Property& p : vertex.properties) {
      offsets.push_back(stride);
      stride += scalar_size(p.type);
    }
    if (body.size() / stride < vertex.count)
      fail(PlyErrorKind::kTruncatedPayload,
           "element 'vertex': truncated payload, expected " + std::to_string(vertex.count) +
               " rows of " + std::to_string(stride) + " bytes, found " + std::to_string(body.size()));
    for (std::size_t row = 0; row < vertex.count; ++row) {
      const char* rec = body.data() + row * stride;
      for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = read_scalar(rec + offsets[i], vertex.properties[i].type);
      frame.points.push_back(make_point(values, layout, row));
    }
  } else {
    std::size_t pos = 0;
    for (std::size_t row = 0; row < vertex.count; ++row) {
      std::string_view line;
      do {
        if (pos >= body.size())
          fail(PlyErrorKind::kTruncatedPayload, "element 'vertex': truncated payload at row " +
                                                    std::to_string(row) + " of " +
                                                    std::to_string(vertex.count));
        std::size_t nl = body.find('\n', pos);
        if (nl == std::string_view::npos) nl = body.size();
        line = body.substr(pos, nl - pos);
        pos = nl + 1;
      } while (split_ws(line).empty());
      auto tok = split_ws(line);
      if (tok.size() < values.size())
        fail(PlyErrorKind::kTruncatedPayload, "element 'vertex' row " + std::to_string(row) +
                                                  ": expected " + std::to_string(values.size()) +
                                                  " values, found " + std::to_string(tok.size()));
      for (std::size_t i = 0; i < values.size(); ++i)
        if (!parse_number(tok[i], values[i]))
          fail(PlyErrorKind::kBadValue, "element 'vertex' row " + std::to_string(row) +
                                            ": cannot parse '" + std::string(tok[i]) + "'");
      frame.points.push_back(make_point(values, layout, row));
    }
  }

  std::uint32_t max_sensor = 0;
  for (const Point& p : frame.points) max_sensor = std::max<std::uint32_t>(max_sensor, p.sensor_id);
  frame.sensor_count = max_sensor + 1;
  return frame;
}

PointCloudFrame load_ply(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(PlyErrorKind::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_ply(ss.str());
}

std::string format_ply(const PointCloudFrame& frame, PlyFormat format)
{
  std::string out;
  out += "ply\n";
  out += format == PlyFormat::kAscii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n";
  out += "comment frame_index " + std::to_string(frame.frame_index) + "\n";
  char buf[128];
  std::snprintf(buf, sizeof buf, "comment capture_ts_ms %.17g\n", frame.capture_timestamp_ms);
  out += buf;
  out += "element vertex " + std::to_string(frame.points.size()) + "\n";
  out += "property float x\nproperty float y\nproperty float z\n";
  out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out += "property uchar sensor_id\nend_header\n";
  if (format == PlyFormat::kBinaryLittleEndian) {
    std::vector<std::uint8_t> bytes;
    serialize_points(frame.points, bytes);
    out.append(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  } else {
    for (const Point& p : frame.points) {
      std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g %u %u %u %u\n", p.position[0], p.position[1],
                    p.position[2], p.color.r, p.color.g, p.color.b, p.sensor_id);
      out += buf;
    }
  }
  return out;
}

void emit_ply(const PointCloudFrame& frame, const std::filesystem::path& path, PlyFormat format)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(PlyErrorKind::kIo, "cannot open '" + path.string() + "' for writing");
  std::string data = format_ply(frame, format);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) fail(PlyErrorKind::kIo, "write failed for '" + path.string() + "'");
}

}  // namespace tpcs
