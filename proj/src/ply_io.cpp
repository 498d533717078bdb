#include "tc/ply_io.hpp"

#include <algorithm>
#include <cstring>
#include <iomanip>
#include <fstream>
#include <sstream>
#include <vector>

namespace tc {

namespace {

enum class PropType { I8, U8, I16, U16, I32, U32, F32, F64 };

std::size_t prop_size(PropType t) {
  switch (t) {
    case PropType::I8:
    case PropType::U8: return 1;
    case PropType::I16:
    case PropType::U16: return 2;
    case PropType::I32:
    case PropType::U32:
    case PropType::F32: return 4;
    case PropType::F64: return 8;
  }
  return 0;
}

bool parse_prop_type(const std::string& s, PropType* out) {
  if (s == "char" || s == "int8") *out = PropType::I8;
  else if (s == "uchar" || s == "uint8") *out = PropType::U8;
  else if (s == "short" || s == "int16") *out = PropType::I16;
  else if (s == "ushort" || s == "uint16") *out = PropType::U16;
  else if (s == "int" || s == "int32") *out = PropType::I32;
  else if (s == "uint" || s == "uint32") *out = PropType::U32;
  else if (s == "float" || s == "float32") *out = PropType::F32;
  else if (s == "double" || s == "float64") *out = PropType::F64;
  else return false;
  return true;
}

struct Property {
  std::string name;
  PropType type;
};

double decode_scalar(const char* p, PropType t) {
  switch (t) {
    case PropType::I8: { int8_t v; std::memcpy(&v, p, 1); return v; }
    case PropType::U8: { uint8_t v; std::memcpy(&v, p, 1); return v; }
    case PropType::I16: { int16_t v; std::memcpy(&v, p, 2); return v; }
    case PropType::U16: { uint16_t v; std::memcpy(&v, p, 2); return v; }
    case PropType::I32: { int32_t v; std::memcpy(&v, p, 4); return v; }
    case PropType::U32: { uint32_t v; std::memcpy(&v, p, 4); return v; }
    case PropType::F32: { float v; std::memcpy(&v, p, 4); return v; }
    case PropType::F64: { double v; std::memcpy(&v, p, 8); return v; }
  }
  return 0.0;
}

struct VertexLayout {
  std::vector<Property> props;
  int ix = -1, iy = -1, iz = -1;
  int ir = -1, ig = -1, ib = -1;
  int ilabel = -1, iintensity = -1;

  void resolve() {
    for (int i = 0; i < static_cast<int>(props.size()); ++i) {
      const std::string& n = props[i].name;
      if (n == "x") ix = i;
      else if (n == "y") iy = i;
      else if (n == "z") iz = i;
      else if (n == "red" || n == "r") ir = i;
      else if (n == "green" || n == "g") ig = i;
      else if (n == "blue" || n == "b") ib = i;
      else if (n == "label" || n == "class" || n == "scalar_label") ilabel = i;
      else if (n == "intensity" || n == "scalar_intensity") iintensity = i;
    }
  }
  bool has_color() const { return ir >= 0 && ig >= 0 && ib >= 0; }
};

}  // namespace

std::array<double, 3> label_palette_color(int32_t label) {
  // Fixed 16-entry palette, cycled for larger class counts.
  static const std::array<std::array<double, 3>, 16> kPalette = {{
      {0.50, 0.50, 0.50}, {0.49, 0.60, 0.00}, {0.76, 0.65, 0.10},
      {0.00, 0.51, 0.78}, {0.27, 0.94, 0.94}, {0.57, 0.12, 0.71},
      {0.90, 0.27, 0.00}, {0.00, 0.00, 0.50}, {0.50, 0.00, 0.00},
      {0.96, 0.51, 0.19}, {0.67, 0.43, 0.16}, {0.98, 0.75, 0.75},
      {0.90, 0.75, 1.00}, {0.00, 0.00, 0.00}, {1.00, 0.88, 0.10},
      {0.24, 0.70, 0.44},
  }};
  if (label < 0 || label == kUnlabeled) return {1.0, 1.0, 1.0};
  return kPalette[static_cast<std::size_t>(label) % kPalette.size()];
}

PointCloud read_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PlyError("cannot open '" + path + "'");

  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> std::string& {
    if (!std::getline(in, line)) throw PlyError(path + ": truncated header at line " + std::to_string(line_no));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++line_no;
    return line;
  };

  if (next_line() != "ply") throw PlyError(path + ": missing 'ply' magic at line 1");

  bool binary = false;
  bool have_format = false;
  std::size_t vertex_count = 0;
  bool in_vertex = false;
  bool seen_vertex = false;
  VertexLayout layout;

  for (;;) {
    std::istringstream ls(next_line());
    std::string tok;
    ls >> tok;
    if (tok.empty() || tok == "comment" || tok == "obj_info") continue;
    if (tok == "format") {
      std::string fmt, ver;
      ls >> fmt >> ver;
      if (fmt == "ascii") binary = false;
      else if (fmt == "binary_little_endian") binary = true;
      else throw PlyError(path + ": unsupported format '" + fmt + "' at line " + std::to_string(line_no));
      have_format = true;
    } else if (tok == "element") {
      std::string name;
      std::size_t count = 0;
      ls >> name >> count;
      if (name == "vertex") {
        in_vertex = true;
        seen_vertex = true;
        vertex_count = count;
      } else {
        if (!seen_vertex)
          throw PlyError(path + ": element '" + name + "' precedes vertex element (unsupported), line " +
                         std::to_string(line_no));
        in_vertex = false;  // trailing elements are ignored
      }
    } else if (tok == "property") {
      if (!in_vertex) continue;
      std::string type_tok;
      ls >> type_tok;
      if (type_tok == "list")
        throw PlyError(path + ": list property in vertex element (unsupported), line " + std::to_string(line_no));
      Property p;
      if (!parse_prop_type(type_tok, &p.type))
        throw PlyError(path + ": unknown property type '" + type_tok + "' at line " + std::to_string(line_no));
      ls >> p.name;
      layout.props.push_back(p);
    } else if (tok == "end_header") {
      break;
    } else {
      throw PlyError(path + ": unexpected header token '" + tok + "' at line " + std::to_string(line_no));
    }
  }
  if (!have_format) throw PlyError(path + ": header has no format line");
  if (!seen_vertex) throw PlyError(path + ": header has no vertex element");
  layout.resolve();
  if (layout.ix < 0 || layout.iy < 0 || layout.iz < 0)
    throw PlyError(path + ": vertex element lacks x/y/z properties");

  PointCloud cloud;
  cloud.positions.resize(vertex_count);
  const bool want_color = layout.has_color();
  const bool want_label = layout.ilabel >= 0;
  const bool want_intensity = layout.iintensity >= 0;
  if (want_color) cloud.colors.resize(vertex_count);
  if (want_label) cloud.labels.resize(vertex_count);
  if (want_intensity) cloud.intensity.resize(vertex_count);

  std::vector<double> row(layout.props.size());
  if (binary) {
    std::size_t stride = 0;
    for (const auto& p : layout.props) stride += prop_size(p.type);
    std::vector<char> buf(stride);
    for (std::size_t i = 0; i < vertex_count; ++i) {
      if (!in.read(buf.data(), static_cast<std::streamsize>(stride)))
        throw PlyError(path + ": truncated body at byte offset " +
                       std::to_string(std::max<long long>(0, static_cast<long long>(in.tellg()))) +
                       " (vertex " + std::to_string(i) + ")");
      const char* p = buf.data();
      for (std::size_t j = 0; j < layout.props.size(); ++j) {
        row[j] = decode_scalar(p, layout.props[j].type);
        p += prop_size(layout.props[j].type);
      }
      cloud.positions[i] = {row[layout.ix], row[layout.iy], row[layout.iz]};
      if (want_color)
        cloud.colors[i] = {row[layout.ir] / 255.0, row[layout.ig] / 255.0, row[layout.ib] / 255.0};
      if (want_label) cloud.labels[i] = static_cast<int32_t>(row[layout.ilabel]);
      if (want_intensity) cloud.intensity[i] = row[layout.iintensity];
    }
  } else {
    for (std::size_t i = 0; i < vertex_count; ++i) {
      std::istringstream ls(next_line());
      for (std::size_t j = 0; j < layout.props.size(); ++j) {
        if (!(ls >> row[j]))
          throw PlyError(path + ": malformed vertex line " + std::to_string(line_no));
      }
      cloud.positions[i] = {row[layout.ix], row[layout.iy], row[layout.iz]};
      if (want_color)
        cloud.colors[i] = {row[layout.ir] / 255.0, row[layout.ig] / 255.0, row[layout.ib] / 255.0};
      if (want_label) cloud.labels[i] = static_cast<int32_t>(row[layout.ilabel]);
      if (want_intensity) cloud.intensity[i] = row[layout.iintensity];
    }
  }
  cloud.validate();
  return cloud;
}

void write_ply(const PointCloud& cloud, const std::string& path, ColorizeBy colorize_by,
               PlyEncoding encoding) {
  if (colorize_by == ColorizeBy::Labels && !cloud.has_labels())
    throw PlyError("colorize_by=labels but cloud has no labels");
  if (colorize_by == ColorizeBy::Rgb && !cloud.has_colors())
    throw PlyError("colorize_by=rgb but cloud has no colors");

  const bool write_color = colorize_by != ColorizeBy::None || cloud.has_colors();
  const bool write_label = cloud.has_labels();
  const bool binary = encoding == PlyEncoding::BinaryLittleEndian;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw PlyError("cannot write '" + path + "'");

  out << "ply\n"
      << "format " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n"
      << "element vertex " << cloud.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n";
  if (write_color) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  if (write_label) out << "property int label\n";
  out << "end_header\n";
  out << std::setprecision(9);  // enough for exact float32 round-trip in ascii

  auto color_of = [&](std::size_t i) -> std::array<uint8_t, 3> {
    std::array<double, 3> c{0.5, 0.5, 0.5};
    if (colorize_by == ColorizeBy::Labels) c = label_palette_color(cloud.labels[i]);
    else if (cloud.has_colors()) c = cloud.colors[i];
    auto to_byte = [](double v) {
      return static_cast<uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L));
    };
    return {to_byte(c[0]), to_byte(c[1]), to_byte(c[2])};
  };

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const float x = static_cast<float>(cloud.positions[i][0]);
    const float y = static_cast<float>(cloud.positions[i][1]);
    const float z = static_cast<float>(cloud.positions[i][2]);
    if (binary) {
      out.write(reinterpret_cast<const char*>(&x), 4);
      out.write(reinterpret_cast<const char*>(&y), 4);
      out.write(reinterpret_cast<const char*>(&z), 4);
      if (write_color) {
        auto c = color_of(i);
        out.write(reinterpret_cast<const char*>(c.data()), 3);
      }
      if (write_label) {
        int32_t l = cloud.labels[i];
        out.write(reinterpret_cast<const char*>(&l), 4);
      }
    } else {
      out << x << " " << y << " " << z;
      if (write_color) {
        auto c = color_of(i);
        out << " " << int(c[0]) << " " << int(c[1]) << " " << int(c[2]);
      }
      if (write_label) out << " " << cloud.labels[i];
      out << "\n";
    }
  }
  if (!out) throw PlyError("write failed for '" + path + "'");
}

}  // namespace tc
