#pragma once

#include <string>

#include "tc/point_cloud.hpp"

namespace tc {

class PlyError : public std::runtime_error {
 public:
  explicit PlyError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class ColorizeBy { None, Rgb, Labels };
enum class PlyEncoding { Ascii, BinaryLittleEndian };

// Reads an ASCII or binary-little-endian PLY with at least x,y,z.
// Recognized optional vertex properties: red/green/blue (uchar, divided
// by 255), label (integer), intensity/scalar_intensity (float). Unknown
// properties are skipped. Throws PlyError naming the offending line or
// byte offset.
PointCloud read_ply(const std::string& path);

// Writes element "vertex" with float x,y,z; uchar red/green/blue when
// colors are present or requested via colorize_by; int label when labels
// are present. colorize_by == Labels maps class ids through a fixed
// palette (cycled past its length).
void write_ply(const PointCloud& cloud, const std::string& path,
               ColorizeBy colorize_by = ColorizeBy::None,
               PlyEncoding encoding = PlyEncoding::BinaryLittleEndian);

// Deterministic label -> color table used by colorize_by == Labels.
std::array<double, 3> label_palette_color(int32_t label);

}  // namespace tc
