#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace tc {

using Vec3 = std::array<double, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline double squared_norm(const Vec3& a) { return dot(a, a); }
inline Vec3 normalized(const Vec3& a) {
  double n = norm(a);
  return {a[0] / n, a[1] / n, a[2] / n};
}

// Sentinel for points without ground truth; excluded from loss and metrics.
constexpr int32_t kUnlabeled = std::numeric_limits<int32_t>::max();

class CloudError : public std::runtime_error {
 public:
  explicit CloudError(const std::string& msg) : std::runtime_error(msg) {}
};

// Positions plus optional per-point attributes at one resolution level.
// Attribute vectors are either empty or exactly positions.size() long.
struct PointCloud {
  std::vector<Vec3> positions;
  std::vector<std::array<double, 3>> colors;  // RGB in [0,1]
  std::vector<int32_t> labels;                // class id or kUnlabeled
  std::vector<double> intensity;

  std::size_t size() const { return positions.size(); }
  bool has_colors() const { return !colors.empty(); }
  bool has_labels() const { return !labels.empty(); }
  bool has_intensity() const { return !intensity.empty(); }

  // Throws CloudError on length mismatch, out-of-range color, or
  // non-finite coordinate.
  void validate() const;
};

}  // namespace tc
