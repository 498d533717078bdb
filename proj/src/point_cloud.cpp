#include "tc/point_cloud.hpp"

namespace tc {

void PointCloud::validate() const {
  const std::size_t n = positions.size();
  if (!colors.empty() && colors.size() != n)
    throw CloudError("color count " + std::to_string(colors.size()) +
                     " != position count " + std::to_string(n));
  if (!labels.empty() && labels.size() != n)
    throw CloudError("label count " + std::to_string(labels.size()) +
                     " != position count " + std::to_string(n));
  if (!intensity.empty() && intensity.size() != n)
    throw CloudError("intensity count " + std::to_string(intensity.size()) +
                     " != position count " + std::to_string(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (int d = 0; d < 3; ++d) {
      if (!std::isfinite(positions[i][d]))
        throw CloudError("non-finite coordinate at point " + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < colors.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      if (colors[i][c] < 0.0 || colors[i][c] > 1.0)
        throw CloudError("color out of [0,1] at point " + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0)
      throw CloudError("negative label at point " + std::to_string(i));
  }
}

}  // namespace tc
