#include "tc/hash_grid.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

namespace tc {

HashGrid::HashGrid(const std::vector<Vec3>& positions, double cell_size)
    : positions_(&positions), cell_(cell_size) {
  if (cell_size <= 0.0) throw CloudError("cell_size must be > 0");
  if (positions.empty()) throw CloudError("cannot build grid over empty cloud");
  cells_.reserve(positions.size());
  key_min_ = {std::numeric_limits<int64_t>::max(), std::numeric_limits<int64_t>::max(),
              std::numeric_limits<int64_t>::max()};
  key_max_ = {std::numeric_limits<int64_t>::min(), std::numeric_limits<int64_t>::min(),
              std::numeric_limits<int64_t>::min()};
  for (int i = 0; i < static_cast<int>(positions.size()); ++i) {
    assert(std::isfinite(positions[i][0]) && std::isfinite(positions[i][1]) &&
           std::isfinite(positions[i][2]));
    const CellKey k = key_of(positions[i]);
    cells_[k].push_back(i);
    for (int d = 0; d < 3; ++d) {
      key_min_[d] = std::min(key_min_[d], k[d]);
      key_max_[d] = std::max(key_max_[d], k[d]);
    }
  }
}

HashGrid::CellKey HashGrid::key_of(const Vec3& p) const {
  return {static_cast<int64_t>(std::floor(p[0] / cell_)),
          static_cast<int64_t>(std::floor(p[1] / cell_)),
          static_cast<int64_t>(std::floor(p[2] / cell_))};
}

std::vector<int> HashGrid::radius_neighbors(int p_index, double radius) const {
  return radius_neighbors((*positions_)[p_index], radius);
}

std::vector<int> HashGrid::radius_neighbors(const Vec3& center, double radius) const {
  std::vector<int> result;
  const double r2 = radius * radius;
  CellKey lo, hi;
  for (int d = 0; d < 3; ++d) {
    lo[d] = static_cast<int64_t>(std::floor((center[d] - radius) / cell_));
    hi[d] = static_cast<int64_t>(std::floor((center[d] + radius) / cell_));
    lo[d] = std::max(lo[d], key_min_[d]);
    hi[d] = std::min(hi[d], key_max_[d]);
  }
  for (int64_t x = lo[0]; x <= hi[0]; ++x)
    for (int64_t y = lo[1]; y <= hi[1]; ++y)
      for (int64_t z = lo[2]; z <= hi[2]; ++z) {
        auto it = cells_.find({x, y, z});
        if (it == cells_.end()) continue;
        for (int idx : it->second) {
          if (squared_norm((*positions_)[idx] - center) < r2) result.push_back(idx);
        }
      }
  std::sort(result.begin(), result.end());
  return result;
}

int HashGrid::nearest_neighbor(const Vec3& query) const {
  const CellKey q = key_of(query);
  double best_d2 = std::numeric_limits<double>::infinity();
  int best_idx = -1;

  const int64_t max_ring = [&] {
    int64_t m = 0;
    for (int d = 0; d < 3; ++d) {
      m = std::max(m, std::abs(q[d] - key_min_[d]));
      m = std::max(m, std::abs(q[d] - key_max_[d]));
    }
    return m;
  }();

  auto scan_cell = [&](int64_t x, int64_t y, int64_t z) {
    auto it = cells_.find({x, y, z});
    if (it == cells_.end()) return;
    for (int idx : it->second) {
      const double d2 = squared_norm((*positions_)[idx] - query);
      if (d2 < best_d2 || (d2 == best_d2 && idx < best_idx)) {
        best_d2 = d2;
        best_idx = idx;
      }
    }
  };

  for (int64_t ring = 0; ring <= max_ring; ++ring) {
    // Any point in a cell at Chebyshev distance >= ring is at least
    // (ring - 1) * cell away from the query.
    if (best_idx >= 0 && ring >= 1) {
      const double lower = (static_cast<double>(ring) - 1.0) * cell_;
      if (lower * lower > best_d2) break;
    }
    for (int64_t x = q[0] - ring; x <= q[0] + ring; ++x)
      for (int64_t y = q[1] - ring; y <= q[1] + ring; ++y)
        for (int64_t z = q[2] - ring; z <= q[2] + ring; ++z) {
          const int64_t cheb = std::max({std::abs(x - q[0]), std::abs(y - q[1]), std::abs(z - q[2])});
          if (cheb != ring) continue;  // shell only
          scan_cell(x, y, z);
        }
  }
  assert(best_idx >= 0);
  return best_idx;
}

std::vector<std::pair<HashGrid::CellKey, std::vector<int>>> HashGrid::sorted_cells() const {
  std::vector<std::pair<CellKey, std::vector<int>>> out(cells_.begin(), cells_.end());
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [key, members] : out) std::sort(members.begin(), members.end());
  return out;
}

}  // namespace tc
