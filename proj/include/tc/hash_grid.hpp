#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "tc/point_cloud.hpp"

namespace tc {

// Uniform grid over quantized coordinates. Cell key = floor(coord / cell).
// Only occupied cells are stored; construction and memory are linear in
// the point count.
class HashGrid {
 public:
  using CellKey = std::array<int64_t, 3>;

  HashGrid(const std::vector<Vec3>& positions, double cell_size);

  double cell_size() const { return cell_; }
  std::size_t point_count() const { return positions_->size(); }

  CellKey key_of(const Vec3& p) const;

  // Exact set { q : ||p - q|| < radius }, p itself included.
  // Ascending point index.
  std::vector<int> radius_neighbors(int p_index, double radius) const;
  std::vector<int> radius_neighbors(const Vec3& center, double radius) const;

  // Argmin of Euclidean distance; ties broken by smallest index.
  int nearest_neighbor(const Vec3& query) const;

  // Occupied cells in lexicographic key order; member indices ascending.
  std::vector<std::pair<CellKey, std::vector<int>>> sorted_cells() const;

 private:
  struct KeyHash {
    std::size_t operator()(const CellKey& k) const {
      uint64_t h = 1469598103934665603ull;
      for (int64_t v : k) {
        h ^= static_cast<uint64_t>(v);
        h *= 1099511628211ull;
      }
      return static_cast<std::size_t>(h);
    }
  };

  const std::vector<Vec3>* positions_;
  double cell_;
  std::unordered_map<CellKey, std::vector<int>, KeyHash> cells_;
  CellKey key_min_{}, key_max_{};
};

}  // namespace tc
