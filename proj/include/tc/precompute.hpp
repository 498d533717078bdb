#pragma once

#include <algorithm>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "tc/hash_grid.hpp"
#include "tc/point_cloud.hpp"
#include "tc/tangent_frame.hpp"

namespace tc {

class PrecomputeError : public std::runtime_error {
 public:
  explicit PrecomputeError(const std::string& msg) : std::runtime_error(msg) {}
};

// One resolution level of the hierarchy. Level k has pixel size
// r = r0 * 2^k, neighborhood radius R = 2r, grid step base_cell * 2^k.
struct LevelGeometry {
  int level = 0;
  PointCloud cloud;
  double pixel_size = 0.0;  // r
  double radius = 0.0;      // R = 2r
  double grid_step = 0.0;
  int image_side = 3;  // l, odd
  std::vector<TangentFrame> frames;
};

// Precomputed signal interpolation for one level: k index matrices (N x L)
// with matching weights, raw plane-distance image (meters), and a
// valid-pixel mask. The NN scheme is the k = 1 case with unit weights.
struct ConvPlan {
  int count = 0;       // N
  int image_side = 0;  // l
  int k = 1;
  std::vector<int32_t> indices;  // [k][N][L]
  std::vector<double> weights;   // [k][N][L], sums to 1 over k per valid pixel
  std::vector<double> distance;  // [N][L], meters (unnormalized)
  std::vector<uint8_t> valid;    // [N][L]

  int pixels() const { return image_side * image_side; }
  int32_t index_at(int ki, int n, int l) const {
    return indices[(static_cast<std::size_t>(ki) * count + n) * pixels() + l];
  }
  double weight_at(int ki, int n, int l) const {
    return weights[(static_cast<std::size_t>(ki) * count + n) * pixels() + l];
  }
};

// Disjoint grouping of finer-level points under a coarser grid. Rows are
// ordered by lexicographic cell key; members ascending.
struct PoolPlan {
  int fine_count = 0;
  int coarse_count = 0;
  std::vector<int32_t> members;  // concatenated rows
  std::vector<int32_t> offsets;  // coarse_count + 1
  std::vector<int32_t> parent;   // fine index -> row

  int occupancy(int row) const { return offsets[row + 1] - offsets[row]; }
};

struct HierarchyConfig {
  double base_cell = 0.05;
  double pixel_size0 = 0.05;  // r0; defaults to base_cell
  int levels = 3;
  int image_side = 3;
  bool gaussian = false;
  int top_k = 3;
  double sigma_factor = 1.0;  // sigma = sigma_factor * r per level
};

struct Hierarchy {
  HierarchyConfig config;
  PoolPlan base_plan;  // original points -> level-0 representatives
  std::vector<LevelGeometry> levels;
  std::vector<ConvPlan> conv;   // per level
  std::vector<PoolPlan> pools;  // levels.size() - 1
  uint64_t source_hash = 0;     // FNV-1a over original positions
};

// Pixel centers of the l x l tangent image, row-major, spacing r,
// center pixel at the origin.
std::vector<std::array<double, 2>> pixel_centers(int image_side, double pixel_size);

ConvPlan build_conv_plan_nn(const LevelGeometry& level, const HashGrid& grid);
ConvPlan build_conv_plan_gaussian(const LevelGeometry& level, const HashGrid& grid, int top_k,
                                  double sigma);

// Groups finer points by the coarser grid (must be 2x the finer step).
// Throws if any cell holds more than 8 points.
std::pair<PoolPlan, PointCloud> build_pool_plan(const LevelGeometry& finer, double coarser_cell);

// One representative per occupied base cell: averaged position/colors,
// majority-vote label. Row occupancy is unbounded here.
std::pair<PointCloud, PoolPlan> base_quantize(const PointCloud& cloud, double base_cell);

Hierarchy build_hierarchy(const PointCloud& cloud, const HierarchyConfig& config);

uint64_t position_hash(const PointCloud& cloud);

void save_plan_cache(const Hierarchy& h, const std::string& path);
Hierarchy load_plan_cache(const std::string& path);

// Distance image entry normalized for network input:
// clamp(d / R, -1, 1) / 2 + 1/2, i.e. into [0, 1].
inline double normalized_distance(double d, double radius) {
  const double t = std::clamp(d / radius, -1.0, 1.0);
  return 0.5 * t + 0.5;
}

// Thread count used by per-point parallel loops (plan building, conv
// kernels). All parallel loops write disjoint slots, so results do not
// depend on this setting.
void set_thread_count(int threads);
int thread_count();
void parallel_for(int begin, int end, const std::function<void(int)>& body);

}  // namespace tc
