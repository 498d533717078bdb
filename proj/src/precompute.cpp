#include "tc/precompute.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <thread>

#include "tc/serialize.hpp"

namespace tc {

namespace {
int g_threads = 1;
}

void set_thread_count(int threads) { g_threads = std::max(1, threads); }
int thread_count() { return g_threads; }

void parallel_for(int begin, int end, const std::function<void(int)>& body) {
  const int n = end - begin;
  if (n <= 0) return;
  const int workers = std::min(g_threads, n);
  if (workers <= 1) {
    for (int i = begin; i < end; ++i) body(i);
    return;
  }
  std::atomic<int> next(begin);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  constexpr int kChunk = 64;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const int start = next.fetch_add(kChunk);
        if (start >= end) return;
        const int stop = std::min(start + kChunk, end);
        for (int i = start; i < stop; ++i) body(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

std::vector<std::array<double, 2>> pixel_centers(int image_side, double pixel_size) {
  if (image_side < 1 || image_side % 2 == 0)
    throw PrecomputeError("image side must be odd and >= 1");
  if (pixel_size <= 0.0) throw PrecomputeError("pixel size must be > 0");
  std::vector<std::array<double, 2>> centers;
  centers.reserve(static_cast<std::size_t>(image_side) * image_side);
  const int half = (image_side - 1) / 2;
  for (int b = -half; b <= half; ++b)
    for (int a = -half; a <= half; ++a)
      centers.push_back({a * pixel_size, b * pixel_size});
  return centers;
}

namespace {

// Shared core of the NN and Gaussian plans: per pixel, the top_k projected
// neighbors ranked by image-plane distance (ties: smaller point index).
ConvPlan build_conv_plan_impl(const LevelGeometry& level, const HashGrid& grid, int top_k,
                              double sigma, bool gaussian) {
  if (top_k < 1) throw PrecomputeError("top_k must be >= 1");
  const int n = static_cast<int>(level.cloud.size());
  const int side = level.image_side;
  const int pixels = side * side;
  const auto centers = pixel_centers(side, level.pixel_size);
  const double invalid_d2 = 2.0 * level.pixel_size * level.pixel_size;  // (r*sqrt(2))^2

  ConvPlan plan;
  plan.count = n;
  plan.image_side = side;
  plan.k = top_k;
  plan.indices.assign(static_cast<std::size_t>(top_k) * n * pixels, 0);
  plan.weights.assign(static_cast<std::size_t>(top_k) * n * pixels, 0.0);
  plan.distance.assign(static_cast<std::size_t>(n) * pixels, 0.0);
  plan.valid.assign(static_cast<std::size_t>(n) * pixels, 0);

  const auto& positions = level.cloud.positions;
  parallel_for(0, n, [&](int p) {
    const ProjectedNeighborhood nbh =
        project_neighborhood(positions, grid, level.frames[p], p, level.radius);
    const int m = static_cast<int>(nbh.indices.size());
    std::vector<std::pair<double, int>> ranked(m);  // (pixel distance^2, slot)
    for (int l = 0; l < pixels; ++l) {
      const auto& u = centers[l];
      for (int s = 0; s < m; ++s) {
        const double dx = nbh.coords[s][0] - u[0];
        const double dy = nbh.coords[s][1] - u[1];
        ranked[s] = {dx * dx + dy * dy, s};
      }
      const int take = std::min(top_k, m);
      std::partial_sort(ranked.begin(), ranked.begin() + take, ranked.end(),
                        [&](const auto& a, const auto& b) {
                          if (a.first != b.first) return a.first < b.first;
                          return nbh.indices[a.second] < nbh.indices[b.second];
                        });

      const std::size_t row = static_cast<std::size_t>(p) * pixels + l;
      if (gaussian) {
        double total = 0.0;
        for (int i = 0; i < take; ++i) total += std::exp(-ranked[i].first / (sigma * sigma));
        double dsum = 0.0;
        for (int i = 0; i < take; ++i) {
          const int slot = ranked[i].second;
          double w = std::exp(-ranked[i].first / (sigma * sigma)) / total;
          if (total == 0.0) w = i == 0 ? 1.0 : 0.0;  // all weights underflowed
          plan.indices[static_cast<std::size_t>(i) * n * pixels + row] = nbh.indices[slot];
          plan.weights[static_cast<std::size_t>(i) * n * pixels + row] = w;
          dsum += w * nbh.plane_distance[slot];
        }
        for (int i = take; i < top_k; ++i) {
          plan.indices[static_cast<std::size_t>(i) * n * pixels + row] = p;  // padding, weight 0
        }
        plan.distance[row] = dsum;
      } else {
        const int slot = ranked[0].second;
        plan.indices[row] = nbh.indices[slot];
        plan.weights[row] = 1.0;
        plan.distance[row] = nbh.plane_distance[slot];
      }
      plan.valid[row] = ranked[0].first <= invalid_d2 ? 1 : 0;
    }
  });
  return plan;
}

}  // namespace

ConvPlan build_conv_plan_nn(const LevelGeometry& level, const HashGrid& grid) {
  return build_conv_plan_impl(level, grid, 1, 0.0, false);
}

ConvPlan build_conv_plan_gaussian(const LevelGeometry& level, const HashGrid& grid, int top_k,
                                  double sigma) {
  if (sigma <= 0.0) throw PrecomputeError("sigma must be > 0");
  return build_conv_plan_impl(level, grid, top_k, sigma, true);
}

namespace {

using CellKey = HashGrid::CellKey;

// Groups point indices by quantized cell, rows in lexicographic key order.
std::map<CellKey, std::vector<int32_t>> group_by_cell(const std::vector<Vec3>& positions,
                                                      double cell) {
  std::map<CellKey, std::vector<int32_t>> groups;
  for (int i = 0; i < static_cast<int>(positions.size()); ++i) {
    const Vec3& p = positions[i];
    CellKey key = {static_cast<int64_t>(std::floor(p[0] / cell)),
                   static_cast<int64_t>(std::floor(p[1] / cell)),
                   static_cast<int64_t>(std::floor(p[2] / cell))};
    groups[key].push_back(i);
  }
  return groups;
}

std::pair<PoolPlan, PointCloud> pool_groups(const PointCloud& fine,
                                            const std::map<CellKey, std::vector<int32_t>>& groups,
                                            int max_occupancy) {
  PoolPlan plan;
  plan.fine_count = static_cast<int>(fine.size());
  plan.coarse_count = static_cast<int>(groups.size());
  plan.offsets.reserve(groups.size() + 1);
  plan.offsets.push_back(0);
  plan.members.reserve(fine.size());
  plan.parent.assign(fine.size(), -1);

  PointCloud coarse;
  coarse.positions.reserve(groups.size());
  if (fine.has_colors()) coarse.colors.reserve(groups.size());
  if (fine.has_labels()) coarse.labels.reserve(groups.size());

  int row = 0;
  for (const auto& [key, members] : groups) {
    if (max_occupancy > 0 && static_cast<int>(members.size()) > max_occupancy)
      throw PrecomputeError("pool cell occupancy " + std::to_string(members.size()) +
                            " exceeds " + std::to_string(max_occupancy) +
                            " (finest level not base-quantized?)");
    Vec3 mean{0.0, 0.0, 0.0};
    std::array<double, 3> color_mean{0.0, 0.0, 0.0};
    std::map<int32_t, int> label_votes;
    for (int32_t idx : members) {
      plan.members.push_back(idx);
      plan.parent[idx] = row;
      mean = mean + fine.positions[idx];
      if (fine.has_colors()) {
        for (int c = 0; c < 3; ++c) color_mean[c] += fine.colors[idx][c];
      }
      if (fine.has_labels() && fine.labels[idx] != kUnlabeled) ++label_votes[fine.labels[idx]];
    }
    const double inv = 1.0 / static_cast<double>(members.size());
    coarse.positions.push_back(mean * inv);
    if (fine.has_colors())
      coarse.colors.push_back({color_mean[0] * inv, color_mean[1] * inv, color_mean[2] * inv});
    if (fine.has_labels()) {
      int32_t best = kUnlabeled;
      int best_count = 0;
      for (const auto& [label, count] : label_votes) {
        if (count > best_count) {  // map order gives smallest label on ties
          best = label;
          best_count = count;
        }
      }
      coarse.labels.push_back(best);
    }
    plan.offsets.push_back(static_cast<int32_t>(plan.members.size()));
    ++row;
  }
  return {std::move(plan), std::move(coarse)};
}

}  // namespace

std::pair<PoolPlan, PointCloud> build_pool_plan(const LevelGeometry& finer, double coarser_cell) {
  const double expected = 2.0 * finer.grid_step;
  if (std::abs(coarser_cell - expected) > 1e-12 * expected)
    throw PrecomputeError("coarser cell must be 2x the finer grid step");
  auto groups = group_by_cell(finer.cloud.positions, coarser_cell);
  return pool_groups(finer.cloud, groups, 8);
}

std::pair<PointCloud, PoolPlan> base_quantize(const PointCloud& cloud, double base_cell) {
  if (base_cell <= 0.0) throw PrecomputeError("base_cell must be > 0");
  auto groups = group_by_cell(cloud.positions, base_cell);
  auto [plan, coarse] = pool_groups(cloud, groups, 0);
  return {std::move(coarse), std::move(plan)};
}

uint64_t position_hash(const PointCloud& cloud) {
  uint64_t h = 1469598103934665603ull;
  for (const Vec3& p : cloud.positions) {
    for (int d = 0; d < 3; ++d) {
      uint64_t bits;
      static_assert(sizeof(double) == sizeof(uint64_t));
      std::memcpy(&bits, &p[d], sizeof(bits));
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xffu;
        h *= 1099511628211ull;
      }
    }
  }
  return h;
}

Hierarchy build_hierarchy(const PointCloud& cloud, const HierarchyConfig& config) {
  if (config.levels < 1) throw PrecomputeError("levels must be >= 1");
  Hierarchy h;
  h.config = config;
  h.source_hash = position_hash(cloud);

  auto [level0_cloud, base_plan] = base_quantize(cloud, config.base_cell);
  h.base_plan = std::move(base_plan);

  PointCloud current = std::move(level0_cloud);
  for (int k = 0; k < config.levels; ++k) {
    LevelGeometry level;
    level.level = k;
    level.cloud = std::move(current);
    level.pixel_size = config.pixel_size0 * std::pow(2.0, k);
    level.radius = 2.0 * level.pixel_size;
    level.grid_step = config.base_cell * std::pow(2.0, k);
    level.image_side = config.image_side;

    HashGrid grid(level.cloud.positions, level.radius);
    const int n = static_cast<int>(level.cloud.size());
    level.frames.resize(n);
    parallel_for(0, n, [&](int p) {
      level.frames[p] = estimate_frame(level.cloud.positions, grid, p, level.radius);
    });

    ConvPlan plan = config.gaussian
                        ? build_conv_plan_gaussian(level, grid, config.top_k,
                                                   config.sigma_factor * level.pixel_size)
                        : build_conv_plan_nn(level, grid);

    if (k + 1 < config.levels) {
      auto [pool, coarse] = build_pool_plan(level, 2.0 * level.grid_step);
      h.pools.push_back(std::move(pool));
      current = std::move(coarse);
    }
    h.levels.push_back(std::move(level));
    h.conv.push_back(std::move(plan));
  }
  return h;
}

namespace {
constexpr char kPlanMagic[8] = {'T', 'C', 'P', 'L', 'A', 'N', 'S', '\0'};
constexpr uint32_t kPlanVersion = 1;

void put_pool_plan(BinaryWriter& w, const PoolPlan& p) {
  w.put<int32_t>(p.fine_count);
  w.put<int32_t>(p.coarse_count);
  w.put_vector(p.members);
  w.put_vector(p.offsets);
  w.put_vector(p.parent);
}

PoolPlan get_pool_plan(BinaryReader& r) {
  PoolPlan p;
  p.fine_count = r.get<int32_t>();
  p.coarse_count = r.get<int32_t>();
  p.members = r.get_vector<int32_t>();
  p.offsets = r.get_vector<int32_t>();
  p.parent = r.get_vector<int32_t>();
  return p;
}
}  // namespace

void save_plan_cache(const Hierarchy& h, const std::string& path) {
  BinaryWriter w(path);
  w.put(kPlanMagic);
  w.put<uint32_t>(kPlanVersion);
  w.put<uint64_t>(h.source_hash);
  w.put<double>(h.config.base_cell);
  w.put<double>(h.config.pixel_size0);
  w.put<int32_t>(h.config.levels);
  w.put<int32_t>(h.config.image_side);
  w.put<uint8_t>(h.config.gaussian ? 1 : 0);
  w.put<int32_t>(h.config.top_k);
  w.put<double>(h.config.sigma_factor);
  put_pool_plan(w, h.base_plan);
  for (const auto& level : h.levels) {
    w.put<int32_t>(level.level);
    w.put<double>(level.pixel_size);
    w.put<double>(level.radius);
    w.put<double>(level.grid_step);
    w.put<int32_t>(level.image_side);
    w.put_vector(level.cloud.positions);
    w.put_vector(level.cloud.colors);
    w.put_vector(level.cloud.labels);
    w.put<uint64_t>(level.frames.size());
    for (const auto& f : level.frames) {
      w.put(f.normal);
      w.put(f.axis_i);
      w.put(f.axis_j);
      w.put(f.eigenvalues);
      w.put<uint8_t>(f.degenerate ? 1 : 0);
    }
  }
  for (const auto& plan : h.conv) {
    w.put<int32_t>(plan.count);
    w.put<int32_t>(plan.image_side);
    w.put<int32_t>(plan.k);
    w.put_vector(plan.indices);
    w.put_vector(plan.weights);
    w.put_vector(plan.distance);
    w.put_vector(plan.valid);
  }
  w.put<uint64_t>(h.pools.size());
  for (const auto& pool : h.pools) put_pool_plan(w, pool);
  w.finish();
}

Hierarchy load_plan_cache(const std::string& path) {
  BinaryReader r(path);
  r.expect_magic(kPlanMagic, sizeof(kPlanMagic));
  const auto version = r.get<uint32_t>();
  if (version != kPlanVersion)
    throw SerializeError(path + ": unsupported plan cache version " + std::to_string(version));
  Hierarchy h;
  h.source_hash = r.get<uint64_t>();
  h.config.base_cell = r.get<double>();
  h.config.pixel_size0 = r.get<double>();
  h.config.levels = r.get<int32_t>();
  h.config.image_side = r.get<int32_t>();
  h.config.gaussian = r.get<uint8_t>() != 0;
  h.config.top_k = r.get<int32_t>();
  h.config.sigma_factor = r.get<double>();
  h.base_plan = get_pool_plan(r);
  h.levels.resize(h.config.levels);
  for (auto& level : h.levels) {
    level.level = r.get<int32_t>();
    level.pixel_size = r.get<double>();
    level.radius = r.get<double>();
    level.grid_step = r.get<double>();
    level.image_side = r.get<int32_t>();
    level.cloud.positions = r.get_vector<Vec3>();
    level.cloud.colors = r.get_vector<std::array<double, 3>>();
    level.cloud.labels = r.get_vector<int32_t>();
    const auto nf = r.get<uint64_t>();
    level.frames.resize(nf);
    for (auto& f : level.frames) {
      f.normal = r.get<Vec3>();
      f.axis_i = r.get<Vec3>();
      f.axis_j = r.get<Vec3>();
      f.eigenvalues = r.get<std::array<double, 3>>();
      f.degenerate = r.get<uint8_t>() != 0;
    }
  }
  h.conv.resize(h.config.levels);
  for (auto& plan : h.conv) {
    plan.count = r.get<int32_t>();
    plan.image_side = r.get<int32_t>();
    plan.k = r.get<int32_t>();
    plan.indices = r.get_vector<int32_t>();
    plan.weights = r.get_vector<double>();
    plan.distance = r.get_vector<double>();
    plan.valid = r.get_vector<uint8_t>();
  }
  const auto npools = r.get<uint64_t>();
  h.pools.resize(npools);
  for (auto& pool : h.pools) pool = get_pool_plan(r);
  return h;
}

}  // namespace tc
