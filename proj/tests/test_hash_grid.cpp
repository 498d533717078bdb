#include <doctest.h>

#include <algorithm>
#include <random>

#include "tc/hash_grid.hpp"

using tc::operator+;
using tc::operator-;
using tc::operator*;


namespace {

std::vector<tc::Vec3> random_points(std::size_t n, uint64_t seed, double extent) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-extent, extent);
  std::vector<tc::Vec3> pts(n);
  for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
  return pts;
}

std::vector<int> brute_radius(const std::vector<tc::Vec3>& pts, const tc::Vec3& center,
                              double radius) {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(pts.size()); ++i)
    if (tc::squared_norm(pts[i] - center) < radius * radius) out.push_back(i);
  return out;
}

int brute_nearest(const std::vector<tc::Vec3>& pts, const tc::Vec3& q) {
  int best = 0;
  double best_d2 = tc::squared_norm(pts[0] - q);
  for (int i = 1; i < static_cast<int>(pts.size()); ++i) {
    const double d2 = tc::squared_norm(pts[i] - q);
    if (d2 < best_d2) {
      best = i;
      best_d2 = d2;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("radius query matches brute force and is sorted") {
  const auto pts = random_points(800, 5, 1.0);
  const double radius = 0.21;  // deliberately not a multiple of the cell size
  const tc::HashGrid grid(pts, radius);
  for (int p = 0; p < 50; ++p) {
    const auto got = grid.radius_neighbors(p, radius);
    CHECK(std::is_sorted(got.begin(), got.end()));
    CHECK(got == brute_radius(pts, pts[p], radius));
  }
}

TEST_CASE("radius boundary is strict") {
  const std::vector<tc::Vec3> pts = {{0, 0, 0}, {1.0, 0, 0}, {0.999999, 0, 0}};
  const tc::HashGrid grid(pts, 1.0);
  const auto got = grid.radius_neighbors(0, 1.0);
  CHECK(got == std::vector<int>{0, 2});  // exactly at radius is excluded
}

TEST_CASE("nearest neighbor matches brute force, including far queries") {
  const auto pts = random_points(600, 17, 2.0);
  const tc::HashGrid grid(pts, 0.15);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  for (int t = 0; t < 60; ++t) {
    const tc::Vec3 q{u(rng), u(rng), u(rng)};
    CHECK(grid.nearest_neighbor(q) == brute_nearest(pts, q));
  }
}

TEST_CASE("nearest neighbor ties break toward the smaller index") {
  const std::vector<tc::Vec3> pts = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}};
  const tc::HashGrid grid(pts, 0.5);
  CHECK(grid.nearest_neighbor({0, 0, 0}) == 0);
}

TEST_CASE("sorted cells form an ordered partition of the points") {
  const auto pts = random_points(500, 23, 1.0);
  const tc::HashGrid grid(pts, 0.3);
  const auto cells = grid.sorted_cells();

  std::vector<int> seen;
  for (std::size_t c = 0; c + 1 < cells.size(); ++c) CHECK(cells[c].first < cells[c + 1].first);
  for (const auto& [key, members] : cells) {
    CHECK(std::is_sorted(members.begin(), members.end()));
    for (int idx : members) {
      CHECK(grid.key_of(pts[static_cast<std::size_t>(idx)]) == key);
      seen.push_back(idx);
    }
  }
  std::sort(seen.begin(), seen.end());
  REQUIRE(seen.size() == pts.size());
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) CHECK(seen[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("negative coordinates quantize with floor semantics") {
  const std::vector<tc::Vec3> pts = {{-0.01, 0, 0}, {0.01, 0, 0}};
  const tc::HashGrid grid(pts, 0.1);
  CHECK(grid.key_of(pts[0])[0] == -1);
  CHECK(grid.key_of(pts[1])[0] == 0);
}
