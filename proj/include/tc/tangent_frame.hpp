#pragma once

#include <vector>

#include "tc/hash_grid.hpp"
#include "tc/point_cloud.hpp"

namespace tc {

// Orthonormal right-handed frame {axis_i, axis_j, normal} at a point,
// from eigenvectors of C = sum_q r r^T over the spherical neighborhood.
// The normal is the eigenvector of the smallest eigenvalue, flipped into
// the +z hemisphere (ties: +y, then +x).
struct TangentFrame {
  Vec3 normal{0.0, 0.0, 1.0};
  Vec3 axis_i{1.0, 0.0, 0.0};
  Vec3 axis_j{0.0, 1.0, 0.0};
  std::array<double, 3> eigenvalues{0.0, 0.0, 0.0};  // descending
  bool degenerate = false;  // < 3 neighbors or rank-deficient covariance
};

// Eigen-decomposition of a symmetric 3x3 matrix (row-major upper triangle
// given as full matrix). Eigenvalues descending, eigenvectors as rows.
void symmetric_eigen3(const std::array<double, 9>& m, std::array<double, 3>* values,
                      std::array<Vec3, 3>* vectors);

// Degenerate inputs yield the identity fallback frame with degenerate=true.
TangentFrame estimate_frame(const std::vector<Vec3>& positions, const HashGrid& grid,
                            int p_index, double radius);

struct ProjectedNeighborhood {
  std::vector<std::array<double, 2>> coords;  // v = (r.i, r.j), meters
  std::vector<double> plane_distance;         // d = (q-p).n, meters
  std::vector<int> indices;                   // ascending point index
};

ProjectedNeighborhood project_neighborhood(const std::vector<Vec3>& positions,
                                           const HashGrid& grid, const TangentFrame& frame,
                                           int p_index, double radius);

}  // namespace tc
