#include "tc/tangent_frame.hpp"

#include <algorithm>
#include <cmath>

namespace tc {

void symmetric_eigen3(const std::array<double, 9>& m, std::array<double, 3>* values,
                      std::array<Vec3, 3>* vectors) {
  // Cyclic Jacobi rotations; deterministic sweep order (0,1),(0,2),(1,2).
  double a[3][3] = {{m[0], m[1], m[2]}, {m[3], m[4], m[5]}, {m[6], m[7], m[8]}};
  double v[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

  const double scale = std::max({std::abs(a[0][0]), std::abs(a[1][1]), std::abs(a[2][2]),
                                 std::abs(a[0][1]), std::abs(a[0][2]), std::abs(a[1][2]), 1e-300});
  for (int sweep = 0; sweep < 64; ++sweep) {
    const double off = std::abs(a[0][1]) + std::abs(a[0][2]) + std::abs(a[1][2]);
    if (off < 1e-15 * scale) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < 3; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (int k = 0; k < 3; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }

  std::array<int, 3> order = {0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    if (a[i][i] != a[j][j]) return a[i][i] > a[j][j];
    return i < j;
  });
  for (int r = 0; r < 3; ++r) {
    (*values)[r] = a[order[r]][order[r]];
    (*vectors)[r] = {v[0][order[r]], v[1][order[r]], v[2][order[r]]};
  }
}

namespace {

// Flip so the vector lies in the +z hemisphere; ties broken toward +y, +x.
Vec3 orient_positive(const Vec3& n) {
  if (n[2] < 0.0) return n * -1.0;
  if (n[2] == 0.0) {
    if (n[1] < 0.0) return n * -1.0;
    if (n[1] == 0.0 && n[0] < 0.0) return n * -1.0;
  }
  return n;
}

}  // namespace

TangentFrame estimate_frame(const std::vector<Vec3>& positions, const HashGrid& grid,
                            int p_index, double radius) {
  TangentFrame frame;
  const std::vector<int> nbrs = grid.radius_neighbors(p_index, radius);
  if (nbrs.size() < 3) {
    frame.degenerate = true;
    return frame;
  }

  const Vec3& p = positions[p_index];
  std::array<double, 9> c{};
  for (int q : nbrs) {
    const Vec3 r = positions[q] - p;
    c[0] += r[0] * r[0];
    c[1] += r[0] * r[1];
    c[2] += r[0] * r[2];
    c[4] += r[1] * r[1];
    c[5] += r[1] * r[2];
    c[8] += r[2] * r[2];
  }
  c[3] = c[1];
  c[6] = c[2];
  c[7] = c[5];

  std::array<double, 3> eig;
  std::array<Vec3, 3> vecs;
  symmetric_eigen3(c, &eig, &vecs);
  frame.eigenvalues = eig;

  if (eig[0] <= 0.0 || eig[1] < 1e-12 * eig[0]) {
    frame.degenerate = true;
    return frame;
  }

  frame.normal = orient_positive(normalized(vecs[2]));

  // In-plane axis: eigenvector of the largest eigenvalue; if lambda1 ~
  // lambda2 the direction is arbitrary, so project world +x (fallback +y)
  // into the plane for a deterministic choice.
  Vec3 i_axis;
  if (eig[0] - eig[1] < 1e-9 * eig[0]) {
    Vec3 cand = Vec3{1.0, 0.0, 0.0} - frame.normal * frame.normal[0];
    if (norm(cand) < 1e-6) cand = Vec3{0.0, 1.0, 0.0} - frame.normal * frame.normal[1];
    i_axis = cand;
  } else {
    i_axis = vecs[0];
  }
  i_axis = i_axis - frame.normal * dot(i_axis, frame.normal);
  frame.axis_i = orient_positive(normalized(i_axis));
  frame.axis_j = cross(frame.normal, frame.axis_i);  // makes (i x j).n = +1
  return frame;
}

ProjectedNeighborhood project_neighborhood(const std::vector<Vec3>& positions,
                                           const HashGrid& grid, const TangentFrame& frame,
                                           int p_index, double radius) {
  ProjectedNeighborhood out;
  out.indices = grid.radius_neighbors(p_index, radius);
  out.coords.reserve(out.indices.size());
  out.plane_distance.reserve(out.indices.size());
  const Vec3& p = positions[p_index];
  for (int q : out.indices) {
    const Vec3 r = positions[q] - p;
    out.coords.push_back({dot(r, frame.axis_i), dot(r, frame.axis_j)});
    out.plane_distance.push_back(dot(r, frame.normal));
  }
  return out;
}

}  // namespace tc
