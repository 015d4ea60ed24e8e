#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls the dual QP code.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "proxbundle/model.hpp"
#include "proxbundle/rng.hpp"

namespace testsupport {

using proxbundle::Matrix;
using proxbundle::Vector;

struct Plane {
  double value_at_centre;  // plane(z)
  Vector subgrad;
};

inline double model_value(const std::vector<Plane>& planes, const Vector& z, const Vector& x) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& p : planes) best = std::max(best, p.value_at_centre + p.subgrad.dot(x - z));
  return best;
}

inline double prox_objective(const std::vector<Plane>& planes, const Vector& z, double r, const Vector& x) {
  return model_value(planes, z, x) + 0.5 * r * (x - z).squaredNorm();
}

/// Prox of a max-of-affine model by enumerating which planes are tied at the
/// optimum. For each nonempty subset S, minimize plane_s0(x) + r/2 |x - z|^2
/// subject to the planes in S being equal; the true prox solves one of these
/// problems, and every candidate is scored with the full objective.
inline Vector brute_force_prox(const std::vector<Plane>& planes, const Vector& z, double r) {
  const int m = static_cast<int>(planes.size());
  const auto n = z.size();
  Vector best_x = z;
  double best = std::numeric_limits<double>::infinity();
  for (int mask = 1; mask < (1 << m); ++mask) {
    std::vector<int> s;
    for (int i = 0; i < m; ++i)
      if (mask & (1 << i)) s.push_back(i);
    const auto k = static_cast<Eigen::Index>(s.size()) - 1;
    // Unknowns: d = x - z (n), multipliers (k). Stationarity:
    //   g_s0 + r d + sum_j mu_j (g_sj - g_s0) = 0,
    //   (g_sj - g_s0)'d = e_s0 - e_sj.
    Matrix K = Matrix::Zero(n + k, n + k);
    Vector rhs = Vector::Zero(n + k);
    K.topLeftCorner(n, n) = r * Matrix::Identity(n, n);
    rhs.head(n) = -planes[s[0]].subgrad;
    for (Eigen::Index j = 0; j < k; ++j) {
      const Vector diff = planes[s[j + 1]].subgrad - planes[s[0]].subgrad;
      K.block(0, n + j, n, 1) = diff;
      K.block(n + j, 0, 1, n) = diff.transpose();
      rhs[n + j] = planes[s[0]].value_at_centre - planes[s[j + 1]].value_at_centre;
    }
    const Vector sol = K.completeOrthogonalDecomposition().solve(rhs);
    if ((K * sol - rhs).norm() > 1e-9 * (1.0 + rhs.norm())) continue;
    const Vector x = z + sol.head(n);
    const double value = prox_objective(planes, z, r, x);
    if (value < best) {
      best = value;
      best_x = x;
    }
  }
  return best_x;
}

inline Vector random_vector(proxbundle::Rng& rng, Eigen::Index n, double scale = 1.0) {
  return scale * rng.normal_vector(n);
}

}  // namespace testsupport
