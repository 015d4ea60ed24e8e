#pragma once

#include <optional>
#include <vector>

#include "proxbundle/model.hpp"
#include "proxbundle/types.hpp"

namespace proxbundle {

/// Euclidean projection onto the unit simplex {l >= 0, sum l = 1}.
Vector project_simplex(const Vector& v);

struct SimplexQpOptions {
  double tol_kkt = 0.0;  // <= 0 selects 1e-10 * (1 + ||c||_inf)
  int max_iterations = 50000;
};

struct SimplexQpResult {
  Vector lambda;
  double kkt_residual = 0.0;
  int iterations = 0;
};

/// Minimizes 0.5 l'Q l - c'l over the unit simplex (Q symmetric PSD).
///
/// The KKT residual reported is, with grad = Q l - c and m = min_i grad_i,
///   (l'grad - m) + max_i l_i (grad_i - m),
/// i.e. a dual-feasibility gap plus the worst complementary-slackness product.
/// Throws SolveFailure when max_iterations is exhausted above tolerance.
SimplexQpResult solve_simplex_qp(const Matrix& Q, const Vector& c,
                                 const std::optional<Vector>& warm_start = std::nullopt,
                                 const SimplexQpOptions& options = {});

/// Dual of the prox subproblem for a max-of-affine model:
///   minimize (1/(2r)) ||G l||^2 - e'l  over the unit simplex,
/// with G's columns the bundle subgradients and e_i = plane_i(z).
struct DualQP {
  Matrix G;
  Vector e;
  double r = 1.0;

  static DualQP from_bundle(const Bundle& bundle);
};

struct ProxResult {
  Vector x_next;
  Vector lambda;  // aligned with bundle.elements()
  double kkt_residual = 0.0;
  int qp_iterations = 0;
};

/// x_next = argmin phi(x) + (r/2)||x - z||^2, recovered as z - G l / r.
/// `warm_start`, when given, must match the bundle size.
ProxResult prox_of_model(const Bundle& bundle, double tol_kkt = 0.0,
                         const std::optional<Vector>& warm_start = std::nullopt);

/// Distance from g to the convex hull of `points`.
double dist_to_hull(const Vector& g, const std::vector<Vector>& points);

}  // namespace proxbundle
