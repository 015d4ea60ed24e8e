#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "proxbundle/types.hpp"

namespace proxbundle {

/// q(x) = 0.5 x'Ax + b'x + c with A symmetric PSD.
struct Quadratic {
  Matrix A;
  Vector b;
  double c = 0.0;

  double value(const Vector& x) const { return 0.5 * x.dot(A * x) + b.dot(x) + c; }
  Vector gradient(const Vector& x) const { return A * x + b; }
};

/// Throws InvalidArgument unless A is symmetric to 1e-12 and has smallest
/// eigenvalue >= -1e-10.
void check_quadratic(const Quadratic& q);

/// f(x) = max_i q_i(x) with a known proximal point at (z, r).
/// Indices in the active sets are 0-based positions in `quadratics`.
struct MaxQuadProblem {
  std::vector<Quadratic> quadratics;
  Vector z;
  double r = 1.0;
  Vector x_star;
  std::set<int> active_at_xstar;
  std::set<int> active_at_z;
  double lipschitz_bound = 0.0;
  std::uint64_t seed = 0;
  bool sparse = false;

  int dimension() const { return static_cast<int>(z.size()); }
  int count() const { return static_cast<int>(quadratics.size()); }
};

struct GeneratorParams {
  int n = 4;
  int nf = 1;
  int nf_xstar = 1;
  int nf_z = 1;
  double r = 1.0;
  std::uint64_t seed = 0;
  bool sparse = false;
};

inline constexpr double kActivityMargin = 1e-3;
inline constexpr double kWeightFloor = 0.05;

MaxQuadProblem generate_max_quad(const GeneratorParams& params);

struct MaxQuadEval {
  double value = 0.0;
  std::set<int> active;
  Vector first_active_grad;
};

/// Relative tolerance used to decide which pieces attain the max; it only
/// absorbs the rounding of evaluating a quadratic.
double activity_tolerance(double value);

/// Evaluates every piece; OpenMP-parallel over pieces when the work is large
/// enough to pay for a thread team.
MaxQuadEval eval_max_quad(const MaxQuadProblem& problem, const Vector& x);
/// Serial reference for eval_max_quad; results are bitwise identical.
MaxQuadEval eval_max_quad_serial(const MaxQuadProblem& problem, const Vector& x);
/// Function value only.
double max_quad_value(const MaxQuadProblem& problem, const Vector& x);

struct CertificateReport {
  bool ok = true;
  double hull_distance = 0.0;   // dist(r(z - x*), conv{grad q_i(x*) : i active})
  double xstar_margin = 0.0;    // max - best inactive value at x*
  double xstar_spread = 0.0;    // max - min over designated active values at x*
  double z_margin = 0.0;
  double z_spread = 0.0;
  std::vector<std::string> failures;
};

/// Checks every invariant the generator promises.
CertificateReport verify_certificate(const MaxQuadProblem& problem);

/// Recomputes Prox^r_f(z) independently of the generator (dual ascent on the
/// simplex of piece weights, then Newton on the active-set KKT system).
/// Throws SolveFailure if the result is farther than 1e-5 from x_star.
Vector reference_prox(const MaxQuadProblem& problem);
/// Same computation without the comparison against x_star.
Vector compute_prox(const MaxQuadProblem& problem);

/// Self-describing JSON form of a problem. Doubles round-trip exactly.
std::string to_json(const MaxQuadProblem& problem);
MaxQuadProblem problem_from_json(const std::string& text);
void save_problem(const MaxQuadProblem& problem, const std::filesystem::path& path);
MaxQuadProblem load_problem(const std::filesystem::path& path);

}  // namespace proxbundle
