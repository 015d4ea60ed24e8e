#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "proxbundle/model.hpp"
#include "proxbundle/oracles.hpp"
#include "proxbundle/types.hpp"

namespace proxbundle {

struct SolverConfig {
  Vector z;
  double r = 1.0;
  double s_tol = 1e-3;
  BundleVariant variant = BundleVariant::kFull;
  int max_iterations = 0;  // <= 0 selects 100 n
  bool record_trace = true;
  /// Only used for error_bound and the invariant checks.
  double eps = 0.0;
  /// Dual QP tolerance; <= 0 selects the prox_qp default.
  double qp_tol = 0.0;
  /// Runs the per-iteration invariant checks and collects violations.
  bool check_invariants = false;
};

enum class StopReason { kToleranceMet, kIterationCap };
std::string_view to_string(StopReason reason);

struct IterationRecord {
  int k = 0;
  Vector x_next;          // x_{k+1}
  double model_value = 0.0;  // phi_k(x_{k+1})
  double merit = 0.0;        // phi_k(x_{k+1}) + r/2 ||z - x_{k+1}||^2
  double gap = 0.0;          // (f_{k+1} - phi_k(x_{k+1})) / r
  bool tilt_corrected = false;  // the plane added after this iteration was corrected
  int bundle_size = 0;          // elements in the model phi_k
  double f_next = 0.0;
  double step = 0.0;             // ||x_{k+1} - x_k||
  double model_at_centre = 0.0;  // phi_k(z)
  double recombination_residual = 0.0;  // ||r(z - x_{k+1}) - G lambda|| / scale
  double kkt_residual = 0.0;
  int qp_iterations = 0;
};

struct SolveResult {
  Vector x_out;
  StopReason stop_reason = StopReason::kIterationCap;
  int iterations = 0;
  int tilt_corrections = 0;
  std::vector<IterationRecord> trace;
  double error_bound = 0.0;
  double final_gap = 0.0;
  double f_centre = 0.0;
  std::vector<std::string> violations;
};

/// (f_next - model_value) / r <= s_tol^2. A negative gap also stops.
bool stopping_test(double f_next, double model_value, double r, double s_tol);

/// Distance bound sqrt((max(0, f - phi) + eps^2/(4r)) / r) + eps/(2r), where
/// model_gap = f - phi (not divided by r).
double error_bound(double model_gap, double eps, double r);

/// Proximal bundle loop with tilt-corrected inexact subgradients.
SolveResult run(Oracle& oracle, const SolverConfig& config);

}  // namespace proxbundle
