#pragma once

#include <set>
#include <utility>
#include <vector>

#include "proxbundle/types.hpp"

namespace proxbundle {

inline constexpr int kAggregateIndex = -1;
inline constexpr int kCentreIndex = 0;

/// Absolute slack used to classify a plane as "almost active".
inline constexpr double kNearActiveSlack = 1e-6;

/// One linearization of the objective: plane(x) = value + subgrad' (x - site).
/// Index -1 is the aggregate, 0 the prox-centre element, k >= 1 iterate k.
struct BundleElement {
  int index = 0;
  Vector site;
  double value = 0.0;
  Vector subgrad;

  double plane(const Vector& x) const { return value + subgrad.dot(x - site); }
};

/// The cutting-plane model max_i plane_i(x) together with its prox-centre z
/// and prox-parameter r. Elements are kept sorted by index.
class Bundle {
 public:
  Bundle(Vector prox_centre, double prox_param);

  const Vector& prox_centre() const { return centre_; }
  double prox_param() const { return r_; }
  int dimension() const { return static_cast<int>(centre_.size()); }

  const std::vector<BundleElement>& elements() const { return elements_; }
  std::size_t size() const { return elements_.size(); }
  bool empty() const { return elements_.empty(); }

  bool contains(int index) const;
  const BundleElement& at(int index) const;
  std::set<int> indices() const;

  /// Inserts or replaces the element with the same index.
  void insert(BundleElement element);

 private:
  Vector centre_;
  double r_;
  std::vector<BundleElement> elements_;
};

struct ModelEvaluation {
  double value = 0.0;
  std::set<int> argmax_indices;       // exact floating-point ties
  std::set<int> near_active_indices;  // within kNearActiveSlack of the max
};

struct TiltReport {
  double excess = 0.0;  // E_k
  bool corrected = false;
  double correction_norm = 0.0;
};

/// Rounding-level threshold below which a positive excess is treated as zero.
/// It bounds the floating-point error of evaluating f_k + g'(z - x_k) - f(z).
double tilt_tolerance(double f_z, double f_k, const Vector& g_tilde, const Vector& step_to_centre);

/// Repairs an inexact subgradient so the plane through (x_k, f_k) does not lie
/// above f at the prox-centre: g = g_tilde - E (z - x_k) / ||z - x_k||^2 when
/// E = f_k + g_tilde'(z - x_k) - f(z) is positive.
std::pair<Vector, TiltReport> tilt_correct(const Vector& z, double f_z, const Vector& x_k, double f_k,
                                           const Vector& g_tilde);

ModelEvaluation eval_model(const Bundle& bundle, const Vector& x);

/// Aggregate element (-1, x_next, phi(x_next), r (z - x_next)).
BundleElement make_aggregate(const Bundle& bundle, const Vector& x_next);
/// Same, with phi(x_next) already known.
BundleElement make_aggregate(const Bundle& bundle, const Vector& x_next, double model_value);

/// Index set kept for the next model. `newest` is the index of the element
/// about to be added; `eval_at_next` is the current model evaluated at the new
/// iterate.
std::set<int> select_bundle(BundleVariant variant, const Bundle& bundle,
                            const ModelEvaluation& eval_at_next, int newest);

}  // namespace proxbundle
