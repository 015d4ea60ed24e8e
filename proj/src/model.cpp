#include "proxbundle/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace proxbundle {

std::string_view to_string(BundleVariant v) {
  switch (v) {
    case BundleVariant::kThree: return "three";
    case BundleVariant::kFull: return "full";
    case BundleVariant::kActive: return "active";
    case BundleVariant::kAlmostActive: return "almost_active";
  }
  return "unknown";
}

BundleVariant parse_variant(std::string_view s) {
  if (s == "three" || s == "3") return BundleVariant::kThree;
  if (s == "full" || s == "k+2") return BundleVariant::kFull;
  if (s == "active") return BundleVariant::kActive;
  if (s == "almost_active" || s == "almost-active") return BundleVariant::kAlmostActive;
  throw InvalidArgument("unknown bundle variant '" + std::string(s) + "'");
}

Bundle::Bundle(Vector prox_centre, double prox_param)
    : centre_(std::move(prox_centre)), r_(prox_param) {
  require(r_ > 0.0 && std::isfinite(r_), "prox parameter must be positive and finite");
  require(centre_.size() >= 1 && all_finite(centre_), "prox-centre must be a finite, nonempty vector");
}

bool Bundle::contains(int index) const {
  return std::any_of(elements_.begin(), elements_.end(),
                     [index](const BundleElement& e) { return e.index == index; });
}

const BundleElement& Bundle::at(int index) const {
  for (const auto& e : elements_)
    if (e.index == index) return e;
  throw InvalidArgument("bundle has no element with index " + std::to_string(index));
}

std::set<int> Bundle::indices() const {
  std::set<int> out;
  for (const auto& e : elements_) out.insert(e.index);
  return out;
}

void Bundle::insert(BundleElement element) {
  require(element.index >= kAggregateIndex, "bundle index must be >= -1");
  require(element.site.size() == centre_.size() && element.subgrad.size() == centre_.size(),
          "bundle element dimension mismatch");
  require(all_finite(element.site) && all_finite(element.subgrad) && std::isfinite(element.value),
          "bundle element must be finite");
  auto it = std::lower_bound(elements_.begin(), elements_.end(), element.index,
                             [](const BundleElement& e, int idx) { return e.index < idx; });
  if (it != elements_.end() && it->index == element.index) {
    *it = std::move(element);
  } else {
    elements_.insert(it, std::move(element));
  }
}

double tilt_tolerance(double f_z, double f_k, const Vector& g_tilde, const Vector& step_to_centre) {
  const double scale = std::abs(f_z) + std::abs(f_k) +
                       g_tilde.cwiseAbs().dot(step_to_centre.cwiseAbs());
  return 8.0 * std::numeric_limits<double>::epsilon() * scale;
}

std::pair<Vector, TiltReport> tilt_correct(const Vector& z, double f_z, const Vector& x_k, double f_k,
                                           const Vector& g_tilde) {
  require(z.size() == x_k.size() && z.size() == g_tilde.size(), "tilt_correct: dimension mismatch");
  require(all_finite(z) && all_finite(x_k) && all_finite(g_tilde) && std::isfinite(f_z) &&
              std::isfinite(f_k),
          "tilt_correct: non-finite input");

  const Vector d = z - x_k;
  const double dist2 = d.squaredNorm();
  if (dist2 == 0.0) {
    if (f_k != f_z) throw InvalidArgument("tilt_correct: oracle returned two values at the prox-centre");
    return {g_tilde, TiltReport{}};
  }

  TiltReport report;
  report.excess = f_k + g_tilde.dot(d) - f_z;
  if (report.excess <= tilt_tolerance(f_z, f_k, g_tilde, d)) return {g_tilde, report};

  // Projection of g_tilde onto {g : f_k + g'(z - x_k) = f(z)}.
  report.corrected = true;
  report.correction_norm = report.excess / std::sqrt(dist2);
  Vector g = g_tilde - (report.excess / dist2) * d;
  return {std::move(g), report};
}

ModelEvaluation eval_model(const Bundle& bundle, const Vector& x) {
  require(!bundle.empty(), "eval_model: empty bundle");
  require(x.size() == bundle.dimension() && all_finite(x), "eval_model: bad point");

  std::vector<double> planes;
  planes.reserve(bundle.size());
  for (const auto& e : bundle.elements()) planes.push_back(e.plane(x));

  ModelEvaluation out;
  out.value = *std::max_element(planes.begin(), planes.end());
  const auto& elems = bundle.elements();
  for (std::size_t i = 0; i < elems.size(); ++i) {
    if (planes[i] == out.value) out.argmax_indices.insert(elems[i].index);
    if (out.value < planes[i] + kNearActiveSlack) out.near_active_indices.insert(elems[i].index);
  }
  return out;
}

BundleElement make_aggregate(const Bundle& bundle, const Vector& x_next, double model_value) {
  BundleElement agg;
  agg.index = kAggregateIndex;
  agg.site = x_next;
  agg.value = model_value;
  agg.subgrad = bundle.prox_param() * (bundle.prox_centre() - x_next);
  return agg;
}

BundleElement make_aggregate(const Bundle& bundle, const Vector& x_next) {
  return make_aggregate(bundle, x_next, eval_model(bundle, x_next).value);
}

std::set<int> select_bundle(BundleVariant variant, const Bundle& /*bundle*/,
                            const ModelEvaluation& eval_at_next, int newest) {
  std::set<int> keep{kAggregateIndex, kCentreIndex, newest};
  switch (variant) {
    case BundleVariant::kThree:
      break;
    case BundleVariant::kFull:
      for (int i = 1; i <= newest; ++i) keep.insert(i);
      break;
    case BundleVariant::kActive:
      keep.insert(eval_at_next.argmax_indices.begin(), eval_at_next.argmax_indices.end());
      break;
    case BundleVariant::kAlmostActive:
      keep.insert(eval_at_next.near_active_indices.begin(), eval_at_next.near_active_indices.end());
      break;
  }
  return keep;
}

}  // namespace proxbundle
