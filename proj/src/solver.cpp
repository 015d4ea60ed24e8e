#include "proxbundle/solver.hpp"

#include <cmath>
#include <map>
#include <optional>
#include <sstream>

#include "proxbundle/prox_qp.hpp"

namespace proxbundle {

namespace {

constexpr double kAnchorTol = 1e-10;
constexpr double kMeritTol = 1e-8;
constexpr double kRecombinationTol = 1e-12;

OracleResponse checked_query(Oracle& oracle, const Vector& x, int n) {
  OracleResponse out = oracle.query(x);
  if (!std::isfinite(out.value)) throw InvalidArgument("oracle returned a non-finite value");
  if (out.subgrad_approx.size() != n) throw InvalidArgument("oracle returned a subgradient of the wrong size");
  if (!all_finite(out.subgrad_approx)) throw InvalidArgument("oracle returned a non-finite subgradient");
  return out;
}

// r(z - x) should equal G lambda. The comparison scale includes r||z|| because
// forming z - x cancels digits of that size.
double recombination_residual(const Bundle& bundle, const Vector& lambda, const Vector& x_next) {
  const double r = bundle.prox_param();
  Vector g_lambda = Vector::Zero(bundle.dimension());
  const auto& elems = bundle.elements();
  for (std::size_t i = 0; i < elems.size(); ++i) g_lambda += lambda[static_cast<Eigen::Index>(i)] * elems[i].subgrad;
  const Vector lhs = r * (bundle.prox_centre() - x_next);
  const double scale = 1.0 + g_lambda.norm() + r * bundle.prox_centre().norm() + r * x_next.norm();
  return (lhs - g_lambda).norm() / scale;
}

// Previous weights carried over by index; indices new to the bundle get the
// uniform weight 1/m before renormalizing.
Vector warm_start(const Bundle& bundle, const std::map<int, double>& previous) {
  const auto m = static_cast<Eigen::Index>(bundle.size());
  Vector w(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto it = previous.find(bundle.elements()[static_cast<std::size_t>(i)].index);
    w[i] = it != previous.end() ? it->second : 1.0 / static_cast<double>(m);
  }
  const double total = w.sum();
  if (!(total > 0.0)) return Vector::Constant(m, 1.0 / static_cast<double>(m));
  return w / total;
}

template <typename... Args>
std::string describe(Args&&... args) {
  std::ostringstream os;
  os.precision(17);
  (os << ... << args);
  return os.str();
}

}  // namespace

std::string_view to_string(StopReason reason) {
  return reason == StopReason::kToleranceMet ? "tolerance_met" : "iteration_cap";
}

bool stopping_test(double f_next, double model_value, double r, double s_tol) {
  return (f_next - model_value) / r <= s_tol * s_tol;
}

double error_bound(double model_gap, double eps, double r) {
  const double radicand = (std::max(0.0, model_gap) + eps * eps / (4.0 * r)) / r;
  return std::sqrt(radicand) + eps / (2.0 * r);
}

SolveResult run(Oracle& oracle, const SolverConfig& config) {
  const Vector& z = config.z;
  const int n = static_cast<int>(z.size());
  require(n >= 1, "solver: empty prox-centre");
  require(all_finite(z), "solver: non-finite prox-centre");
  require(config.r > 0.0 && std::isfinite(config.r), "solver: r must be positive");
  require(config.s_tol >= 0.0 && std::isfinite(config.s_tol), "solver: s_tol must be >= 0");
  require(config.eps >= 0.0 && std::isfinite(config.eps), "solver: eps must be >= 0");
  const double r = config.r;
  const int max_iterations = config.max_iterations > 0 ? config.max_iterations : 100 * n;

  SolveResult result;

  // Initialization: x_0 = z, B_0 = {0}.
  const OracleResponse at_centre = checked_query(oracle, z, n);
  const double f_z = at_centre.value;
  result.f_centre = f_z;
  Bundle bundle(z, r);
  bundle.insert(BundleElement{kCentreIndex, z, f_z, at_centre.subgrad_approx});

  Vector x_k = z;
  std::optional<double> previous_merit;
  std::map<int, double> previous_lambda;

  auto violation = [&](std::string text) {
    if (config.check_invariants) result.violations.push_back(std::move(text));
  };

  for (int k = 0;; ++k) {
    std::optional<Vector> warm;
    if (!previous_lambda.empty()) warm = warm_start(bundle, previous_lambda);
    const ProxResult prox = prox_of_model(bundle, config.qp_tol, warm);
    const Vector& x_next = prox.x_next;
    const ModelEvaluation model_next = eval_model(bundle, x_next);
    const OracleResponse response = checked_query(oracle, x_next, n);

    IterationRecord rec;
    rec.k = k;
    if (config.record_trace) rec.x_next = x_next;
    rec.model_value = model_next.value;
    rec.merit = model_next.value + 0.5 * r * (z - x_next).squaredNorm();
    rec.gap = (response.value - model_next.value) / r;
    rec.bundle_size = static_cast<int>(bundle.size());
    rec.f_next = response.value;
    rec.step = (x_next - x_k).norm();
    rec.kkt_residual = prox.kkt_residual;
    rec.qp_iterations = prox.qp_iterations;

    if (config.check_invariants) {
      rec.model_at_centre = eval_model(bundle, z).value;
      if (std::abs(rec.model_at_centre - f_z) > kAnchorTol * (1.0 + std::abs(f_z)))
        violation(describe("anchoring at k=", k, ": phi(z)=", rec.model_at_centre, " f(z)=", f_z));
      if (rec.merit > f_z + kMeritTol)
        violation(describe("merit above f(z) at k=", k, ": ", rec.merit, " > ", f_z));
      if (previous_merit && rec.merit < *previous_merit + 0.5 * r * rec.step * rec.step - kMeritTol)
        violation(describe("merit decrease at k=", k, ": ", *previous_merit, " -> ", rec.merit));
      rec.recombination_residual = recombination_residual(bundle, prox.lambda, x_next);
      if (rec.recombination_residual > kRecombinationTol)
        violation(describe("recombination residual at k=", k, ": ", rec.recombination_residual));
    }

    result.iterations = k + 1;
    result.x_out = x_next;
    result.final_gap = response.value - model_next.value;

    const bool stop = stopping_test(response.value, model_next.value, r, config.s_tol);
    const bool capped = !stop && result.iterations >= max_iterations;
    if (stop || capped) {
      if (config.record_trace) result.trace.push_back(std::move(rec));
      result.stop_reason = stop ? StopReason::kToleranceMet : StopReason::kIterationCap;
      break;
    }

    // Update: repair the new plane, install the aggregate, keep the selected
    // old elements and add the new one.
    const int newest = k + 1;
    auto [g, tilt] = tilt_correct(z, f_z, x_next, response.value, response.subgrad_approx);
    rec.tilt_corrected = tilt.corrected;
    if (tilt.corrected) ++result.tilt_corrections;

    const std::set<int> keep = select_bundle(config.variant, bundle, model_next, newest);
    Bundle next(z, r);
    next.insert(make_aggregate(bundle, x_next, model_next.value));
    for (const auto& e : bundle.elements())
      if (e.index != kAggregateIndex && keep.count(e.index)) next.insert(e);
    next.insert(BundleElement{newest, x_next, response.value, std::move(g)});

    previous_lambda.clear();
    for (std::size_t i = 0; i < bundle.size(); ++i)
      previous_lambda[bundle.elements()[i].index] = prox.lambda[static_cast<Eigen::Index>(i)];
    // The old aggregate is replaced; its weight does not describe the new one.
    previous_lambda.erase(kAggregateIndex);

    bundle = std::move(next);
    previous_merit = rec.merit;
    x_k = x_next;
    if (config.record_trace) result.trace.push_back(std::move(rec));
  }

  result.error_bound = error_bound(result.final_gap, config.eps, r);
  return result;
}

}  // namespace proxbundle
