#include "proxbundle/oracles.hpp"

#include <cmath>

namespace proxbundle {

Vector sample_ball(Rng& rng, int n, double radius) {
  require(n >= 1, "sample_ball: n must be >= 1");
  require(radius >= 0.0 && std::isfinite(radius), "sample_ball: radius must be >= 0");
  if (radius == 0.0) return Vector::Zero(n);
  Vector w = rng.normal_vector(n);
  const double norm = w.norm();
  const double u = rng.uniform();
  return (radius * std::pow(u, 1.0 / n) / norm) * w;
}

OracleResponse ball_noise_oracle(const MaxQuadProblem& problem, double eps, Rng& rng, const Vector& x) {
  require(eps >= 0.0 && std::isfinite(eps), "ball_noise_oracle: eps must be >= 0");
  MaxQuadEval ev = eval_max_quad(problem, x);
  OracleResponse out;
  out.value = ev.value;
  out.subgrad_approx = std::move(ev.first_active_grad);
  if (eps > 0.0) out.subgrad_approx += sample_ball(rng, problem.dimension(), eps);
  out.eps_declared = eps;
  return out;
}

double default_simplex_delta(const Vector& x) { return 1e-5 * (1.0 + x.norm()); }

OracleResponse simplex_gradient_oracle(const ValueFunction& f, const Vector& x, double delta,
                                       double eps_declared, bool known_nonconstant) {
  require(delta > 0.0 && std::isfinite(delta), "simplex_gradient_oracle: delta must be positive");
  require(all_finite(x), "simplex_gradient_oracle: non-finite point");
  OracleResponse out;
  out.value = f(x);
  out.eps_declared = eps_declared;
  out.subgrad_approx.resize(x.size());
  bool all_zero = true;
  Vector probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    probe[j] = x[j] + delta;
    const double diff = f(probe) - out.value;
    probe[j] = x[j];
    all_zero = all_zero && diff == 0.0;
    out.subgrad_approx[j] = diff / delta;
  }
  if (known_nonconstant && all_zero)
    throw InvalidArgument("simplex_gradient_oracle: delta too small, every difference vanished");
  return out;
}

OracleResponse MaxQuadExactOracle::query(const Vector& x) {
  MaxQuadEval ev = eval_max_quad(*problem_, x);
  return OracleResponse{ev.value, std::move(ev.first_active_grad), 0.0};
}

OracleResponse SimplexGradientOracle::query(const Vector& x) {
  const double delta = delta_ > 0.0 ? delta_ : default_simplex_delta(x);
  return simplex_gradient_oracle(f_, x, delta, eps_);
}

ValueFunction value_function(const MaxQuadProblem& problem) {
  return [&problem](const Vector& x) { return max_quad_value(problem, x); };
}

ValueFunction value_function(TestFunction f) {
  return [f](const Vector& x) { return eval_test_function(f, x); };
}

}  // namespace proxbundle
