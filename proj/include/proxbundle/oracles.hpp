#pragma once

#include <functional>
#include <utility>

#include "proxbundle/problems.hpp"
#include "proxbundle/rng.hpp"
#include "proxbundle/test_functions.hpp"
#include "proxbundle/types.hpp"

namespace proxbundle {

/// Exact value plus an approximate subgradient claimed to lie within
/// eps_declared of the subdifferential.
struct OracleResponse {
  double value = 0.0;
  Vector subgrad_approx;
  double eps_declared = 0.0;
};

/// Interface consumed by the solver. Implementations may hold state (an RNG
/// stream); one instance must not be shared by concurrent runs.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual OracleResponse query(const Vector& x) = 0;
  virtual double declared_eps() const = 0;
};

/// Adapts any callable returning OracleResponse.
class CallableOracle final : public Oracle {
 public:
  CallableOracle(std::function<OracleResponse(const Vector&)> fn, double eps)
      : fn_(std::move(fn)), eps_(eps) {}
  OracleResponse query(const Vector& x) override { return fn_(x); }
  double declared_eps() const override { return eps_; }

 private:
  std::function<OracleResponse(const Vector&)> fn_;
  double eps_;
};

/// radius * u^(1/n) * w / ||w||: uniform in the open n-ball.
Vector sample_ball(Rng& rng, int n, double radius);

/// Gradient of the lowest-index active piece plus uniform noise in the eps-ball.
OracleResponse ball_noise_oracle(const MaxQuadProblem& problem, double eps, Rng& rng, const Vector& x);

using ValueFunction = std::function<double(const Vector&)>;

/// Default finite-difference step 1e-5 (1 + ||x||).
double default_simplex_delta(const Vector& x);

/// Forward simplex gradient on the canonical simplex {x, x + delta e_j}.
/// With `known_nonconstant`, a delta that makes every difference vanish is
/// rejected.
OracleResponse simplex_gradient_oracle(const ValueFunction& f, const Vector& x, double delta,
                                       double eps_declared = 0.0, bool known_nonconstant = false);

/// Exact subgradient of the first active piece.
class MaxQuadExactOracle final : public Oracle {
 public:
  explicit MaxQuadExactOracle(const MaxQuadProblem& problem) : problem_(&problem) {}
  OracleResponse query(const Vector& x) override;
  double declared_eps() const override { return 0.0; }

 private:
  const MaxQuadProblem* problem_;
};

class BallNoiseOracle final : public Oracle {
 public:
  BallNoiseOracle(const MaxQuadProblem& problem, double eps, std::uint64_t seed)
      : problem_(&problem), eps_(eps), rng_(seed) {}
  OracleResponse query(const Vector& x) override { return ball_noise_oracle(*problem_, eps_, rng_, x); }
  double declared_eps() const override { return eps_; }

 private:
  const MaxQuadProblem* problem_;
  double eps_;
  Rng rng_;
};

/// Simplex-gradient oracle over a value-only function. `delta` <= 0 selects
/// default_simplex_delta at each query point.
class SimplexGradientOracle final : public Oracle {
 public:
  SimplexGradientOracle(ValueFunction f, double eps_declared, double delta = 0.0)
      : f_(std::move(f)), eps_(eps_declared), delta_(delta) {}
  OracleResponse query(const Vector& x) override;
  double declared_eps() const override { return eps_; }

 private:
  ValueFunction f_;
  double eps_;
  double delta_;
};

ValueFunction value_function(const MaxQuadProblem& problem);
ValueFunction value_function(TestFunction f);

}  // namespace proxbundle
