#include "proxbundle/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include <fmt/format.h>

#include "proxbundle/prox_qp.hpp"
#include "proxbundle/rng.hpp"

namespace proxbundle {

void check_quadratic(const Quadratic& q) {
  const auto n = q.b.size();
  require(n >= 1 && q.A.rows() == n && q.A.cols() == n, "quadratic: dimension mismatch");
  require(q.A.allFinite() && q.b.allFinite() && std::isfinite(q.c), "quadratic: non-finite coefficients");
  const double asym = (q.A - q.A.transpose()).cwiseAbs().maxCoeff();
  require(asym <= 1e-12 * (1.0 + q.A.cwiseAbs().maxCoeff()), "quadratic: Hessian is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(q.A, Eigen::EigenvaluesOnly);
  require(eig.eigenvalues().minCoeff() >= -1e-10, "quadratic: Hessian is not positive semidefinite");
}

namespace {

std::vector<int> random_subset(Rng& rng, int universe, int count, const std::vector<int>& exclude = {}) {
  std::vector<int> pool;
  for (int i = 0; i < universe; ++i)
    if (std::find(exclude.begin(), exclude.end(), i) == exclude.end()) pool.push_back(i);
  // Partial Fisher-Yates.
  for (int j = 0; j < count; ++j) {
    const auto pick = j + static_cast<int>(rng.below(static_cast<std::uint64_t>(pool.size() - j)));
    std::swap(pool[j], pool[pick]);
  }
  pool.resize(count);
  return pool;
}

Matrix random_hessian(Rng& rng, int n, bool sparse) {
  Matrix B(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double entry = rng.normal();
      B(i, j) = (sparse && rng.uniform() < 0.95) ? 0.0 : entry;
    }
  Matrix A = B.transpose() * B;
  return 0.5 * (A + A.transpose());
}

// Upper bound on ||grad q_i|| over the ball of the given radius about z,
// using ||A||_2 <= ||A||_F.
double gradient_bound(const std::vector<Quadratic>& qs, const Vector& z, double radius) {
  double k = 0.0;
  for (const auto& q : qs) k = std::max(k, q.gradient(z).norm() + q.A.norm() * radius);
  return k;
}

}  // namespace

MaxQuadProblem generate_max_quad(const GeneratorParams& p) {
  require(p.n >= 1, "generate_max_quad: n must be >= 1");
  require(p.nf >= 1, "generate_max_quad: nf must be >= 1");
  require(p.nf_xstar >= 1 && p.nf_xstar <= p.nf, "generate_max_quad: need 1 <= nf_xstar <= nf");
  require(p.nf_z >= 1 && p.nf_z <= p.nf, "generate_max_quad: need 1 <= nf_z <= nf");
  require(p.r > 0.0 && std::isfinite(p.r), "generate_max_quad: r must be positive");

  Rng rng(p.seed);
  const int n = p.n;
  MaxQuadProblem prob;
  prob.r = p.r;
  prob.seed = p.seed;
  prob.sparse = p.sparse;

  // Prox-centre and a prox point at distance s in (0.1, 1).
  prob.z = rng.normal_vector(n);
  Vector d = rng.normal_vector(n);
  d /= d.norm();
  const double s = rng.uniform(0.1, 1.0);
  prob.x_star = prob.z + s * d;
  const Vector& xs = prob.x_star;

  // Gradients at x* for the designated pieces, combined with simplex weights
  // into r(z - x*).
  const std::vector<int> xstar_set = random_subset(rng, p.nf, p.nf_xstar);
  Vector weights(p.nf_xstar);
  for (int j = 0; j < p.nf_xstar; ++j) weights[j] = std::max(rng.uniform(), kWeightFloor);
  weights /= weights.sum();
  const Vector target = p.r * (prob.z - xs);
  std::vector<Vector> grads_at_xstar(p.nf);
  Vector partial = Vector::Zero(n);
  for (int j = 0; j + 1 < p.nf_xstar; ++j) {
    grads_at_xstar[xstar_set[j]] = rng.normal_vector(n);
    partial += weights[j] * grads_at_xstar[xstar_set[j]];
  }
  grads_at_xstar[xstar_set.back()] = (target - partial) / weights[p.nf_xstar - 1];

  prob.quadratics.resize(p.nf);
  for (int i = 0; i < p.nf; ++i) {
    const bool active = std::find(xstar_set.begin(), xstar_set.end(), i) != xstar_set.end();
    if (!active) grads_at_xstar[i] = rng.normal_vector(n);
    Quadratic& q = prob.quadratics[i];
    q.A = random_hessian(rng, n, p.sparse);
    q.b = grads_at_xstar[i] - q.A * xs;
    const double level = active ? 0.0 : -rng.uniform(kActivityMargin, 1.0);
    q.c = 0.0;
    q.c = level - q.value(xs);
    if (active) prob.active_at_xstar.insert(i);
  }

  // Activity at z: raise the chosen pieces to a common level above every other
  // piece by adding t * 0.5||x - x*||^2, which leaves value and gradient at x*
  // unchanged.
  std::vector<double> at_z(p.nf);
  for (int i = 0; i < p.nf; ++i) at_z[i] = prob.quadratics[i].value(prob.z);
  const int top = static_cast<int>(std::max_element(at_z.begin(), at_z.end()) - at_z.begin());
  std::vector<int> z_set{top};
  for (int i : random_subset(rng, p.nf, p.nf_z - 1, {top})) z_set.push_back(i);
  const double lifted = at_z[top] + 2.0 * kActivityMargin;
  const double bump_at_z = 0.5 * s * s;
  for (int i : z_set) {
    const double t = (lifted - at_z[i]) / bump_at_z;
    Quadratic& q = prob.quadratics[i];
    q.A.diagonal().array() += t;
    q.b -= t * xs;
    q.c += 0.5 * t * xs.squaredNorm();
    prob.active_at_z.insert(i);
  }

  // Lipschitz bound on the ball where the prox point must lie, refined once.
  const double k0 = gradient_bound(prob.quadratics, prob.z, 0.0);
  const double k1 = gradient_bound(prob.quadratics, prob.z, 2.0 * k0 / p.r);
  prob.lipschitz_bound = gradient_bound(prob.quadratics, prob.z, 2.0 * k1 / p.r);
  return prob;
}

double activity_tolerance(double value) { return 1e-10 * (1.0 + std::abs(value)); }

namespace {

// Below this many flops a thread team costs more than it saves.
constexpr long kParallelWork = 1L << 15;

MaxQuadEval summarize_pieces(const MaxQuadProblem& problem, const std::vector<double>& values,
                             const Vector& x) {
  MaxQuadEval out;
  out.value = *std::max_element(values.begin(), values.end());
  const double tol = activity_tolerance(out.value);
  for (int i = 0; i < static_cast<int>(values.size()); ++i)
    if (values[i] >= out.value - tol) out.active.insert(i);
  out.first_active_grad = problem.quadratics[*out.active.begin()].gradient(x);
  return out;
}

void check_point(const MaxQuadProblem& problem, const Vector& x) {
  require(x.size() == problem.dimension(), "eval_max_quad: dimension mismatch");
  require(all_finite(x), "eval_max_quad: non-finite point");
}

}  // namespace

MaxQuadEval eval_max_quad_serial(const MaxQuadProblem& problem, const Vector& x) {
  check_point(problem, x);
  std::vector<double> values(problem.quadratics.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = problem.quadratics[i].value(x);
  return summarize_pieces(problem, values, x);
}

MaxQuadEval eval_max_quad(const MaxQuadProblem& problem, const Vector& x) {
  check_point(problem, x);
  const int m = problem.count();
  const long n = problem.dimension();
  std::vector<double> values(m);
  const bool parallel = m > 1 && static_cast<long>(m) * n * n >= kParallelWork;
#pragma omp parallel for if (parallel) schedule(static)
  for (int i = 0; i < m; ++i) values[i] = problem.quadratics[i].value(x);
  return summarize_pieces(problem, values, x);
}

double max_quad_value(const MaxQuadProblem& problem, const Vector& x) {
  return eval_max_quad(problem, x).value;
}

CertificateReport verify_certificate(const MaxQuadProblem& p) {
  CertificateReport rep;
  auto fail = [&](std::string msg) {
    rep.ok = false;
    rep.failures.push_back(std::move(msg));
  };
  const int m = p.count();
  if (m < 1) {
    fail("no pieces");
    return rep;
  }
  if (p.active_at_xstar.empty() || static_cast<int>(p.active_at_xstar.size()) > m)
    fail("active_at_xstar size out of range");
  if (p.active_at_z.empty() || static_cast<int>(p.active_at_z.size()) > m) fail("active_at_z size out of range");
  for (const auto& q : p.quadratics) {
    try {
      check_quadratic(q);
    } catch (const InvalidArgument& e) {
      fail(e.what());
    }
  }
  if (!rep.ok) return rep;

  auto activity = [&](const Vector& x, const std::set<int>& designated, double& spread, double& margin,
                      const char* where) {
    double hi = -INFINITY, lo = INFINITY, outside = -INFINITY;
    for (int i = 0; i < m; ++i) {
      const double v = p.quadratics[i].value(x);
      if (designated.count(i)) {
        hi = std::max(hi, v);
        lo = std::min(lo, v);
      } else {
        outside = std::max(outside, v);
      }
    }
    spread = hi - lo;
    margin = hi - outside;
    if (spread > activity_tolerance(hi)) fail(fmt::format("designated pieces at {} differ by {:.3e}", where, spread));
    if (margin < kActivityMargin * (1.0 - 1e-9))
      fail(fmt::format("margin at {} is {:.3e} < {:.0e}", where, margin, kActivityMargin));
  };
  activity(p.x_star, p.active_at_xstar, rep.xstar_spread, rep.xstar_margin, "x_star");
  activity(p.z, p.active_at_z, rep.z_spread, rep.z_margin, "z");

  std::vector<Vector> grads;
  for (int i : p.active_at_xstar) grads.push_back(p.quadratics[i].gradient(p.x_star));
  rep.hull_distance = dist_to_hull(p.r * (p.z - p.x_star), grads);
  if (rep.hull_distance > 1e-10) fail(fmt::format("prox certificate hull distance {:.3e}", rep.hull_distance));
  return rep;
}

namespace {

struct DualPoint {
  Vector x;
  Vector piece_values;
  double dual = 0.0;
};

DualPoint lagrangian_minimizer(const MaxQuadProblem& p, const Vector& weights) {
  const int n = p.dimension();
  Matrix H = p.r * Matrix::Identity(n, n);
  Vector rhs = p.r * p.z;
  for (int i = 0; i < p.count(); ++i) {
    if (weights[i] == 0.0) continue;
    H += weights[i] * p.quadratics[i].A;
    rhs -= weights[i] * p.quadratics[i].b;
  }
  DualPoint out;
  out.x = H.llt().solve(rhs);
  out.piece_values.resize(p.count());
  for (int i = 0; i < p.count(); ++i) out.piece_values[i] = p.quadratics[i].value(out.x);
  out.dual = weights.dot(out.piece_values) + 0.5 * p.r * (out.x - p.z).squaredNorm();
  return out;
}

// Newton's method on the KKT system of min t + (r/2)||x - z||^2 subject to
// q_i(x) = t on `support`. Accepts only a verified optimum: nonnegative
// weights and every piece off the support at or below t.
std::optional<Vector> newton_on_support(const MaxQuadProblem& p, std::vector<int> support, Vector x,
                                        const Vector& weights_guess) {
  const int n = p.dimension();
  // Active-set loop: drop a piece with negative weight, or add the most
  // violated piece, then re-solve.
  for (int attempt = 0; attempt < 2 * p.count() + 4 && !support.empty(); ++attempt) {
    const int s = static_cast<int>(support.size());
    Vector mu(s);
    for (int a = 0; a < s; ++a) mu[a] = std::max(weights_guess[support[a]], 1e-3);
    mu /= mu.sum();
    double t = p.quadratics[support[0]].value(x);
    Vector xk = x;
    bool converged = false;
    for (int it = 0; it < 50; ++it) {
      Matrix H = p.r * Matrix::Identity(n, n);
      Vector stationarity = p.r * (xk - p.z);
      Matrix J = Matrix::Zero(n + s + 1, n + s + 1);
      Vector F(n + s + 1);
      double grad_scale = 0.0;
      for (int a = 0; a < s; ++a) {
        const Quadratic& q = p.quadratics[support[a]];
        const Vector g = q.gradient(xk);
        grad_scale = std::max(grad_scale, g.norm());
        H += mu[a] * q.A;
        stationarity += mu[a] * g;
        J.block(0, n + a, n, 1) = g;
        J.block(n + a, 0, 1, n) = g.transpose();
        J(n + a, n + s) = -1.0;
        F[n + a] = q.value(xk) - t;
        J(n + s, n + a) = 1.0;
      }
      J.topLeftCorner(n, n) = H;
      F.head(n) = stationarity;
      F[n + s] = mu.sum() - 1.0;
      // Rounding floor of the residual: values, the prox term and the
      // individual gradients all enter F.
      const double scale = 1.0 + std::abs(t) + p.r * (xk - p.z).norm() + grad_scale;
      if (F.lpNorm<Eigen::Infinity>() <= 1e-12 * scale) {
        converged = true;
        break;
      }
      const Vector delta = J.completeOrthogonalDecomposition().solve(-F);
      if (!delta.allFinite()) break;
      xk += delta.head(n);
      mu += delta.segment(n, s);
      t += delta[n + s];
    }
    if (!converged) return std::nullopt;

    // Drop a piece whose weight went negative and retry.
    Eigen::Index worst;
    if (mu.minCoeff(&worst) < -1e-12) {
      support.erase(support.begin() + worst);
      x = xk;
      continue;
    }
    const double tol = activity_tolerance(t) + 1e-12;
    int most_violated = -1;
    double worst_excess = tol;
    for (int i = 0; i < p.count(); ++i) {
      const double excess = p.quadratics[i].value(xk) - t;
      if (excess > worst_excess) {
        worst_excess = excess;
        most_violated = i;
      }
    }
    if (most_violated < 0) return xk;
    support.push_back(most_violated);
    x = xk;
  }
  return std::nullopt;
}

}  // namespace

Vector compute_prox(const MaxQuadProblem& p) {
  const int m = p.count();
  require(m >= 1 && p.z.size() >= 1 && p.r > 0.0, "compute_prox: invalid problem");

  // Projected gradient ascent on the concave dual over piece weights, with
  // backtracking on the step and periodic attempts to finish with Newton on
  // the pieces that look active.
  Vector weights = Vector::Constant(m, 1.0 / m);
  DualPoint cur = lagrangian_minimizer(p, weights);
  double step = 1.0;
  for (int it = 0; it < 20000; ++it) {
    const double hi = cur.piece_values.maxCoeff();
    const double gap = hi - weights.dot(cur.piece_values);
    if (it % 10 == 0 || gap <= 1e-14 * (1.0 + std::abs(hi))) {
      for (double band : {1e-9, 1e-7, 1e-5, 1e-4, 5e-4}) {
        std::vector<int> support;
        for (int i = 0; i < m; ++i)
          if (cur.piece_values[i] >= hi - band * (1.0 + std::abs(hi))) support.push_back(i);
        if (auto x = newton_on_support(p, support, cur.x, weights)) return *x;
      }
      if (gap <= 1e-14 * (1.0 + std::abs(hi))) return cur.x;
    }
    for (;;) {
      Vector trial_w = project_simplex(weights + step * cur.piece_values);
      DualPoint trial = lagrangian_minimizer(p, trial_w);
      const Vector dw = trial_w - weights;
      if (trial.dual >= cur.dual + cur.piece_values.dot(dw) - 0.5 / step * dw.squaredNorm() - 1e-15) {
        weights = std::move(trial_w);
        cur = std::move(trial);
        step *= 1.5;
        break;
      }
      step *= 0.5;
      if (step < 1e-300) throw SolveFailure("compute_prox: dual ascent stalled");
    }
  }
  throw SolveFailure("compute_prox: no verified optimum after 20000 dual steps");
}

Vector reference_prox(const MaxQuadProblem& p) {
  Vector x = compute_prox(p);
  if (p.x_star.size() == x.size()) {
    const double gap = (x - p.x_star).norm();
    if (gap > 1e-5)
      throw SolveFailure(fmt::format("reference prox disagrees with generator x_star by {:.3e}", gap));
  }
  return x;
}

}  // namespace proxbundle
