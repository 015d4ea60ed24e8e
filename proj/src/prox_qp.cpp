#include "proxbundle/prox_qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

namespace proxbundle {

Vector project_simplex(const Vector& v) {
  const Eigen::Index m = v.size();
  require(m >= 1, "project_simplex: empty vector");
  require(all_finite(v), "project_simplex: non-finite input");

  std::vector<double> u(v.data(), v.data() + m);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double tau = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    cumsum += u[j];
    const double candidate = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) tau = candidate;
  }
  Vector out = (v.array() - tau).max(0.0).matrix();
  const double s = out.sum();
  if (s > 0.0) out /= s;
  return out;
}

namespace {

double kkt_residual(const Vector& lambda, const Vector& grad) {
  const double m = grad.minCoeff();
  const double gap = lambda.dot(grad) - m;
  const double slack = (lambda.array() * (grad.array() - m)).maxCoeff();
  return std::max(0.0, gap) + std::max(0.0, slack);
}

double objective(const Matrix& Q, const Vector& c, const Vector& lambda) {
  return 0.5 * lambda.dot(Q * lambda) - c.dot(lambda);
}

double largest_eigenvalue(const Matrix& Q) {
  const Eigen::Index m = Q.rows();
  if (m == 1) return std::max(0.0, Q(0, 0));
  // Q is PSD: start from a vector with no sign cancellation.
  Vector v = Vector::Ones(m) / std::sqrt(static_cast<double>(m));
  double estimate = 0.0;
  for (int it = 0; it < 100; ++it) {
    Vector w = Q * v;
    const double norm = w.norm();
    if (norm == 0.0) return Q.diagonal().maxCoeff();
    const double next = v.dot(w);
    v = w / norm;
    if (std::abs(next - estimate) <= 1e-6 * std::abs(next)) {
      estimate = next;
      break;
    }
    estimate = next;
  }
  // Power iteration approaches from below; the diagonal bounds the top from
  // below too, and the trace from above.
  return std::clamp(1.05 * estimate, Q.diagonal().maxCoeff(), std::max(Q.trace(), 0.0));
}

// Active-set method on the simplex. With Q = B'B, the support S is kept
// affinely independent: the augmented columns (b_i, w) for i in S stay
// linearly independent, so every face system below is nonsingular.
// Independence is tested on their Gram matrix Q_SS + w^2 11'.
//
// Each round solves for the minimizer on the face spanned by S, steps back
// to the boundary when that minimizer is infeasible, and otherwise brings in
// the index with the most negative reduced gradient. An entering index whose
// column depends on S is exchanged along the dependency, which leaves B l
// fixed and lowers the objective linearly.
std::optional<Vector> polish(const Matrix& Q, const Vector& c, const Vector& start, double tol_kkt) {
  const Eigen::Index m = Q.rows();
  const double w2 = Q.diagonal().maxCoeff() > 0.0 ? Q.diagonal().maxCoeff() : 1.0;
  const double scale = 1.0 + Q.cwiseAbs().maxCoeff() + c.cwiseAbs().maxCoeff();
  // Relative squared distance of a column from the span of the support.
  // Rounding in the Gram solve reaches ~1e-11 on bundles with condition
  // numbers near 1e5, so the test sits above that.
  constexpr double kDependence = 1e-12;

  std::vector<Eigen::Index> support;
  // Coefficients expressing column j through the support, if it depends on it.
  auto dependency = [&](Eigen::Index j, bool force = false) -> std::optional<Vector> {
    const auto s = static_cast<Eigen::Index>(support.size());
    const double gjj = Q(j, j) + w2;
    if (s == 0) return std::nullopt;
    Matrix gram(s, s);
    Vector rhs(s);
    for (Eigen::Index a = 0; a < s; ++a) {
      for (Eigen::Index b = 0; b < s; ++b) gram(a, b) = Q(support[a], support[b]) + w2;
      rhs[a] = Q(support[a], j) + w2;
    }
    const Vector coef = gram.ldlt().solve(rhs);
    const double schur = gjj - rhs.dot(coef);
    if (!force && schur > kDependence * gjj) return std::nullopt;
    return coef;
  };

  // Independent support from the start point, heaviest weights first.
  std::vector<Eigen::Index> order;
  for (Eigen::Index i = 0; i < m; ++i)
    if (start[i] > 0.0) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return start[a] > start[b]; });
  for (Eigen::Index i : order)
    if (!dependency(i)) support.push_back(i);
  if (support.empty()) return std::nullopt;
  Vector lambda = Vector::Zero(m);
  for (Eigen::Index i : support) lambda[i] = start[i];
  lambda /= lambda.sum();

  auto drop_zeros = [&]() {
    support.erase(std::remove_if(support.begin(), support.end(), [&](Eigen::Index i) { return lambda[i] <= 0.0; }),
                  support.end());
  };

  // Moves weight t onto `entering` and t * coef off the support, as far as
  // the first support weight reaching zero.
  auto exchange = [&](Eigen::Index entering, const Vector& coef) {
    double t = std::numeric_limits<double>::infinity();
    Eigen::Index leaving = -1;
    for (std::size_t a = 0; a < support.size(); ++a) {
      if (coef[a] > 0.0 && lambda[support[a]] / coef[a] < t) {
        t = lambda[support[a]] / coef[a];
        leaving = support[a];
      }
    }
    if (leaving < 0) return false;
    for (std::size_t a = 0; a < support.size(); ++a) lambda[support[a]] -= t * coef[a];
    lambda[leaving] = 0.0;
    lambda[entering] = t;
    lambda = lambda.cwiseMax(0.0);
    lambda /= lambda.sum();
    drop_zeros();
    return true;
  };

  Eigen::Index just_entered = -1;
  const int max_rounds = 10 * static_cast<int>(m) + 50;
  for (int round = 0; round < max_rounds; ++round) {
    const auto s = static_cast<Eigen::Index>(support.size());
    Matrix K = Matrix::Zero(s + 1, s + 1);
    Vector rhs(s + 1);
    for (Eigen::Index a = 0; a < s; ++a) {
      for (Eigen::Index b = 0; b < s; ++b) K(a, b) = Q(support[a], support[b]);
      K(a, s) = 1.0;
      K(s, a) = 1.0;
      rhs[a] = c[support[a]];
    }
    rhs[s] = 1.0;
    const Vector sol = K.fullPivLu().solve(rhs);
    if (!sol.allFinite()) return std::nullopt;
    // A residual means the support slipped past the independence test. The
    // index that just entered is then exchanged as if dependent; otherwise
    // the lightest member is shed. Face residuals feed the KKT residual
    // almost one for one, hence the tie to tol_kkt.
    if ((K * sol - rhs).lpNorm<Eigen::Infinity>() > std::max(0.1 * tol_kkt, 1e-14 * scale)) {
      if (s == 1) return std::nullopt;
      if (just_entered >= 0 && support.back() == just_entered) {
        const Eigen::Index entry = just_entered;
        support.pop_back();
        just_entered = -1;
        lambda[entry] = 0.0;
        if (!exchange(entry, *dependency(entry, true))) return std::nullopt;
        support.push_back(entry);
        continue;
      }
      auto lightest = std::min_element(support.begin(), support.end(),
                                       [&](Eigen::Index a, Eigen::Index b) { return lambda[a] < lambda[b]; });
      lambda[*lightest] = 0.0;
      support.erase(lightest);
      lambda /= lambda.sum();
      continue;
    }
    just_entered = -1;

    // Step back to the boundary if the face minimizer is infeasible.
    double step = 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index a = 0; a < s; ++a) {
      const Eigen::Index i = support[a];
      if (sol[a] < 0.0) {
        const double t = lambda[i] / (lambda[i] - sol[a]);
        if (t < step) {
          step = t;
          blocking = i;
        }
      }
    }
    if (blocking >= 0) {
      for (Eigen::Index a = 0; a < s; ++a) {
        const Eigen::Index i = support[a];
        lambda[i] += step * (sol[a] - lambda[i]);
      }
      lambda[blocking] = 0.0;
      lambda = lambda.cwiseMax(0.0);
      lambda /= lambda.sum();
      drop_zeros();
      if (support.empty()) return std::nullopt;
      continue;
    }
    for (Eigen::Index a = 0; a < s; ++a) lambda[support[a]] = sol[a];
    lambda /= lambda.sum();

    Vector grad = -c;
    for (Eigen::Index i : support) grad += lambda[i] * Q.col(i);
    const double level = lambda.dot(grad);
    Eigen::Index entering = -1;
    double most_negative = -1e-14 * scale;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (lambda[i] > 0.0 || std::find(support.begin(), support.end(), i) != support.end()) continue;
      const double reduced = grad[i] - level;
      if (reduced < most_negative) {
        most_negative = reduced;
        entering = i;
      }
    }
    if (entering < 0) return lambda;

    if (auto coef = dependency(entering)) {
      if (!exchange(entering, *coef)) return std::nullopt;
    }
    support.push_back(entering);
    just_entered = entering;
  }
  return std::nullopt;
}

}  // namespace

SimplexQpResult solve_simplex_qp(const Matrix& Q, const Vector& c, const std::optional<Vector>& warm_start,
                                 const SimplexQpOptions& options) {
  const Eigen::Index m = c.size();
  require(m >= 1, "solve_simplex_qp: empty problem");
  require(Q.rows() == m && Q.cols() == m, "solve_simplex_qp: Q must be m x m");
  require(Q.allFinite() && c.allFinite(), "solve_simplex_qp: non-finite data");

  const double tol = options.tol_kkt > 0.0 ? options.tol_kkt
                                           : 1e-10 * (1.0 + c.lpNorm<Eigen::Infinity>());
  SimplexQpResult result;

  const double lipschitz = largest_eigenvalue(Q);
  if (lipschitz <= 0.0) {
    // Linear objective: any maximizer of c, lowest index on ties.
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < m; ++i)
      if (c[i] > c[best]) best = i;
    result.lambda = Vector::Zero(m);
    result.lambda[best] = 1.0;
    result.kkt_residual = kkt_residual(result.lambda, Q * result.lambda - c);
    return result;
  }

  Vector lambda = warm_start && warm_start->size() == m ? project_simplex(*warm_start)
                                                        : Vector::Constant(m, 1.0 / static_cast<double>(m));

  auto finish = [&](Vector l, int iterations) {
    result.kkt_residual = kkt_residual(l, Q * l - c);
    result.lambda = std::move(l);
    result.iterations = iterations;
    return result.kkt_residual <= tol;
  };
  auto try_polish = [&](const Vector& from, int iterations) {
    if (auto refined = polish(Q, c, from, tol)) {
      if (objective(Q, c, *refined) <= objective(Q, c, from) + 1e-14 * (1.0 + std::abs(objective(Q, c, from))))
        return finish(std::move(*refined), iterations);
    }
    return false;
  };

  if (try_polish(lambda, 0)) return result;

  const double step = 1.0 / lipschitz;
  Vector y = lambda;
  double t = 1.0;
  double best_kkt = kkt_residual(lambda, Q * lambda - c);
  Vector best = lambda;
  for (int it = 1; it <= options.max_iterations; ++it) {
    const Vector grad_y = Q * y - c;
    Vector next = project_simplex(y - step * grad_y);
    // Gradient-based adaptive restart.
    if ((y - next).dot(next - lambda) > 0.0) {
      t = 1.0;
      y = next;
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = next + ((t - 1.0) / t_next) * (next - lambda);
      t = t_next;
    }
    lambda = std::move(next);

    if (it % 20 == 0) {
      const double kkt = kkt_residual(lambda, Q * lambda - c);
      if (kkt < best_kkt) {
        best_kkt = kkt;
        best = lambda;
      }
      if (kkt <= tol) {
        finish(lambda, it);
        return result;
      }
      if (it % 100 == 0 && try_polish(lambda, it)) return result;
    }
  }
  finish(best, options.max_iterations);
  throw SolveFailure(fmt::format("simplex QP: KKT residual {:.3e} above tolerance {:.3e} after {} iterations",
                                 result.kkt_residual, tol, options.max_iterations));
}

DualQP DualQP::from_bundle(const Bundle& bundle) {
  require(!bundle.empty(), "prox_of_model: empty bundle");
  const auto& elems = bundle.elements();
  DualQP qp;
  qp.r = bundle.prox_param();
  qp.G.resize(bundle.dimension(), static_cast<Eigen::Index>(elems.size()));
  qp.e.resize(static_cast<Eigen::Index>(elems.size()));
  for (std::size_t i = 0; i < elems.size(); ++i) {
    qp.G.col(static_cast<Eigen::Index>(i)) = elems[i].subgrad;
    qp.e[static_cast<Eigen::Index>(i)] = elems[i].plane(bundle.prox_centre());
  }
  return qp;
}

ProxResult prox_of_model(const Bundle& bundle, double tol_kkt, const std::optional<Vector>& warm_start) {
  const DualQP qp = DualQP::from_bundle(bundle);
  const Matrix Q = (qp.G.transpose() * qp.G) / qp.r;

  SimplexQpOptions options;
  options.tol_kkt = tol_kkt;
  SimplexQpResult dual = solve_simplex_qp(Q, qp.e, warm_start, options);

  ProxResult out;
  out.x_next = bundle.prox_centre() - (qp.G * dual.lambda) / qp.r;
  out.lambda = std::move(dual.lambda);
  out.kkt_residual = dual.kkt_residual;
  out.qp_iterations = dual.iterations;
  return out;
}

double dist_to_hull(const Vector& g, const std::vector<Vector>& points) {
  require(!points.empty(), "dist_to_hull: empty point set");
  Matrix V(g.size(), static_cast<Eigen::Index>(points.size()));
  for (std::size_t j = 0; j < points.size(); ++j) {
    require(points[j].size() == g.size(), "dist_to_hull: dimension mismatch");
    V.col(static_cast<Eigen::Index>(j)) = points[j];
  }
  const Matrix Q = V.transpose() * V;
  const Vector c = V.transpose() * g;
  SimplexQpOptions options;
  options.tol_kkt = 1e-13 * (1.0 + Q.diagonal().maxCoeff() + g.squaredNorm());
  const SimplexQpResult res = solve_simplex_qp(Q, c, std::nullopt, options);
  return (g - V * res.lambda).norm();
}

}  // namespace proxbundle
