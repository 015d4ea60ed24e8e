#include <doctest.h>

#include <cmath>

#include "proxbundle/prox_qp.hpp"
#include "support.hpp"

using namespace proxbundle;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Bundle abs_model(double z) {
  // |x| = max{x, -x}, encoded by its planes at +1 and -1.
  Bundle b(vec({z}), 1.0);
  b.insert({0, vec({1}), 1.0, vec({1})});
  b.insert({1, vec({-1}), 1.0, vec({-1})});
  return b;
}

double soft_threshold(double z, double r) { return std::copysign(std::max(std::abs(z) - 1.0 / r, 0.0), z); }

}  // namespace

TEST_CASE("project_simplex examples") {
  CHECK(project_simplex(vec({0.2, 0.3, 0.5})).isApprox(vec({0.2, 0.3, 0.5})));
  CHECK(project_simplex(vec({2, 0})).isApprox(vec({1, 0})));
  CHECK(project_simplex(vec({0.6, 0.6})).isApprox(vec({0.5, 0.5})));
  CHECK_THROWS_AS(project_simplex(Vector(0)), InvalidArgument);
}

TEST_CASE("project_simplex satisfies its optimality conditions") {
  Rng rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng.below(12));
    const Vector v = rng.normal_vector(m) * 3;
    const Vector p = project_simplex(v);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-14);
    CHECK(p.minCoeff() >= 0.0);
    // There is a tau with p_i = max(v_i - tau, 0).
    double tau = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
      if (p[i] > 0) tau = v[i] - p[i];
    for (Eigen::Index i = 0; i < m; ++i) {
      if (p[i] > 0)
        CHECK(v[i] - p[i] == doctest::Approx(tau).epsilon(1e-12).scale(1.0));
      else
        CHECK(v[i] <= tau + 1e-12);
    }
  }
}

TEST_CASE("prox of a single plane is a gradient step") {
  Bundle b(vec({1, 2}), 2.0);
  b.insert({0, vec({1, 2}), 0.0, vec({4, -2})});
  const ProxResult res = prox_of_model(b);
  CHECK(res.lambda.size() == 1);
  CHECK(res.lambda[0] == 1.0);
  CHECK(res.x_next.isApprox(vec({-1, 3})));
}

TEST_CASE("prox of |x| matches soft thresholding") {
  for (double z : {-3.0, -0.5, 0.0, 0.7, 3.0}) {
    const ProxResult res = prox_of_model(abs_model(z));
    CHECK(std::abs(res.x_next[0] - soft_threshold(z, 1.0)) <= 1e-8);
  }
  const ProxResult at_zero = prox_of_model(abs_model(0.0));
  CHECK(at_zero.lambda[0] == doctest::Approx(0.5));
  const ProxResult at_three = prox_of_model(abs_model(3.0));
  CHECK(at_three.lambda[0] == doctest::Approx(1.0));
}

TEST_CASE("prox_of_model agrees with face enumeration on small bundles") {
  Rng rng(23);
  for (int trial = 0; trial < 300; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(2));
    const int m = 1 + static_cast<int>(rng.below(3));
    const double r = std::exp(rng.uniform(-1, 1));
    const Vector z = rng.normal_vector(n);
    Bundle b(z, r);
    std::vector<testsupport::Plane> planes;
    for (int i = 0; i < m; ++i) {
      const BundleElement e{i, rng.normal_vector(n), rng.normal(), rng.normal_vector(n) * 2};
      planes.push_back({e.plane(z), e.subgrad});
      b.insert(e);
    }
    const ProxResult res = prox_of_model(b);
    const Vector expected = testsupport::brute_force_prox(planes, z, r);
    CHECK((res.x_next - expected).norm() <= 1e-8);
  }
}

TEST_CASE("prox_of_model is globally optimal and self-consistent") {
  Rng rng(29);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(10));
    const int m = 1 + static_cast<int>(rng.below(40));
    const double r = std::exp(rng.uniform(-2, 2));
    const Vector z = rng.normal_vector(n);
    Bundle b(z, r);
    std::vector<testsupport::Plane> planes;
    for (int i = 0; i < m; ++i) {
      const BundleElement e{i, rng.normal_vector(n), rng.normal(), rng.normal_vector(n) * 10};
      planes.push_back({e.plane(z), e.subgrad});
      b.insert(e);
    }
    const ProxResult res = prox_of_model(b);
    CHECK(std::abs(res.lambda.sum() - 1.0) <= 1e-14);
    CHECK(res.lambda.minCoeff() >= 0.0);

    // Recombination identity r(z - x) = G lambda.
    Vector g_lambda = Vector::Zero(n);
    for (int i = 0; i < m; ++i) g_lambda += res.lambda[i] * planes[static_cast<std::size_t>(i)].subgrad;
    CHECK((r * (z - res.x_next) - g_lambda).norm() <= 1e-12 * (1.0 + g_lambda.norm() + r * z.norm()));

    // Model value at x_next equals the dual-implied value.
    double implied = -INFINITY;
    for (const auto& p : planes) implied = std::max(implied, p.value_at_centre + p.subgrad.dot(res.x_next - z));
    CHECK(std::abs(eval_model(b, res.x_next).value - implied) <= 1e-8);

    const double at_next = testsupport::prox_objective(planes, z, r, res.x_next);
    for (int k = 0; k < 100; ++k) {
      const Vector x = z + rng.normal_vector(n) * std::exp(rng.uniform(-4, 1));
      CHECK(at_next <= testsupport::prox_objective(planes, z, r, x) + 1e-8);
    }
  }
}

TEST_CASE("rank-deficient bundles solve to tight KKT tolerance") {
  // Many planes in low dimension: the dual Hessian has rank n << m.
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(3));
    const int m = 30 + static_cast<int>(rng.below(30));
    Bundle b(rng.normal_vector(n), 1.0);
    for (int i = 0; i < m; ++i) b.insert({i, rng.normal_vector(n), rng.normal(), rng.normal_vector(n) * 30});
    const ProxResult res = prox_of_model(b);
    CHECK(res.kkt_residual <= 1e-10 * (1.0 + DualQP::from_bundle(b).e.lpNorm<Eigen::Infinity>()));
  }
}

TEST_CASE("degenerate all-zero subgradients") {
  Bundle b(vec({1, 1}), 1.0);
  b.insert({0, vec({1, 1}), 2.0, vec({0, 0})});
  b.insert({1, vec({0, 0}), 5.0, vec({0, 0})});
  b.insert({2, vec({3, 3}), 5.0, vec({0, 0})});
  const ProxResult res = prox_of_model(b);
  CHECK(res.x_next == vec({1, 1}));
  CHECK(res.lambda == vec({0, 1, 0}));
}

TEST_CASE("solve_simplex_qp honours a warm start and reports failure") {
  Matrix Q(2, 2);
  Q << 1, -1, -1, 1;
  const Vector c = vec({0, 0});
  const auto res = solve_simplex_qp(Q, c, vec({0.9, 0.1}));
  CHECK(res.lambda.isApprox(vec({0.5, 0.5})));
  CHECK_THROWS_AS(solve_simplex_qp(Q, vec({0, 0, 0})), InvalidArgument);
}

TEST_CASE("dist_to_hull examples") {
  CHECK(dist_to_hull(vec({1, 0}), {vec({1, 0}), vec({-1, 0})}) == doctest::Approx(0.0));
  CHECK(dist_to_hull(vec({0, 1}), {vec({1, 0}), vec({-1, 0})}) == doctest::Approx(1.0));
  CHECK(dist_to_hull(vec({0, 0}), {vec({2, 0})}) == doctest::Approx(2.0));
  CHECK(dist_to_hull(vec({0.25, 0.25}), {vec({0, 0}), vec({1, 0}), vec({0, 1})}) <= 1e-12);
  CHECK_THROWS_AS(dist_to_hull(vec({0}), {}), InvalidArgument);
}
