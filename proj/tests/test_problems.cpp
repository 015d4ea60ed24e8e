#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "proxbundle/problems.hpp"
#include "proxbundle/prox_qp.hpp"
#include "proxbundle/rng.hpp"
#include "proxbundle/test_functions.hpp"

using namespace proxbundle;

namespace {

bool same_problem(const MaxQuadProblem& a, const MaxQuadProblem& b) {
  if (a.count() != b.count() || a.z != b.z || a.x_star != b.x_star || a.r != b.r) return false;
  if (a.active_at_xstar != b.active_at_xstar || a.active_at_z != b.active_at_z) return false;
  if (a.lipschitz_bound != b.lipschitz_bound || a.seed != b.seed || a.sparse != b.sparse) return false;
  for (int i = 0; i < a.count(); ++i) {
    const auto& qa = a.quadratics[static_cast<std::size_t>(i)];
    const auto& qb = b.quadratics[static_cast<std::size_t>(i)];
    if (qa.A != qb.A || qa.b != qb.b || qa.c != qb.c) return false;
  }
  return true;
}

GeneratorParams random_params(Rng& rng) {
  static const int dims[] = {4, 10, 25};
  const int n = dims[rng.below(3)];
  const std::vector<int> levels{1, (n + 2) / 3, (2 * n + 2) / 3, n};
  GeneratorParams p;
  p.n = n;
  p.nf = levels[rng.below(4)];
  do p.nf_xstar = levels[rng.below(4)]; while (p.nf_xstar > p.nf);
  do p.nf_z = levels[rng.below(4)]; while (p.nf_z > p.nf);
  p.seed = rng.next_u64();
  p.sparse = rng.below(2) == 1;
  return p;
}

MaxQuadProblem abs_problem(double z) {
  // |x| = max{x, -x}.
  MaxQuadProblem p;
  p.z = Vector::Constant(1, z);
  p.r = 1.0;
  for (double sign : {1.0, -1.0}) p.quadratics.push_back({Matrix::Zero(1, 1), Vector::Constant(1, sign), 0.0});
  return p;
}

}  // namespace

TEST_CASE("check_quadratic rejects asymmetric and indefinite Hessians") {
  Quadratic q{Matrix::Identity(2, 2), Vector::Zero(2), 0.0};
  CHECK_NOTHROW(check_quadratic(q));
  q.A(0, 1) = 1e-3;
  CHECK_THROWS_AS(check_quadratic(q), InvalidArgument);
  q.A = -Matrix::Identity(2, 2);
  CHECK_THROWS_AS(check_quadratic(q), InvalidArgument);
}

TEST_CASE("single-piece problems have the linear-solve prox") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const MaxQuadProblem p = generate_max_quad({5, 1, 1, 1, 1.0, seed, false});
    const Quadratic& q = p.quadratics[0];
    const Vector expected =
        (q.A + p.r * Matrix::Identity(5, 5)).ldlt().solve(p.r * p.z - q.b);
    CHECK((p.x_star - expected).norm() <= 1e-8);
    CHECK((reference_prox(p) - expected).norm() <= 1e-8);
    CHECK(eval_max_quad(p, p.z + Vector::Constant(5, 0.3)).active == std::set<int>{0});
  }
}

TEST_CASE("generator is deterministic in its seed") {
  const GeneratorParams params{4, 4, 2, 2, 1.0, 99, false};
  CHECK(same_problem(generate_max_quad(params), generate_max_quad(params)));
  GeneratorParams other = params;
  other.seed = 100;
  CHECK_FALSE(same_problem(generate_max_quad(params), generate_max_quad(other)));
  CHECK(to_json(generate_max_quad(params)) == to_json(generate_max_quad(params)));
}

TEST_CASE("generator rejects invalid parameters") {
  CHECK_THROWS_AS(generate_max_quad({4, 2, 3, 1, 1.0, 1, false}), InvalidArgument);
  CHECK_THROWS_AS(generate_max_quad({4, 2, 1, 3, 1.0, 1, false}), InvalidArgument);
  CHECK_THROWS_AS(generate_max_quad({0, 1, 1, 1, 1.0, 1, false}), InvalidArgument);
  CHECK_THROWS_AS(generate_max_quad({4, 1, 1, 1, 0.0, 1, false}), InvalidArgument);
}

TEST_CASE("generated problems carry a valid certificate") {
  Rng rng(123);
  for (int trial = 0; trial < 40; ++trial) {
    const GeneratorParams params = random_params(rng);
    const MaxQuadProblem p = generate_max_quad(params);
    const CertificateReport rep = verify_certificate(p);
    INFO("n=" << params.n << " nf=" << params.nf << " nx=" << params.nf_xstar << " nz=" << params.nf_z);
    CHECK(rep.ok);
    CHECK(static_cast<int>(p.active_at_xstar.size()) == params.nf_xstar);
    CHECK(static_cast<int>(p.active_at_z.size()) == params.nf_z);
    CHECK(rep.hull_distance <= 1e-10);
    CHECK(rep.xstar_margin >= 1e-3);
    CHECK(rep.z_margin >= 1e-3);
    for (const auto& q : p.quadratics) CHECK_NOTHROW(check_quadratic(q));

    const MaxQuadEval at_xstar = eval_max_quad(p, p.x_star);
    CHECK(at_xstar.active == p.active_at_xstar);
    CHECK(eval_max_quad(p, p.z).active == p.active_at_z);

    // Independent hull-distance check.
    std::vector<Vector> grads;
    for (int i : p.active_at_xstar) grads.push_back(p.quadratics[static_cast<std::size_t>(i)].gradient(p.x_star));
    CHECK(dist_to_hull(p.r * (p.z - p.x_star), grads) <= 1e-10 * (1.0 + p.lipschitz_bound));

    // The step bound |x* - z| < 2K / r.
    CHECK((p.x_star - p.z).norm() < 2.0 * p.lipschitz_bound / p.r);
  }
}

TEST_CASE("sparse generation zeroes most factor entries") {
  const MaxQuadProblem p = generate_max_quad({25, 3, 1, 1, 1.0, 8, true});
  int zeros = 0, total = 0;
  for (const auto& q : p.quadratics)
    for (Eigen::Index i = 0; i < q.A.size(); ++i) {
      ++total;
      if (q.A.data()[i] == 0.0) ++zeros;
    }
  CHECK(static_cast<double>(zeros) / total > 0.5);
  CHECK(verify_certificate(p).ok);
}

TEST_CASE("reference_prox agrees with x_star") {
  Rng rng(321);
  for (int trial = 0; trial < 10; ++trial) {
    const MaxQuadProblem p = generate_max_quad(random_params(rng));
    CHECK((reference_prox(p) - p.x_star).norm() <= 1e-6);
  }
}

TEST_CASE("reference_prox on |x|") {
  MaxQuadProblem p = abs_problem(3.0);
  CHECK(compute_prox(p)[0] == doctest::Approx(2.0).epsilon(1e-10));
  p.x_star = Vector::Constant(1, 2.0);
  CHECK(reference_prox(p)[0] == doctest::Approx(2.0).epsilon(1e-10));
  p.x_star = Vector::Constant(1, 2.5);
  CHECK_THROWS_AS(reference_prox(p), SolveFailure);
  CHECK(std::abs(compute_prox(abs_problem(0.4))[0]) <= 1e-10);
}

TEST_CASE("parallel and serial evaluation agree bitwise") {
  const MaxQuadProblem p = generate_max_quad({25, 25, 9, 17, 1.0, 4, false});
  Rng rng(6);
  for (int i = 0; i < 20; ++i) {
    const Vector x = p.z + rng.normal_vector(25);
    const MaxQuadEval a = eval_max_quad(p, x);
    const MaxQuadEval b = eval_max_quad_serial(p, x);
    CHECK(a.value == b.value);
    CHECK(a.active == b.active);
    CHECK(a.first_active_grad == b.first_active_grad);
  }
}

TEST_CASE("problem files round-trip exactly") {
  Rng rng(77);
  const auto dir = std::filesystem::temp_directory_path() / "proxbundle_test_io";
  std::filesystem::create_directories(dir);
  for (int trial = 0; trial < 6; ++trial) {
    const MaxQuadProblem p = generate_max_quad(random_params(rng));
    CHECK(same_problem(problem_from_json(to_json(p)), p));
    const auto path = dir / ("p" + std::to_string(trial) + ".json");
    save_problem(p, path);
    CHECK(same_problem(load_problem(path), p));
  }
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(problem_from_json("{}"), InvalidArgument);
  CHECK_THROWS_AS(problem_from_json("not json"), InvalidArgument);
  CHECK_THROWS_AS(load_problem("/nonexistent/problem.json"), InvalidArgument);
}

TEST_CASE("test function spot values") {
  CHECK(eval_test_function(TestFunction::kPAlpha, (Vector(2) << 1, 0).finished()) == 1.0);
  CHECK(eval_test_function(TestFunction::kMaxExp, Vector::Zero(12)) == 12.0);
  CHECK(eval_test_function(TestFunction::kMax10, Vector::Ones(10)) == 10.0);
  CHECK(eval_test_function(TestFunction::kMaxLog, Vector::Ones(30)) == 0.0);
}

TEST_CASE("test function metadata and domain") {
  for (const auto& entry : test_function_catalog()) {
    CHECK(parse_test_function(entry.name) == entry.id);
    CHECK(default_start(entry.id).size() == entry.dimension);
    CHECK(std::isfinite(eval_test_function(entry.id, default_start(entry.id))));
  }
  CHECK(info(TestFunction::kOet6Adjusted).dimension == 4);
  CHECK_THROWS_AS(eval_test_function(TestFunction::kMaxLog, Vector::Zero(30)), DomainError);
  CHECK_THROWS_AS(eval_test_function(TestFunction::kDem, Vector::Zero(3)), InvalidArgument);
  CHECK_THROWS_AS(parse_test_function("rosenbrock"), InvalidArgument);
}

TEST_CASE("test functions are midpoint convex") {
  Rng rng(55);
  for (const auto& entry : test_function_catalog()) {
    const int n = entry.dimension;
    int checks = 0;
    while (checks < 1000) {
      Vector a = default_start(entry.id) + rng.normal_vector(n);
      Vector b = default_start(entry.id) + rng.normal_vector(n);
      if (entry.id == TestFunction::kMaxLog) {
        a = a.cwiseAbs().array() + 0.05;
        b = b.cwiseAbs().array() + 0.05;
      }
      const double fa = eval_test_function(entry.id, a);
      const double fb = eval_test_function(entry.id, b);
      const double fm = eval_test_function(entry.id, 0.5 * (a + b));
      const double scale = 1.0 + std::abs(fa) + std::abs(fb);
      INFO(entry.name);
      CHECK(fm <= 0.5 * (fa + fb) + 1e-9 * scale);
      ++checks;
    }
  }
}
