#include <cmath>
#include <memory>
#include <random>

#include "buckrom/error.hpp"
#include "buckrom/solver.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace buckrom;

namespace {

ProblemSpec beam_spec(int nx, int ny, MaterialKind kind, double gravity = 0.0) {
  ProblemSpec s;
  s.mesh = std::make_shared<const Mesh>(build_beam_2d(1.0, 0.1, nx, ny));
  DirichletCondition left;
  s.bcs.dirichlet.push_back(left);
  DirichletCondition right;
  right.tag = BoundaryTag::kDirichletRight;
  right.per_mu = {-1.0, 0.0, 0.0};
  s.bcs.dirichlet.push_back(right);
  s.material = kind;
  s.body_force = {0.0, -gravity, 0.0};
  return s;
}

ContinuationPlan plan(double mu0, double step, int count) {
  ContinuationPlan p;
  p.mu_start = mu0;
  p.mu_step = step;
  p.count = count;
  p.base = {0.0, 1e6, 0.3, 0.0};
  p.threshold = 1e-3;
  return p;
}

void seed(ContinuationPlan& p, const HyperelasticProblem& prob, int sign) {
  p.seed.enabled = true;
  p.seed.amplitude = 0.05;
  p.seed.sign = sign;
  p.seed.direction = seed_direction(prob, SeedShape::kClamped, 1);
}

Branch synthetic(const std::vector<double>& mu, const std::vector<double>& s) {
  Branch b;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    BranchPoint p;
    p.mu = mu[i];
    p.s = s[i];
    p.converged = true;
    b.points.push_back(p);
  }
  return b;
}

}  // namespace

TEST_CASE("Newton at an exact root takes no step") {
  HyperelasticProblem prob(beam_spec(20, 2, MaterialKind::kSvk));
  FullOrderSystem sys(prob);
  sys.set_parameters({0.0, 1e6, 0.3, 0.0});
  const auto r = newton_solve(sys, Vector::Zero(prob.size()), NewtonSettings{});
  CHECK(r.iterations <= 1);
  CHECK(r.x.isZero(0.0));
}

TEST_CASE("Newton converges quadratically before buckling") {
  HyperelasticProblem prob(beam_spec(40, 4, MaterialKind::kSvk, 1000.0));
  FullOrderSystem sys(prob);
  sys.set_parameters({0.02, 1e6, 0.3, 0.0});
  NewtonSettings st;
  st.abs_tol = 1e-13;
  st.rel_tol = 1e-14;
  const auto r = newton_solve(sys, sys.adjust_for_parameters(Vector::Zero(prob.size())), st);
  const auto& h = r.residual_history;
  // Order estimates over the iterates clear of the round-off floor.
  std::vector<double> orders;
  for (std::size_t k = 1; k + 1 < h.size(); ++k) {
    if (h[k + 1] < 1e4 * h.back() || h[k] >= h[k - 1]) continue;
    orders.push_back(std::log(h[k + 1] / h[k]) / std::log(h[k] / h[k - 1]));
  }
  REQUIRE(!orders.empty());
  CHECK(orders.back() >= 1.8);
  MESSAGE("residual history length " << h.size() << ", last order " << orders.back());
}

TEST_CASE("Newton failure modes are errors") {
  HyperelasticProblem prob(beam_spec(20, 2, MaterialKind::kSvk));
  FullOrderSystem sys(prob);
  sys.set_parameters({0.05, 1e6, 0.3, 0.0});
  NewtonSettings st;
  st.max_iter = 1;
  try {
    newton_solve(sys, sys.adjust_for_parameters(Vector::Zero(prob.size())), st);
    FAIL("expected non-convergence");
  } catch (const NonConvergenceError& e) {
    CHECK(e.code() == ErrorCode::kNonConvergence);
    CHECK(e.last_residual() > 0.0);
  }
  st.max_iter = 0;
  CHECK_THROWS_AS(newton_solve(sys, Vector::Zero(prob.size()), st), Error);

  // No supports at all: rigid motions make the Jacobian singular.
  ProblemSpec free = beam_spec(10, 2, MaterialKind::kSvk, 1000.0);
  free.bcs.dirichlet.clear();
  HyperelasticProblem fp(free);
  FullOrderSystem fs(fp);
  try {
    newton_solve(fs, Vector::Zero(fp.size()), NewtonSettings{});
    FAIL("expected a failure");
  } catch (const Error& e) {
    CHECK((e.code() == ErrorCode::kSingularJacobian || e.code() == ErrorCode::kNonConvergence));
  }
}

TEST_CASE("pre-critical solutions are unique") {
  HyperelasticProblem prob(beam_spec(40, 4, MaterialKind::kSvk));
  FullOrderSystem sys(prob);
  sys.set_parameters({0.01, 1e6, 0.3, 0.0});
  const auto a = newton_solve(sys, sys.adjust_for_parameters(Vector::Zero(prob.size())), {});
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e-6, 1e-6);
  Vector guess = Vector::Zero(prob.size());
  for (auto i : prob.dofs().free_dofs()) guess[i] = u(rng);
  const auto b = newton_solve(sys, sys.adjust_for_parameters(guess), {});
  CHECK((a.x - b.x).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("linear regime sweep stays below the threshold") {
  HyperelasticProblem prob(beam_spec(40, 4, MaterialKind::kSvk));
  FullOrderSystem sys(prob);
  auto p = plan(0.0, 0.001, 21);
  seed(p, prob, 1);
  const Branch b = continuation_sweep(sys, p, {});
  REQUIRE(b.points.size() == 21);
  for (const auto& pt : b.points) {
    CHECK(pt.converged);
    CHECK(pt.s < 1e-3);
  }
  CHECK_FALSE(b.critical.has_value());
  CHECK(0.02 < oracle::euler_clamped_strain(0.1, 1.0));
}

TEST_CASE("clamped beam buckles near the Euler strain") {
  HyperelasticProblem prob(beam_spec(40, 4, MaterialKind::kSvk));
  FullOrderSystem sys(prob);
  auto p = plan(0.0, 0.001, 61);
  seed(p, prob, 1);
  const Branch b = continuation_sweep(sys, p, {});
  for (const auto& pt : b.points) CHECK(pt.converged);
  REQUIRE(b.critical.has_value());
  CHECK(*b.critical >= 0.025);
  CHECK(*b.critical <= 0.040);
  MESSAGE("mu* = " << *b.critical << ", Euler " << oracle::euler_clamped_strain(0.1, 1.0));
}

TEST_CASE("seed sign selects the mirror branch") {
  HyperelasticProblem prob(beam_spec(40, 4, MaterialKind::kSvk));
  FullOrderSystem sys(prob);
  auto pp = plan(0.0, 0.002, 31);
  seed(pp, prob, 1);
  auto pm = pp;
  pm.seed.sign = -1;
  const Branch bp = continuation_sweep(sys, pp, {});
  const Branch bm = continuation_sweep(sys, pm, {});
  REQUIRE(bp.points.size() == bm.points.size());
  for (std::size_t i = 0; i < bp.points.size(); ++i) CHECK(std::abs(bp.points[i].s - bm.points[i].s) < 1e-8);
  const Vector& up = bp.points.back().u;
  const Vector& um = bm.points.back().u;
  double maxp = -1e9, minm = 1e9;
  for (Eigen::Index i = 1; i < up.size(); i += 2) {
    maxp = std::max(maxp, up[i]);
    minm = std::min(minm, um[i]);
  }
  CHECK(bp.points.back().s > 1e-3);
  CHECK(maxp > 1e-3);
  CHECK(minm < -1e-3);
}

TEST_CASE("sweeps are deterministic") {
  HyperelasticProblem prob(beam_spec(20, 2, MaterialKind::kNeoHookean));
  FullOrderSystem sys(prob);
  auto p = plan(0.0, 0.002, 20);
  seed(p, prob, 1);
  const Branch a = continuation_sweep(sys, p, {});
  const Branch b = continuation_sweep(sys, p, {});
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].s == b.points[i].s);
    CHECK(a.points[i].newton_iters == b.points[i].newton_iters);
    CHECK((a.points[i].u - b.points[i].u).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("gravity branch grows smoothly") {
  HyperelasticProblem prob(beam_spec(40, 4, MaterialKind::kSvk, 1000.0));
  FullOrderSystem sys(prob);
  const Branch b = continuation_sweep(sys, plan(0.0, 0.002, 101), {});
  for (const auto& pt : b.points) CHECK(pt.converged);
  REQUIRE(b.critical.has_value());
  for (std::size_t i = 1; i < b.points.size(); ++i) {
    if (b.points[i].mu > *b.critical) CHECK(b.points[i].s >= b.points[i - 1].s);
  }
}

TEST_CASE("invalid plans are rejected") {
  auto p = plan(0.0, 0.0, 10);
  CHECK_THROWS_AS(validate_plan(p), Error);
  p.mu_step = -0.1;
  try {
    validate_plan(p);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidPlan);
  }
  p.mu_step = 0.1;
  p.count = 0;
  CHECK_THROWS_AS(validate_plan(p), Error);
  HyperelasticProblem prob(beam_spec(10, 2, MaterialKind::kSvk));
  FullOrderSystem sys(prob);
  auto q = plan(0.0, 0.001, 3);
  q.seed.enabled = true;
  CHECK_THROWS_AS(continuation_sweep(sys, q, {}), Error);
}

TEST_CASE("output functionals") {
  Vector u(6);
  u << 0.5, 0.1, -0.2, -0.3, 0.1, 0.2;
  CHECK(output_functional(FunctionalKind::kInfNormY, u, 2) == 0.3);
  CHECK(output_functional(FunctionalKind::kSumInfXY, u, 2) == doctest::Approx(0.8));
  CHECK(output_functional(FunctionalKind::kInfNormY, Vector::Zero(6), 2) == 0.0);
  Vector w(6);
  w << 0.2, -0.5, 0.0, -0.1, 0.3, 0.9;
  CHECK(output_functional(FunctionalKind::kSumInfXY, w, 3) == doctest::Approx(0.7));
  CHECK(output_functional(FunctionalKind::kInfNormZ, w, 3) == 0.9);
  try {
    output_functional(FunctionalKind::kInfNormZ, u, 2);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidFunctional);
  }
}

TEST_CASE("seed direction") {
  HyperelasticProblem prob(beam_spec(20, 2, MaterialKind::kSvk));
  for (auto shape : {SeedShape::kSine, SeedShape::kClamped, SeedShape::kCantilever}) {
    const Vector psi = seed_direction(prob, shape, 1);
    double wmax = 0.0;
    for (Eigen::Index i = 1; i < psi.size(); i += 2) wmax = std::max(wmax, std::abs(psi[i]));
    CHECK(wmax == doctest::Approx(1.0));
    for (auto i : prob.dofs().constrained_dofs()) CHECK(psi[i] == 0.0);
  }
  CHECK_THROWS_AS(seed_direction(prob, SeedShape::kSine, 0), Error);
}

TEST_CASE("critical point detection") {
  CHECK_FALSE(detect_critical(synthetic({0, 1, 2}, {0, 0, 0}), 1e-3).has_value());
  CHECK_FALSE(detect_critical(Branch{}, 1e-3).has_value());
  const auto c = detect_critical(synthetic({0, 1, 2, 3}, {0, 1e-4, 5e-3, 2e-2}), 1e-3);
  REQUIRE(c.has_value());
  CHECK(*c == 2.0);
  // Non-converged points are skipped.
  Branch b = synthetic({0, 1, 2, 3}, {0, 0.5, 2e-3, 3e-3});
  b.points[1].converged = false;
  CHECK(*detect_critical(b, 1e-3) == 2.0);
  // Starts above the threshold: knee of s(mu).
  const auto k = detect_critical(synthetic({0, 1, 2, 3, 4, 5}, {0.002, 0.0021, 0.0022, 0.0023, 0.05, 0.1}), 1e-3);
  REQUIRE(k.has_value());
  CHECK(*k == 3.0);
}
