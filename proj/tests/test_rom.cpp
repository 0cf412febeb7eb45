#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <sstream>

#include "buckrom/error.hpp"
#include "buckrom/rom.hpp"
#include "doctest.h"

using namespace buckrom;

namespace {

ProblemSpec beam_spec(MaterialKind kind = MaterialKind::kSvk) {
  ProblemSpec s;
  s.mesh = std::make_shared<const Mesh>(build_beam_2d(1.0, 0.1, 40, 4));
  s.bcs.dirichlet.push_back(DirichletCondition{});
  DirichletCondition right;
  right.tag = BoundaryTag::kDirichletRight;
  right.per_mu = {-1.0, 0.0, 0.0};
  s.bcs.dirichlet.push_back(right);
  s.material = kind;
  return s;
}

ContinuationPlan beam_plan(const HyperelasticProblem& prob, double mu_max, int count) {
  ContinuationPlan p;
  p.mu_start = 0.0;
  p.mu_step = mu_max / (count - 1);
  p.count = count;
  p.base = {0.0, 1e6, 0.3, 0.0};
  p.seed.enabled = true;
  p.seed.amplitude = 0.05;
  p.seed.direction = seed_direction(prob, SeedShape::kClamped, 1);
  return p;
}

struct Trained {
  HyperelasticProblem problem{beam_spec()};
  SnapshotSet set;
  std::vector<Branch> branches;
  PodBasis basis;
  Trained() {
    set = collect_snapshots(problem, {beam_plan(problem, 0.1, 101)}, {}, &branches);
    basis = pod_compress(set.S, 1e-8);
  }
};

Trained& trained() {
  static Trained t;
  return t;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return static_cast<ErrorCode>(0);
}

}  // namespace

TEST_CASE("POD of repeated columns has rank one") {
  Vector v(5);
  v << 1, -2, 3, 0.5, 4;
  DenseMatrix S(5, 4);
  for (int j = 0; j < 4; ++j) S.col(j) = v;
  const PodBasis b = pod_compress(S, 1e-8);
  REQUIRE(b.dimension() == 1);
  const Vector e = v.normalized();
  CHECK(std::min((b.V.col(0) - e).norm(), (b.V.col(0) + e).norm()) < 1e-12);
}

TEST_CASE("POD drops a negligible direction") {
  DenseMatrix S = DenseMatrix::Zero(3, 2);
  S(0, 0) = 1.0;
  S(1, 1) = 1e-12;
  CHECK(pod_compress(S, 1e-8).dimension() == 1);
  CHECK(pod_compress(S, 1e-13).dimension() == 2);
}

TEST_CASE("truncation rule") {
  Vector s(3);
  s << 1.0, 1e-3, 1e-9;
  CHECK(pod_truncation(s, 1e-8) == 2);
  CHECK(pod_truncation(s, 1e-2) == 1);
  CHECK(pod_truncation(s, 0.0) == 3);
  // Tail energy far below the total is still resolved.
  Vector t(4);
  t << 1.0, 1e-7, 1e-9, 1e-10;
  CHECK(pod_truncation(t, 1e-8) == 2);
}

TEST_CASE("POD of nothing is an error") {
  CHECK(code_of([] { pod_compress(DenseMatrix::Zero(4, 3), 1e-8); }) == ErrorCode::kEmptyBasis);
  CHECK(code_of([] { pod_compress(DenseMatrix(4, 0), 1e-8); }) == ErrorCode::kEmptyBasis);
}

TEST_CASE("POD basis is orthonormal and truncation is monotone") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  DenseMatrix S(60, 20);
  for (Eigen::Index j = 0; j < S.cols(); ++j)
    for (Eigen::Index i = 0; i < S.rows(); ++i) S(i, j) = n(rng) * std::pow(0.3, j);
  const PodBasis b = pod_compress(S, 1e-6);
  CHECK((b.V.transpose() * b.V - DenseMatrix::Identity(b.dimension(), b.dimension())).cwiseAbs().maxCoeff() < 1e-10);
  const PodBasis all = pod_compress(S, 0.0);
  double prev = 1e300;
  for (Eigen::Index k = 1; k <= all.dimension(); ++k) {
    const DenseMatrix V = all.V.leftCols(k);
    const double err = (S - V * (V.transpose() * S)).norm();
    CHECK(err <= prev * (1 + 1e-12));
    prev = err;
  }
}

TEST_CASE("snapshots are homogenized and counted") {
  auto& t = trained();
  CHECK(t.set.count() == 101);
  CHECK(t.set.params.size() == 101);
  for (auto i : t.problem.dofs().constrained_dofs()) CHECK(t.set.S.row(i).cwiseAbs().maxCoeff() == 0.0);
  CHECK((t.basis.V.transpose() * t.basis.V - DenseMatrix::Identity(t.basis.dimension(), t.basis.dimension()))
            .cwiseAbs()
            .maxCoeff() < 1e-10);
  CHECK(t.basis.dimension() <= 12);
  MESSAGE("N = " << t.basis.dimension());
}

TEST_CASE("trivial plan gives zero snapshots") {
  HyperelasticProblem p(beam_spec());
  ContinuationPlan plan;
  plan.mu_step = 1.0;
  plan.count = 1;
  const SnapshotSet s = collect_snapshots(p, {plan}, {});
  CHECK(s.count() == 1);
  CHECK(s.S.cwiseAbs().maxCoeff() == 0.0);
  CHECK(code_of([&] { pod_compress(s.S, 1e-8); }) == ErrorCode::kEmptyBasis);
}

TEST_CASE("reduced residual and Jacobian") {
  auto& t = trained();
  ReducedSystem rs(t.problem, t.basis);
  rs.set_parameters({0.0, 1e6, 0.3, 0.0});
  CHECK(rs.residual(Vector::Zero(rs.size())).norm() == 0.0);

  rs.set_parameters({0.05, 1e6, 0.3, 0.0});
  const Vector x = rs.to_coordinates(t.set.S.col(60) + t.problem.lifting());
  Vector G;
  DenseMatrix J;
  rs.evaluate(x, G, J);
  double err = 0.0;
  for (Eigen::Index j = 0; j < rs.size(); ++j) {
    const double h = 1e-7;
    Vector xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    Vector Gp, Gm;
    DenseMatrix tmp;
    rs.evaluate(xp, Gp, tmp);
    rs.evaluate(xm, Gm, tmp);
    err = std::max(err, ((Gp - Gm) / (2 * h) - J.col(j)).cwiseAbs().maxCoeff());
  }
  CHECK(err / J.cwiseAbs().maxCoeff() < 1e-5);
  // Same quantities through the full model.
  const Vector u = rs.reconstruct(x);
  const Vector Gfull = t.problem.residual(u);
  CHECK((G - t.basis.V.transpose() * Gfull).norm() <= 1e-10 * Gfull.norm() + 1e-12);
}

TEST_CASE("reconstruction honours the Dirichlet data") {
  auto& t = trained();
  ReducedSystem rs(t.problem, t.basis);
  rs.set_parameters({0.073, 1e6, 0.3, 0.0});
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  Vector x(rs.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = n(rng);
  const Vector u = rs.reconstruct(x);
  const Vector lift = t.problem.lifting();
  for (auto i : t.problem.dofs().constrained_dofs()) CHECK(u[i] == lift[i]);
}

TEST_CASE("Galerkin solution satisfies the reduced equations only") {
  auto& t = trained();
  ReducedSystem rs(t.problem, t.basis);
  auto plan = beam_plan(t.problem, 0.06, 31);
  const Branch b = reduced_sweep(rs, plan, {});
  const auto& last = b.points.back();
  REQUIRE(last.converged);
  rs.set_parameters({last.mu, 1e6, 0.3, 0.0});
  const Vector x = rs.to_coordinates(last.u);
  const double tol = NewtonSettings{}.abs_tol * rs.residual_scale();
  CHECK(rs.residual(x).norm() <= 10 * tol);
  MESSAGE("reduced " << rs.residual(x).norm() << ", full " << t.problem.residual(last.u).norm());
}

TEST_CASE("reduced sweep reproduces the training branch") {
  auto& t = trained();
  ReducedSystem rs(t.problem, t.basis);
  const Branch b = reduced_sweep(rs, beam_plan(t.problem, 0.1, 101), {});
  const Branch& hf = t.branches[0];
  REQUIRE(b.points.size() == hf.points.size());
  for (std::size_t i = 0; i < b.points.size(); ++i) {
    REQUIRE(b.points[i].converged);
    if (hf.points[i].mu < 0.02) {
      CHECK(std::abs(b.points[i].s - hf.points[i].s) <= 1e-6 * hf.points[i].s + 1e-9);
    }
    CHECK((b.points[i].u - hf.points[i].u).norm() <= 1e-6 * std::max(1.0, hf.points[i].u.norm()));
  }
}

TEST_CASE("RB error peaks at the buckling point on a finer grid") {
  auto& t = trained();
  ReducedSystem rs(t.problem, t.basis);
  auto plan = beam_plan(t.problem, 0.1, 201);
  const RbErrorReport rep = rb_error_sweep(t.problem, rs, plan, {});
  CHECK(rep.points.size() == 201);
  for (const auto& pt : rep.reduced.points) CHECK(pt.converged);
  REQUIRE(rep.full.critical.has_value());
  CHECK(std::abs(rep.argmax_mu - *rep.full.critical) <= 5 * plan.mu_step + 1e-12);
  CHECK(rep.mean_error <= 1e-4 * rep.max_reference_norm);
  MESSAGE("argmax " << rep.argmax_mu << ", mu* " << *rep.full.critical << ", mean " << rep.mean_error);
}

TEST_CASE("reduced system rejects unusable bases") {
  auto& t = trained();
  PodBasis empty;
  empty.V = DenseMatrix(t.problem.size(), 0);
  CHECK(code_of([&] { ReducedSystem rs(t.problem, empty); }) == ErrorCode::kEmptyBasis);
  PodBasis wrong;
  wrong.V = DenseMatrix::Identity(10, 2);
  CHECK(code_of([&] { ReducedSystem rs(t.problem, wrong); }) == ErrorCode::kStaleArtifact);
}

TEST_CASE("sigma CSV") {
  Vector s(3);
  s << 2.0, 1.0, 0.0;
  std::ostringstream os;
  write_sigma_csv(os, s);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "index,sigma,relative_tail_energy");
  std::getline(is, line);
  CHECK(line == "1,2,0.20000000000000001");
  std::getline(is, line);
  CHECK(line == "2,1,0");
  std::getline(is, line);
  CHECK(line == "3,0,0");
}
