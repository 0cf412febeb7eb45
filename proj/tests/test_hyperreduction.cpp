#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <random>

#include "buckrom/error.hpp"
#include "buckrom/hyperreduction.hpp"
#include "doctest.h"

using namespace buckrom;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return static_cast<ErrorCode>(0);
}

DenseMatrix random_matrix(Eigen::Index r, Eigen::Index c, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  DenseMatrix A(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) A(i, j) = n(rng);
  return A;
}

ProblemSpec beam_spec(int nx, int ny, MaterialKind kind) {
  ProblemSpec s;
  s.mesh = std::make_shared<const Mesh>(build_beam_2d(1.0, 0.1, nx, ny));
  s.bcs.dirichlet.push_back(DirichletCondition{});
  DirichletCondition right;
  right.tag = BoundaryTag::kDirichletRight;
  right.per_mu = {-1.0, 0.0, 0.0};
  s.bcs.dirichlet.push_back(right);
  s.material = kind;
  s.body_force = {0.0, -1000.0, 0.0};
  return s;
}

struct Trained {
  HyperelasticProblem problem{beam_spec(30, 3, MaterialKind::kNeoHookean)};
  SnapshotSet set;
  PodBasis basis;
  DeimModel model;
  Trained() {
    ContinuationPlan p;
    p.mu_step = 0.001;
    p.count = 51;
    p.base = {0.0, 1e6, 0.3, 0.0};
    set = collect_snapshots(problem, {p}, {});
    basis = pod_compress(set.S, 1e-8);
    DeimSettings ds;
    ds.modes = 12;
    model = deim_build(deim_snapshots(problem, set, basis, true), ds);
  }
};

Trained& trained() {
  static Trained t;
  return t;
}

}  // namespace

TEST_CASE("DEIM is exact on the span of its snapshots") {
  for (int m : {1, 3, 8}) {
    const DenseMatrix A = random_matrix(200, m, 10 + m);
    const DenseMatrix S = A * random_matrix(m, 3 * m, 20 + m);
    DeimSettings ds;
    ds.modes = m;
    const DeimModel model = deim_build(S, ds);
    CHECK(model.active == m);
    CHECK(model.available() == m);
    const Vector f = A * random_matrix(m, 1, 30 + m);
    const Vector g = deim_interpolate(model, m, f);
    CHECK((g - f).cwiseAbs().maxCoeff() <= 1e-10 * f.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("single snapshot picks its largest entry") {
  Vector h(6);
  h << 0.1, -0.2, 3.0, -4.0, 0.5, 0.0;
  DeimSettings ds;
  ds.modes = 1;
  const DeimModel model = deim_build(h, ds);
  REQUIRE(model.indices.size() == 1);
  CHECK(model.indices[0] == 3);
  CHECK((deim_interpolate(model, 1, h) - h).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("greedy indices are distinct and nested") {
  const DenseMatrix S = random_matrix(80, 30, 4);
  DeimSettings ds;
  ds.modes = 10;
  const DeimModel a = deim_build(S, ds);
  auto idx = a.indices;
  std::sort(idx.begin(), idx.end());
  CHECK(std::adjacent_find(idx.begin(), idx.end()) == idx.end());
  const auto first = deim_indices(a.H.leftCols(5));
  for (int k = 0; k < 5; ++k) CHECK(first[k] == a.indices[k]);
}

TEST_CASE("degenerate DEIM input") {
  DeimSettings ds;
  ds.modes = 2;
  CHECK(code_of([&] { deim_build(DenseMatrix::Zero(10, 3), ds); }) == ErrorCode::kDegenerate);
  ds.modes = 0;
  ds.greedy_tolerance = 0.0;
  CHECK(code_of([&] { deim_build(random_matrix(10, 3, 1), ds); }) == ErrorCode::kInvalidArgument);
  DenseMatrix dup(4, 2);
  dup << 1, 1, 0, 0, 0, 0, 0, 0;
  CHECK(code_of([&] { deim_indices(dup); }) == ErrorCode::kDegenerate);
}

TEST_CASE("support assembly equals the full force at the sampled rows") {
  auto& t = trained();
  DeimSystem ds(t.problem, t.basis, t.model);
  for (int c = 0; c < t.set.count(); c += 10) {
    t.problem.set_parameters(t.set.params[static_cast<std::size_t>(c)]);
    const Vector u = t.problem.lifting() + t.set.S.col(c);
    const Vector full = t.problem.internal_force(u);
    const Vector sampled = ds.sampled_internal_force(u);
    for (int a = 0; a < ds.modes(); ++a) {
      CHECK(sampled[a] == doctest::Approx(full[t.model.indices[static_cast<std::size_t>(a)]])
                              .epsilon(1e-13)
                              .scale(full.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("DEIM Jacobian against finite differences") {
  auto& t = trained();
  DeimSystem ds(t.problem, t.basis, t.model);
  ds.set_parameters({0.03, 1e6, 0.3, 0.0});
  const Vector x = ds.to_coordinates(t.problem.lifting() + t.set.S.col(30));
  Vector G;
  DenseMatrix J;
  ds.evaluate(x, G, J);
  double err = 0.0;
  for (Eigen::Index j = 0; j < ds.size(); ++j) {
    const double h = 1e-7;
    Vector xp = x, xm = x, Gp, Gm;
    xp[j] += h;
    xm[j] -= h;
    DenseMatrix tmp;
    ds.evaluate(xp, Gp, tmp);
    ds.evaluate(xm, Gm, tmp);
    err = std::max(err, ((Gp - Gm) / (2 * h) - J.col(j)).cwiseAbs().maxCoeff());
  }
  CHECK(err / J.cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("DEIM with a complete residual basis equals the dense reduced system") {
  ProblemSpec spec = beam_spec(6, 1, MaterialKind::kSvk);
  HyperelasticProblem prob(spec);
  const auto& free = prob.dofs().free_dofs();
  DenseMatrix S = DenseMatrix::Zero(prob.size(), static_cast<Eigen::Index>(free.size()));
  for (std::size_t k = 0; k < free.size(); ++k) S(free[k], static_cast<Eigen::Index>(k)) = 1.0;
  DeimSettings dset;
  dset.modes = static_cast<int>(free.size());
  const DeimModel model = deim_build(S, dset);
  PodBasis basis;
  basis.V = random_matrix(prob.size(), 3, 7);
  for (auto i : prob.dofs().constrained_dofs()) basis.V.row(i).setZero();
  basis.V = Eigen::HouseholderQR<DenseMatrix>(basis.V).householderQ() * DenseMatrix::Identity(prob.size(), 3);
  for (auto i : prob.dofs().constrained_dofs()) basis.V.row(i).setZero();

  ReducedSystem dense(prob, basis);
  DeimSystem hyper(prob, basis, model);
  const ParameterPoint p{0.01, 1e6, 0.3, 0.0};
  dense.set_parameters(p);
  hyper.set_parameters(p);
  Vector x(3);
  x << 1e-3, -2e-3, 5e-4;
  Vector Gd, Gh;
  DenseMatrix Jd, Jh;
  dense.evaluate(x, Gd, Jd);
  hyper.evaluate(x, Gh, Jh);
  CHECK((Gd - Gh).norm() <= 1e-9 * Gd.norm());
  CHECK((Jd - Jh).cwiseAbs().maxCoeff() <= 1e-8 * Jd.cwiseAbs().maxCoeff());
}

TEST_CASE("DEIM branch tracks the dense reduced branch") {
  auto& t = trained();
  ReducedSystem rs(t.problem, t.basis);
  DeimSystem ds(t.problem, t.basis, t.model);
  ContinuationPlan p;
  p.mu_step = 0.0005;
  p.count = 101;
  p.base = {0.0, 1e6, 0.3, 0.0};
  const Branch a = reduced_sweep(rs, p, {});
  const Branch b = deim_sweep(ds, p, {});
  double smax = 0.0, dmax = 0.0;
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    REQUIRE(b.points[i].converged);
    smax = std::max(smax, a.points[i].s);
    dmax = std::max(dmax, std::abs(a.points[i].s - b.points[i].s));
  }
  CHECK(dmax / smax < 1e-3);
  REQUIRE(a.critical.has_value());
  REQUIRE(b.critical.has_value());
  CHECK(std::abs(*a.critical - *b.critical) <= 2 * p.mu_step + 1e-12);
}

TEST_CASE("mode changes and invalid setups") {
  auto& t = trained();
  DeimSystem ds(t.problem, t.basis, t.model);
  CHECK(ds.modes() == 12);
  CHECK(ds.available_modes() > 12);
  const auto support12 = ds.support_size();
  ds.set_modes(ds.available_modes());
  CHECK(ds.support_size() >= support12);
  CHECK(code_of([&] { ds.set_modes(0); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([&] { ds.set_modes(ds.available_modes() + 1); }) == ErrorCode::kInvalidArgument);
  PodBasis empty;
  empty.V = DenseMatrix(t.problem.size(), 0);
  CHECK(code_of([&] { DeimSystem bad(t.problem, empty, t.model); }) == ErrorCode::kEmptyBasis);
  DeimModel other;
  other.H = DenseMatrix::Identity(7, 1);
  other.indices = {0};
  other.active = 1;
  CHECK(code_of([&] { DeimSystem bad(t.problem, t.basis, other); }) == ErrorCode::kStaleArtifact);
}

TEST_CASE("tube support stays small") {
  ProblemSpec s;
  s.mesh = std::make_shared<const Mesh>(build_tube_3d(0.28, 0.30, 2.0, 16, 1, 20));
  s.bcs.dirichlet.push_back(DirichletCondition{});
  NeumannCondition t;
  t.per_mu = {0.0, 0.0, -1.0};
  s.bcs.neumann.push_back(t);
  s.material = MaterialKind::kNeoHookean;
  HyperelasticProblem prob(s);
  ContinuationPlan p;
  p.mu_step = 100.0;
  p.count = 12;
  p.base = {0.0, 2.1e5, 0.3, 0.0};
  p.functional = FunctionalKind::kSumInfXY;
  const SnapshotSet set = collect_snapshots(prob, {p}, {});
  const PodBasis basis = pod_compress(set.S, 1e-8);
  DeimSettings dset;
  dset.modes = 15;
  const DeimModel model = deim_build(deim_snapshots(prob, set, basis, true), dset);
  DeimSystem ds(prob, basis, model);
  const double frac = double(ds.support_size()) / double(prob.mesh().num_elements());
  CHECK(frac < 0.3);
  MESSAGE("support " << ds.support_size() << " of " << prob.mesh().num_elements());
}
