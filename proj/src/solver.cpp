#include "buckrom/solver.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "buckrom/error.hpp"

namespace buckrom {

NewtonResult newton_solve(NonlinearSystem& system, const Vector& x0, const NewtonSettings& settings) {
  if (!(settings.abs_tol > 0.0) || !(settings.rel_tol > 0.0) || settings.max_iter < 1) {
    throw Error(ErrorCode::kInvalidArgument, "Newton tolerances must be positive and max_iter >= 1");
  }
  NewtonResult res;
  res.x = x0;
  Vector r = system.residual(res.x);
  double norm = r.norm();
  const double r0 = norm;
  const double tol = std::max(settings.abs_tol * system.residual_scale(), settings.rel_tol * r0);
  res.residual_history.push_back(norm);
  for (int k = 0; k < settings.max_iter; ++k) {
    if (norm <= tol) {
      res.iterations = k;
      return res;
    }
    const Vector dx = system.solve_linearized(res.x, r);
    // Halve the step while it leaves the admissible set (NH: det F <= 0).
    double step = 1.0;
    for (int h = 0;; ++h) {
      try {
        Vector trial = res.x - step * dx;
        r = system.residual(trial);
        res.x = std::move(trial);
        break;
      } catch (const InadmissibleStateError&) {
        if (h >= 5) throw;
        step *= 0.5;
      }
    }
    norm = r.norm();
    res.residual_history.push_back(norm);
    if (!std::isfinite(norm) || norm > settings.divergence_factor * std::max(r0, tol)) {
      std::ostringstream os;
      os << "Newton diverged at iteration " << k + 1 << " (residual " << norm << ")";
      throw NonConvergenceError(os.str(), norm);
    }
  }
  if (norm <= tol) {
    res.iterations = settings.max_iter;
    return res;
  }
  std::ostringstream os;
  os << "Newton did not converge in " << settings.max_iter << " iterations (residual " << norm
     << ", tolerance " << tol << ")";
  throw NonConvergenceError(os.str(), norm);
}

double default_residual_scale(const HyperelasticProblem& problem) {
  const Mesh& m = problem.mesh();
  double total = 0.0;
  for (std::size_t e = 0; e < m.num_elements(); ++e) total += std::abs(problem.element_measure(e));
  const double h = std::pow(total / static_cast<double>(m.num_elements()), 1.0 / m.dim);
  return problem.parameters().young * std::pow(h, m.dim - 1);
}

FullOrderSystem::FullOrderSystem(HyperelasticProblem& problem)
    : problem_(problem), scale_(default_residual_scale(problem)) {}

void FullOrderSystem::set_parameters(const ParameterPoint& p) {
  problem_.set_parameters(p);
  scale_ = default_residual_scale(problem_);
  jac_valid_ = false;
  factor_valid_ = false;
}

Vector FullOrderSystem::residual(const Vector& x) {
  Vector G;
  problem_.residual_and_jacobian(x, G, jac_);
  jac_at_ = x;
  jac_valid_ = true;
  factor_valid_ = false;
  return G;
}

void FullOrderSystem::linearize(const Vector& x) {
  if (jac_valid_ && jac_at_.size() == x.size() && jac_at_ == x) return;
  residual(x);
}

void FullOrderSystem::factorize() {
  if (factor_valid_) return;
  if (!analyzed_) {
    ldlt_.analyzePattern(jac_);
    analyzed_ = true;
  }
  ldlt_.factorize(jac_);
  if (ldlt_.info() != Eigen::Success) {
    throw Error(ErrorCode::kSingularJacobian, "sparse LDL^T factorization failed");
  }
  const Vector& d = ldlt_.vectorD();
  const double dmax = d.cwiseAbs().maxCoeff();
  const double dmin = d.cwiseAbs().minCoeff();
  if (!(dmin > 1e-13 * dmax)) {
    std::ostringstream os;
    os << "Jacobian is numerically singular (pivot ratio " << dmin / dmax << ")";
    throw Error(ErrorCode::kSingularJacobian, os.str());
  }
  negative_pivots_ = static_cast<int>((d.array() < 0.0).count());
  factor_valid_ = true;
}

Vector FullOrderSystem::solve_linearized(const Vector& x, const Vector& r) {
  linearize(x);
  factorize();
  Vector dx = ldlt_.solve(r);
  if (!dx.allFinite()) throw Error(ErrorCode::kSingularJacobian, "linear solve produced non-finite values");
  return dx;
}

int FullOrderSystem::unstable_modes(const Vector& x) {
  linearize(x);
  factorize();
  return negative_pivots_;
}

Vector FullOrderSystem::direction_to_coordinates(const Vector& du) const {
  Vector d = du;
  for (auto i : problem_.dofs().constrained_dofs()) d[i] = 0.0;
  return d;
}

Vector FullOrderSystem::adjust_for_parameters(const Vector& x) const {
  Vector y = x.size() == problem_.size() ? x : Vector::Zero(problem_.size());
  const Vector lift = problem_.lifting();
  for (auto i : problem_.dofs().constrained_dofs()) y[i] = lift[i];
  return y;
}

const char* functional_name(FunctionalKind kind) {
  switch (kind) {
    case FunctionalKind::kInfNormY: return "inf_norm_y";
    case FunctionalKind::kInfNormZ: return "inf_norm_z";
    case FunctionalKind::kSumInfXY: return "sum_inf_xy";
  }
  return "?";
}

double output_functional(FunctionalKind kind, const Vector& u, int dim) {
  auto inf_norm = [&](int c) {
    if (c >= dim) {
      std::ostringstream os;
      os << "functional " << functional_name(kind) << " needs component " << c
         << " but the problem has dimension " << dim;
      throw Error(ErrorCode::kInvalidFunctional, os.str());
    }
    double m = 0.0;
    for (Eigen::Index i = c; i < u.size(); i += dim) m = std::max(m, std::abs(u[i]));
    return m;
  };
  switch (kind) {
    case FunctionalKind::kInfNormY: return inf_norm(1);
    case FunctionalKind::kInfNormZ: return inf_norm(2);
    case FunctionalKind::kSumInfXY: return inf_norm(0) + inf_norm(1);
  }
  return 0.0;
}

Vector seed_direction(const HyperelasticProblem& problem, SeedShape shape, int transverse_axis) {
  const Mesh& m = problem.mesh();
  const int d = m.dim;
  const int axial = m.info.axial_axis;
  if (transverse_axis < 0 || transverse_axis >= d || transverse_axis == axial) {
    throw Error(ErrorCode::kInvalidArgument, "seed transverse axis must differ from the axial axis");
  }
  const double length = m.info.extent[axial];
  const double center = m.info.kind == "tube" ? 0.0 : 0.5 * m.info.extent[transverse_axis];
  const double pi = std::numbers::pi;
  Vector psi = Vector::Zero(problem.size());
  for (std::size_t n = 0; n < m.num_nodes(); ++n) {
    const double xi = m.nodes[n][axial] / length;
    double w = 0.0, dw = 0.0;  // w(xi), dw/dxi
    switch (shape) {
      case SeedShape::kSine:
        w = std::sin(pi * xi);
        dw = pi * std::cos(pi * xi);
        break;
      case SeedShape::kClamped:
        w = 0.5 * (1.0 - std::cos(2.0 * pi * xi));
        dw = pi * std::sin(2.0 * pi * xi);
        break;
      case SeedShape::kCantilever:
        w = 1.0 - std::cos(0.5 * pi * xi);
        dw = 0.5 * pi * std::sin(0.5 * pi * xi);
        break;
    }
    const auto node = static_cast<int>(n);
    psi[problem.dofs().dof(node, transverse_axis)] = w;
    psi[problem.dofs().dof(node, axial)] = -(m.nodes[n][transverse_axis] - center) * dw / length;
  }
  for (auto i : problem.dofs().constrained_dofs()) psi[i] = 0.0;
  double wmax = 0.0;
  for (std::size_t n = 0; n < m.num_nodes(); ++n) {
    wmax = std::max(wmax, std::abs(psi[problem.dofs().dof(static_cast<int>(n), transverse_axis)]));
  }
  if (wmax > 0.0) psi /= wmax;
  return psi;
}

void validate_plan(const ContinuationPlan& plan) {
  if (!(plan.mu_step > 0.0) || !std::isfinite(plan.mu_step)) {
    std::ostringstream os;
    os << "continuation step must be positive (got " << plan.mu_step << ")";
    throw Error(ErrorCode::kInvalidPlan, os.str());
  }
  if (plan.count < 1) throw Error(ErrorCode::kInvalidPlan, "continuation plan has no points");
  if (plan.max_halvings < 0) throw Error(ErrorCode::kInvalidPlan, "max_halvings must be >= 0");
}

namespace {

bool is_solver_failure(const Error& e) {
  return e.code() == ErrorCode::kNonConvergence || e.code() == ErrorCode::kSingularJacobian ||
         e.code() == ErrorCode::kInadmissibleState;
}


// Converges at parameters p from guess x0, retrying with local load steps
// from (mu_prev, x_prev) when the direct attempt fails.
std::optional<NewtonResult> solve_point(NonlinearSystem& system, ParameterPoint p,
                                        const Vector& x0, double mu_prev, const Vector& x_prev,
                                        int max_halvings, const NewtonSettings& settings) {
  const double mu = p.mu;
  try {
    system.set_parameters(p);
    return newton_solve(system, system.adjust_for_parameters(x0), settings);
  } catch (const Error& e) {
    if (!is_solver_failure(e)) throw;
  }
  for (int h = 1; h <= max_halvings; ++h) {
    const int sub = 1 << h;
    NewtonResult acc;
    acc.x = x_prev;
    try {
      for (int k = 1; k <= sub; ++k) {
        p.mu = mu_prev + (mu - mu_prev) * k / sub;
        system.set_parameters(p);
        auto res = newton_solve(system, system.adjust_for_parameters(acc.x), settings);
        acc.x = std::move(res.x);
        acc.iterations += res.iterations;
      }
      return acc;
    } catch (const Error& e) {
      if (!is_solver_failure(e)) throw;
    }
  }
  p.mu = mu;
  system.set_parameters(p);
  return std::nullopt;
}

}  // namespace

Branch continuation_sweep(NonlinearSystem& system, const ContinuationPlan& plan,
                          const NewtonSettings& settings, const Vector& initial_state) {
  validate_plan(plan);
  const auto t0 = std::chrono::steady_clock::now();
  const int dim = system.spatial_dim();
  Branch branch;
  branch.base = plan.base;

  ParameterPoint p = plan.base;
  p.mu = plan.mu_start;
  system.set_parameters(p);
  Vector x_prev = initial_state.size() > 0 ? system.to_coordinates(initial_state)
                                           : Vector(Vector::Zero(system.size()));
  double mu_prev = plan.mu_start;

  Vector kick;
  if (plan.seed.enabled) {
    if (plan.seed.direction.size() == 0) {
      throw Error(ErrorCode::kInvalidPlan, "seeding enabled without a seed direction");
    }
    kick = system.direction_to_coordinates(plan.seed.direction) *
           (plan.seed.amplitude * static_cast<double>(plan.seed.sign));
  }
  bool switched = false;

  for (int j = 0; j < plan.count; ++j) {
    p.mu = plan.mu_at(j);
    BranchPoint pt;
    pt.mu = p.mu;
    auto res = solve_point(system, p, x_prev, mu_prev, x_prev, j == 0 ? 0 : plan.max_halvings,
                           settings);
    if (!res) {
      if (j == 0) {
        std::ostringstream os;
        os << "continuation failed at the first point mu = " << p.mu;
        throw Error(ErrorCode::kNonConvergence, os.str());
      }
      pt.s = branch.points.back().s;
      branch.points.push_back(std::move(pt));
      continue;
    }
    Vector x = std::move(res->x);
    pt.newton_iters = res->iterations;
    Vector u = system.reconstruct(x);
    pt.s = output_functional(plan.functional, u, dim);

    if (plan.seed.enabled && !switched) {
      int unstable = 0;
      try {
        unstable = system.unstable_modes(x);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kSingularJacobian) throw;
        unstable = 1;
      }
      // Lost stability on the symmetric branch: push along the seed and
      // re-solve, doubling the kick if Newton falls back.
      for (int attempt = 0; unstable > 0 && attempt < 2; ++attempt) {
        const double scale = attempt == 0 ? 1.0 : 2.0;
        auto kicked = solve_point(system, p, x + scale * kick, p.mu, x, 0, settings);
        if (!kicked) continue;
        Vector uk = system.reconstruct(kicked->x);
        const double sk = output_functional(plan.functional, uk, dim);
        pt.newton_iters += kicked->iterations;
        if (sk > pt.s + plan.threshold) {
          x = std::move(kicked->x);
          u = std::move(uk);
          pt.s = sk;
          pt.switched = true;
          switched = true;
          break;
        }
      }
      system.set_parameters(p);
    }
    pt.converged = true;
    branch.total_newton_iters += pt.newton_iters;
    if (plan.keep_states) pt.u = std::move(u);
    x_prev = std::move(x);
    mu_prev = p.mu;
    branch.points.push_back(std::move(pt));
  }
  branch.critical = detect_critical(branch, plan.threshold);
  branch.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return branch;
}

std::optional<double> detect_critical(const Branch& branch, double threshold) {
  std::vector<const BranchPoint*> pts;
  for (const auto& pt : branch.points) {
    if (pt.converged) pts.push_back(&pt);
  }
  if (pts.empty()) return std::nullopt;
  if (pts.front()->s <= threshold) {
    for (const auto* pt : pts) {
      if (pt->s > threshold) return pt->mu;
    }
    return std::nullopt;
  }
  // Imperfect bifurcation: the branch leaves the trivial state from the
  // start, so take the knee (largest discrete second derivative of s).
  if (pts.size() < 3) return std::nullopt;
  double best = 0.0;
  std::optional<double> knee;
  for (std::size_t k = 1; k + 1 < pts.size(); ++k) {
    const double h0 = pts[k]->mu - pts[k - 1]->mu;
    const double h1 = pts[k + 1]->mu - pts[k]->mu;
    const double d2 = 2.0 * ((pts[k + 1]->s - pts[k]->s) / h1 - (pts[k]->s - pts[k - 1]->s) / h0) /
                      (h0 + h1);
    if (d2 > best) {
      best = d2;
      knee = pts[k]->mu;
    }
  }
  return knee;
}

}  // namespace buckrom
