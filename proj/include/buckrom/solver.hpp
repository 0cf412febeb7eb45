#pragma once

#include <Eigen/SparseCholesky>
#include <optional>
#include <vector>

#include "buckrom/assembly.hpp"

namespace buckrom {

struct NewtonSettings {
  /// Absolute residual threshold, multiplied by the system's force scale.
  double abs_tol = 1e-9;
  /// Threshold relative to the initial residual norm.
  double rel_tol = 1e-10;
  int max_iter = 25;
  /// Abort when the residual grows by this factor over the initial one.
  double divergence_factor = 1e4;
};

/// Nonlinear algebraic system in some coordinates x (full DoFs or reduced
/// coefficients) together with its map back to the full displacement field.
class NonlinearSystem {
 public:
  virtual ~NonlinearSystem() = default;

  virtual Eigen::Index size() const = 0;
  /// Spatial dimension of the underlying displacement field.
  virtual int spatial_dim() const = 0;
  virtual void set_parameters(const ParameterPoint& p) = 0;
  virtual const ParameterPoint& parameters() const = 0;

  virtual Vector residual(const Vector& x) = 0;
  /// Solves J(x) dx = r. Throws a kSingularJacobian error when the linear
  /// system cannot be factorized.
  virtual Vector solve_linearized(const Vector& x, const Vector& r) = 0;
  /// Number of negative eigenvalues of the (symmetric part of the) Jacobian
  /// at x.
  virtual int unstable_modes(const Vector& x) = 0;
  /// Force scale that turns NewtonSettings::abs_tol into a residual norm.
  virtual double residual_scale() const = 0;

  /// Full displacement field u for coordinates x at the current parameters.
  virtual Vector reconstruct(const Vector& x) const = 0;
  /// Coordinates of a full displacement field (lifting removed).
  virtual Vector to_coordinates(const Vector& u) const = 0;
  /// Coordinates of a homogeneous displacement increment.
  virtual Vector direction_to_coordinates(const Vector& du) const = 0;
  /// Updates a guess after the parameters changed (new Dirichlet values).
  virtual Vector adjust_for_parameters(const Vector& x) const { return x; }
};

struct NewtonResult {
  Vector x;
  int iterations = 0;
  std::vector<double> residual_history;
};

/// Newton-Kantorovich iteration x <- x - J(x)^{-1} G(x). Throws
/// NonConvergenceError, a kSingularJacobian Error, or propagates
/// InadmissibleStateError when step halving cannot recover an admissible
/// iterate.
NewtonResult newton_solve(NonlinearSystem& system, const Vector& x0, const NewtonSettings& settings);

/// High-fidelity system: coordinates are the full DoF vector (constrained
/// entries hold the Dirichlet values), solved with a sparse LDL^T.
class FullOrderSystem final : public NonlinearSystem {
 public:
  explicit FullOrderSystem(HyperelasticProblem& problem);

  Eigen::Index size() const override { return problem_.size(); }
  int spatial_dim() const override { return problem_.dim(); }
  void set_parameters(const ParameterPoint& p) override;
  const ParameterPoint& parameters() const override { return problem_.parameters(); }
  Vector residual(const Vector& x) override;
  Vector solve_linearized(const Vector& x, const Vector& r) override;
  int unstable_modes(const Vector& x) override;
  double residual_scale() const override { return scale_; }
  Vector reconstruct(const Vector& x) const override { return x; }
  Vector to_coordinates(const Vector& u) const override { return adjust_for_parameters(u); }
  Vector direction_to_coordinates(const Vector& du) const override;
  Vector adjust_for_parameters(const Vector& x) const override;

  HyperelasticProblem& problem() { return problem_; }

 private:
  void linearize(const Vector& x);
  void factorize();

  HyperelasticProblem& problem_;
  double scale_;
  SparseMatrix jac_;
  Vector jac_at_;
  bool jac_valid_ = false;
  bool factor_valid_ = false;
  bool analyzed_ = false;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  int negative_pivots_ = 0;
};

/// Force scale E * h^{d-1} with h the mean element size.
double default_residual_scale(const HyperelasticProblem& problem);

enum class FunctionalKind { kInfNormY, kInfNormZ, kSumInfXY };

const char* functional_name(FunctionalKind kind);

/// Max absolute nodal value of the selected component(s) of u (node-major,
/// `dim` entries per node).
double output_functional(FunctionalKind kind, const Vector& u, int dim);

enum class SeedShape { kSine, kClamped, kCantilever };

/// Transverse buckling seed: w(xi) on the transverse component with the
/// matching Euler-Bernoulli rotation on the axial component, zero on
/// constrained DoFs and normalized to max |w| = 1.
Vector seed_direction(const HyperelasticProblem& problem, SeedShape shape, int transverse_axis);

struct SeedPolicy {
  bool enabled = false;
  /// Kick size (m) along the seed direction.
  double amplitude = 0.0;
  int sign = 1;
  Vector direction;  // full-space field, see seed_direction
};

struct ContinuationPlan {
  double mu_start = 0.0;
  double mu_step = 0.0;
  int count = 0;
  ParameterPoint base;  // E, nu, mu_g of this branch
  SeedPolicy seed;
  FunctionalKind functional = FunctionalKind::kInfNormY;
  /// s(u) above which a state counts as buckled.
  double threshold = 1e-3;
  /// Local halvings of the step on non-convergence.
  int max_halvings = 4;
  bool keep_states = true;

  double mu_at(int j) const { return mu_start + j * mu_step; }
};

struct BranchPoint {
  double mu = 0.0;
  Vector u;  // full displacement (empty when states are not kept)
  double s = 0.0;
  int newton_iters = 0;
  bool converged = false;
  bool switched = false;  // accepted after a kick along the seed
};

struct Branch {
  ParameterPoint base;
  std::vector<BranchPoint> points;
  std::optional<double> critical;
  double wall_seconds = 0.0;
  int total_newton_iters = 0;
};

/// Simple continuation: each step starts from the previous converged state.
/// Until the first switch, a converged state that has lost stability is
/// kicked along the seed direction and re-solved; the kicked solution is
/// accepted when s grows by more than the threshold, which moves the sweep
/// onto the buckled branch on the seed's side.
Branch continuation_sweep(NonlinearSystem& system, const ContinuationPlan& plan,
                          const NewtonSettings& settings, const Vector& initial_state = Vector());

/// Smallest converged mu with s > threshold. When the first converged
/// point is already above the threshold (symmetry broken by the loads), the
/// point of maximum curvature of s(mu) is returned instead.
std::optional<double> detect_critical(const Branch& branch, double threshold);

void validate_plan(const ContinuationPlan& plan);

}  // namespace buckrom
