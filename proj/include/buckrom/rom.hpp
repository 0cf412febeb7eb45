#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "buckrom/solver.hpp"

namespace buckrom {

/// Homogenized high-fidelity solutions u(mu_i) - R_D(mu_i), one per column.
struct SnapshotSet {
  DenseMatrix S;
  std::vector<ParameterPoint> params;

  Eigen::Index rows() const { return S.rows(); }
  Eigen::Index count() const { return S.cols(); }
};

/// Runs every sweep on the full-order model and concatenates the converged
/// states. Branches are returned through `branches` when non-null.
SnapshotSet collect_snapshots(HyperelasticProblem& problem,
                              const std::vector<ContinuationPlan>& sweeps,
                              const NewtonSettings& settings,
                              std::vector<Branch>* branches = nullptr);

/// Appends the converged states of `branch` (states must be kept).
void append_snapshots(SnapshotSet& set, HyperelasticProblem& problem, const Branch& branch);

struct PodBasis {
  DenseMatrix V;        // N_full x N, orthonormal columns
  Vector sigma;         // all singular values, descending
  double tolerance = 0.0;

  Eigen::Index full_size() const { return V.rows(); }
  Eigen::Index dimension() const { return V.cols(); }
};

/// Smallest n with sum_{k>n} sigma_k^2 <= eps^2 * sum_k sigma_k^2.
Eigen::Index pod_truncation(const Vector& sigma, double eps);

/// Thin SVD of S truncated with the relative energy criterion. Throws
/// kEmptyBasis when S has no columns or is identically zero.
PodBasis pod_compress(const DenseMatrix& S, double eps);

/// Dense Galerkin projection: G_N = V^T G(R_D + V x), J_N = V^T J V.
/// Coordinates x are the N POD coefficients.
class ReducedSystem : public NonlinearSystem {
 public:
  ReducedSystem(HyperelasticProblem& problem, const PodBasis& basis);

  Eigen::Index size() const override { return basis_.dimension(); }
  int spatial_dim() const override { return problem_.dim(); }
  void set_parameters(const ParameterPoint& p) override;
  const ParameterPoint& parameters() const override { return problem_.parameters(); }
  Vector residual(const Vector& x) override;
  Vector solve_linearized(const Vector& x, const Vector& r) override;
  int unstable_modes(const Vector& x) override;
  double residual_scale() const override { return scale_; }
  Vector reconstruct(const Vector& x) const override;
  Vector to_coordinates(const Vector& u) const override;
  Vector direction_to_coordinates(const Vector& du) const override;

  /// Reduced residual and Jacobian at x.
  virtual void evaluate(const Vector& x, Vector& G, DenseMatrix& J);

  const PodBasis& basis() const { return basis_; }
  HyperelasticProblem& problem() { return problem_; }

 protected:
  void invalidate() { jac_valid_ = false; }

  HyperelasticProblem& problem_;
  const PodBasis& basis_;
  double scale_;

 private:
  void linearize(const Vector& x);

  DenseMatrix jac_;
  Vector jac_at_;
  bool jac_valid_ = false;
  SparseMatrix full_jac_;
};

/// Continuation in reduced coordinates. The seed in `plan` is given as a
/// full field and projected onto the basis.
Branch reduced_sweep(ReducedSystem& system, const ContinuationPlan& plan,
                     const NewtonSettings& settings);

struct RbErrorPoint {
  double mu = 0.0;
  double error = 0.0;      // || u_N - u_h || (l2 over all DoFs)
  double reference_norm = 0.0;
  double s_reduced = 0.0;
  double s_full = 0.0;
};

struct RbErrorReport {
  std::vector<RbErrorPoint> points;
  Branch reduced;
  Branch full;
  double max_error = 0.0;
  double mean_error = 0.0;
  double argmax_mu = 0.0;
  double max_reference_norm = 0.0;
};

/// Runs the same plan on the reduced and the full-order model and compares
/// the reconstructed fields point by point.
RbErrorReport rb_error_sweep(HyperelasticProblem& problem, ReducedSystem& reduced,
                             const ContinuationPlan& plan, const NewtonSettings& settings);

/// Index, singular value, and relative tail energy per row.
void write_sigma_csv(std::ostream& out, const Vector& sigma);

}  // namespace buckrom
