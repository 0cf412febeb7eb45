#pragma once

#include <vector>

#include "buckrom/rom.hpp"

namespace buckrom {

struct DeimSettings {
  /// Relative energy tolerance on the residual-snapshot spectrum.
  double greedy_tolerance = 1e-10;
  /// Fixed mode count; overrides the tolerance when > 0.
  int modes = 0;
  /// Extra modes kept beyond the selected count for the divergence retry.
  int reserve = 10;
  /// Add J(u_i) V columns to the residual snapshots.
  bool tangent_snapshots = true;
};

/// Residual basis and nested interpolation indices. Only the first
/// `active` modes are used online; the rest are held for retries.
struct DeimModel {
  DenseMatrix H;                       // N_full x available, orthonormal
  std::vector<Eigen::Index> indices;   // one per column of H, nested greedy order
  Vector sigma;                        // spectrum of the residual snapshots
  int active = 0;

  int available() const { return static_cast<int>(H.cols()); }
};

/// Internal-force snapshots for DEIM: f_int at each converged state and at
/// its projection onto the basis, plus (optionally) the tangent columns
/// J(u_i) V. Constrained rows are zero; nonzero columns have unit norm.
DenseMatrix deim_snapshots(HyperelasticProblem& problem, const SnapshotSet& set,
                           const PodBasis& basis, bool tangent_snapshots);

/// POD of the snapshots followed by greedy index selection. Throws
/// kDegenerate for all-zero snapshots or a singular interpolation matrix.
DeimModel deim_build(const DenseMatrix& snapshots, const DeimSettings& settings);

/// Greedy DEIM indices for the columns of H.
std::vector<Eigen::Index> deim_indices(const DenseMatrix& H);

/// Interpolant of f from its values at the first m indices: H_m (P H_m)^{-1} P f.
Vector deim_interpolate(const DeimModel& model, int m, const Vector& f);

/// Reduced system whose internal force is interpolated from m sampled DoFs.
/// Each evaluation assembles only the elements touching those DoFs.
class DeimSystem final : public ReducedSystem {
 public:
  DeimSystem(HyperelasticProblem& problem, const PodBasis& basis, const DeimModel& model,
             int modes = 0);

  void set_parameters(const ParameterPoint& p) override;
  void evaluate(const Vector& x, Vector& G, DenseMatrix& J) override;

  /// Rebuilds the online operators for m modes (1 <= m <= available).
  void set_modes(int m);
  int modes() const { return m_; }
  int available_modes() const { return model_.available(); }
  std::size_t support_size() const { return support_.size(); }
  const std::vector<std::size_t>& support() const { return support_; }

  /// Sampled internal-force entries at a full displacement u (assembled on
  /// the support only).
  Vector sampled_internal_force(const Vector& u) const;

 private:
  void refresh_loads();

  const DeimModel& model_;
  int m_ = 0;
  DenseMatrix M_;  // V^T H (P H)^{-1}, N x m

  struct Contribution {
    std::size_t element;
    int local;   // local row in the element vector
    int sample;  // row in the sampled vector
  };
  std::vector<Contribution> contributions_;
  std::vector<std::size_t> support_;
  std::vector<Eigen::Index> support_dofs_;
  std::vector<int> element_slot_;  // support element -> first slot in the local cache
  DenseMatrix V_support_;          // basis rows at support_dofs_
  Vector lift0_support_, lift1_support_;
  Vector ext0_reduced_, ext1_reduced_;
  double loads_mu_g_ = 0.0;
  bool loads_ready_ = false;
  mutable Vector work_;  // full-size displacement, written only at support DoFs
};

/// Reduced sweep with the DEIM system; when a point fails to converge the
/// whole sweep is repeated with 5 more modes while modes remain. The mode
/// count finally used is left in the system.
Branch deim_sweep(DeimSystem& system, const ContinuationPlan& plan, const NewtonSettings& settings);

}  // namespace buckrom
