#include "buckrom/rom.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <ostream>
#include <sstream>
#include <vector>

#include "buckrom/error.hpp"

namespace buckrom {

void append_snapshots(SnapshotSet& set, HyperelasticProblem& problem, const Branch& branch) {
  std::vector<const BranchPoint*> pts;
  for (const auto& pt : branch.points) {
    if (!pt.converged) continue;
    if (pt.u.size() != problem.size()) {
      throw Error(ErrorCode::kInvalidArgument, "branch states were not kept or have the wrong size");
    }
    pts.push_back(&pt);
  }
  if (set.S.rows() == 0) set.S.resize(problem.size(), 0);
  if (set.S.rows() != problem.size()) {
    throw Error(ErrorCode::kInvalidArgument, "snapshot size does not match the problem");
  }
  const Eigen::Index c0 = set.S.cols();
  set.S.conservativeResize(Eigen::NoChange, c0 + static_cast<Eigen::Index>(pts.size()));
  const Vector& l0 = problem.lifting_constant();
  const Vector& l1 = problem.lifting_per_mu();
  for (std::size_t k = 0; k < pts.size(); ++k) {
    set.S.col(c0 + static_cast<Eigen::Index>(k)) = pts[k]->u - l0 - pts[k]->mu * l1;
    ParameterPoint p = branch.base;
    p.mu = pts[k]->mu;
    set.params.push_back(p);
  }
}

SnapshotSet collect_snapshots(HyperelasticProblem& problem,
                              const std::vector<ContinuationPlan>& sweeps,
                              const NewtonSettings& settings, std::vector<Branch>* branches) {
  SnapshotSet set;
  set.S.resize(problem.size(), 0);
  FullOrderSystem system(problem);
  for (const auto& plan : sweeps) {
    ContinuationPlan p = plan;
    p.keep_states = true;
    Branch b = continuation_sweep(system, p, settings);
    append_snapshots(set, problem, b);
    if (branches) {
      branches->push_back(std::move(b));
    }
  }
  return set;
}

namespace {

// tail[n] = sum_{k>=n} sigma_k^2, summed from the small end so the ratio
// stays accurate below machine epsilon.
std::vector<double> tail_energies(const Vector& sigma) {
  std::vector<double> tail(static_cast<std::size_t>(sigma.size()) + 1, 0.0);
  for (Eigen::Index k = sigma.size() - 1; k >= 0; --k) {
    tail[static_cast<std::size_t>(k)] = tail[static_cast<std::size_t>(k) + 1] + sigma[k] * sigma[k];
  }
  return tail;
}

}  // namespace

Eigen::Index pod_truncation(const Vector& sigma, double eps) {
  const auto tail = tail_energies(sigma);
  const double total = tail[0];
  if (!(total > 0.0)) return 0;
  for (Eigen::Index n = 0; n < sigma.size(); ++n) {
    if (tail[static_cast<std::size_t>(n)] <= eps * eps * total) return n;
  }
  return sigma.size();
}

PodBasis pod_compress(const DenseMatrix& S, double eps) {
  if (!(eps >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "POD tolerance must be non-negative");
  if (S.cols() == 0 || S.rows() == 0) {
    throw Error(ErrorCode::kEmptyBasis, "snapshot matrix is empty");
  }
  if (S.cwiseAbs().maxCoeff() == 0.0) {
    throw Error(ErrorCode::kEmptyBasis, "all snapshots are zero");
  }
  Eigen::BDCSVD<DenseMatrix> svd(S, Eigen::ComputeThinU);
  PodBasis basis;
  basis.sigma = svd.singularValues();
  basis.tolerance = eps;
  Eigen::Index n = pod_truncation(basis.sigma, eps);
  n = std::max<Eigen::Index>(n, 1);
  basis.V = svd.matrixU().leftCols(n);
  return basis;
}

ReducedSystem::ReducedSystem(HyperelasticProblem& problem, const PodBasis& basis)
    : problem_(problem), basis_(basis), scale_(default_residual_scale(problem)) {
  if (basis.dimension() == 0) throw Error(ErrorCode::kEmptyBasis, "reduced basis has no columns");
  if (basis.full_size() != problem.size()) {
    std::ostringstream os;
    os << "basis has " << basis.full_size() << " rows but the problem has " << problem.size()
       << " DoFs";
    throw Error(ErrorCode::kStaleArtifact, os.str());
  }
}

void ReducedSystem::set_parameters(const ParameterPoint& p) {
  problem_.set_parameters(p);
  scale_ = default_residual_scale(problem_);
  invalidate();
}

void ReducedSystem::evaluate(const Vector& x, Vector& G, DenseMatrix& J) {
  const Vector u = reconstruct(x);
  Vector g;
  problem_.residual_and_jacobian(u, g, full_jac_);
  G = basis_.V.transpose() * g;
  J = basis_.V.transpose() * (full_jac_ * basis_.V);
}

Vector ReducedSystem::residual(const Vector& x) {
  Vector G;
  evaluate(x, G, jac_);
  jac_at_ = x;
  jac_valid_ = true;
  return G;
}

void ReducedSystem::linearize(const Vector& x) {
  if (jac_valid_ && jac_at_.size() == x.size() && jac_at_ == x) return;
  residual(x);
}

Vector ReducedSystem::solve_linearized(const Vector& x, const Vector& r) {
  linearize(x);
  Eigen::PartialPivLU<DenseMatrix> lu(jac_);
  if (!(lu.rcond() > 1e-14)) {
    throw Error(ErrorCode::kSingularJacobian, "reduced Jacobian is numerically singular");
  }
  Vector dx = lu.solve(r);
  if (!dx.allFinite()) throw Error(ErrorCode::kSingularJacobian, "reduced solve produced non-finite values");
  return dx;
}

int ReducedSystem::unstable_modes(const Vector& x) {
  linearize(x);
  const DenseMatrix sym = 0.5 * (jac_ + jac_.transpose());
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(sym, Eigen::EigenvaluesOnly);
  const Vector& ev = es.eigenvalues();
  const double tol = 1e-12 * ev.cwiseAbs().maxCoeff();
  return static_cast<int>((ev.array() < -tol).count());
}

Vector ReducedSystem::reconstruct(const Vector& x) const {
  const Vector lift = problem_.lifting();
  Vector u = lift + basis_.V * x;
  // SVD round-off leaves ~1e-10 entries on rows that are zero in every snapshot.
  for (auto i : problem_.dofs().constrained_dofs()) u[i] = lift[i];
  return u;
}

Vector ReducedSystem::to_coordinates(const Vector& u) const {
  return basis_.V.transpose() * (u - problem_.lifting());
}

Vector ReducedSystem::direction_to_coordinates(const Vector& du) const {
  return basis_.V.transpose() * du;
}

Branch reduced_sweep(ReducedSystem& system, const ContinuationPlan& plan,
                     const NewtonSettings& settings) {
  return continuation_sweep(system, plan, settings);
}

RbErrorReport rb_error_sweep(HyperelasticProblem& problem, ReducedSystem& reduced,
                             const ContinuationPlan& plan, const NewtonSettings& settings) {
  ContinuationPlan p = plan;
  p.keep_states = true;
  RbErrorReport rep;
  FullOrderSystem full(problem);
  rep.full = continuation_sweep(full, p, settings);
  rep.reduced = continuation_sweep(reduced, p, settings);
  double sum = 0.0;
  int n = 0;
  for (std::size_t k = 0; k < rep.full.points.size(); ++k) {
    const auto& a = rep.reduced.points[k];
    const auto& b = rep.full.points[k];
    if (!a.converged || !b.converged) continue;
    RbErrorPoint e;
    e.mu = b.mu;
    e.error = (a.u - b.u).norm();
    e.reference_norm = b.u.norm();
    e.s_reduced = a.s;
    e.s_full = b.s;
    rep.points.push_back(e);
    sum += e.error;
    ++n;
    rep.max_reference_norm = std::max(rep.max_reference_norm, e.reference_norm);
    if (e.error > rep.max_error || n == 1) {
      rep.max_error = e.error;
      rep.argmax_mu = e.mu;
    }
  }
  if (n == 0) throw Error(ErrorCode::kNonConvergence, "no point converged on both models");
  rep.mean_error = sum / n;
  return rep;
}

void write_sigma_csv(std::ostream& out, const Vector& sigma) {
  const auto tail = tail_energies(sigma);
  const double total = tail[0];
  out << "index,sigma,relative_tail_energy\n";
  out.precision(17);
  for (Eigen::Index k = 0; k < sigma.size(); ++k) {
    out << k + 1 << ',' << sigma[k] << ','
        << (total > 0.0 ? tail[static_cast<std::size_t>(k) + 1] / total : 0.0) << '\n';
  }
}

}  // namespace buckrom
