#include "buckrom/hyperreduction.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "buckrom/error.hpp"

namespace buckrom {

DenseMatrix deim_snapshots(HyperelasticProblem& problem, const SnapshotSet& set,
                           const PodBasis& basis, bool tangent_snapshots) {
  if (set.count() == 0) throw Error(ErrorCode::kDegenerate, "no snapshots for DEIM");
  const Eigen::Index n = basis.dimension();
  const Eigen::Index per = 2 + (tangent_snapshots ? n : 0);
  DenseMatrix F(problem.size(), set.count() * per);
  SparseMatrix J;
  Vector G;
  for (Eigen::Index i = 0; i < set.count(); ++i) {
    problem.set_parameters(set.params[static_cast<std::size_t>(i)]);
    const Vector lift = problem.lifting();
    const Vector u = lift + set.S.col(i);
    const Vector up = lift + basis.V * (basis.V.transpose() * set.S.col(i));
    F.col(i * per) = problem.internal_force(u);
    F.col(i * per + 1) = problem.internal_force(up);
    if (tangent_snapshots) {
      problem.residual_and_jacobian(u, G, J);
      F.middleCols(i * per + 2, n) = J * basis.V;
    }
  }
  for (auto c : problem.dofs().constrained_dofs()) F.row(c).setZero();
  // Forces and tangent columns differ by orders of magnitude; equal weights.
  for (Eigen::Index j = 0; j < F.cols(); ++j) {
    const double nrm = F.col(j).norm();
    if (nrm > 0.0) F.col(j) /= nrm;
  }
  return F;
}

std::vector<Eigen::Index> deim_indices(const DenseMatrix& H) {
  std::vector<Eigen::Index> p;
  p.reserve(static_cast<std::size_t>(H.cols()));
  for (Eigen::Index k = 0; k < H.cols(); ++k) {
    Vector r = H.col(k);
    if (k > 0) {
      DenseMatrix PH(k, k);
      Vector Pr(k);
      for (Eigen::Index a = 0; a < k; ++a) {
        PH.row(a) = H.row(p[a]).head(k);
        Pr[a] = H(p[a], k);
      }
      const Vector c = PH.partialPivLu().solve(Pr);
      r -= H.leftCols(k) * c;
    }
    Eigen::Index idx = 0;
    const double best = r.cwiseAbs().maxCoeff(&idx);
    if (!(best > 1e-14 * H.col(k).cwiseAbs().maxCoeff()) ||
        std::find(p.begin(), p.end(), idx) != p.end()) {
      std::ostringstream os;
      os << "DEIM interpolation matrix is singular at mode " << k + 1;
      throw Error(ErrorCode::kDegenerate, os.str());
    }
    p.push_back(idx);
  }
  return p;
}

DeimModel deim_build(const DenseMatrix& snapshots, const DeimSettings& settings) {
  if (settings.modes <= 0 && !(settings.greedy_tolerance > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "DEIM needs a positive tolerance or a mode count");
  }
  if (snapshots.size() == 0 || snapshots.cwiseAbs().maxCoeff() == 0.0) {
    throw Error(ErrorCode::kDegenerate, "all DEIM snapshots are zero");
  }
  Eigen::BDCSVD<DenseMatrix> svd(snapshots, Eigen::ComputeThinU);
  DeimModel model;
  model.sigma = svd.singularValues();
  const double smax = model.sigma[0];
  Eigen::Index rank = 0;
  while (rank < model.sigma.size() && model.sigma[rank] > 1e-13 * smax) ++rank;

  Eigen::Index m = settings.modes > 0 ? settings.modes
                                      : pod_truncation(model.sigma, settings.greedy_tolerance);
  m = std::clamp<Eigen::Index>(m, 1, rank);
  const Eigen::Index avail = std::min<Eigen::Index>(rank, m + std::max(settings.reserve, 0));
  model.H = svd.matrixU().leftCols(avail);
  model.indices = deim_indices(model.H);
  model.active = static_cast<int>(m);
  return model;
}

Vector deim_interpolate(const DeimModel& model, int m, const Vector& f) {
  if (m < 1 || m > model.available()) throw Error(ErrorCode::kInvalidArgument, "DEIM mode count out of range");
  DenseMatrix PH(m, m);
  Vector Pf(m);
  for (int a = 0; a < m; ++a) {
    PH.row(a) = model.H.row(model.indices[a]).head(m);
    Pf[a] = f[model.indices[a]];
  }
  return model.H.leftCols(m) * PH.partialPivLu().solve(Pf);
}

DeimSystem::DeimSystem(HyperelasticProblem& problem, const PodBasis& basis,
                       const DeimModel& model, int modes)
    : ReducedSystem(problem, basis), model_(model) {
  if (model.H.rows() != problem.size()) {
    throw Error(ErrorCode::kStaleArtifact, "DEIM model does not match the problem size");
  }
  set_modes(modes > 0 ? modes : model.active);
}

void DeimSystem::set_modes(int m) {
  if (m < 1 || m > model_.available()) {
    std::ostringstream os;
    os << "DEIM mode count " << m << " outside [1, " << model_.available() << "]";
    throw Error(ErrorCode::kInvalidArgument, os.str());
  }
  m_ = m;
  const Mesh& mesh = problem_.mesh();
  const int d = mesh.dim;

  DenseMatrix PH(m, m);
  for (int a = 0; a < m; ++a) PH.row(a) = model_.H.row(model_.indices[a]).head(m);
  Eigen::FullPivLU<DenseMatrix> lu(PH);
  if (!lu.isInvertible()) throw Error(ErrorCode::kDegenerate, "DEIM interpolation matrix is singular");
  M_ = (basis_.V.transpose() * model_.H.leftCols(m)) * lu.inverse();

  // Elements touching a sampled node, and which of their local rows feed
  // which sample.
  std::vector<int> sample_of(static_cast<std::size_t>(problem_.size()), -1);
  for (int a = 0; a < m; ++a) sample_of[static_cast<std::size_t>(model_.indices[a])] = a;
  contributions_.clear();
  support_.clear();
  const int npe = d + 1;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    bool touched = false;
    for (int l = 0; l < npe * d; ++l) {
      const int s = sample_of[static_cast<std::size_t>(problem_.local_to_global(e, l))];
      if (s >= 0) {
        contributions_.push_back({support_.size(), l, s});
        touched = true;
      }
    }
    if (touched) support_.push_back(e);
  }
  for (auto& c : contributions_) c.element = support_[c.element];

  std::vector<Eigen::Index> dofs;
  for (auto e : support_) {
    for (int l = 0; l < npe * d; ++l) dofs.push_back(problem_.local_to_global(e, l));
  }
  std::sort(dofs.begin(), dofs.end());
  dofs.erase(std::unique(dofs.begin(), dofs.end()), dofs.end());
  support_dofs_ = std::move(dofs);

  const auto ns = static_cast<Eigen::Index>(support_dofs_.size());
  V_support_.resize(ns, basis_.dimension());
  lift0_support_.resize(ns);
  lift1_support_.resize(ns);
  for (Eigen::Index k = 0; k < ns; ++k) {
    const auto i = support_dofs_[static_cast<std::size_t>(k)];
    V_support_.row(k) = basis_.V.row(i);
    lift0_support_[k] = problem_.lifting_constant()[i];
    lift1_support_[k] = problem_.lifting_per_mu()[i];
  }
  work_ = Vector::Zero(problem_.size());
  loads_ready_ = false;
  invalidate();
}

void DeimSystem::refresh_loads() {
  const double mu_g = problem_.parameters().mu_g;
  if (loads_ready_ && mu_g == loads_mu_g_) return;
  ext0_reduced_ = basis_.V.transpose() * problem_.external_force_constant();
  ext1_reduced_ = basis_.V.transpose() * problem_.external_force_per_mu();
  loads_mu_g_ = mu_g;
  loads_ready_ = true;
}

void DeimSystem::set_parameters(const ParameterPoint& p) {
  ReducedSystem::set_parameters(p);
  refresh_loads();
}

Vector DeimSystem::sampled_internal_force(const Vector& u) const {
  Vector fs = Vector::Zero(m_);
  double f[12];
  std::size_t last = static_cast<std::size_t>(-1);
  for (const auto& c : contributions_) {
    if (c.element != last) {
      problem_.element_force(c.element, u, f);
      last = c.element;
    }
    fs[c.sample] += f[c.local];
  }
  return fs;
}

void DeimSystem::evaluate(const Vector& x, Vector& G, DenseMatrix& J) {
  refresh_loads();
  const double mu = problem_.parameters().mu;
  const Vector us = lift0_support_ + mu * lift1_support_ + V_support_ * x;
  for (std::size_t k = 0; k < support_dofs_.size(); ++k) work_[support_dofs_[k]] = us[static_cast<Eigen::Index>(k)];

  const int nl = problem_.element_dofs();
  const Eigen::Index n = basis_.dimension();
  Vector fs = Vector::Zero(m_);
  DenseMatrix Js = DenseMatrix::Zero(m_, n);
  double f[12];
  double K[144];
  std::size_t last = static_cast<std::size_t>(-1);
  // Row positions of each local DoF inside V_support_.
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(nl));
  for (const auto& c : contributions_) {
    if (c.element != last) {
      problem_.element_force_and_stiffness(c.element, work_, f, K);
      for (int b = 0; b < nl; ++b) {
        const auto gi = problem_.local_to_global(c.element, b);
        rows[static_cast<std::size_t>(b)] =
            std::lower_bound(support_dofs_.begin(), support_dofs_.end(), gi) - support_dofs_.begin();
      }
      last = c.element;
    }
    fs[c.sample] += f[c.local];
    for (int b = 0; b < nl; ++b) {
      Js.row(c.sample) += K[c.local * nl + b] * V_support_.row(rows[static_cast<std::size_t>(b)]);
    }
  }
  G = M_ * fs - ext0_reduced_ - mu * ext1_reduced_;
  J = M_ * Js;
}

Branch deim_sweep(DeimSystem& system, const ContinuationPlan& plan, const NewtonSettings& settings) {
  for (;;) {
    const bool more = system.modes() + 5 <= system.available_modes();
    try {
      Branch b = continuation_sweep(system, plan, settings);
      const bool failed = std::any_of(b.points.begin(), b.points.end(),
                                      [](const BranchPoint& p) { return !p.converged; });
      if (!failed || !more) return b;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNonConvergence || !more) throw;
    }
    system.set_modes(system.modes() + 5);
  }
}

}  // namespace buckrom
