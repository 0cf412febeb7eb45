#include "buckrom/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "buckrom/error.hpp"

namespace buckrom {

DofMap::DofMap(const Mesh& mesh, const BoundaryConditions& bcs)
    : dim_(mesh.dim), size_(static_cast<Eigen::Index>(mesh.num_nodes()) * mesh.dim) {
  constrained_.assign(static_cast<std::size_t>(size_), 0);
  auto require_tag = [&mesh](BoundaryTag tag) {
    for (const auto& f : mesh.facets) {
      if (f.tag == tag) return;
    }
    throw Error(ErrorCode::kInvalidArgument,
                std::string("boundary tag ") + boundary_tag_name(tag) + " not present in mesh");
  };
  for (const auto& bc : bcs.dirichlet) {
    require_tag(bc.tag);
    for (int n : mesh.tagged_nodes(bc.tag)) {
      for (int c = 0; c < dim_; ++c) {
        if (bc.mask[c]) constrained_[static_cast<std::size_t>(dof(n, c))] = 1;
      }
    }
  }
  for (const auto& bc : bcs.neumann) require_tag(bc.tag);
  for (Eigen::Index i = 0; i < size_; ++i) {
    (constrained_[static_cast<std::size_t>(i)] ? constrained_list_ : free_).push_back(i);
  }
}

Vector apply_lifting(const Mesh& mesh, const BoundaryConditions& bcs, const DofMap& dofs,
                     double mu) {
  Vector r = Vector::Zero(dofs.size());
  for (const auto& bc : bcs.dirichlet) {
    for (int n : mesh.tagged_nodes(bc.tag)) {
      for (int c = 0; c < mesh.dim; ++c) {
        if (bc.mask[c]) r[dofs.dof(n, c)] = bc.value[c] + mu * bc.per_mu[c];
      }
    }
  }
  return r;
}

Point GeometricMap::apply(const Point& x, int region) const {
  const Piece& p = piece(region);
  Eigen::Vector3d v(x[0], x[1], x[2]);
  Eigen::Vector3d y = p.jacobian * v + p.shift;
  return {y[0], y[1], y[2]};
}

GeometricMap build_geometric_map(GeometricMapKind kind, double mu_g, double split,
                                 double reference_extent) {
  GeometricMap g;
  g.kind = kind;
  g.mu_g = mu_g;
  if (kind == GeometricMapKind::kNone) return g;
  if (!(mu_g > 0.0) || !std::isfinite(mu_g)) {
    std::ostringstream os;
    os << "geometric parameter must be positive (got " << mu_g << ")";
    throw Error(ErrorCode::kInvalidGeometry, os.str());
  }
  if (kind == GeometricMapKind::kBeam2dSemilength) {
    g.axis = 0;
    g.split = split > 0.0 ? split : 0.5;
    g.reference_extent = reference_extent > 0.0 ? reference_extent : 0.5;
  } else {
    g.axis = 2;
    g.split = split > 0.0 ? split : 1.0;
    g.reference_extent = reference_extent > 0.0 ? reference_extent : 1.0;
  }
  const double stretch = mu_g / g.reference_extent;
  auto& p = g.pieces[1];
  p.jacobian(g.axis, g.axis) = stretch;
  p.shift[g.axis] = g.split * (1.0 - stretch);
  p.jacobian_inv = p.jacobian.inverse();
  p.det = p.jacobian.determinant();
  p.K = p.jacobian_inv * p.jacobian_inv.transpose() * p.det;
  return g;
}

HyperelasticProblem::HyperelasticProblem(ProblemSpec spec)
    : spec_(std::move(spec)), dofs_(*spec_.mesh, spec_.bcs) {
  if (spec_.geometry != GeometricMapKind::kNone) {
    if (spec_.mesh->region.size() != spec_.mesh->num_elements()) {
      throw Error(ErrorCode::kInvalidArgument, "mesh regions not assigned");
    }
  }
  lift0_ = apply_lifting(mesh(), spec_.bcs, dofs_, 0.0);
  lift1_ = apply_lifting(mesh(), spec_.bcs, dofs_, 1.0) - lift0_;
  build_pattern();
  ParameterPoint p;
  if (spec_.geometry == GeometricMapKind::kBeam2dSemilength) p.mu_g = 0.5;
  if (spec_.geometry == GeometricMapKind::kTubeSemilength) {
    p.mu_g = spec_.geometry_reference_extent > 0.0 ? spec_.geometry_reference_extent : 1.0;
  }
  set_parameters(p);
}

void HyperelasticProblem::set_parameters(const ParameterPoint& p) {
  const bool geometry_changed = !geometry_ready_ || p.mu_g != params_.mu_g;
  params_ = p;
  material_ = MaterialModel::from_young_poisson(spec_.material, p.young, p.poisson);
  if (geometry_changed) {
    geo_ = build_geometric_map(spec_.geometry, p.mu_g, spec_.geometry_split,
                               spec_.geometry_reference_extent);
    update_geometry();
    update_loads();
    geometry_ready_ = true;
  }
}

void HyperelasticProblem::update_geometry() {
  const Mesh& m = mesh();
  const int d = m.dim;
  const int npe = d + 1;
  grads_.assign(m.num_elements() * npe * d, 0.0);
  measure_.assign(m.num_elements(), 0.0);
  for (std::size_t e = 0; e < m.num_elements(); ++e) {
    const auto& c = m.elements[e];
    Eigen::MatrixXd edges(d, d);
    for (int a = 1; a < npe; ++a) {
      for (int i = 0; i < d; ++i) edges(i, a - 1) = m.nodes[c[a]][i] - m.nodes[c[0]][i];
    }
    // Rows of edges^{-1} are the reference gradients of phi_1..phi_d.
    const Eigen::MatrixXd inv = edges.inverse();
    Eigen::MatrixXd gref(d, npe);
    for (int a = 1; a < npe; ++a) gref.col(a) = inv.row(a - 1).transpose();
    gref.col(0) = -gref.rightCols(d).rowwise().sum();
    const auto& piece = geo_.piece(m.region.empty() ? 1 : m.region[e]);
    const Eigen::MatrixXd jinv_t = piece.jacobian_inv.topLeftCorner(d, d).transpose();
    const Eigen::MatrixXd gphys = jinv_t * gref;
    for (int a = 0; a < npe; ++a) {
      for (int i = 0; i < d; ++i) grads_[(e * npe + a) * d + i] = gphys(i, a);
    }
    measure_[e] = m.element_measure(e) * piece.det;
  }
}

void HyperelasticProblem::update_loads() {
  const Mesh& m = mesh();
  const int d = m.dim;
  const int npe = d + 1;
  ext0_ = Vector::Zero(size());
  ext1_ = Vector::Zero(size());
  for (std::size_t e = 0; e < m.num_elements(); ++e) {
    const double share = measure_[e] / npe;
    for (int a = 0; a < npe; ++a) {
      for (int c = 0; c < d; ++c) ext0_[dofs_.dof(m.elements[e][a], c)] += spec_.body_force[c] * share;
    }
  }
  for (std::size_t f = 0; f < m.facets.size(); ++f) {
    const auto& facet = m.facets[f];
    for (const auto& bc : spec_.bcs.neumann) {
      if (bc.tag != facet.tag) continue;
      // Surface measure change under the map: det(J) |J^{-T} n|.
      const auto& piece = geo_.piece(m.region.empty() ? 1 : m.region[facet.element]);
      Eigen::Vector3d n = Eigen::Vector3d::Zero();
      const auto& a = m.nodes[facet.nodes[0]];
      const auto& b = m.nodes[facet.nodes[1]];
      if (d == 2) {
        n = Eigen::Vector3d(b[1] - a[1], a[0] - b[0], 0.0);
      } else {
        const auto& c = m.nodes[facet.nodes[2]];
        const Eigen::Vector3d u(b[0] - a[0], b[1] - a[1], b[2] - a[2]);
        const Eigen::Vector3d v(c[0] - a[0], c[1] - a[1], c[2] - a[2]);
        n = u.cross(v);
      }
      n.normalize();
      const double factor = piece.det * (piece.jacobian_inv.transpose() * n).norm();
      const double share = m.facet_measure(f) * factor / d;
      for (int v = 0; v < d; ++v) {
        for (int c = 0; c < d; ++c) {
          const auto i = dofs_.dof(facet.nodes[v], c);
          ext0_[i] += bc.value[c] * share;
          ext1_[i] += bc.per_mu[c] * share;
        }
      }
    }
  }
  for (auto i : dofs_.constrained_dofs()) {
    ext0_[i] = 0.0;
    ext1_[i] = 0.0;
  }
}

void HyperelasticProblem::build_pattern() {
  const Mesh& m = mesh();
  const int nd = element_dofs();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(m.num_elements() * nd * nd);
  for (std::size_t e = 0; e < m.num_elements(); ++e) {
    for (int r = 0; r < nd; ++r) {
      for (int c = 0; c < nd; ++c) trip.emplace_back(local_to_global(e, r), local_to_global(e, c), 0.0);
    }
  }
  pattern_.resize(size(), size());
  pattern_.setFromTriplets(trip.begin(), trip.end());
  pattern_.makeCompressed();

  auto index_of = [this](Eigen::Index row, Eigen::Index col) {
    const int* outer = pattern_.outerIndexPtr();
    const int* inner = pattern_.innerIndexPtr();
    const int* lo = inner + outer[col];
    const int* hi = inner + outer[col + 1];
    const int* it = std::lower_bound(lo, hi, static_cast<int>(row));
    return static_cast<int>(it - inner);
  };
  scatter_.assign(m.num_elements() * nd * nd, -1);
  for (std::size_t e = 0; e < m.num_elements(); ++e) {
    for (int r = 0; r < nd; ++r) {
      const auto gr = local_to_global(e, r);
      if (dofs_.is_constrained(gr)) continue;
      for (int c = 0; c < nd; ++c) {
        const auto gc = local_to_global(e, c);
        if (dofs_.is_constrained(gc)) continue;
        scatter_[(e * nd + r) * nd + c] = index_of(gr, gc);
      }
    }
  }
  diag_constrained_.clear();
  for (auto i : dofs_.constrained_dofs()) diag_constrained_.push_back(index_of(i, i));
}

template <int D>
void HyperelasticProblem::element_kernel(std::size_t e, const Vector& u, double* f, double* K) const {
  constexpr int npe = D + 1;
  constexpr int nd = npe * D;
  const auto& cell = mesh().elements[e];
  const double* g = &grads_[e * npe * D];
  Mat<D> gu = Mat<D>::Zero();
  for (int a = 0; a < npe; ++a) {
    const double* ua = u.data() + static_cast<Eigen::Index>(cell[a]) * D;
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) gu(i, j) += ua[i] * g[a * D + j];
  }
  const auto state = deformation_gradient<D>(gu);
  if (material_.kind == MaterialKind::kNeoHookean && !state.admissible) {
    std::ostringstream os;
    os << "inadmissible state (det F = " << state.J << ") in element " << e;
    throw InadmissibleStateError(os.str(), static_cast<long>(e));
  }
  const double vol = measure_[e];
  Mat<D> P;
  Tangent<D> A;
  if (K != nullptr) {
    piola_and_tangent<D>(material_, state, P, A);
  } else {
    P = piola<D>(material_, state);
  }
  if (f != nullptr) {
    for (int a = 0; a < npe; ++a)
      for (int i = 0; i < D; ++i) {
        double s = 0.0;
        for (int j = 0; j < D; ++j) s += P(i, j) * g[a * D + j];
        f[a * D + i] = vol * s;
      }
  }
  if (K != nullptr) {
    // T((i,j),(b,k)) = sum_l A(ij, kl) g_b,l
    Eigen::Matrix<double, D * D, nd> T;
    for (int ij = 0; ij < D * D; ++ij)
      for (int b = 0; b < npe; ++b)
        for (int k = 0; k < D; ++k) {
          double s = 0.0;
          for (int l = 0; l < D; ++l) s += A(ij, k * D + l) * g[b * D + l];
          T(ij, b * D + k) = s;
        }
    for (int a = 0; a < npe; ++a)
      for (int i = 0; i < D; ++i)
        for (int c = 0; c < nd; ++c) {
          double s = 0.0;
          for (int j = 0; j < D; ++j) s += g[a * D + j] * T(i * D + j, c);
          K[(a * D + i) * nd + c] = vol * s;
        }
  }
}

template <int D>
double HyperelasticProblem::element_energy(std::size_t e, const Vector& u) const {
  constexpr int npe = D + 1;
  const auto& cell = mesh().elements[e];
  const double* g = &grads_[e * npe * D];
  Mat<D> gu = Mat<D>::Zero();
  for (int a = 0; a < npe; ++a) {
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) gu(i, j) += u[static_cast<Eigen::Index>(cell[a]) * D + i] * g[a * D + j];
  }
  const auto state = deformation_gradient<D>(gu);
  if (material_.kind == MaterialKind::kNeoHookean && !state.admissible) {
    throw InadmissibleStateError("inadmissible state in energy evaluation", static_cast<long>(e));
  }
  return measure_[e] * buckrom::energy<D>(material_, state);
}

void HyperelasticProblem::element_force(std::size_t e, const Vector& u, double* f) const {
  if (dim() == 2) {
    element_kernel<2>(e, u, f, nullptr);
  } else {
    element_kernel<3>(e, u, f, nullptr);
  }
}

void HyperelasticProblem::element_force_and_stiffness(std::size_t e, const Vector& u, double* f,
                                                      double* K) const {
  if (dim() == 2) {
    element_kernel<2>(e, u, f, K);
  } else {
    element_kernel<3>(e, u, f, K);
  }
}

Vector HyperelasticProblem::internal_force(const Vector& u) const {
  Vector out = Vector::Zero(size());
  const int nd = element_dofs();
  double f[12];
  for (std::size_t e = 0; e < mesh().num_elements(); ++e) {
    element_force(e, u, f);
    for (int r = 0; r < nd; ++r) out[local_to_global(e, r)] += f[r];
  }
  for (auto i : dofs_.constrained_dofs()) out[i] = 0.0;
  return out;
}

Vector HyperelasticProblem::residual(const Vector& u) const {
  return internal_force(u) - external_force();
}

void HyperelasticProblem::residual_and_jacobian(const Vector& u, Vector& G, SparseMatrix& J) const {
  if (J.nonZeros() != pattern_.nonZeros() || J.rows() != size()) J = pattern_;
  double* values = J.valuePtr();
  std::fill(values, values + J.nonZeros(), 0.0);
  G = Vector::Zero(size());
  const int nd = element_dofs();
  double f[12];
  double K[144];
  for (std::size_t e = 0; e < mesh().num_elements(); ++e) {
    element_force_and_stiffness(e, u, f, K);
    const int* sc = &scatter_[e * nd * nd];
    for (int r = 0; r < nd; ++r) {
      G[local_to_global(e, r)] += f[r];
      for (int c = 0; c < nd; ++c) {
        const int idx = sc[r * nd + c];
        if (idx >= 0) values[idx] += K[r * nd + c];
      }
    }
  }
  for (int idx : diag_constrained_) values[idx] = 1.0;
  for (auto i : dofs_.constrained_dofs()) G[i] = 0.0;
  G -= external_force();
}

void HyperelasticProblem::jacobian(const Vector& u, SparseMatrix& J) const {
  Vector unused;
  residual_and_jacobian(u, unused, J);
}

SparseMatrix HyperelasticProblem::jacobian(const Vector& u) const {
  SparseMatrix J;
  jacobian(u, J);
  return J;
}

double HyperelasticProblem::energy(const Vector& u) const {
  double stored = 0.0;
  for (std::size_t e = 0; e < mesh().num_elements(); ++e) {
    stored += dim() == 2 ? element_energy<2>(e, u) : element_energy<3>(e, u);
  }
  return stored - external_force().dot(u);
}

}  // namespace buckrom
