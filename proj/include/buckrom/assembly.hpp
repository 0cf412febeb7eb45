#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <memory>
#include <span>
#include <vector>

#include "buckrom/constitutive.hpp"
#include "buckrom/mesh.hpp"

namespace buckrom {

using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Vec3 = std::array<double, 3>;

/// One point of the full parameter space: compression/traction magnitude,
/// material constants and the geometric (semi-length) parameter.
struct ParameterPoint {
  double mu = 0.0;
  double young = 1e6;
  double poisson = 0.3;
  double mu_g = 0.0;  // ignored unless the problem carries a geometric map
};

/// u = value + mu * per_mu on the masked components of nodes tagged `tag`.
struct DirichletCondition {
  BoundaryTag tag = BoundaryTag::kDirichletLeft;
  std::array<bool, 3> mask{true, true, true};
  Vec3 value{0.0, 0.0, 0.0};
  Vec3 per_mu{0.0, 0.0, 0.0};
};

/// Reference traction T = value + mu * per_mu on facets tagged `tag`.
struct NeumannCondition {
  BoundaryTag tag = BoundaryTag::kNeumannRight;
  Vec3 value{0.0, 0.0, 0.0};
  Vec3 per_mu{0.0, 0.0, 0.0};
};

struct BoundaryConditions {
  std::vector<DirichletCondition> dirichlet;
  std::vector<NeumannCondition> neumann;
};

/// Vector P1 DoFs, node-major: dof(n, c) = n * dim + c.
class DofMap {
 public:
  DofMap(const Mesh& mesh, const BoundaryConditions& bcs);

  int dim() const { return dim_; }
  Eigen::Index size() const { return size_; }
  Eigen::Index dof(int node, int component) const {
    return static_cast<Eigen::Index>(node) * dim_ + component;
  }
  bool is_constrained(Eigen::Index i) const { return constrained_[i] != 0; }
  const std::vector<Eigen::Index>& free_dofs() const { return free_; }
  const std::vector<Eigen::Index>& constrained_dofs() const { return constrained_list_; }

 private:
  int dim_;
  Eigen::Index size_;
  std::vector<char> constrained_;
  std::vector<Eigen::Index> free_;
  std::vector<Eigen::Index> constrained_list_;
};

/// R_D(mu): prescribed values on constrained DoFs, zero elsewhere. The
/// unknown actually solved for is u - R_D, which vanishes on those DoFs.
Vector apply_lifting(const Mesh& mesh, const BoundaryConditions& bcs, const DofMap& dofs,
                     double mu);

enum class GeometricMapKind { kNone, kBeam2dSemilength, kTubeSemilength };

/// Piecewise-affine map from the reference domain: identity on region 1, a
/// stretch along `axis` on region 2,
///   x_axis -> split + (mu_g / reference_extent) * (x_axis - split).
/// With the defaults this is 2 mu_g (x - 0.5) + 0.5 for the 2-D beam and
/// mu_g (z - 1) + 1 for the tube.
struct GeometricMap {
  GeometricMapKind kind = GeometricMapKind::kNone;
  double mu_g = 0.0;
  int axis = 0;
  double split = 0.0;
  double reference_extent = 1.0;

  struct Piece {
    Eigen::Matrix3d jacobian = Eigen::Matrix3d::Identity();
    Eigen::Vector3d shift = Eigen::Vector3d::Zero();
    Eigen::Matrix3d jacobian_inv = Eigen::Matrix3d::Identity();
    double det = 1.0;
    /// K = J^{-1} J^{-T} det(J): pulls the gradient pairing back to the
    /// reference domain.
    Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
  };
  std::array<Piece, 2> pieces;  // region 1, region 2

  const Piece& piece(int region) const { return pieces[region == 2 ? 1 : 0]; }
  Point apply(const Point& x, int region) const;
};

/// `split`/`reference_extent` <= 0 select the defaults of the given kind.
GeometricMap build_geometric_map(GeometricMapKind kind, double mu_g, double split = -1.0,
                                 double reference_extent = -1.0);

struct ProblemSpec {
  std::shared_ptr<const Mesh> mesh;
  BoundaryConditions bcs;
  MaterialKind material = MaterialKind::kSvk;
  Vec3 body_force{0.0, 0.0, 0.0};
  GeometricMapKind geometry = GeometricMapKind::kNone;
  double geometry_split = -1.0;
  double geometry_reference_extent = -1.0;
};

/// Discrete hyperelastic residual G(u) = f_int(u) - f_ext(mu) and its Jacobian
/// on P1 simplices. Gradients are constant per element, so every element
/// integral is evaluated exactly as measure x integrand.
///
/// Constrained rows of G are zero; constrained rows and columns of the
/// Jacobian are replaced by the identity.
class HyperelasticProblem {
 public:
  explicit HyperelasticProblem(ProblemSpec spec);

  const Mesh& mesh() const { return *spec_.mesh; }
  const ProblemSpec& spec() const { return spec_; }
  const DofMap& dofs() const { return dofs_; }
  Eigen::Index size() const { return dofs_.size(); }
  int dim() const { return dofs_.dim(); }

  /// Updates material constants, geometry and the mu-dependent data.
  void set_parameters(const ParameterPoint& p);
  const ParameterPoint& parameters() const { return params_; }
  const MaterialModel& material() const { return material_; }
  const GeometricMap& geometric_map() const { return geo_; }

  /// R_D at the current mu.
  Vector lifting() const { return lift0_ + params_.mu * lift1_; }
  /// External load vector at the current mu (zero on constrained rows).
  Vector external_force() const { return ext0_ + params_.mu * ext1_; }
  /// Affine pieces: f_ext(mu) = ext0 + mu * ext1, R_D(mu) = lift0 + mu * lift1.
  const Vector& external_force_constant() const { return ext0_; }
  const Vector& external_force_per_mu() const { return ext1_; }
  const Vector& lifting_constant() const { return lift0_; }
  const Vector& lifting_per_mu() const { return lift1_; }

  /// sum_e int P(grad u + I) : grad phi_i, constrained rows zeroed.
  Vector internal_force(const Vector& u) const;
  Vector residual(const Vector& u) const;
  /// Fills `J` (pattern reused across calls).
  void jacobian(const Vector& u, SparseMatrix& J) const;
  SparseMatrix jacobian(const Vector& u) const;
  /// Residual and Jacobian in a single element sweep.
  void residual_and_jacobian(const Vector& u, Vector& G, SparseMatrix& J) const;
  /// Total potential energy: stored energy minus the work of the loads.
  double energy(const Vector& u) const;

  /// Element-level access for hyper-reduction. `f` has (dim+1)*dim entries,
  /// `K` is square of that size; local ordering is (vertex, component).
  void element_force(std::size_t e, const Vector& u, double* f) const;
  void element_force_and_stiffness(std::size_t e, const Vector& u, double* f, double* K) const;
  int element_dofs() const { return (dim() + 1) * dim(); }
  Eigen::Index local_to_global(std::size_t e, int local) const {
    const int d = dim();
    return dofs_.dof(mesh().elements[e][local / d], local % d);
  }

  /// Physical element measure under the current geometric map.
  double element_measure(std::size_t e) const { return measure_[e]; }

 private:
  template <int D>
  void element_kernel(std::size_t e, const Vector& u, double* f, double* K) const;
  template <int D>
  double element_energy(std::size_t e, const Vector& u) const;
  void build_pattern();
  void update_geometry();
  void update_loads();

  ProblemSpec spec_;
  DofMap dofs_;
  ParameterPoint params_;
  MaterialModel material_;
  GeometricMap geo_;
  bool geometry_ready_ = false;

  std::vector<double> grads_;    // per element, column a: d phi_a / dx (dim entries)
  std::vector<double> measure_;  // physical element measure
  Vector ext0_, ext1_, lift0_, lift1_;

  SparseMatrix pattern_;
  std::vector<int> scatter_;        // per element, local (r, c) -> value index or -1
  std::vector<int> diag_constrained_;  // value index of constrained diagonals
};

}  // namespace buckrom
