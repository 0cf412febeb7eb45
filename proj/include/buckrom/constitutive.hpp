#pragma once

#include <Eigen/Dense>

namespace buckrom {

enum class MaterialKind { kSvk, kNeoHookean };

const char* material_kind_name(MaterialKind kind);

/// Lamé constants in the naming used throughout this project: lambda1 is the
/// shear modulus (usually written mu), lambda2 the first Lamé parameter.
struct LameConstants {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

/// lambda1 = E / (2(1+nu)), lambda2 = E nu / ((1+nu)(1-2nu)).
LameConstants lame_from_young_poisson(double young, double poisson);

struct MaterialModel {
  MaterialKind kind = MaterialKind::kSvk;
  LameConstants lame;

  static MaterialModel from_young_poisson(MaterialKind kind, double young, double poisson) {
    return {kind, lame_from_young_poisson(young, poisson)};
  }
};

template <int D>
using Mat = Eigen::Matrix<double, D, D>;

/// Fourth-order tangent stored as a (D*D)x(D*D) matrix:
/// A(i*D + j, k*D + l) = dP_ij / dF_kl.
template <int D>
using Tangent = Eigen::Matrix<double, D * D, D * D>;

template <int D>
struct DeformationState {
  Mat<D> F;
  Mat<D> C;     // F^T F
  Mat<D> E_gl;  // (C - I) / 2
  double J = 1.0;
  double I1 = D;
  /// J > 0. NH evaluation refuses states where this is false.
  bool admissible = true;
};

struct Invariants {
  double I1 = 0.0;
  double I2 = 0.0;
  double I3 = 0.0;
};

template <int D>
DeformationState<D> deformation_gradient(const Mat<D>& grad_u);

/// Principal invariants of C. I2 and I3 are not used by either energy.
template <int D>
Invariants invariants(const DeformationState<D>& state);

/// Strain-energy density. NH uses (I1 - D) so that psi(I) = 0 in 2-D as well.
template <int D>
double energy(const MaterialModel& model, const DeformationState<D>& state);

/// First Piola-Kirchhoff stress P = d psi / dF.
template <int D>
Mat<D> piola(const MaterialModel& model, const DeformationState<D>& state);

/// Material tangent dP/dF.
template <int D>
Tangent<D> tangent(const MaterialModel& model, const DeformationState<D>& state);

/// P and dP/dF in one pass (shares the inverse for NH).
template <int D>
void piola_and_tangent(const MaterialModel& model, const DeformationState<D>& state,
                       Mat<D>& P, Tangent<D>& A);

}  // namespace buckrom
