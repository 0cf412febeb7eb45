#include "buckrom/constitutive.hpp"

#include <cmath>
#include <sstream>

#include "buckrom/error.hpp"

namespace buckrom {

const char* material_kind_name(MaterialKind kind) {
  return kind == MaterialKind::kSvk ? "svk" : "nh";
}

LameConstants lame_from_young_poisson(double young, double poisson) {
  if (!(young > 0.0) || !std::isfinite(young)) {
    throw Error(ErrorCode::kInvalidArgument, "Young modulus must be positive");
  }
  if (!(poisson > -1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "Poisson ratio must exceed -1");
  }
  if (poisson >= 0.5) {
    std::ostringstream os;
    os << "Poisson ratio " << poisson << " reaches the incompressible limit";
    throw Error(ErrorCode::kIncompressibleLimit, os.str());
  }
  return {young / (2.0 * (1.0 + poisson)),
          young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson))};
}

template <int D>
DeformationState<D> deformation_gradient(const Mat<D>& grad_u) {
  DeformationState<D> s;
  s.F = grad_u + Mat<D>::Identity();
  s.C = s.F.transpose() * s.F;
  s.E_gl = 0.5 * (s.C - Mat<D>::Identity());
  s.J = s.F.determinant();
  s.I1 = s.C.trace();
  s.admissible = s.J > 0.0;
  return s;
}

template <int D>
Invariants invariants(const DeformationState<D>& state) {
  const double tr = state.C.trace();
  return {tr, 0.5 * (tr * tr - (state.C * state.C).trace()), state.C.determinant()};
}

namespace {

template <int D>
void require_admissible(const DeformationState<D>& s) {
  if (!s.admissible) {
    std::ostringstream os;
    os << "neo-Hookean state with det F = " << s.J << " <= 0";
    throw InadmissibleStateError(os.str());
  }
}

}  // namespace

template <int D>
double energy(const MaterialModel& model, const DeformationState<D>& s) {
  const double l1 = model.lame.lambda1;
  const double l2 = model.lame.lambda2;
  if (model.kind == MaterialKind::kSvk) {
    const double tr = s.E_gl.trace();
    return l1 * s.E_gl.squaredNorm() + 0.5 * l2 * tr * tr;
  }
  require_admissible(s);
  const double lj = std::log(s.J);
  return 0.5 * l1 * (s.I1 - D) - l1 * lj + 0.5 * l2 * lj * lj;
}

template <int D>
Mat<D> piola(const MaterialModel& model, const DeformationState<D>& s) {
  const double l1 = model.lame.lambda1;
  const double l2 = model.lame.lambda2;
  if (model.kind == MaterialKind::kSvk) {
    const Mat<D> S = 2.0 * l1 * s.E_gl + l2 * s.E_gl.trace() * Mat<D>::Identity();
    return s.F * S;
  }
  require_admissible(s);
  const Mat<D> G = s.F.inverse().transpose();
  return l1 * (s.F - G) + l2 * std::log(s.J) * G;
}

template <int D>
void piola_and_tangent(const MaterialModel& model, const DeformationState<D>& s, Mat<D>& P,
                       Tangent<D>& A) {
  const double l1 = model.lame.lambda1;
  const double l2 = model.lame.lambda2;
  const Mat<D>& F = s.F;
  if (model.kind == MaterialKind::kSvk) {
    const Mat<D> S = 2.0 * l1 * s.E_gl + l2 * s.E_gl.trace() * Mat<D>::Identity();
    const Mat<D> B = F * F.transpose();
    P = F * S;
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j)
        for (int k = 0; k < D; ++k)
          for (int l = 0; l < D; ++l) {
            double v = l1 * F(i, l) * F(k, j) + l2 * F(i, j) * F(k, l);
            if (i == k) v += S(l, j);
            if (l == j) v += l1 * B(i, k);
            A(i * D + j, k * D + l) = v;
          }
    return;
  }
  require_admissible(s);
  const Mat<D> G = F.inverse().transpose();
  const double lj = std::log(s.J);
  P = l1 * (F - G) + l2 * lj * G;
  const double c = l1 - l2 * lj;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j)
      for (int k = 0; k < D; ++k)
        for (int l = 0; l < D; ++l) {
          double v = c * G(i, l) * G(k, j) + l2 * G(i, j) * G(k, l);
          if (i == k && j == l) v += l1;
          A(i * D + j, k * D + l) = v;
        }
}

template <int D>
Tangent<D> tangent(const MaterialModel& model, const DeformationState<D>& s) {
  Mat<D> P;
  Tangent<D> A;
  piola_and_tangent(model, s, P, A);
  return A;
}

#define BUCKROM_INSTANTIATE(D)                                                             \
  template DeformationState<D> deformation_gradient<D>(const Mat<D>&);                     \
  template Invariants invariants<D>(const DeformationState<D>&);                           \
  template double energy<D>(const MaterialModel&, const DeformationState<D>&);             \
  template Mat<D> piola<D>(const MaterialModel&, const DeformationState<D>&);              \
  template Tangent<D> tangent<D>(const MaterialModel&, const DeformationState<D>&);        \
  template void piola_and_tangent<D>(const MaterialModel&, const DeformationState<D>&,     \
                                     Mat<D>&, Tangent<D>&);

BUCKROM_INSTANTIATE(2)
BUCKROM_INSTANTIATE(3)

#undef BUCKROM_INSTANTIATE

}  // namespace buckrom
