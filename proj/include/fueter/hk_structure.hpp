#pragma once

#include <array>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "fueter/errors.hpp"

namespace fueter {

/// Pointwise hyperkähler data on a real vector space of dimension 4n:
/// metric G, complex structures I_a and Kähler forms omega_a(v, w) = G(I_a v, w).
template <typename Scalar>
struct HKStructure {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  int dim = 0;
  Matrix metric;
  std::array<Matrix, 3> I;
  std::array<Matrix, 3> omega;

  HKStructure() = default;
  HKStructure(Matrix g, Matrix i1, Matrix i2, Matrix i3)
      : dim(static_cast<int>(g.rows())), metric(std::move(g)), I{std::move(i1), std::move(i2), std::move(i3)} {
    for (int a = 0; a < 3; ++a) omega[a] = I[a].transpose() * metric;
  }
};

using HKStructured = HKStructure<double>;

template <typename Scalar>
void requireUnit(const Eigen::Matrix<Scalar, 3, 1>& xi, Scalar tol = Scalar(1e-10)) {
  using std::abs;
  if (abs(xi.norm() - Scalar(1)) > tol) throw InputError("xi must be a unit 3-vector");
}

/// I_xi = sum_a xi_a I_a.
template <typename Scalar>
typename HKStructure<Scalar>::Matrix complex_structure_from_xi(const HKStructure<Scalar>& h,
                                                               const Eigen::Matrix<Scalar, 3, 1>& xi) {
  requireUnit(xi);
  return xi(0) * h.I[0] + xi(1) * h.I[1] + xi(2) * h.I[2];
}

/// omega_xi = G(I_xi ., .) as a matrix.
template <typename Scalar>
typename HKStructure<Scalar>::Matrix kahler_form_from_xi(const HKStructure<Scalar>& h,
                                                         const Eigen::Matrix<Scalar, 3, 1>& xi) {
  return complex_structure_from_xi(h, xi).transpose() * h.metric;
}

/// Largest Frobenius defect among the structure's algebraic invariants, relative to |G|.
template <typename Scalar>
Scalar structure_defect(const HKStructure<Scalar>& h) {
  using Matrix = typename HKStructure<Scalar>::Matrix;
  const Matrix id = Matrix::Identity(h.dim, h.dim);
  const Scalar gscale = h.metric.norm();
  Scalar worst = (h.metric - h.metric.transpose()).norm() / gscale;
  for (int a = 0; a < 3; ++a) {
    const int b = (a + 1) % 3, c = (a + 2) % 3;
    worst = std::max(worst, (h.I[a] * h.I[a] + id).norm());
    worst = std::max(worst, (h.I[a] * h.I[b] - h.I[c]).norm());
    worst = std::max(worst, (h.I[a].transpose() * h.metric * h.I[a] - h.metric).norm() / gscale);
    worst = std::max(worst, (h.omega[a] + h.omega[a].transpose()).norm() / gscale);
  }
  return worst;
}

}  // namespace fueter
