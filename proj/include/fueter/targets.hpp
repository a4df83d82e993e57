#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fueter/hk_structure.hpp"

namespace fueter {

using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;
using Complex = std::complex<double>;

/// A map from the Riemann sphere C u {inf} into chart coordinates, parametrized by
/// the stereographic coordinate w. `jacobian` returns the columns d/dRe(w), d/dIm(w).
struct SphereMap {
  std::function<VectorXd(Complex)> at;
  std::function<MatrixXd(Complex)> jacobian;  // optional; empty means finite differences
  VectorXd at_infinity;
};

struct HolomorphicSphere {
  std::string name;
  Vector3d xi;  // the sphere is I_xi-holomorphic: dz(d/dy) = I_xi dz(d/dx)
  SphereMap map;
  double area = 0.0;  // omega_xi-area, computed by quadrature
};

/// A coordinate chart on a hyperkähler target.
struct TargetChart {
  std::string name;
  int dim = 0;
  VectorXd periods;  // per coordinate; 0 means non-periodic
  std::function<HKStructured(const VectorXd&)> structure_at;
  std::vector<HolomorphicSphere> holomorphic_spheres;

  /// Coordinate difference a - b, wrapped into (-p/2, p/2] on periodic coordinates.
  VectorXd difference(const VectorXd& a, const VectorXd& b) const;
  /// Representative of y with periodic coordinates reduced to [0, p).
  VectorXd wrap(const VectorXd& y) const;
};

/// Flat H^n (or the torus T^{4n} when periodic, with unit periods).
TargetChart flat_quaternion_target(int n, bool periodic);

/// Two-center Gibbons-Hawking (Eguchi-Hanson) chart with centers at x1 = -a/2 and x1 = +a/2.
/// Coordinates (x1, x2, x3, tau), tau of period 2 pi. Declares the bolt as an I_1-holomorphic sphere.
TargetChart eguchi_hanson_target(double a);

/// Closed-form area 2 pi a of the Eguchi-Hanson bolt (the area element on it is dx1 dtau).
double eguchi_hanson_bolt_area(double a);

/// Resolves "flat-h", "flat-t4", "eguchi-hanson".
TargetChart target_by_name(const std::string& name, int n, double scale);

/// Quadrature omega_xi-area of a sphere map on an n x n grid of (theta, phi) on S^2.
double sphere_area(const TargetChart& chart, const SphereMap& z, const Vector3d& xi, int n = 128);

/// Stereographic coordinate of a point p of S^2 in R^3 (p = p1 i + p2 j + p3 k), with -i <-> inf.
/// Returns nullopt at the pole.
std::optional<Complex> stereographic(const Vector3d& p);
/// Inverse of `stereographic`.
Vector3d inverse_stereographic(Complex w);
Vector3d inverse_stereographic_infinity();

}  // namespace fueter
