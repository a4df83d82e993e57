#pragma once

#include <complex>
#include <iosfwd>
#include <string>

#include <Eigen/Dense>

#include "fueter/quaternion.hpp"

namespace fueter {

using Eigen::Matrix3d;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::Vector3d;
using Eigen::Vector4d;
using Eigen::VectorXd;

enum class GridKind { ball3, torus3, sphere3, flat4 };

GridKind grid_kind_from_string(const std::string& name);
std::string to_string(GridKind kind);

/// Layout of the sphere3 grid in Hopf coordinates
///   q = cos(eta) e^{i xi1} + sin(eta) e^{i xi2} j,   eta in [0, pi/2],
/// whose eta = pi/2 level is the circle {q : q i q^-1 = -i}.
/// With `graded`, eta-cells shrink geometrically towards that circle:
/// the distance delta = pi/2 - eta advances by max(ratio * (delta + core), h) per cell.
struct SphereGridOptions {
  int n_xi1 = 0;  // 0: derived from h
  int n_xi2 = 0;
  bool graded = false;
  double core = 1e-4;
  double ratio = 0.15;
};

/// Sampled source manifold. Points are stored column-wise in ambient coordinates:
/// R^3 for ball3/torus3, unit quaternions (w, x, y, z) for sphere3, R^4 for flat4.
struct DomainGrid {
  GridKind kind = GridKind::ball3;
  double h = 0.0;
  double extent = 0.0;  // ball radius, torus period, cube half-width; pi/2 for sphere3
  MatrixXd points;
  VectorXd weights;
  VectorXd spacing;   // finite-difference scale per point (eta-cell width on sphere3)
  VectorXd diameter;  // cell diameter per point

  int size() const { return static_cast<int>(points.cols()); }
  int ambient_dim() const { return kind == GridKind::ball3 || kind == GridKind::torus3 ? 3 : 4; }
  int frame_dim() const { return kind == GridKind::flat4 ? 4 : 3; }
  double volume() const { return weights.sum(); }

  /// Frame vectors at p as columns in ambient coordinates (ambient_dim x frame_dim).
  MatrixXd frame_at(const VectorXd& p) const;
  /// Flow of the a-th frame field for time t (a geodesic for every kind).
  VectorXd flow(const VectorXd& p, int a, double t) const;
  /// Intrinsic distance: Euclidean, periodic minimum image, or great-circle.
  double distance(const VectorXd& a, const VectorXd& b) const;
  /// Frame coefficients of the unit radial vector at p pointing away from x.
  Vector3d radial_direction(const VectorXd& x, const VectorXd& p) const;
  /// Largest radius r for which B_r(x) stays inside the domain.
  double max_radius(const VectorXd& x) const;
  /// Point reached from x along the exponential map with frame coefficients y, and the
  /// frame coefficients of d/dy_a at that point (column a).
  VectorXd exp_point(const VectorXd& x, const Vector3d& y) const;
  Matrix3d exp_jacobian(const VectorXd& x, const Vector3d& y) const;
};

/// Frame at p for a domain of the given kind (see DomainGrid::frame_at).
MatrixXd frame_of(GridKind kind, const VectorXd& p);

DomainGrid build_grid(GridKind kind, double h, double extent, const SphereGridOptions& options = {});

/// Hopf coordinates (eta, xi1, xi2) of a unit quaternion, and back.
Vector3d hopf_coordinates(const Vector4d& q);
Vector4d from_hopf_coordinates(double eta, double xi1, double xi2);

/// Great-circle distance from q to the circle {q : q i q^-1 = -i}, i.e. pi/2 - eta.
double distance_to_blowup_circle(const Vector4d& q);

/// q i conj(q).
Quaterniond hopf_map(const Quaterniond& q);

/// Stereographic scaling w -> lambda w on C u {inf}; infinity is encoded as nullopt by callers,
/// so this acts on finite points only.
std::complex<double> sphere_scaling(double lambda, std::complex<double> w);

/// Matrix of Psi T = sum_i I(omega_i) T iota(omega_i) on Hom(R^4, H^n), acting on column-major vec(T).
MatrixXd psi_endomorphism(int n);

/// Q_{r,s}(z0, w0) = B_r(z0) x B_s(w0) in T x N with T one-dimensional.
struct GeneralizedCube {
  double z0 = 0.0;
  Vector2d w0 = Vector2d::Zero();
  double r = 1.0;
  double s = 1.0;

  GeneralizedCube(double z0_, Vector2d w0_, double r_, double s_);
  bool contains(double z, const Vector2d& w) const { return std::abs(z - z0) <= r && (w - w0).norm() <= s; }
  double volume() const;
};

/// Orthonormal completion (v, n2, n3) with n3 = v x n2.
Matrix3d adapted_frame(const Vector3d& v);

/// CSV with header: id, coordinates, weight, frame columns.
void write_grid_csv(const DomainGrid& grid, std::ostream& os);

}  // namespace fueter
