#include "fueter/domains.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <vector>

#include "fueter/errors.hpp"

namespace fueter {

using std::numbers::pi;

namespace {

const Quaterniond kUnits[3] = {units::i<double>, units::j<double>, units::k<double>};

Quaterniond asQuat(const VectorXd& p) { return {p(0), p(1), p(2), p(3)}; }
Vector4d asVec(const Quaterniond& q) { return q.vec(); }

void requireFrameIndex(const DomainGrid& g, int a) {
  if (a < 0 || a >= g.frame_dim()) throw InputError("frame index out of range");
}

}  // namespace

GridKind grid_kind_from_string(const std::string& name) {
  if (name == "ball3") return GridKind::ball3;
  if (name == "torus3") return GridKind::torus3;
  if (name == "sphere3") return GridKind::sphere3;
  if (name == "flat4") return GridKind::flat4;
  throw InputError("unsupported grid kind '" + name + "' (valid: ball3, flat4, sphere3, torus3)");
}

std::string to_string(GridKind kind) {
  switch (kind) {
    case GridKind::ball3: return "ball3";
    case GridKind::torus3: return "torus3";
    case GridKind::sphere3: return "sphere3";
    case GridKind::flat4: return "flat4";
  }
  return "?";
}

MatrixXd DomainGrid::frame_at(const VectorXd& p) const { return frame_of(kind, p); }

MatrixXd frame_of(GridKind kind, const VectorXd& p) {
  if (kind == GridKind::flat4) return MatrixXd::Identity(4, 4);
  if (kind != GridKind::sphere3) return MatrixXd::Identity(3, 3);
  const Quaterniond q = asQuat(p);
  MatrixXd f(4, 3);
  for (int a = 0; a < 3; ++a) f.col(a) = asVec(q * kUnits[a]);
  return f;
}

VectorXd DomainGrid::flow(const VectorXd& p, int a, double t) const {
  requireFrameIndex(*this, a);
  if (kind == GridKind::sphere3) {
    Vector3d y = Vector3d::Zero();
    y(a) = t;
    return asVec(asQuat(p) * expImaginary(y));
  }
  VectorXd r = p;
  r(a) += t;
  return r;
}

double DomainGrid::distance(const VectorXd& a, const VectorXd& b) const {
  switch (kind) {
    case GridKind::sphere3: return 2.0 * std::asin(std::min(1.0, 0.5 * (a - b).norm()));
    case GridKind::torus3: {
      VectorXd d = a - b;
      for (int k = 0; k < d.size(); ++k) d(k) -= extent * std::round(d(k) / extent);
      return d.norm();
    }
    default: return (a - b).norm();
  }
}

Vector3d DomainGrid::radial_direction(const VectorXd& x, const VectorXd& p) const {
  if (kind == GridKind::flat4) throw InputError("radial_direction is defined on 3-dimensional domains");
  if (kind == GridKind::sphere3) {
    const double c = std::clamp(x.dot(p), -1.0, 1.0);
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    if (s < 1e-15) return Vector3d::Zero();
    const VectorXd t = (p * c - x) / s;
    return frame_at(p).transpose() * t;
  }
  VectorXd d = p - x;
  if (kind == GridKind::torus3)
    for (int k = 0; k < 3; ++k) d(k) -= extent * std::round(d(k) / extent);
  const double n = d.norm();
  return n > 0 ? Vector3d(d / n) : Vector3d::Zero();
}

double DomainGrid::max_radius(const VectorXd& x) const {
  switch (kind) {
    case GridKind::ball3: return extent - x.norm();
    case GridKind::torus3: return 0.5 * extent;
    case GridKind::sphere3: return pi;
    case GridKind::flat4: return extent - x.cwiseAbs().maxCoeff();
  }
  return 0.0;
}

VectorXd DomainGrid::exp_point(const VectorXd& x, const Vector3d& y) const {
  if (kind == GridKind::flat4) throw InputError("exponential coordinates are defined on 3-dimensional domains");
  if (kind == GridKind::sphere3) return asVec(asQuat(x) * expImaginary(y));
  VectorXd p = x + y;
  return p;
}

Matrix3d DomainGrid::exp_jacobian(const VectorXd&, const Vector3d& y) const {
  if (kind == GridKind::flat4) throw InputError("exponential coordinates are defined on 3-dimensional domains");
  if (kind != GridKind::sphere3) return Matrix3d::Identity();
  const double th = y.norm();
  if (th < 1e-12) return Matrix3d::Identity();
  const Vector3d n = y / th;
  const Quaterniond e = expImaginary(y);
  const double s = std::sin(th), c = std::cos(th);
  Matrix3d jac;
  for (int a = 0; a < 3; ++a) {
    const Vector3d ea = Vector3d::Unit(a);
    const double dth = n.dot(ea);
    const Vector3d dn = (ea - dth * n) / th;
    const Vector3d vec = c * dth * n + s * dn;
    const Vector4d d(-s * dth, vec(0), vec(1), vec(2));
    for (int b = 0; b < 3; ++b) jac(b, a) = d.dot(asVec(e * kUnits[b]));
  }
  return jac;
}

namespace {

DomainGrid buildCartesian(GridKind kind, double h, double extent) {
  DomainGrid g;
  g.kind = kind;
  g.extent = extent;
  const int dim = kind == GridKind::flat4 ? 4 : 3;
  std::vector<double> coords;
  int lo, hi;
  double step = h;
  if (kind == GridKind::torus3) {
    const int n = std::max(1, static_cast<int>(std::lround(extent / h)));
    step = extent / n;
    lo = 0;
    hi = n - 1;
  } else {
    hi = static_cast<int>(std::floor(extent / h + 1e-9));
    lo = -hi;
  }
  g.h = step;
  const int side = hi - lo + 1;
  long total = 1;
  for (int d = 0; d < dim; ++d) total *= side;
  std::vector<int> idx(dim, lo);
  VectorXd p(dim);
  for (long count = 0; count < total; ++count) {
    for (int d = 0; d < dim; ++d) p(d) = idx[d] * step;
    const bool keep = kind != GridKind::ball3 || p.norm() <= extent * (1 + 1e-12);
    if (keep)
      for (int d = 0; d < dim; ++d) coords.push_back(p(d));
    for (int d = dim - 1; d >= 0; --d) {
      if (++idx[d] <= hi) break;
      idx[d] = lo;
    }
  }
  const int n = static_cast<int>(coords.size()) / dim;
  g.points = Eigen::Map<MatrixXd>(coords.data(), dim, n);
  g.weights = VectorXd::Constant(n, std::pow(step, dim));
  g.spacing = VectorXd::Constant(n, step);
  g.diameter = VectorXd::Constant(n, step);
  return g;
}

std::vector<double> etaEdges(double h, const SphereGridOptions& o) {
  // Edges of eta-cells, returned ascending in eta.
  std::vector<double> delta{0.0};
  if (o.graded) {
    while (delta.back() < pi / 2) delta.push_back(delta.back() + std::min(o.ratio * (delta.back() + o.core), h));
    // Merge a sliver of a last cell into its neighbour.
    if (delta.size() > 2 && pi / 2 - delta[delta.size() - 2] < 0.5 * h) delta.erase(delta.end() - 2);
    delta.back() = pi / 2;
  } else {
    const int n = std::max(1, static_cast<int>(std::ceil(pi / 2 / h - 1e-9)));
    for (int k = 1; k <= n; ++k) delta.push_back(pi / 2 * k / n);
  }
  std::vector<double> eta;
  for (auto it = delta.rbegin(); it != delta.rend(); ++it) eta.push_back(pi / 2 - *it);
  eta.front() = 0.0;
  return eta;
}

DomainGrid buildSphere(double h, const SphereGridOptions& o) {
  DomainGrid g;
  g.kind = GridKind::sphere3;
  g.h = h;
  g.extent = pi / 2;
  const std::vector<double> edges = etaEdges(h, o);
  const int n1 = o.n_xi1 > 0 ? o.n_xi1 : std::max(4, static_cast<int>(std::ceil(2 * pi / h - 1e-9)));
  const int n2 = o.n_xi2 > 0 ? o.n_xi2 : n1;
  const int rows = static_cast<int>(edges.size()) - 1;
  const long n = static_cast<long>(rows) * n1 * n2;
  g.points.resize(4, n);
  g.weights.resize(n);
  g.spacing.resize(n);
  g.diameter.resize(n);
  const double d1 = 2 * pi / n1, d2 = 2 * pi / n2;
  long id = 0;
  for (int r = 0; r < rows; ++r) {
    const double ea = edges[r], eb = edges[r + 1];
    const double eta = 0.5 * (ea + eb);
    const double sa = std::sin(ea), sb = std::sin(eb);
    const double w = 0.5 * (sb * sb - sa * sa) * d1 * d2;
    const double diam = std::max({eb - ea, std::cos(eta) * d1, std::sin(eta) * d2});
    for (int i1 = 0; i1 < n1; ++i1)
      for (int i2 = 0; i2 < n2; ++i2, ++id) {
        g.points.col(id) = from_hopf_coordinates(eta, (i1 + 0.5) * d1, (i2 + 0.5) * d2);
        g.weights(id) = w;
        g.spacing(id) = eb - ea;
        g.diameter(id) = diam;
      }
  }
  return g;
}

}  // namespace

DomainGrid build_grid(GridKind kind, double h, double extent, const SphereGridOptions& options) {
  if (!(h > 0)) throw InputError("grid spacing h must be positive");
  if (kind == GridKind::sphere3) return buildSphere(h, options);
  if (!(extent >= 4 * h * (1 - 1e-12))) throw InputError("grid extent must be at least 4h");
  return buildCartesian(kind, h, extent);
}

Vector3d hopf_coordinates(const Vector4d& q) {
  const double a = std::hypot(q(0), q(1)), b = std::hypot(q(2), q(3));
  double x1 = std::atan2(q(1), q(0)), x2 = std::atan2(q(3), q(2));
  if (x1 < 0) x1 += 2 * pi;
  if (x2 < 0) x2 += 2 * pi;
  return {std::atan2(b, a), x1, x2};
}

Vector4d from_hopf_coordinates(double eta, double xi1, double xi2) {
  const double c = std::cos(eta), s = std::sin(eta);
  return {c * std::cos(xi1), c * std::sin(xi1), s * std::cos(xi2), s * std::sin(xi2)};
}

double distance_to_blowup_circle(const Vector4d& q) {
  return std::acos(std::clamp(std::hypot(q(2), q(3)) / q.norm(), -1.0, 1.0));
}

Quaterniond hopf_map(const Quaterniond& q) {
  if (std::abs(q.norm() - 1.0) > 1e-10) throw InputError("hopf_map needs a unit quaternion");
  return q * units::i<double> * q.conjugate();
}

std::complex<double> sphere_scaling(double lambda, std::complex<double> w) {
  if (!(lambda > 0)) throw InputError("sphere_scaling needs lambda > 0");
  return lambda * w;
}

MatrixXd psi_endomorphism(int n) {
  if (n <= 0) throw InputError("psi_endomorphism needs n >= 1");
  const int rows = 4 * n;
  MatrixXd psi = MatrixXd::Zero(4 * rows, 4 * rows);
  for (int a = 0; a < 3; ++a) {
    const Eigen::Matrix4d l = leftMultiplication(kUnits[a]);
    MatrixXd big = MatrixXd::Zero(rows, rows);
    for (int f = 0; f < n; ++f) big.block<4, 4>(4 * f, 4 * f) = l;
    // vec(A T B) = (B^T kron A) vec(T)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) psi.block(i * rows, j * rows, rows, rows) += l(j, i) * big;
  }
  return psi;
}

GeneralizedCube::GeneralizedCube(double z0_, Vector2d w0_, double r_, double s_) : z0(z0_), w0(w0_), r(r_), s(s_) {
  if (!(r > 0 && s > 0)) throw InputError("generalized cube needs r, s > 0");
}

double GeneralizedCube::volume() const { return 2 * r * pi * s * s; }

Matrix3d adapted_frame(const Vector3d& v) {
  if (std::abs(v.norm() - 1.0) > 1e-10) throw InputError("tangent direction must be a unit vector");
  Vector3d seed = std::abs(v(0)) < 0.9 ? Vector3d::UnitX() : Vector3d::UnitY();
  const Vector3d n2 = (seed - seed.dot(v) * v).normalized();
  Matrix3d f;
  f << v, n2, v.cross(n2);
  return f;
}

void write_grid_csv(const DomainGrid& grid, std::ostream& os) {
  const int dim = grid.ambient_dim(), fd = grid.frame_dim();
  os << "id";
  for (int d = 0; d < dim; ++d) os << ",x" << d;
  os << ",weight";
  for (int a = 0; a < fd; ++a)
    for (int d = 0; d < dim; ++d) os << ",v" << a + 1 << "_" << d;
  os << "\n";
  os.precision(17);
  for (int i = 0; i < grid.size(); ++i) {
    os << i;
    for (int d = 0; d < dim; ++d) os << ',' << grid.points(d, i);
    os << ',' << grid.weights(i);
    const MatrixXd f = grid.frame_at(grid.points.col(i));
    for (int a = 0; a < fd; ++a)
      for (int d = 0; d < dim; ++d) os << ',' << f(d, a);
    os << "\n";
  }
}

}  // namespace fueter
