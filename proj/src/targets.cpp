#include "fueter/targets.hpp"

#include <cmath>
#include <numbers>

#include "fueter/quaternion.hpp"

namespace fueter {

using std::numbers::pi;

VectorXd TargetChart::difference(const VectorXd& a, const VectorXd& b) const {
  VectorXd d = a - b;
  for (int k = 0; k < d.size(); ++k) {
    const double p = periods.size() > k ? periods(k) : 0.0;
    if (p > 0) d(k) -= p * std::round(d(k) / p);
  }
  return d;
}

VectorXd TargetChart::wrap(const VectorXd& y) const {
  VectorXd r = y;
  for (int k = 0; k < r.size(); ++k) {
    const double p = periods.size() > k ? periods(k) : 0.0;
    if (p > 0) r(k) -= p * std::floor(r(k) / p);
  }
  return r;
}

std::optional<Complex> stereographic(const Vector3d& p) {
  const double den = 1.0 + p(0);
  if (den <= 1e-300) return std::nullopt;
  return Complex(p(1), -p(2)) / den;
}

Vector3d inverse_stereographic(Complex w) {
  const double r2 = std::norm(w);
  const double s = 1.0 / (1.0 + r2);
  return {(1.0 - r2) * s, 2.0 * w.real() * s, -2.0 * w.imag() * s};
}

Vector3d inverse_stereographic_infinity() { return {-1.0, 0.0, 0.0}; }

TargetChart flat_quaternion_target(int n, bool periodic) {
  if (n <= 0) throw InputError("flat target needs n >= 1");
  const int d = 4 * n;
  MatrixXd g = MatrixXd::Identity(d, d);
  std::array<MatrixXd, 3> I;
  const Quaterniond unit[3] = {units::i<double>, units::j<double>, units::k<double>};
  for (int a = 0; a < 3; ++a) {
    I[a] = MatrixXd::Zero(d, d);
    for (int f = 0; f < n; ++f) I[a].block<4, 4>(4 * f, 4 * f) = leftMultiplication(unit[a]);
  }
  const HKStructured h(g, I[0], I[1], I[2]);

  TargetChart chart;
  chart.name = periodic ? "flat-t4" : "flat-h";
  chart.dim = d;
  chart.periods = periodic ? VectorXd::Ones(d) : VectorXd::Zero(d);
  chart.structure_at = [h](const VectorXd&) { return h; };
  return chart;
}

namespace {

struct GibbonsHawkingData {
  double V;
  Vector3d A;
};

// V = 1/(2 r1) + 1/(2 r2); A = f (x2 dx3 - x3 dx2) with Dirac strings on the outer rays,
// oriented so that curl A = -grad V (which makes the Kähler forms closed in this frame convention).
GibbonsHawkingData gibbonsHawking(const Vector3d& x, double c1, double c2) {
  const double d1 = x(0) - c1, d2 = x(0) - c2;
  const double rho2 = x(1) * x(1) + x(2) * x(2);
  const double r1 = std::sqrt(d1 * d1 + rho2), r2 = std::sqrt(d2 * d2 + rho2);
  const double scale = std::max(1.0, std::abs(c2 - c1));
  if (r1 < 1e-100 * scale || r2 < 1e-100 * scale)
    throw DomainError("Eguchi-Hanson chart is singular at the centers");
  const double s1 = r1 + d1, s2 = r2 - d2;
  if (s1 <= 1e-14 * r1 || s2 <= 1e-14 * r2)
    throw DomainError("Eguchi-Hanson chart is singular on the Dirac strings (outer axis rays)");
  const double f = 0.5 * (1.0 / (r1 * s1) - 1.0 / (r2 * s2));
  return {0.5 * (1.0 / r1 + 1.0 / r2), Vector3d(0.0, -f * x(2), f * x(1))};
}

}  // namespace

double eguchi_hanson_bolt_area(double a) { return 2.0 * pi * a; }

TargetChart eguchi_hanson_target(double a) {
  if (!(a > 0)) throw InputError("Eguchi-Hanson scale must be positive");
  const double c1 = -0.5 * a, c2 = 0.5 * a;

  TargetChart chart;
  chart.name = "eguchi-hanson";
  chart.dim = 4;
  chart.periods = VectorXd::Zero(4);
  chart.periods(3) = 2.0 * pi;
  chart.structure_at = [c1, c2](const VectorXd& y) {
    const auto gh = gibbonsHawking(y.head<3>(), c1, c2);
    const double sv = std::sqrt(gh.V);
    // Orthonormal frame (E0, E1, E2, E3) as columns in chart coordinates (x1, x2, x3, tau).
    Eigen::Matrix4d frame = Eigen::Matrix4d::Zero();
    frame(3, 0) = sv;
    for (int k = 0; k < 3; ++k) {
      frame(k, k + 1) = 1.0 / sv;
      frame(3, k + 1) = -gh.A(k) / sv;
    }
    // Inverse of the frame (the coframe) in closed form.
    Eigen::Matrix4d coframe = Eigen::Matrix4d::Zero();
    coframe(0, 3) = 1.0 / sv;
    for (int k = 0; k < 3; ++k) {
      coframe(0, k) = gh.A(k) / sv;
      coframe(k + 1, k) = sv;
    }
    const Eigen::Matrix4d g = coframe.transpose() * coframe;
    const Eigen::Matrix4d i1 = frame * leftMultiplication(units::i<double>) * coframe;
    const Eigen::Matrix4d i2 = frame * leftMultiplication(units::j<double>) * coframe;
    const Eigen::Matrix4d i3 = frame * leftMultiplication(units::k<double>) * coframe;
    return HKStructured(g, i1, i2, i3);
  };

  HolomorphicSphere bolt;
  bolt.name = "bolt";
  bolt.xi = Vector3d::UnitX();
  bolt.map.at = [c1, c2](Complex w) {
    const double r2 = std::norm(w);
    VectorXd y = VectorXd::Zero(4);
    // Offsets from the nearer center keep points off the centers in floating point.
    y(0) = r2 <= 1.0 ? c1 + (c2 - c1) * r2 / (1.0 + r2) : c2 - (c2 - c1) / (1.0 + r2);
    y(3) = r2 > 0 ? -std::arg(w) : 0.0;
    return y;
  };
  bolt.map.jacobian = [a](Complex w) {
    const double u = w.real(), v = w.imag(), r2 = std::norm(w);
    MatrixXd j = MatrixXd::Zero(4, 2);
    const double s = a / ((1.0 + r2) * (1.0 + r2));
    j(0, 0) = 2.0 * u * s;
    j(0, 1) = 2.0 * v * s;
    if (r2 > 0) {
      j(3, 0) = v / r2;
      j(3, 1) = -u / r2;
    }
    return j;
  };
  bolt.map.at_infinity = VectorXd::Zero(4);
  bolt.map.at_infinity(0) = c2;
  bolt.area = sphere_area(chart, bolt.map, bolt.xi);
  chart.holomorphic_spheres.push_back(std::move(bolt));
  return chart;
}

TargetChart target_by_name(const std::string& name, int n, double scale) {
  if (name == "flat-h") return flat_quaternion_target(n, false);
  if (name == "flat-t4") return flat_quaternion_target(n, true);
  if (name == "eguchi-hanson") return eguchi_hanson_target(scale);
  throw InputError("unknown target '" + name + "' (valid: eguchi-hanson, flat-h, flat-t4)");
}

double sphere_area(const TargetChart& chart, const SphereMap& z, const Vector3d& xi, int n) {
  // Midpoint rule in (theta, phi) about the axis through the poles +-i.
  double area = 0.0;
  const double dth = pi / n, dph = 2.0 * pi / n;
  for (int it = 0; it < n; ++it) {
    const double th = (it + 0.5) * dth;
    for (int ip = 0; ip < n; ++ip) {
      const double ph = (ip + 0.5) * dph;
      const Vector3d p(std::cos(th), std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph));
      const Complex w = *stereographic(p);
      MatrixXd jac;
      if (z.jacobian) {
        jac = z.jacobian(w);
      } else {
        const double h = 1e-6 * (1.0 + std::abs(w));
        jac.resize(chart.dim, 2);
        jac.col(0) = chart.difference(z.at(w + h), z.at(w - h)) / (2 * h);
        jac.col(1) = chart.difference(z.at(w + Complex(0, h)), z.at(w - Complex(0, h))) / (2 * h);
      }
      const auto hk = chart.structure_at(z.at(w));
      const double form = jac.col(0).dot(kahler_form_from_xi(hk, xi) * jac.col(1));
      // dA_sphere = 4 du dv / (1 + |w|^2)^2.
      const double s = 1.0 + std::norm(w);
      area += form * s * s / 4.0 * std::sin(th) * dth * dph;
    }
  }
  return area;
}

}  // namespace fueter
