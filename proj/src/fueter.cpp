#include "fueter/fueter.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "fueter/errors.hpp"

namespace fueter {

using std::numbers::pi;

namespace {

void require3d(const SectionSample& u) {
  if (u.grid->kind == GridKind::flat4) throw InputError("3D Fueter operator needs a ball3, torus3 or sphere3 grid");
}

double metricNorm2(const HKStructured& h, const VectorXd& v) { return v.dot(h.metric * v); }

}  // namespace

VectorXd fueter_residual_jet(const HKStructured& h, const MatrixXd& d) {
  VectorXd r = VectorXd::Zero(d.rows());
  for (int a = 0; a < 3; ++a) r += h.I[a] * d.col(a);
  return r;
}

FueterResidualField fueter_residual_3d(const SectionSample& u) {
  require3d(u);
  if (u.size() == 0) throw InputError("grid too small for the stencil");
  FueterResidualField f;
  f.residual.resize(u.target->dim, u.size());
  f.norm.resize(u.size());
  for (int i = 0; i < u.size(); ++i) {
    const HKStructured h = u.target->structure_at(u.values.col(i));
    const VectorXd r = fueter_residual_jet(h, u.derivative_at(i));
    f.residual.col(i) = r;
    f.norm(i) = std::sqrt(std::max(0.0, metricNorm2(h, r)));
  }
  return f;
}

MatrixXd fueter_residual_4d(const MatrixXd& t) {
  if (t.cols() != 4 || t.rows() % 4 != 0) throw InputError("4D residual needs a 4n x 4 linear map");
  const int n = static_cast<int>(t.rows()) / 4;
  const MatrixXd psi = psi_endomorphism(n);
  const VectorXd v = Eigen::Map<const VectorXd>(t.data(), t.size());
  const VectorXd r = v - psi * v;
  return Eigen::Map<const MatrixXd>(r.data(), t.rows(), 4);
}

FueterResidualField fueter_residual_4d(const SectionSample& u) {
  if (u.grid->kind != GridKind::flat4) throw InputError("4D residual needs a flat4 grid");
  FueterResidualField f;
  const int d = u.target->dim;
  f.residual.resize(4 * d, u.size());
  f.norm.resize(u.size());
  for (int i = 0; i < u.size(); ++i) {
    const MatrixXd r = fueter_residual_4d(u.derivative_at(i));
    f.residual.col(i) = Eigen::Map<const VectorXd>(r.data(), r.size());
    f.norm(i) = r.norm();
  }
  return f;
}

double total_energy(const SectionSample& u) {
  // Fixed left-to-right order.
  double sum = 0.0;
  for (int i = 0; i < u.size(); ++i) sum += u.grid->weights(i) * u.energy_density(i);
  return sum;
}

EnergyIdentityTerms energy_identity_terms(const HKStructured& h, const MatrixXd& d) {
  EnergyIdentityTerms t;
  t.energy = jet_energy(h, d);
  t.fueter = metricNorm2(h, fueter_residual_jet(h, d));
  const auto w = [&](int a, int x, int y) { return d.col(x).dot(h.omega[a] * d.col(y)); };
  const double bracket = w(0, 1, 2) - w(1, 0, 2) + w(2, 0, 1);
  t.pairing = kPairingOrientation * 2.0 * bracket;
  return t;
}

VectorXd energy_identity_residual(const SectionSample& u) {
  require3d(u);
  VectorXd r(u.size());
  for (int i = 0; i < u.size(); ++i)
    r(i) = energy_identity_terms(u.target->structure_at(u.values.col(i)), u.derivative_at(i)).residual();
  return r;
}

int calibrate_pairing_orientation() {
  const TargetChart flat = flat_quaternion_target(1, false);
  const HKStructured h = flat.structure_at(VectorXd::Zero(4));
  MatrixXd d = MatrixXd::Zero(4, 3);
  d(1, 0) = 1.0;   // du(e1) = i
  d(2, 1) = -1.0;  // du(e2) = -j
  const EnergyIdentityTerms t = energy_identity_terms(h, d);
  const double bracket = t.pairing / (2.0 * kPairingOrientation);
  return (t.energy - t.fueter) * bracket > 0 ? 1 : -1;
}

DiffInequalityResult diff_inequality_ratio(const SectionSample& u, int exponent, double step_factor) {
  require3d(u);
  if (exponent != 3 && exponent != 4) throw InputError("exponent must be 3 or 4");
  const DomainGrid& g = *u.grid;
  DiffInequalityResult res;
  res.ratio = VectorXd::Constant(u.size(), std::numeric_limits<double>::quiet_NaN());
  res.excluded.assign(u.size(), 0);
  bool any = false;
  for (int i = 0; i < u.size(); ++i) {
    const VectorXd p = g.points.col(i);
    const double s = step_factor * g.spacing(i);
    const double fd = u.options.fd_factor * g.spacing(i);
    if (g.kind == GridKind::ball3 && p.norm() + s + fd > g.extent) {
      res.excluded[i] = 1;
      continue;
    }
    const double f0 = u.energy_density(i);
    double lap = 0.0;
    for (int a = 0; a < 3; ++a)
      lap -= (u.density(g.flow(p, a, s), fd) + u.density(g.flow(p, a, -s), fd) - 2 * f0) / (s * s);
    const double r = lap / (std::pow(f0, 0.5 * exponent) + 1.0);
    res.ratio(i) = r;
    res.max_ratio = any ? std::max(res.max_ratio, r) : r;
    any = true;
  }
  if (any) res.max_ratio = std::max(res.max_ratio, 0.0);
  return res;
}

namespace {

MatrixXd sphereJacobian(const TargetChart& chart, const SphereMap& z, Complex w) {
  if (z.jacobian) return z.jacobian(w);
  const double h = 1e-6 * (1.0 + std::abs(w));
  MatrixXd jac(chart.dim, 2);
  jac.col(0) = chart.difference(z.at(w + h), z.at(w - h)) / (2 * h);
  jac.col(1) = chart.difference(z.at(w + Complex(0, h)), z.at(w - Complex(0, h))) / (2 * h);
  return jac;
}

// Tangent vectors d p / d Re(w), d p / d Im(w) of the inverse stereographic map.
Eigen::Matrix<double, 3, 2> stereographicTangents(Complex w) {
  const double u = w.real(), v = w.imag(), s = 1.0 + u * u + v * v;
  Eigen::Matrix<double, 3, 2> t;
  // p = ((1 - r^2), 2u, -2v) / s
  t(0, 0) = -4 * u / (s * s);
  t(0, 1) = -4 * v / (s * s);
  t(1, 0) = 2 / s - 4 * u * u / (s * s);
  t(1, 1) = -4 * u * v / (s * s);
  t(2, 0) = 4 * u * v / (s * s);
  t(2, 1) = -2 / s + 4 * v * v / (s * s);
  return t;
}

}  // namespace

SourceMap radial_extension(const SphereMap& z) {
  SourceMap m;
  m.value = [z](const VectorXd& x) -> VectorXd {
    const Vector3d p = Vector3d(x.head<3>()).normalized();
    const auto w = stereographic(p);
    return w ? z.at(*w) : z.at_infinity;
  };
  return m;
}

TwistorCheck twistor_check(const TargetChart& chart, const SphereMap& z, const Vector3d& xi, int n, double h) {
  requireUnit(xi);
  if (n < 4) throw InputError("twistor_check needs n >= 4");
  TwistorCheck out;
  const double dth = pi / n, dph = 2 * pi / n;
  double dbar2 = 0.0, tw2 = 0.0, tw2cut = 0.0, e = 0.0;
  for (int it = 0; it < n; ++it) {
    const double th = (it + 0.5) * dth;
    for (int ip = 0; ip < n; ++ip) {
      const double ph = (ip + 0.5) * dph;
      const Vector3d p(std::cos(th), std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph));
      const Complex w = *stereographic(p);
      const MatrixXd jac = sphereJacobian(chart, z, w);
      const HKStructured hk = chart.structure_at(z.at(w));
      const double s = 1.0 + std::norm(w);
      const double dA = std::sin(th) * dth * dph;
      const double dudv = dA * s * s / 4.0;
      const VectorXd r = jac.col(1) - complex_structure_from_xi(hk, xi) * jac.col(0);
      dbar2 += metricNorm2(hk, r) * dudv;
      e += (metricNorm2(hk, jac.col(0)) + metricNorm2(hk, jac.col(1))) * dudv;
      // Fueter residual of the radial extension at p: sum over an orthonormal tangent frame.
      const Eigen::Matrix<double, 3, 2> t = stereographicTangents(w);
      const double c = 2.0 / s;
      VectorXd tw = VectorXd::Zero(chart.dim);
      for (int k = 0; k < 2; ++k) {
        const Vector3d tk = t.col(k) / c;
        MatrixXd itk = tk(0) * hk.I[0] + tk(1) * hk.I[1] + tk(2) * hk.I[2];
        tw += itk * (jac.col(k) / c);
      }
      tw2 += metricNorm2(hk, tw) * dA;
      if (std::sin(th) >= 0.25) tw2cut += metricNorm2(hk, tw) * dA;
    }
  }
  out.dbar_residual = std::sqrt(dbar2);
  out.twistor_residual = std::sqrt(tw2);
  out.twistor_residual_cut = std::sqrt(tw2cut);
  out.energy = e;

  if (h > 0) {
    // Radial extension on the annulus 1 <= |x| <= 2, centered differences of spacing h. A tube of
    // radius 0.25 around the x1-axis is left out: the chart of the sphere degenerates on it.
    const DomainGrid g = build_grid(GridKind::ball3, h, 2.0);
    const SourceMap ext = radial_extension(z);
    double sum = 0.0;
    for (int i = 0; i < g.size(); ++i) {
      const Vector3d x = g.points.col(i);
      const double r = x.norm();
      if (r < 1.0 || r > 2.0) continue;
      if (std::hypot(x(1), x(2)) < 0.25 * r) continue;
      MatrixXd d(chart.dim, 3);
      for (int a = 0; a < 3; ++a) {
        Vector3d xp = x, xm = x;
        xp(a) += h;
        xm(a) -= h;
        d.col(a) = chart.difference(ext.value(xp), ext.value(xm)) / (2 * h);
      }
      const HKStructured hk = chart.structure_at(ext.value(x));
      sum += metricNorm2(hk, fueter_residual_jet(hk, d)) * g.weights(i);
    }
    out.radial_fueter = std::sqrt(sum);
  }
  return out;
}

}  // namespace fueter
