#include "fueter/bubbles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fueter/errors.hpp"
#include "fueter/fueter.hpp"

namespace fueter {

using std::numbers::pi;

namespace {

// Quadrature node in exponential coordinates at the base point.
struct Atom {
  Vector3d y;
  double weight;
  double width;
};

double volumeJacobian(GridKind kind, double r) {
  if (kind != GridKind::sphere3 || r < 1e-12) return 1.0;
  const double s = std::sin(r) / r;
  return s * s;
}

std::vector<double> geometricEdges(double r0, double r1, double ratio, const std::vector<double>& extra) {
  std::vector<double> e{0.0};
  for (double r = r0; r < r1; r *= ratio) e.push_back(r);
  e.push_back(r1);
  for (double x : extra)
    if (x > 0 && x < r1) e.push_back(x);
  std::sort(e.begin(), e.end());
  e.erase(std::unique(e.begin(), e.end(), [](double a, double b) { return std::abs(a - b) < 1e-15 * (1 + b); }),
          e.end());
  return e;
}

// Cylinder {|z| <= zl, |w| <= R} around the line through `center` along F.col(0). With ball > 0
// each z-slab is clipped exactly to the disc of the ball of that radius about `center`.
std::vector<Atom> cylinderAtoms(const Matrix3d& F, const Vector3d& center, double zl, double R, double ball,
                                int nz, int nphi, const std::vector<double>& extra) {
  const std::vector<double> edges = geometricEdges(1e-4 * R, R, 1.2, extra);
  const double dz = 2 * zl / nz, dphi = 2 * pi / nphi;
  std::vector<Atom> atoms;
  for (int iz = 0; iz < nz; ++iz) {
    const double z = -zl + (iz + 0.5) * dz;
    const double rz = ball > 0 ? std::sqrt(std::max(0.0, ball * ball - z * z)) : R;
    for (size_t k = 0; k + 1 < edges.size(); ++k) {
      const double ra = edges[k];
      if (ra >= rz) break;
      const double rb = std::min(edges[k + 1], rz);
      const double rm = std::sqrt(0.5 * (ra * ra + rb * rb));
      const double w = 0.5 * (rb * rb - ra * ra) * dphi * dz;
      const double width = std::max({rb - ra, rm * dphi, dz});
      for (int ip = 0; ip < nphi; ++ip) {
        const double ph = (ip + 0.5) * dphi;
        const Vector3d y = center + z * F.col(0) + rm * (std::cos(ph) * F.col(1) + std::sin(ph) * F.col(2));
        atoms.push_back({y, w, width});
      }
    }
  }
  return atoms;
}

// Ball of radius R about the origin in spherical coordinates with polar axis F.col(0), shells cut
// at each of `radii`, polar angle graded towards the axis.
std::vector<Atom> sphericalAtoms(const Matrix3d& F, double R, const std::vector<double>& radii) {
  std::vector<double> shells{0.0};
  std::vector<double> cuts(radii.begin(), radii.end());
  std::sort(cuts.begin(), cuts.end());
  for (double r = 1e-3 * cuts.front(); r < cuts.front(); r *= 1.5) shells.push_back(r);
  double lo = cuts.front();
  shells.push_back(lo);
  for (size_t i = 1; i < cuts.size(); ++i) {
    for (int k = 1; k <= 4; ++k) shells.push_back(lo + (cuts[i] - lo) * k / 4.0);
    lo = cuts[i];
  }
  if (R > lo * (1 + 1e-12))
    for (int k = 1; k <= 4; ++k) shells.push_back(lo + (R - lo) * k / 4.0);
  std::vector<double> th{0.0};
  for (double t = 1e-4; t < pi / 2; t *= 1.25) th.push_back(t);
  const size_t half = th.size();
  th.push_back(pi / 2);
  for (size_t k = half; k-- > 1;) th.push_back(pi - th[k]);
  th.push_back(pi);
  const int nphi = 16;
  const double dphi = 2 * pi / nphi;
  std::vector<Atom> atoms;
  for (size_t s = 0; s + 1 < shells.size(); ++s) {
    const double ra = shells[s], rb = shells[s + 1], rm = 0.5 * (ra + rb);
    const double vr = (rb * rb * rb - ra * ra * ra) / 3.0;
    for (size_t t = 0; t + 1 < th.size(); ++t) {
      const double tm = 0.5 * (th[t] + th[t + 1]);
      const double w = vr * (std::cos(th[t]) - std::cos(th[t + 1])) * dphi;
      for (int ip = 0; ip < nphi; ++ip) {
        const double ph = (ip + 0.5) * dphi;
        const Vector3d dir = std::cos(tm) * F.col(0) +
                             std::sin(tm) * (std::cos(ph) * F.col(1) + std::sin(ph) * F.col(2));
        atoms.push_back({rm * dir, w, 1e-9 * rm});
      }
    }
  }
  return atoms;
}

class LocalQuadrature {
 public:
  LocalQuadrature(const SectionSample& u, const VectorXd& x) : u_(u), x_(x) {}

  double density(const Vector3d& y, double step) const {
    return u_.density(u_.grid->exp_point(x_, y), step) * volumeJacobian(u_.grid->kind, y.norm());
  }

  std::vector<double> densities(const std::vector<Atom>& atoms, double step) const {
    std::vector<double> e(atoms.size());
    for (size_t i = 0; i < atoms.size(); ++i) e[i] = atoms[i].weight * density(atoms[i].y, step);
    return e;
  }

 private:
  const SectionSample& u_;
  VectorXd x_;
};

double fdStep(const SectionSample& u, double scale) {
  return u.options.mode == DerivativeMode::exact ? 0.0 : std::max(1e-7, 1e-2 * scale);
}

// Circular mean on periodic coordinates, arithmetic mean elsewhere.
VectorXd coordinateMean(const TargetChart& chart, const std::vector<VectorXd>& ys) {
  const int d = chart.dim;
  VectorXd m(d);
  for (int c = 0; c < d; ++c) {
    const double p = chart.periods.size() ? chart.periods(c) : 0.0;
    if (p > 0) {
      double sc = 0.0, cc = 0.0;
      for (const auto& y : ys) {
        sc += std::sin(2 * pi * y(c) / p);
        cc += std::cos(2 * pi * y(c) / p);
      }
      double a = std::atan2(sc, cc) * p / (2 * pi);
      if (a < 0) a += p;
      m(c) = a;
    } else {
      double s = 0.0;
      for (const auto& y : ys) s += y(c);
      m(c) = s / static_cast<double>(ys.size());
    }
  }
  return m;
}

}  // namespace

BubbleOutcome extract_bubble(const std::vector<SectionSample>& seq, const VectorXd& x, const Vector3d& v,
                             double epsilon0, const BubbleOptions& options) {
  if (seq.empty()) throw InputError("extract_bubble needs a nonempty sequence");
  if (!(epsilon0 > 0)) throw InputError("epsilon0 must be positive");
  if (options.scale_count < 2 || !(options.delta_min > 0 && options.delta_min < 1))
    throw InputError("bad scale grid");
  const SectionSample& u = seq.back();
  if (u.grid->kind == GridKind::flat4) throw InputError("extract_bubble needs a 3-dimensional source");
  requireUnit(v);
  const DomainGrid& g = *u.grid;
  const Matrix3d F = adapted_frame(v);

  BubbleOutcome out;
  VectorXd base = x;

  // Step 1: largest epsilon on the log grid at which the energy in B_eps concentrates in the
  // tube |w| < eps/4 and the rescaled energy is at least epsilon0.
  const double eps_max = std::min(1.0, 0.5 * g.max_radius(x));
  if (!(eps_max > 0)) throw InputError("base point on the domain boundary");
  double eps = 0.0;
  for (int k = 0; k <= 40; ++k) {
    const double e = eps_max * std::pow(2.0, -0.25 * k);
    VectorXd xk = x;
    // Recenter on the energy centroid of the tube, normal directions only.
    for (int it = 0; it < 2; ++it) {
      const LocalQuadrature q(u, xk);
      const auto atoms = cylinderAtoms(F, Vector3d::Zero(), e, 0.25 * e, 0.0, 12, 16, {});
      const auto m = q.densities(atoms, fdStep(u, e));
      double s = 0.0;
      Vector3d c = Vector3d::Zero();
      for (size_t i = 0; i < atoms.size(); ++i) {
        s += m[i];
        c += m[i] * (atoms[i].y - atoms[i].y.dot(F.col(0)) * F.col(0));
      }
      if (!(s > 0)) break;
      xk = g.exp_point(xk, c / s);
    }
    const LocalQuadrature q(u, xk);
    const auto atoms = cylinderAtoms(F, Vector3d::Zero(), e, e, e, 16, 16, {0.25 * e});
    const auto m = q.densities(atoms, fdStep(u, e));
    double total = 0.0, tube = 0.0;
    for (size_t i = 0; i < atoms.size(); ++i) {
      total += m[i];
      const Vector3d y = atoms[i].y;
      if ((y - y.dot(F.col(0)) * F.col(0)).norm() < 0.25 * e) tube += m[i];
    }
    const double frac = total > 0 ? tube / total : 0.0;
    if (frac > out.step1_fraction) {
      out.step1_fraction = frac;
      out.step1_energy = total / e;
    }
    if (frac >= options.tube_fraction && total / e >= epsilon0) {
      eps = e;
      base = xk;
      out.step1_fraction = frac;
      out.step1_energy = total / e;
      break;
    }
  }
  if (eps == 0.0) {
    out.reason = "no scale concentrates the energy along v";
    return out;
  }

  // Step 3: the largest delta on the log grid with max over normal translates of
  // (1/(delta eps)) int_{B_{delta eps}} |du|^2 at most epsilon0/8.
  const LocalQuadrature q(u, base);
  std::vector<Vector2d> translates{Vector2d::Zero()};
  for (double ring : {0.25, 0.5, 1.0})
    for (int a = 0; a < 6; ++a)
      translates.emplace_back(ring * std::cos(a * pi / 3), ring * std::sin(a * pi / 3));
  const int n = options.scale_count;
  const auto deltaAt = [&](int k) { return std::pow(options.delta_min, static_cast<double>(k) / (n - 1)); };
  struct ScaleValue {
    double g;
    int arg;
  };
  const auto evaluate = [&](int k) {
    const double rho = deltaAt(k) * eps;
    ScaleValue sv{-1.0, 0};
    for (size_t t = 0; t < translates.size(); ++t) {
      const Vector3d c = eps * (translates[t](0) * F.col(1) + translates[t](1) * F.col(2));
      if (c.norm() + rho > 0.5 * g.max_radius(base) + 1e-12) continue;
      const auto atoms = cylinderAtoms(F, c, rho, rho, rho, 12, 16, {});
      const auto m = q.densities(atoms, fdStep(u, rho));
      double s = 0.0;
      for (double mi : m) s += mi;
      if (s / rho > sv.g) sv = {s / rho, static_cast<int>(t)};
    }
    return sv;
  };
  const double level = epsilon0 / 8.0;
  int lo = 0, hi = n - 1;
  ScaleValue at_hi = evaluate(hi);
  if (at_hi.g > level) {
    out.reason = "energy stays above epsilon0/8 down to the smallest scale";
    return out;
  }
  ScaleValue at_lo = evaluate(lo);
  int kstar = hi;
  ScaleValue best = at_hi;
  if (at_lo.g <= level) {
    kstar = lo;
    best = at_lo;
  } else {
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      const ScaleValue sv = evaluate(mid);
      if (sv.g <= level) {
        hi = mid;
        best = sv;
      } else {
        lo = mid;
      }
    }
    kstar = hi;
  }
  const double delta = deltaAt(kstar);
  const Vector2d wstar = translates[best.arg];

  BubbleReport& rep = out.report;
  rep.epsilon = eps;
  rep.delta = delta;
  rep.center_offset = wstar;
  rep.tangent_direction = v;
  rep.outer_radius = 1.0 / delta;
  rep.base_point = base;

  // Averaged rescaled map on a log-polar grid of the normal plane.
  const TargetChart& chart = *u.target;
  const double s = eps * delta;
  const Vector3d shift = eps * (wstar(0) * F.col(1) + wstar(1) * F.col(2));
  const int nr = 64, nphi = 32;
  const double r0 = 1e-3, r1 = rep.outer_radius;
  std::vector<double> redges{0.0};
  for (int k = 0; k <= nr; ++k) redges.push_back(r0 * std::pow(r1 / r0, static_cast<double>(k) / nr));
  const double dphi = 2 * pi / nphi;
  const double ts[5] = {-1.0, -0.5, 0.0, 0.5, 1.0};
  double energy = 0.0, inner = 0.0, dbar2 = 0.0;
  std::vector<VectorXd> outer_ring;
  for (size_t k = 0; k + 1 < redges.size(); ++k) {
    const double ra = redges[k], rb = redges[k + 1];
    const double rm = std::sqrt(0.5 * (ra * ra + rb * rb));
    const double area = 0.5 * (rb * rb - ra * ra) * dphi;
    for (int ip = 0; ip < nphi; ++ip) {
      const double ph = (ip + 0.5) * dphi;
      const Vector2d w(rm * std::cos(ph), rm * std::sin(ph));
      std::vector<VectorXd> vals;
      MatrixXd d2 = MatrixXd::Zero(chart.dim, 2);
      for (double t : ts) {
        const Vector3d y = shift + s * (t * F.col(0) + w(0) * F.col(1) + w(1) * F.col(2));
        const VectorXd p = g.exp_point(base, y);
        const PointJet j = u.jet(p, fdStep(u, s));
        const Matrix3d J = g.exp_jacobian(base, y);
        vals.push_back(j.value);
        d2.col(0) += s * j.derivative * (J * F.col(1));
        d2.col(1) += s * j.derivative * (J * F.col(2));
      }
      d2 /= 5.0;
      const VectorXd val = coordinateMean(chart, vals);
      const HKStructured h = chart.structure_at(val);
      const double e = jet_energy(h, d2);
      const VectorXd r = d2.col(0) - complex_structure_from_xi(h, v) * d2.col(1);
      energy += e * area;
      dbar2 += r.dot(h.metric * r) * area;
      if (rm <= 0.5 * r1) inner += e * area;
      if (k + 2 == redges.size()) outer_ring.push_back(val);
      rep.bubble.push_back({w, area, val});
    }
  }
  rep.value_at_infinity = coordinateMean(chart, outer_ring);
  rep.bubble_energy = energy;
  rep.antiholomorphy_residual = energy > 0 ? std::sqrt(dbar2 / energy) : 0.0;
  rep.energy_capture = energy > 0 ? inner / energy : 0.0;

  // Theta at the base point from a local quadrature of the energy measure.
  std::vector<double> radii = options.theta_radii;
  std::sort(radii.begin(), radii.end(), std::greater<>());
  const double rscale = std::min(1.0, 0.9 * g.max_radius(base) / radii.front());
  for (double& r : radii) r *= rscale;
  const auto atoms = sphericalAtoms(F, radii.front(), radii);
  const auto m = q.densities(atoms, fdStep(u, radii.back()));
  RadonMeasureApprox mu;
  mu.kind = g.kind;
  mu.period = g.kind == GridKind::torus3 ? g.extent : 0.0;
  mu.points.resize(g.ambient_dim(), static_cast<int>(atoms.size()));
  mu.masses.resize(static_cast<int>(atoms.size()));
  mu.widths.resize(static_cast<int>(atoms.size()));
  for (size_t i = 0; i < atoms.size(); ++i) {
    mu.points.col(static_cast<int>(i)) = g.exp_point(base, atoms[i].y);
    mu.masses(static_cast<int>(i)) = m[i];
    mu.widths(static_cast<int>(i)) = atoms[i].width;
  }
  mu.provenance = "local";
  rep.theta_at_x = density_theta(mu, base, radii).theta;

  if (rep.energy_capture < options.capture) {
    out.reason = "bubble energy escapes to the outer radius";
    return out;
  }
  if (energy < epsilon0 / 8.0) {
    out.reason = "rescaled map carries no energy";
    return out;
  }
  out.found = true;
  return out;
}

TestWeight annulus_bump(double a, double b) {
  if (!(a >= 0 && b > a)) throw InputError("annulus_bump needs 0 <= a < b");
  const auto psi = [](double t) { return std::abs(t) < 1 ? std::exp(1.0 - 1.0 / (1.0 - t * t)) : 0.0; };
  const auto dpsi = [&](double t) { return std::abs(t) < 1 ? psi(t) * (-2 * t / ((1 - t * t) * (1 - t * t))) : 0.0; };
  TestWeight w;
  w.value = [=](const Vector3d& x) { return psi((2 * x.norm() - (a + b)) / (b - a)); };
  w.support_radius = b;
  double grad = 0.0;
  for (int k = 0; k <= 20000; ++k) grad = std::max(grad, std::abs(dpsi(-1 + 2.0 * k / 20000)));
  w.c1_norm = 1.0 + grad * 2.0 / (b - a);
  return w;
}

ConicalDeviation conical_deviation(const SectionSample& u, const TestWeight& phi, double R) {
  if (u.grid->kind != GridKind::ball3) throw InputError("conical_deviation needs a ball3 sample");
  if (!(R >= 1)) throw InputError("R must be >= 1");
  const DomainGrid& g = *u.grid;
  const double step = u.options.fd_factor * g.h;
  if (R * phi.support_radius + step > g.extent * (1 + 1e-12))
    throw InputError("R * supp(phi) leaves the domain; largest admissible R is " +
                     std::to_string((g.extent - step) / phi.support_radius));
  ConicalDeviation c;
  double diff = 0.0;
  for (int i = 0; i < u.size(); ++i) {
    const Vector3d x = g.points.col(i);
    if (x.norm() > phi.support_radius) continue;
    const double f = phi.value(x);
    if (f == 0.0) continue;
    diff += g.weights(i) * f * (R * R * u.density(R * x, step) - u.energy_density(i));
  }
  c.lhs = std::abs(diff);
  if (R == 1.0) return c;
  // Per-node |d_r u| |du| dvol, then rho^{-1} int_{rho supp} on a log grid of rho.
  std::vector<std::pair<double, double>> radial;
  for (int i = 0; i < u.size(); ++i) {
    const Vector3d x = g.points.col(i);
    const double r = x.norm();
    if (r < 1e-14 || r > R * phi.support_radius) continue;
    const HKStructured h = u.target->structure_at(u.values.col(i));
    const VectorXd dr = u.derivative_at(i) * (x / r);
    radial.emplace_back(r, g.weights(i) * std::sqrt(std::max(0.0, dr.dot(h.metric * dr))) *
                               std::sqrt(std::max(0.0, u.energy_density(i))));
  }
  std::sort(radial.begin(), radial.end());
  const int nq = 32;
  const double dl = std::log(R) / nq;
  double rhs = 0.0;
  for (int k = 0; k < nq; ++k) {
    const double rho = std::exp((k + 0.5) * dl);
    double inner = 0.0;
    for (const auto& [r, m] : radial) {
      if (r > rho * phi.support_radius) break;
      inner += m;
    }
    // d rho = rho d(log rho)
    rhs += (1.0 / rho) * phi.support_radius * phi.c1_norm * (inner / rho) * rho * dl;
  }
  c.rhs_bound = rhs;
  return c;
}

double balancing_deficit(const TangentConeSample& cone, int n) {
  Vector3d s = Vector3d::Zero();
  for (const auto& [x, w] : cone.rays) s += w * x;
  if (cone.map_density) {
    if (n < 2) throw InputError("balancing_deficit needs n >= 2");
    const double dth = pi / n, dph = pi / n;
    for (int it = 0; it < n; ++it) {
      const double th = (it + 0.5) * dth;
      for (int ip = 0; ip < 2 * n; ++ip) {
        const double ph = (ip + 0.5) * dph;
        const Vector3d x(std::cos(th), std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph));
        s += x * cone.map_density(x) * std::sin(th) * dth * dph;
      }
    }
  }
  return s.norm();
}

BalancingBoundary balancing_boundary_functional(const SectionSample& u, const Vector3d& x, double r,
                                                const VectorField& v, int n) {
  if (u.grid->kind != GridKind::ball3) throw InputError("balancing_boundary_functional needs a ball3 sample");
  if (!(r > 0) || n < 2) throw InputError("bad sphere");
  const DomainGrid& g = *u.grid;
  const double step = u.options.fd_factor * g.h;
  if (x.norm() + r + step > g.extent * (1 + 1e-12)) throw InputError("sphere leaves the domain");
  if (r < 2 * g.h) throw InputError("sphere below grid resolution");
  BalancingBoundary b;
  const double dth = pi / n, dph = pi / n;
  double sum = 0.0;
  for (int it = 0; it < n; ++it) {
    const double th = (it + 0.5) * dth;
    for (int ip = 0; ip < 2 * n; ++ip) {
      const double ph = (ip + 0.5) * dph;
      const Vector3d nu(std::cos(th), std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph));
      const Vector3d p = x + r * nu;
      const PointJet j = u.jet(p, step);
      const HKStructured h = u.target->structure_at(j.value);
      const double e = jet_energy(h, j.derivative);
      const Vector3d vp = v.value(p);
      const VectorXd dr = j.derivative * nu, dv = j.derivative * vp;
      const double dA = r * r * std::sin(th) * dth * dph;
      sum += dA * (vp.dot(nu) * e - 2 * dr.dot(h.metric * dv));
      b.boundary_energy += dA * e;
    }
  }
  b.lhs = std::abs(sum);
  b.rhs_bound = r * v.gradient_sup * b.boundary_energy;
  return b;
}

MatrixXd ray_weights(const RadonMeasureApprox& mu, const std::vector<Vector3d>& directions,
                     const std::vector<double>& distances, double rho) {
  if (!(rho > 0)) throw InputError("rho must be positive");
  MatrixXd out(directions.size(), distances.size());
  for (size_t a = 0; a < directions.size(); ++a)
    for (size_t b = 0; b < distances.size(); ++b) {
      const double t = distances[b];
      if (!(t > 0)) throw InputError("ray distances must be positive");
      out(a, b) = mu.ball_mass(VectorXd(t * directions[a].normalized()), rho * t) / (rho * t);
    }
  return out;
}

}  // namespace fueter
