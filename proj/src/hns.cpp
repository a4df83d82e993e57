#include <cmath>

#include "fueter/bubbles.hpp"
#include "fueter/errors.hpp"

namespace fueter {

namespace {

const Quaterniond kUnits[3] = {units::i<double>, units::j<double>, units::k<double>};

MatrixXd sphereJacobian(const SphereMap& z, Complex w, int dim) {
  if (z.jacobian) return z.jacobian(w);
  const double h = 1e-6 * (1.0 + std::abs(w));
  MatrixXd jac(dim, 2);
  jac.col(0) = (z.at(w + h) - z.at(w - h)) / (2 * h);
  jac.col(1) = (z.at(w + Complex(0, h)) - z.at(w - Complex(0, h))) / (2 * h);
  return jac;
}

}  // namespace

SourceMap hns_map(const SphereMap& z, double lambda) {
  if (!(lambda > 0)) throw InputError("lambda must be positive");
  SourceMap m;
  m.value = [z, lambda](const VectorXd& q) -> VectorXd {
    const Quaterniond qq = Quaterniond::fromVector(q.head<4>());
    const Vector3d p = hopf_map(qq).imag();
    const double den = 2.0 * (qq.w * qq.w + qq.x * qq.x);
    if (den < 1e-300) return z.at_infinity;
    return z.at(sphere_scaling(lambda, Complex(p(1), -p(2)) / den));
  };
  m.derivative = [z, lambda](const VectorXd& qv) -> MatrixXd {
    const Quaterniond q = Quaterniond::fromVector(qv.head<4>());
    const Vector3d p = (q * units::i<double> * q.conjugate()).imag();
    // 1 + p1 = 2 |q_w + q_x i|^2, without the cancellation near the fiber over infinity.
    const double den = 2.0 * (q.w * q.w + q.x * q.x);
    if (den < 1e-300) throw DomainError("HNS derivative is not defined on the fiber over infinity in this chart");
    const Complex num(p(1), -p(2));
    const Complex w = lambda * num / den;
    const MatrixXd jac = sphereJacobian(z, w, static_cast<int>(z.at_infinity.size()));
    MatrixXd d(jac.rows(), 3);
    for (int a = 0; a < 3; ++a) {
      const Quaterniond c = kUnits[a] * units::i<double> - units::i<double> * kUnits[a];
      const Vector3d pd = (q * c * q.conjugate()).imag();
      const Complex dz = lambda * (Complex(pd(1), -pd(2)) / den - num * pd(0) / (den * den));
      d.col(a) = jac.col(0) * dz.real() + jac.col(1) * dz.imag();
    }
    return d;
  };
  return m;
}

SectionSample hns_family(const SphereMap& z, double lambda, std::shared_ptr<const DomainGrid> grid,
                         std::shared_ptr<const TargetChart> target, SampleOptions options) {
  if (!grid || grid->kind != GridKind::sphere3) throw InputError("hns_family needs a sphere3 grid");
  return sample_section(std::move(grid), std::move(target), hns_map(z, lambda), options);
}

SourceMap rescaled_source(const SectionSample& u, const VectorXd& x, double lambda) {
  if (!(lambda > 0)) throw InputError("lambda must be positive");
  const auto grid = u.grid;
  const SourceMap base = u.map;
  SourceMap m;
  m.value = [grid, base, x, lambda](const VectorXd& y) -> VectorXd {
    return base.value(grid->exp_point(x, lambda * Vector3d(y.head<3>())));
  };
  if (base.derivative)
    m.derivative = [grid, base, x, lambda](const VectorXd& y) -> MatrixXd {
      const Vector3d ys = lambda * Vector3d(y.head<3>());
      return lambda * base.derivative(grid->exp_point(x, ys)) * grid->exp_jacobian(x, ys);
    };
  return m;
}

SectionSample rescale_map(const SectionSample& u, const VectorXd& x, double lambda, double h, double extent) {
  if (u.grid->kind == GridKind::flat4) throw InputError("rescale_map needs a 3-dimensional source");
  const double limit = u.grid->max_radius(x);
  if (lambda * extent > limit * (1 + 1e-12))
    throw DomainError("rescaled ball leaves the source domain; largest admissible lambda is " +
                      std::to_string(limit / extent));
  auto grid = std::make_shared<const DomainGrid>(build_grid(GridKind::ball3, h, extent));
  SourceMap m = rescaled_source(u, x, lambda);
  SampleOptions opt = u.options;
  if (!m.derivative) opt.mode = DerivativeMode::finite_difference;
  return sample_section(grid, u.target, std::move(m), opt);
}

double translation_deficit(const SectionSample& u, const Vector3d& v, double L) {
  if (u.grid->kind != GridKind::ball3) throw InputError("translation_deficit needs a ball3 sample");
  requireUnit(v);
  if (!(L > 0)) throw InputError("L must be positive");
  const DomainGrid& g = *u.grid;
  if (std::sqrt(2.0) * L > g.extent * (1 + 1e-12))
    throw InputError("cube Q_{L,L} exits the domain; largest admissible L is " + std::to_string(g.extent / std::sqrt(2.0)));
  std::vector<double> scales;
  for (int k = 0;; ++k) {
    const double s = L * std::pow(2.0, -0.5 * k);
    if (s < 2 * g.h) break;
    scales.push_back(s);
  }
  if (scales.empty()) throw InputError("L is below the grid resolution");
  std::vector<double> sums(scales.size(), 0.0);
  for (int i = 0; i < u.size(); ++i) {
    const Vector3d p = g.points.col(i);
    const double z = p.dot(v);
    const double w = (p - z * v).norm();
    const double iw = std::clamp((L - w) / g.h + 0.5, 0.0, 1.0);
    if (iw == 0) continue;
    const VectorXd dv = u.derivative_at(i) * v;
    const double e = dv.dot(u.target->structure_at(u.values.col(i)).metric * dv) * g.weights(i) * iw;
    for (size_t k = 0; k < scales.size(); ++k)
      sums[k] += e * std::clamp((scales[k] - std::abs(z)) / g.h + 0.5, 0.0, 1.0);
  }
  double best = 0.0;
  for (size_t k = 0; k < scales.size(); ++k) best = std::max(best, sums[k] / scales[k]);
  return best;
}

}  // namespace fueter
