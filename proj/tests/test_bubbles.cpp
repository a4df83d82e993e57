#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fueter/bubbles.hpp"
#include "fueter/errors.hpp"
#include "fueter/fueter.hpp"

using namespace fueter;
using std::numbers::pi;

namespace {

std::shared_ptr<const TargetChart> flatH() {
  return std::make_shared<const TargetChart>(flat_quaternion_target(1, false));
}

std::shared_ptr<const TargetChart> eh() {
  static const auto t = std::make_shared<const TargetChart>(eguchi_hanson_target(1.0));
  return t;
}

std::shared_ptr<const DomainGrid> sphereGrid(int n) {
  return std::make_shared<const DomainGrid>(build_grid(GridKind::sphere3, pi / (2 * n), pi / 2, {n, n, false}));
}

std::shared_ptr<const DomainGrid> ballGrid(double h, double extent) {
  return std::make_shared<const DomainGrid>(build_grid(GridKind::ball3, h, extent));
}

MatrixXd fueterLinear() {
  MatrixXd a = MatrixXd::Zero(4, 3);
  a(1, 0) = 1;
  a(2, 1) = -1;
  return a;
}

SectionSample linearOn(std::shared_ptr<const DomainGrid> g) {
  return sample_section(g, flatH(), affine_map(VectorXd::Zero(4), fueterLinear(), *g), {DerivativeMode::exact, 1.0});
}

// x -> x/|x| as an imaginary quaternion, 0 at the origin.
SourceMap conical() {
  SourceMap m;
  m.value = [](const VectorXd& x) -> VectorXd {
    VectorXd y = VectorXd::Zero(4);
    const double r = x.head<3>().norm();
    if (r > 0) y.tail<3>() = x.head<3>() / r;
    return y;
  };
  m.derivative = [](const VectorXd& x) -> MatrixXd {
    MatrixXd d = MatrixXd::Zero(4, 3);
    const Vector3d p = x.head<3>();
    const double r = p.norm();
    if (r > 0) d.bottomRows(3) = (Matrix3d::Identity() - p * p.transpose() / (r * r)) / r;
    return d;
  };
  return m;
}

SphereMap constantSphere(const VectorXd& y) {
  SphereMap c;
  c.at = [y](Complex) { return y; };
  c.jacobian = [y](Complex) { return MatrixXd::Zero(y.size(), 2); };
  c.at_infinity = y;
  return c;
}

}  // namespace

TEST(HnsFamily, ConstantSphereGivesConstantMap) {
  VectorXd y(4);
  y << 0.0, 0.3, 0.0, 1.0;
  const SectionSample u = hns_family(constantSphere(y), 0.5, sphereGrid(8), eh());
  EXPECT_EQ(total_energy(u), 0.0);
}

TEST(HnsFamily, FueterWithConvergentResidual) {
  const SphereMap& z = eh()->holomorphic_spheres[0].map;
  EXPECT_LT(fueter_residual_3d(hns_family(z, 1.0, sphereGrid(8), eh())).norm.maxCoeff(), 1e-8);
  // The Gibbons-Hawking fiber angle is singular at the nuts, which the fibers eta = 0 and
  // eta = pi/2 map to; centered differences of that coordinate do not converge there, so the
  // sup is taken at distance >= 0.4 from both.
  std::vector<double> err;
  for (int n : {16, 32, 64}) {
    const auto g = sphereGrid(n);
    const auto r = fueter_residual_3d(hns_family(z, 1.0, g, eh(), {DerivativeMode::finite_difference, 1.0}));
    double worst = 0.0;
    for (int i = 0; i < g->size(); ++i) {
      const double eta = hopf_coordinates(g->points.col(i).head<4>())(0);
      if (eta > 0.4 && eta < pi / 2 - 0.4) worst = std::max(worst, r.norm(i));
    }
    err.push_back(worst);
  }
  for (int k = 0; k < 2; ++k) EXPECT_GE(std::log2(err[k] / err[k + 1]), 1.8) << err[k] << " " << err[k + 1];
}

TEST(HnsFamily, EnergyIsBoundedAlongTheFamily) {
  // |du_1|^2 = 4 everywhere, so E(u_1) = 4 vol(S^3) = 8 pi^2.
  const SphereMap& z = eh()->holomorphic_spheres[0].map;
  const auto g = sphereGrid(32);
  const double e1 = total_energy(hns_family(z, 1.0, g, eh()));
  EXPECT_NEAR(e1, 8 * pi * pi, 0.01 * 8 * pi * pi);
  for (double lambda : {0.5, 0.25}) EXPECT_LE(total_energy(hns_family(z, lambda, g, eh())), 1.1 * e1) << lambda;
}

TEST(Rescale, IdentityAndChainRule) {
  const SectionSample u = linearOn(ballGrid(1.0 / 16, 1.0));
  const VectorXd o = VectorXd::Zero(3);
  const SectionSample same = rescale_map(u, o, 1.0, 1.0 / 8, 0.5);
  for (int i = 0; i < same.size(); ++i)
    ASSERT_LT((same.values.col(i) - u.map.value(same.grid->points.col(i))).norm(), 1e-8);

  const double lambda = 0.5;
  const SectionSample v = rescale_map(u, o, lambda, 1.0 / 16, 0.8);
  for (int i = 0; i < v.size(); ++i) {
    ASSERT_LT((v.derivative_at(i) - lambda * fueterLinear()).norm(), 1e-12);
    ASSERT_NEAR(v.energy_density(i), lambda * lambda * 2.0, 1e-12);
  }
}

TEST(Rescale, RenormalizedEnergyChangeOfVariables) {
  // (1/r) int_{B_r} |d(u o lambda)|^2 = (1/(lambda r)) int_{B_{lambda r}} |du|^2.
  const SectionSample u = linearOn(ballGrid(1.0 / 32, 1.0));
  const VectorXd x = Vector3d(0.1, -0.1, 0.05);
  const double lambda = 0.5, r = 0.6;
  const SectionSample v = rescale_map(u, x, lambda, 1.0 / 32, 0.8);
  const double lhs = renormalized_energy(v, VectorXd::Zero(3), r);
  const double rhs = renormalized_energy(u, x, lambda * r);
  EXPECT_NEAR(lhs, rhs, 0.03 * rhs);
}

TEST(TranslationDeficit, ClosedForms) {
  const auto g = ballGrid(1.0 / 16, 1.5);
  EXPECT_NEAR(translation_deficit(linearOn(g), Vector3d::UnitX(), 1.0), 2 * pi, 0.05 * 2 * pi);
  EXPECT_EQ(translation_deficit(sample_section(g, flatH(), constant_map(VectorXd::Zero(4), 3)), Vector3d::UnitX(), 1.0),
            0.0);
  // Depends on x2 only, so invariant along e1 and e3.
  MatrixXd a = MatrixXd::Zero(4, 3);
  a(1, 1) = 1;
  const SectionSample w = sample_section(g, flatH(), affine_map(VectorXd::Zero(4), a, *g), {DerivativeMode::exact, 1.0});
  EXPECT_EQ(translation_deficit(w, Vector3d::UnitX(), 1.0), 0.0);
  EXPECT_EQ(translation_deficit(w, Vector3d::UnitZ(), 1.0), 0.0);
  EXPECT_THROW(translation_deficit(w, Vector3d::UnitX(), 2.0), InputError);
}

TEST(ExtractBubble, NoConcentrationMeansNoBubble) {
  const auto g = sphereGrid(16);
  const VectorXd x = from_hopf_coordinates(pi / 4, 0.3, 0.7);
  VectorXd y(4);
  y << 0.0, 0.3, 0.0, 1.0;
  const SectionSample c = hns_family(constantSphere(y), 1.0, g, eh());
  const BubbleOutcome none = extract_bubble({c, c}, x, Vector3d::UnitX(), 11.0);
  EXPECT_FALSE(none.found);
  EXPECT_FALSE(none.reason.empty());
  const SectionSample smooth = hns_family(eh()->holomorphic_spheres[0].map, 1.0, g, eh());
  EXPECT_FALSE(extract_bubble({smooth, smooth, smooth}, x, Vector3d::UnitX(), 11.0).found);
  EXPECT_THROW(extract_bubble({}, x, Vector3d::UnitX(), 11.0), InputError);
}

TEST(ConicalDeviation, ConicalMapIsScaleInvariant) {
  const auto g = ballGrid(1.0 / 16, 1.0);
  const SectionSample u = sample_section(g, flatH(), conical(), {DerivativeMode::exact, 1.0});
  const TestWeight phi = annulus_bump(0.2, 0.4);
  double scale = 0.0;
  for (int i = 0; i < u.size(); ++i) scale += g->weights(i) * phi.value(g->points.col(i)) * u.energy_density(i);
  ASSERT_GT(scale, 0.0);
  const ConicalDeviation c = conical_deviation(u, phi, 2.0);
  EXPECT_LT(c.lhs, 1e-3 * scale);
  EXPECT_TRUE(c.holds());
}

TEST(ConicalDeviation, ConstantAndLinearMaps) {
  const auto g = ballGrid(1.0 / 32, 1.0);
  const TestWeight phi = annulus_bump(0.2, 0.4);
  const ConicalDeviation zero = conical_deviation(sample_section(g, flatH(), constant_map(VectorXd::Zero(4), 3)), phi, 2.0);
  EXPECT_EQ(zero.lhs, 0.0);
  EXPECT_EQ(zero.rhs_bound, 0.0);

  // |d(u o s_R)|^2 = 2 R^2, so lhs = 2 (R^2 - 1) int phi, with int phi = 4 pi int rho^2 phi(rho) drho.
  const double R = 2.0;
  double integral = 0.0;
  const int n = 20000;
  for (int k = 0; k < n; ++k) {
    const double rho = 0.2 + (k + 0.5) * 0.2 / n;
    integral += 4 * pi * rho * rho * phi.value(Vector3d(rho, 0, 0)) * 0.2 / n;
  }
  const ConicalDeviation c = conical_deviation(linearOn(g), phi, R);
  EXPECT_NEAR(c.lhs, 2 * (R * R - 1) * integral, 0.02 * 2 * (R * R - 1) * integral);
  EXPECT_GT(c.rhs_bound, 0.0);
  EXPECT_TRUE(c.holds());
}

TEST(Balancing, RayConfigurations) {
  TangentConeSample two;
  two.rays = {{Vector3d(0, 0, 1), 2.0}, {Vector3d(0, 0, -1), 2.0}};
  EXPECT_EQ(balancing_deficit(two), 0.0);
  TangentConeSample tripod;
  for (int k = 0; k < 3; ++k)
    tripod.rays.push_back({Vector3d(std::cos(2 * pi * k / 3), std::sin(2 * pi * k / 3), 0), 1.5});
  EXPECT_LT(balancing_deficit(tripod), 1e-12);
  TangentConeSample one;
  one.rays = {{Vector3d(0.6, 0.8, 0), 3.25}};
  EXPECT_NEAR(balancing_deficit(one), 3.25, 1e-15);
  // A symmetric map density contributes nothing.
  TangentConeSample sym = two;
  sym.map_density = [](const Vector3d& x) { return 1.0 + x(0) * x(0); };
  EXPECT_LT(balancing_deficit(sym, 32), 1e-12);
}

TEST(BalancingBoundary, ConstantAndFueterMaps) {
  const auto g = ballGrid(1.0 / 32, 1.0);
  VectorField v;
  v.value = [](const Vector3d&) { return Vector3d(0.3, -0.5, 0.8); };
  v.gradient_sup = 0.0;
  const BalancingBoundary c =
      balancing_boundary_functional(sample_section(g, flatH(), constant_map(VectorXd::Zero(4), 3)), Vector3d::Zero(), 0.5, v);
  EXPECT_EQ(c.lhs, 0.0);
  EXPECT_EQ(c.rhs_bound, 0.0);
  const double r = 0.5;
  const BalancingBoundary f = balancing_boundary_functional(linearOn(g), Vector3d(0.1, 0.0, -0.1), r, v);
  EXPECT_NEAR(f.boundary_energy, 2 * 4 * pi * r * r, 1e-2 * 8 * pi * r * r);
  EXPECT_LT(f.lhs, 0.05 * f.boundary_energy * r);
}

TEST(BalancingBoundary, ConicalFueterMapConverges) {
  // u(x) = x1 i - x2 j is homogeneous; with constant v the identity holds exactly and refinement must
  // not move the functional away from 0.
  VectorField v;
  v.value = [](const Vector3d&) { return Vector3d(0, 0, 1); };
  std::vector<double> lhs;
  for (double h : {1.0 / 8, 1.0 / 16}) {
    const SectionSample u = sample_section(ballGrid(h, 1.0), flatH(), affine_map(VectorXd::Zero(4), fueterLinear(), *ballGrid(h, 1.0)),
                                           {DerivativeMode::finite_difference, 1.0});
    lhs.push_back(balancing_boundary_functional(u, Vector3d::Zero(), 0.5, v).lhs);
  }
  EXPECT_LT(lhs[1], 1e-8 + lhs[0]);
}
