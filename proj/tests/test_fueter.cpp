#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "fueter/bubbles.hpp"
#include "fueter/fueter.hpp"

using namespace fueter;
using std::numbers::pi;

namespace {

std::shared_ptr<const TargetChart> flatH() {
  return std::make_shared<const TargetChart>(flat_quaternion_target(1, false));
}

MatrixXd columns(std::initializer_list<std::array<double, 4>> cols) {
  MatrixXd a(4, cols.size());
  int c = 0;
  for (const auto& col : cols) {
    for (int r = 0; r < 4; ++r) a(r, c) = col[r];
    ++c;
  }
  return a;
}

const MatrixXd kFueterLinear = columns({{0, 1, 0, 0}, {0, 0, -1, 0}, {0, 0, 0, 0}});
const MatrixXd kImaginary = columns({{0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}});

SectionSample linearSample(const MatrixXd& a, double h = 1.0 / 16) {
  auto g = std::make_shared<const DomainGrid>(build_grid(GridKind::ball3, h, 1.0));
  return sample_section(g, flatH(), affine_map(VectorXd::Zero(4), a, *g), {DerivativeMode::exact, 1.0});
}

// u(x) = (cos 2pi x1, sin 2pi x2, cos 2pi x3, sin 2pi (x1 - x3)) with exact derivatives.
SourceMap trigMap() {
  const double t = 2 * pi;
  SourceMap m;
  m.value = [t](const VectorXd& x) -> VectorXd {
    VectorXd v(4);
    v << std::cos(t * x(0)), std::sin(t * x(1)), std::cos(t * x(2)), std::sin(t * (x(0) - x(2)));
    return v;
  };
  m.derivative = [t](const VectorXd& x) -> MatrixXd {
    MatrixXd d = MatrixXd::Zero(4, 3);
    d(0, 0) = -t * std::sin(t * x(0));
    d(1, 1) = t * std::cos(t * x(1));
    d(2, 2) = -t * std::sin(t * x(2));
    d(3, 0) = t * std::cos(t * (x(0) - x(2)));
    d(3, 2) = -d(3, 0);
    return d;
  };
  return m;
}

}  // namespace

TEST(FueterResidual, ConstantMapIsZero) {
  auto g = std::make_shared<const DomainGrid>(build_grid(GridKind::ball3, 0.25, 1.0));
  const SectionSample u = sample_section(g, flatH(), constant_map(VectorXd::Ones(4), 3));
  EXPECT_EQ(fueter_residual_3d(u).norm.maxCoeff(), 0.0);
  EXPECT_EQ(total_energy(u), 0.0);
  EXPECT_EQ(energy_identity_residual(u).cwiseAbs().maxCoeff(), 0.0);
}

TEST(FueterResidual, LinearMaps) {
  const SectionSample f = linearSample(kFueterLinear, 0.25);
  EXPECT_LT(fueter_residual_3d(f).norm.maxCoeff(), 1e-12);
  const SectionSample g = linearSample(kImaginary, 0.25);
  const FueterResidualField r = fueter_residual_3d(g);
  for (int i = 0; i < g.size(); ++i) {
    EXPECT_NEAR(r.residual(0, i), -3.0, 1e-12);
    EXPECT_LT(r.residual.col(i).tail<3>().norm(), 1e-12);
  }
}

TEST(FueterResidual, FiniteDifferenceOrder) {
  std::vector<double> err;
  for (double h : {1.0 / 8, 1.0 / 16, 1.0 / 32}) {
    auto g = std::make_shared<const DomainGrid>(build_grid(GridKind::torus3, h, 1.0));
    const auto fd = fueter_residual_3d(sample_section(g, flatH(), trigMap(), {DerivativeMode::finite_difference, 1.0}));
    const auto ex = fueter_residual_3d(sample_section(g, flatH(), trigMap(), {DerivativeMode::exact, 1.0}));
    err.push_back((fd.residual - ex.residual).cwiseAbs().maxCoeff());
  }
  for (int k = 0; k < 2; ++k) {
    const double order = std::log2(err[k] / err[k + 1]);
    EXPECT_GE(order, 1.8);
    EXPECT_LE(order, 2.2);
  }
}

TEST(FueterResidual4d, EigenvectorsOfPsi) {
  const MatrixXd psi = psi_endomorphism(1);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (psi + psi.transpose()));
  ASSERT_LT((psi - psi.transpose()).norm(), 1e-12);
  for (int k = 0; k < 16; ++k) {
    const VectorXd v = es.eigenvectors().col(k);
    const MatrixXd t = Eigen::Map<const MatrixXd>(v.data(), 4, 4);
    const MatrixXd r = fueter_residual_4d(t);
    const double lambda = es.eigenvalues()(k);
    if (std::abs(lambda - 1) < 1e-9) EXPECT_LT(r.norm(), 1e-10);
    else EXPECT_LT((r - 4 * t).norm(), 1e-10);
  }
  EXPECT_EQ(fueter_residual_4d(MatrixXd::Zero(4, 4)).norm(), 0.0);
}

TEST(FueterResidual4d, MatchesThreeDimensionalResidual) {
  // For u independent of t, ((1 - Psi) T)(e0) = d_t u - F u = -F u.
  const HKStructured h = flat_quaternion_target(1, false).structure_at(VectorXd::Zero(4));
  for (const MatrixXd& d : {kFueterLinear, kImaginary, MatrixXd(columns({{1, 2, 0, -1}, {0, 3, 1, 1}, {2, 0, 0, 5}}))}) {
    MatrixXd t = MatrixXd::Zero(4, 4);
    t.rightCols(3) = d;
    const MatrixXd r = fueter_residual_4d(t);
    EXPECT_LT((r.col(0) + fueter_residual_jet(h, d)).norm(), 1e-10);
  }
}

TEST(Energy, LinearMapOnBall) {
  const SectionSample u = linearSample(kFueterLinear);
  EXPECT_NEAR(total_energy(u), 2 * 4 * pi / 3, 0.02 * 8 * pi / 3);
  const SectionSample v = linearSample(kFueterLinear / std::sqrt(2.0));
  EXPECT_NEAR(total_energy(v), 0.5 * total_energy(u), 1e-12);
}

TEST(EnergyIdentity, TermsOfLinearMaps) {
  const HKStructured h = flat_quaternion_target(1, false).structure_at(VectorXd::Zero(4));
  const auto a = energy_identity_terms(h, kFueterLinear);
  EXPECT_NEAR(a.energy, 2, 1e-14);
  EXPECT_NEAR(a.fueter, 0, 1e-14);
  EXPECT_NEAR(a.pairing, 2, 1e-14);
  const auto b = energy_identity_terms(h, kImaginary);
  EXPECT_NEAR(b.energy, 3, 1e-14);
  EXPECT_NEAR(b.fueter, 9, 1e-14);
  EXPECT_NEAR(b.pairing, -6, 1e-14);
  EXPECT_EQ(calibrate_pairing_orientation(), kPairingOrientation);
}

TEST(EnergyIdentity, HoldsOnCurvedTargetJets) {
  const TargetChart t = eguchi_hanson_target(1.0);
  VectorXd y(4);
  y << 0.1, 0.6, -0.3, 2.0;
  const HKStructured h = t.structure_at(y);
  MatrixXd d(4, 3);
  d << 0.3, -1.0, 0.2, 1.1, 0.5, -0.4, 0.0, 0.7, 0.9, -0.6, 0.2, 0.3;
  EXPECT_LT(std::abs(energy_identity_terms(h, d).residual()), 1e-12);
}

TEST(EnergyIdentity, TorusIntegralIsHomotopyInvariant) {
  // On a closed torus into flat H the pairing term integrates to zero, so E - int |Fu|^2 vanishes
  // along any smooth homotopy.
  auto g = std::make_shared<const DomainGrid>(build_grid(GridKind::torus3, 1.0 / 24, 1.0));
  for (double s : {0.0, 0.05, 0.1}) {
    SourceMap base = trigMap();
    SourceMap m;
    m.value = [base, s](const VectorXd& x) -> VectorXd {
      VectorXd v = base.value(x);
      v(1) += s * std::sin(2 * pi * (x(0) + x(2)));
      return v;
    };
    m.derivative = [base, s](const VectorXd& x) -> MatrixXd {
      MatrixXd d = base.derivative(x);
      const double c = s * 2 * pi * std::cos(2 * pi * (x(0) + x(2)));
      d(1, 0) += c;
      d(1, 2) += c;
      return d;
    };
    const SectionSample u = sample_section(g, flatH(), m, {DerivativeMode::exact, 1.0});
    const auto f = fueter_residual_3d(u);
    const double fu = (f.norm.array().square() * g->weights.array()).sum();
    EXPECT_LT(std::abs(total_energy(u) - fu), 1e-6 * total_energy(u)) << s;
  }
}

TEST(DiffInequality, FlatAndConstant) {
  const DiffInequalityResult r = diff_inequality_ratio(linearSample(kFueterLinear, 0.125), 3);
  EXPECT_LT(r.max_ratio, 1e-9);
  auto g = std::make_shared<const DomainGrid>(build_grid(GridKind::ball3, 0.25, 1.0));
  EXPECT_EQ(diff_inequality_ratio(sample_section(g, flatH(), constant_map(VectorXd::Zero(4), 3)), 4).max_ratio, 0.0);
}

TEST(DiffInequality, HnsMembers) {
  // At lambda = 1 the energy density is constant, so the Laplacian vanishes; at lambda = 1/2 the
  // ratio must be stable under refinement.
  auto eh = std::make_shared<const TargetChart>(eguchi_hanson_target(1.0));
  std::vector<double> m;
  for (int n : {16, 32}) {
    auto g = std::make_shared<const DomainGrid>(build_grid(GridKind::sphere3, pi / (2 * n), pi / 2, {n, n, false}));
    const SectionSample flat = hns_family(eh->holomorphic_spheres[0].map, 1.0, g, eh);
    EXPECT_NEAR(flat.energy_density.maxCoeff(), flat.energy_density.minCoeff(), 1e-10);
    EXPECT_LT(diff_inequality_ratio(flat, 4).max_ratio, 1e-9);
    m.push_back(diff_inequality_ratio(hns_family(eh->holomorphic_spheres[0].map, 0.5, g, eh), 4).max_ratio);
  }
  EXPECT_GT(m[0], 0.1);
  EXPECT_NEAR(m[1] / m[0], 1.0, 0.2);
}

TEST(Twistor, ConstantAndAntiHolomorphic) {
  const TargetChart t = eguchi_hanson_target(1.0);
  SphereMap c;
  VectorXd y(4);
  y << 0.0, 0.5, 0.0, 1.0;
  c.at = [y](Complex) { return y; };
  c.jacobian = [](Complex) { return MatrixXd::Zero(4, 2); };
  c.at_infinity = y;
  EXPECT_EQ(twistor_check(t, c, Vector3d::UnitX(), 16).dbar_residual, 0.0);
  const HolomorphicSphere& bolt = t.holomorphic_spheres[0];
  const TwistorCheck anti = twistor_check(t, bolt.map, -bolt.xi, 64);
  EXPECT_GT(anti.dbar_residual, 0.1);
}
