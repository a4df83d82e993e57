#pragma once

#include <vector>

#include <Eigen/Dense>

#include "fueter/section.hpp"

namespace fueter {

/// Sign of the pairing term in |du|^2 = |Fu|^2 + pairing, relative to the bracket
/// w1(d2,d3) - w2(d1,d3) + w3(d1,d2). Fixed by `calibrate_pairing_orientation`.
inline constexpr int kPairingOrientation = -1;

struct FueterResidualField {
  MatrixXd residual;  // target_dim x N: sum_a I_a du(v_a)
  VectorXd norm;      // |Fu| in the target metric
};

/// Fu = sum_a I_a du(v_a) pointwise, with v_a paired to I_a.
FueterResidualField fueter_residual_3d(const SectionSample& u);
/// Same at one jet.
VectorXd fueter_residual_jet(const HKStructured& h, const MatrixXd& d);

/// (id - Psi) applied to a linear map R^4 -> H^n, given as a 4n x 4 matrix.
MatrixXd fueter_residual_4d(const MatrixXd& t);
/// Pointwise (id - Psi) on a flat4 sample.
FueterResidualField fueter_residual_4d(const SectionSample& u);

double total_energy(const SectionSample& u);

/// Parts of the pointwise energy identity.
struct EnergyIdentityTerms {
  double energy = 0.0;    // |du|^2
  double fueter = 0.0;    // |Fu|^2
  double pairing = 0.0;   // kPairingOrientation * 2 [w1(d2,d3) - w2(d1,d3) + w3(d1,d2)]
  double residual() const { return energy - fueter - pairing; }
};

EnergyIdentityTerms energy_identity_terms(const HKStructured& h, const MatrixXd& d);
/// Per-point |du|^2 - |Fu|^2 - pairing.
VectorXd energy_identity_residual(const SectionSample& u);

/// Orientation (+1 or -1) for which the identity holds on u(x) = x1 i - x2 j into flat H.
int calibrate_pairing_orientation();

struct DiffInequalityResult {
  VectorXd ratio;             // Delta|du|^2 / (|du|^exponent + 1); NaN at excluded points
  std::vector<char> excluded;
  double max_ratio = 0.0;     // over included points, of |ratio|
};

/// Positive Laplacian of the energy density by second differences along the frame flows
/// with step `step_factor * spacing`. Points whose stencil leaves a ball3 domain are excluded.
DiffInequalityResult diff_inequality_ratio(const SectionSample& u, int exponent, double step_factor = 1.0);

struct TwistorCheck {
  double dbar_residual = 0.0;      // L2 of dz(d/dy) - I_xi dz(d/dx) over S^2
  double twistor_residual = 0.0;   // L2 over S^2 of I(t1) dz(t1) + I(t2) dz(t2), t orthonormal tangent at p
  double twistor_residual_cut = 0.0;  // the same, leaving out the caps |p_2 + i p_3| < 1/4 around the poles
  double radial_fueter = 0.0;  // L2 of the Fueter residual of x -> z(x/|x|) over 1 <= |x| <= 2 outside the
                               // tube around the x1-axis matching the caps, by centered differences
  double energy = 0.0;             // int |dz|^2 over S^2
};

/// `n` is the S^2 quadrature resolution; `h` the ball-grid spacing for the radial extension.
TwistorCheck twistor_check(const TargetChart& chart, const SphereMap& z, const Vector3d& xi, int n = 64,
                           double h = 0.0);

/// Radial extension x -> z(zeta(x/|x|)) as a source map on ball3.
SourceMap radial_extension(const SphereMap& z);

}  // namespace fueter
