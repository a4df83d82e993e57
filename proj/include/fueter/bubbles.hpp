#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fueter/measures.hpp"
#include "fueter/section.hpp"

namespace fueter {

/// u_lambda = z o s_lambda o pi on S^3, with its exact frame derivative.
SourceMap hns_map(const SphereMap& z, double lambda);

/// The HNS family member sampled on a sphere3 grid.
SectionSample hns_family(const SphereMap& z, double lambda, std::shared_ptr<const DomainGrid> grid,
                         std::shared_ptr<const TargetChart> target,
                         SampleOptions options = {DerivativeMode::exact, 1.0});

/// Pullback y -> u(exp_x(lambda y)) sampled on a fresh ball3 grid of spacing h and radius `extent`.
/// Exact composition; derivatives are chained through the exponential map in exact mode.
SectionSample rescale_map(const SectionSample& u, const VectorXd& x, double lambda, double h, double extent);

/// Exact pullback as a source map on R^3 (exponential coordinates at x scaled by lambda).
SourceMap rescaled_source(const SectionSample& u, const VectorXd& x, double lambda);

/// sup_s (1/s) int_{Q_{s,L}(0,0)} |d_v u|^2 over s = L 2^{-k/2} >= 2h, Q along v through the origin.
double translation_deficit(const SectionSample& u, const Vector3d& v, double L);

struct BubbleGridPoint {
  Vector2d w;       // normal-plane coordinates in the final rescaled frame
  double weight;    // area weight
  VectorXd value;   // averaged target coordinates
};

struct BubbleReport {
  VectorXd base_point;
  Vector3d tangent_direction;
  std::vector<BubbleGridPoint> bubble;
  VectorXd value_at_infinity;  // outer-ring average, fills the point at infinity
  double bubble_energy = 0.0;
  double antiholomorphy_residual = 0.0;  // ||dbar z||_{L2} / sqrt(bubble energy)
  double energy_capture = 0.0;           // energy in the disk of half the outer radius over the total
  double theta_at_x = 0.0;
  double epsilon = 0.0;                  // step-1 scale
  double delta = 0.0;                    // step-3 scale (relative to epsilon)
  Vector2d center_offset = Vector2d::Zero();
  double outer_radius = 0.0;
};

struct BubbleOutcome {
  bool found = false;
  std::string reason;  // why no bubble, when !found
  BubbleReport report;
  double step1_fraction = 0.0;  // best tube fraction seen in step 1
  double step1_energy = 0.0;
};

struct BubbleOptions {
  double tube_fraction = 0.9;   // step 1: energy share of the tube |w| < 1/4 in the unit ball
  double capture = 0.95;        // compactification threshold
  int scale_count = 64;         // step 3 log grid
  double delta_min = 1e-4;
  std::vector<double> theta_radii{0.4, 0.2, 0.1};
};

/// Three-step extraction at x along v (frame coordinates at x) on the last member of the sequence.
BubbleOutcome extract_bubble(const std::vector<SectionSample>& seq, const VectorXd& x, const Vector3d& v,
                             double epsilon0, const BubbleOptions& options = {});

/// A compactly supported weight phi with its C^1 norm and sup_{supp phi} |x|.
struct TestWeight {
  std::function<double(const Vector3d&)> value;
  double support_radius = 0.0;
  double c1_norm = 0.0;
};

/// Smooth bump in |x| supported on the annulus a < |x| < b.
TestWeight annulus_bump(double a, double b);

struct ConicalDeviation {
  double lhs = 0.0;
  double rhs_bound = 0.0;
  double constant = 2.0;
  bool holds() const { return lhs <= constant * rhs_bound + 1e-12; }
};

/// lhs = |int phi(x) |d(u o s_R)|^2 - int phi |du|^2|; rhs = int_1^R (1/rho) sup|x| ||phi||_C1
/// int |d_r u_rho| |du_rho| drho, with u_rho = u o s_rho.
ConicalDeviation conical_deviation(const SectionSample& u, const TestWeight& phi, double R);

struct TangentConeSample {
  std::vector<std::pair<Vector3d, double>> rays;    // unit direction, weight
  std::function<double(const Vector3d&)> map_density;  // |du_*|^2 on S^2, optional
};

/// |sum x Theta(x) + int_{S^2} x |du_*|^2|.
double balancing_deficit(const TangentConeSample& cone, int n = 64);

struct VectorField {
  std::function<Vector3d(const Vector3d&)> value;
  double gradient_sup = 0.0;
};

struct BalancingBoundary {
  double lhs = 0.0;
  double rhs_bound = 0.0;
  double boundary_energy = 0.0;  // int_{dB_r} |du|^2
};

/// lhs = |int_{dB_r(x)} <v, d_r>|du|^2 - 2 <d_r u, d_v u>|, rhs = r ||grad v|| int_{dB_r} |du|^2,
/// midpoint rule with n x 2n nodes in (theta, phi).
BalancingBoundary balancing_boundary_functional(const SectionSample& u, const Vector3d& x, double r,
                                                const VectorField& v, int n = 32);

/// Theta_* estimates at t * direction for each t: mu(B_{rho t}(t d)) / (rho t).
MatrixXd ray_weights(const RadonMeasureApprox& mu, const std::vector<Vector3d>& directions,
                     const std::vector<double>& distances, double rho = 0.25);

}  // namespace fueter
