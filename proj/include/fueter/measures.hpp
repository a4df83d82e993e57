#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fueter/section.hpp"

namespace fueter {

/// Weighted point masses on a source domain. Each atom carries a width w used by the
/// smoothed ball indicator clamp((r - d)/w + 1/2, 0, 1), which is nondecreasing in r.
struct RadonMeasureApprox {
  GridKind kind = GridKind::ball3;
  double period = 0.0;  // torus3 only
  MatrixXd points;
  VectorXd masses;
  VectorXd widths;
  std::string provenance;

  int size() const { return static_cast<int>(masses.size()); }
  double total() const;
  double distance(const VectorXd& a, const VectorXd& b) const;
  double ball_mass(const VectorXd& x, double r) const;
};

/// |du|^2 dvol on the sample's grid, atoms at the grid points.
RadonMeasureApprox energy_measure(const SectionSample& u, std::string provenance = "energy");

/// Merges atoms into ambient cubes of side `cell` (mass-weighted centroids, projected back to S^3 on sphere3).
RadonMeasureApprox coarsen(const RadonMeasureApprox& mu, double cell);

/// Smoothed indicator of d <= r for an atom of width w.
double ball_indicator(double d, double r, double w);

/// (1/r) int_{B_r(x)} |du|^2. Throws DomainError naming the largest admissible r.
double renormalized_energy(const SectionSample& u, const VectorXd& x, double r);

struct MonotonicityRow {
  double s = 0.0, r = 0.0;
  double lhs = 0.0;  // f(r) - f(s)
  double rhs = 0.0;  // 2 int_{B_r \ B_s} |d_r u|^2 / rho
  double difference() const { return lhs - rhs; }
};

struct MonotonicityReport {
  std::vector<MonotonicityRow> rows;
  bool identity_form = true;  // false: u is not Fueter, lhs >= rhs is the expected relation
};

/// Rows for consecutive pairs of `radii` (strictly ascending).
MonotonicityReport monotonicity_report(const SectionSample& u, const VectorXd& x, const std::vector<double>& radii);

struct DensityEstimate {
  double theta = 0.0;  // extrapolated mu(B_r)/r at r = 0
  double slope = 0.0;
  std::vector<double> radii;
  std::vector<double> ratios;
};

/// mu(B_r(x))/r on the given decreasing radii, least-squares line in r extrapolated to r = 0.
DensityEstimate density_theta(const RadonMeasureApprox& mu, const VectorXd& x, const std::vector<double>& radii);

struct BlowupReport {
  std::vector<int> locus_cells;        // indices into the candidate set, ascending
  MatrixXd locus_points;               // their coordinates
  std::vector<double> theta_estimates; // one per locus cell
  double epsilon0_used = 0.0;
  std::vector<double> radii_used;
  int tail_start = 0;                  // first sequence index of the tested tail
};

/// Cells (candidate points) whose renormalized energy is >= epsilon0 at every radius for
/// every measure in the tail half of the sequence. Theta is estimated from the last measure.
BlowupReport detect_blowup_locus(const std::vector<RadonMeasureApprox>& seq, const MatrixXd& candidates,
                                 double epsilon0, const std::vector<double>& radii);
BlowupReport detect_blowup_locus(const std::vector<SectionSample>& seq, const MatrixXd& candidates,
                                 double epsilon0, const std::vector<double>& radii);

struct DefectDecomposition {
  VectorXd absolutely_continuous;  // |du_limit|^2 * cell volume per cell
  RadonMeasureApprox nu;
  std::vector<int> support;        // cells with nu above the noise floor
  double noise_floor = 0.0;
};

/// nu := cellwise max(mu - |du_limit|^2 vol, 0), zeroed below 1e-3 * mass(mu) / #cells.
DefectDecomposition defect_decompose(const RadonMeasureApprox& mu_limit, const SectionSample& u_limit);

/// Mf(z) = sup_{0 < s <= smax} (1/s) int_{z-s}^{z+s} f on a uniform 1D grid of spacing h, with s on
/// multiples of h (trapezoid weights, f = 0 outside) and the s -> 0 value 2 f(z).
VectorXd hardy_littlewood_max(const VectorXd& f, double h, double smax);

/// Base point and tangent direction of a 1-dimensional concentration near x: the mass centroid of
/// B_radius(x) (projected to the domain) and the principal axis of the second-moment matrix, in
/// frame coordinates at the base point.
struct LocusFrame {
  VectorXd point;
  Vector3d direction;
  double anisotropy = 0.0;  // largest eigenvalue over the trace
};
LocusFrame estimate_locus_frame(const RadonMeasureApprox& nu, const VectorXd& x, double radius);

/// CSV: coordinates, mass.
void write_measure_csv(const RadonMeasureApprox& mu, std::ostream& os);

}  // namespace fueter
