#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fueter/section.hpp"

namespace fueter {

/// Nonnegative function on a 3-dimensional source grid, evaluable off the grid (for difference stencils).
struct GridFunction {
  std::shared_ptr<const DomainGrid> grid;
  std::function<double(const VectorXd&)> eval;
  VectorXd values;  // eval at the grid points
};

GridFunction make_grid_function(std::shared_ptr<const DomainGrid> grid, std::function<double(const VectorXd&)> f);
/// |du|^2 of a sample; off-grid values use the sample's derivative mode.
GridFunction energy_density_function(const SectionSample& u);

/// Positive Laplacian -sum_a (f(p + s v_a) + f(p - s v_a) - 2 f(p)) / s^2 along the frame flows.
double positive_laplacian(const GridFunction& f, const VectorXd& p, double s);

/// Smoothed-indicator quadrature of int_{B_r(x)} f.
double ball_integral(const GridFunction& f, const VectorXd& x, double r);

struct MeanValueCheck {
  double lhs = 0.0;            // f(x)
  double volume_term = 0.0;    // r^{-n} int_{B_r} f
  double laplacian_term = 0.0; // r^2 sup_{B_r} |Delta f|
  double rhs = 0.0;
  double constant = 1.0;
  bool holds = false;          // lhs <= constant * rhs
};

MeanValueCheck mean_value_check(const GridFunction& f, const VectorXd& x, double r, double constant = 1.0);

struct HeinzParams {
  double d = 1.0;
  double q = 3.0;
  int p = 1;
  int delta = 0;
  double c = 1.0;

  /// q = 2/d + 1.
  static HeinzParams make(double d, int p, int delta, double c);
};

/// Smallest nonnegative root of t^d (1 - c t^2) = c eps by bisection on [0, min((2c)^{-1/2}, t*)], t* the
/// maximizer of the left side. nullopt when the left side stays below c eps there ("no small root").
std::optional<double> heinz_root_solve(double d, double c, double eps);

struct HeinzReport {
  std::string status;  // "hypotheses violated", "not applicable", "bound holds", "bound violated"
  bool inequality_holds = false;
  bool monotonicity_holds = false;
  double inequality_ratio = 0.0;    // max Delta f / (f^q + f^p) over the sampled points
  double monotonicity_ratio = 0.0;  // max s^{d-n} int_{B_s(y)} f / (r^{d-n} int_{B_r(x)} f + delta r^2)
  double epsilon = 0.0;             // r^{d-n} int_{B_r(x)} f
  double sup_quarter = 0.0;         // sup_{B_{r/4}(x)} f
  double bound_scale = 0.0;         // r^{-d} eps + ((1 - p) + delta) r^2
  double fitted_constant = 0.0;     // sup_quarter / bound_scale
  double constant = 0.0;            // asserted constant
  double epsilon0 = 0.0;
};

/// Checks both hypotheses on the data (with the constant params.c), then, when they hold and eps <= epsilon0,
/// asserts sup_{B_{r/4}} f <= constant * bound_scale.
HeinzReport heinz_verify(const GridFunction& f, const HeinzParams& params, const VectorXd& x, double r,
                         double epsilon0, double constant);

struct EpsilonRegularityReport {
  double epsilon = 0.0;
  double sup_quarter = 0.0;
  double bound = 0.0;   // C (r^{-2} eps + 1)
  double margin = 0.0;  // bound - sup
  bool applicable = false;
  bool holds = false;
};

EpsilonRegularityReport epsilon_regularity_check(const SectionSample& u, const VectorXd& x, double r,
                                                 double epsilon0, double constant);

struct WeakTypeCheck {
  double measure = 0.0;  // |{Mf >= delta}|
  double bound = 0.0;    // 4 ||f||_1 / delta
  bool holds = false;
};

/// Weak-type L^1 estimate for the maximal function of `hardy_littlewood_max` on a uniform 1D grid.
WeakTypeCheck weak_type_check(const VectorXd& f, double h, double smax, double delta);

}  // namespace fueter
