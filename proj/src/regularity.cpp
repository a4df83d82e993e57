#include "fueter/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fueter/errors.hpp"
#include "fueter/measures.hpp"

namespace fueter {

GridFunction make_grid_function(std::shared_ptr<const DomainGrid> grid, std::function<double(const VectorXd&)> f) {
  if (!grid || grid->kind == GridKind::flat4) throw InputError("grid functions live on 3-dimensional grids");
  GridFunction g;
  g.grid = std::move(grid);
  g.eval = std::move(f);
  g.values.resize(g.grid->size());
  for (int i = 0; i < g.grid->size(); ++i) g.values(i) = g.eval(g.grid->points.col(i));
  return g;
}

GridFunction energy_density_function(const SectionSample& u) {
  GridFunction g;
  g.grid = u.grid;
  const double step = u.options.fd_factor * u.grid->h;
  const SectionSample copy = u;
  g.eval = [copy, step](const VectorXd& p) { return copy.density(p, step); };
  g.values = u.energy_density;
  return g;
}

double positive_laplacian(const GridFunction& f, const VectorXd& p, double s) {
  const DomainGrid& g = *f.grid;
  const double f0 = f.eval(p);
  double lap = 0.0;
  for (int a = 0; a < 3; ++a) lap -= (f.eval(g.flow(p, a, s)) + f.eval(g.flow(p, a, -s)) - 2 * f0) / (s * s);
  return lap;
}

double ball_integral(const GridFunction& f, const VectorXd& x, double r) {
  const DomainGrid& g = *f.grid;
  double sum = 0.0;
  for (int i = 0; i < g.size(); ++i) {
    const double ind = ball_indicator(g.distance(g.points.col(i), x), r, g.diameter(i));
    if (ind > 0) sum += ind * g.weights(i) * f.values(i);
  }
  return sum;
}

namespace {

void requireBall(const DomainGrid& g, const VectorXd& x, double r) {
  if (!(r > 0)) throw InputError("radius must be positive");
  const double rmax = g.max_radius(x);
  if (r > rmax * (1 + 1e-12))
    throw DomainError("ball exits the domain; largest admissible radius is " + std::to_string(rmax));
}

// Grid points of B_r(x) where the Laplacian stencil stays inside the domain.
std::vector<int> stencilPoints(const DomainGrid& g, const VectorXd& x, double r) {
  std::vector<int> idx;
  for (int i = 0; i < g.size(); ++i) {
    const VectorXd p = g.points.col(i);
    if (g.distance(p, x) > r) continue;
    if (g.kind == GridKind::ball3 && p.norm() + g.spacing(i) > g.extent) continue;
    idx.push_back(i);
  }
  return idx;
}

}  // namespace

MeanValueCheck mean_value_check(const GridFunction& f, const VectorXd& x, double r, double constant) {
  const DomainGrid& g = *f.grid;
  requireBall(g, x, r);
  MeanValueCheck m;
  m.constant = constant;
  m.lhs = f.eval(x);
  m.volume_term = ball_integral(f, x, r) / (r * r * r);
  double sup = 0.0;
  for (int i : stencilPoints(g, x, r)) sup = std::max(sup, std::abs(positive_laplacian(f, g.points.col(i), g.spacing(i))));
  m.laplacian_term = r * r * sup;
  m.rhs = m.volume_term + m.laplacian_term;
  m.holds = m.lhs <= constant * m.rhs + 1e-12;
  return m;
}

HeinzParams HeinzParams::make(double d, int p, int delta, double c) {
  if (!(d > 0) || !(c > 0)) throw InputError("Heinz parameters need d > 0 and c > 0");
  if ((p != 0 && p != 1) || (delta != 0 && delta != 1)) throw InputError("p and delta must be 0 or 1");
  HeinzParams h;
  h.d = d;
  h.q = 2.0 / d + 1.0;
  h.p = p;
  h.delta = delta;
  h.c = c;
  return h;
}

std::optional<double> heinz_root_solve(double d, double c, double eps) {
  if (!(d > 0) || !(c > 0) || !(eps >= 0)) throw InputError("heinz_root_solve needs d > 0, c > 0, eps >= 0");
  if (eps == 0) return 0.0;
  const auto g = [&](double t) { return std::pow(t, d) * (1 - c * t * t); };
  const double target = c * eps;
  double hi = std::min(1.0 / std::sqrt(2 * c), std::sqrt(d / ((d + 2) * c)));
  if (g(hi) < target) return std::nullopt;
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

HeinzReport heinz_verify(const GridFunction& f, const HeinzParams& params, const VectorXd& x, double r,
                         double epsilon0, double constant) {
  const DomainGrid& g = *f.grid;
  requireBall(g, x, r);
  if (std::abs(params.q - (2.0 / params.d + 1.0)) > 1e-14) throw InputError("q must equal 2/d + 1");
  const double n = 3.0;
  HeinzReport rep;
  rep.constant = constant;
  rep.epsilon0 = epsilon0;

  // (i) Delta f <= c (f^q + f^p).
  double ratio = 0.0;
  for (int i : stencilPoints(g, x, r)) {
    const VectorXd p = g.points.col(i);
    const double lap = positive_laplacian(f, p, g.spacing(i));
    if (lap <= 0) continue;
    const double fv = std::max(0.0, f.values(i));
    const double den = std::pow(fv, params.q) + (params.p == 0 ? 1.0 : fv);
    ratio = std::max(ratio, den > 0 ? lap / den : std::numeric_limits<double>::infinity());
  }
  rep.inequality_ratio = ratio;
  rep.inequality_holds = ratio <= params.c;

  // (ii) s^{d-n} int_{B_s(y)} f <= c (r^{d-n} int_{B_r(x)} f + delta r^2) for B_s(y) in B_{r/2}(x).
  const double full = ball_integral(f, x, r);
  rep.epsilon = std::pow(r, params.d - n) * full;
  const double right = rep.epsilon + params.delta * r * r;
  double mono = 0.0;
  const double hmin = 2 * g.h;
  for (double frac : {1.0 / 16, 1.0 / 8, 1.0 / 4}) {
    const double s = frac * r;
    if (s < hmin) continue;
    const double reach = 0.5 * r - s;
    // Centers: x and the frame flows from x by reach/2 and reach in both directions.
    std::vector<VectorXd> centers{x};
    for (int a = 0; a < 3; ++a)
      for (double t : {-reach, -0.5 * reach, 0.5 * reach, reach}) centers.push_back(g.flow(x, a, t));
    for (const VectorXd& y : centers) {
      const double left = std::pow(s, params.d - n) * ball_integral(f, y, s);
      if (left <= 0) continue;
      mono = std::max(mono, right > 0 ? left / right : std::numeric_limits<double>::infinity());
    }
  }
  rep.monotonicity_ratio = mono;
  rep.monotonicity_holds = mono <= params.c;

  for (int i = 0; i < g.size(); ++i)
    if (g.distance(g.points.col(i), x) <= 0.25 * r) rep.sup_quarter = std::max(rep.sup_quarter, f.values(i));
  rep.bound_scale = std::pow(r, -params.d) * rep.epsilon + ((1 - params.p) + params.delta) * r * r;
  rep.fitted_constant = rep.bound_scale > 0 ? rep.sup_quarter / rep.bound_scale
                                            : (rep.sup_quarter > 0 ? std::numeric_limits<double>::infinity() : 0.0);

  if (!rep.inequality_holds || !rep.monotonicity_holds)
    rep.status = "hypotheses violated";
  else if (rep.epsilon > epsilon0)
    rep.status = "not applicable";
  else
    rep.status = rep.sup_quarter <= constant * rep.bound_scale + 1e-12 ? "bound holds" : "bound violated";
  return rep;
}

EpsilonRegularityReport epsilon_regularity_check(const SectionSample& u, const VectorXd& x, double r,
                                                 double epsilon0, double constant) {
  EpsilonRegularityReport rep;
  rep.epsilon = renormalized_energy(u, x, r);
  const DomainGrid& g = *u.grid;
  for (int i = 0; i < u.size(); ++i)
    if (g.distance(g.points.col(i), x) <= 0.25 * r) rep.sup_quarter = std::max(rep.sup_quarter, u.energy_density(i));
  rep.bound = constant * (rep.epsilon / (r * r) + 1.0);
  rep.margin = rep.bound - rep.sup_quarter;
  rep.applicable = rep.epsilon <= epsilon0;
  rep.holds = rep.applicable && rep.margin >= 0;
  return rep;
}

WeakTypeCheck weak_type_check(const VectorXd& f, double h, double smax, double delta) {
  if (!(delta > 0)) throw InputError("delta must be positive");
  if ((f.array() < 0).any()) throw InputError("f must be nonnegative");
  const VectorXd m = hardy_littlewood_max(f, h, smax);
  WeakTypeCheck w;
  for (Eigen::Index i = 0; i < m.size(); ++i)
    if (m(i) >= delta) w.measure += h;
  w.bound = 4.0 * f.sum() * h / delta;
  w.holds = w.measure <= w.bound + 1e-12;
  return w;
}

}  // namespace fueter
