#include "fueter/measures.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <ostream>

#include "fueter/errors.hpp"
#include "fueter/fueter.hpp"

namespace fueter {

double RadonMeasureApprox::total() const {
  double s = 0.0;
  for (int i = 0; i < size(); ++i) s += masses(i);
  return s;
}

double RadonMeasureApprox::distance(const VectorXd& a, const VectorXd& b) const {
  if (kind == GridKind::sphere3) return 2.0 * std::asin(std::min(1.0, 0.5 * (a - b).norm()));
  if (kind == GridKind::torus3) {
    VectorXd d = a - b;
    for (int k = 0; k < d.size(); ++k) d(k) -= period * std::round(d(k) / period);
    return d.norm();
  }
  return (a - b).norm();
}

double ball_indicator(double d, double r, double w) {
  if (w <= 0) return d <= r ? 1.0 : 0.0;
  return std::clamp((r - d) / w + 0.5, 0.0, 1.0);
}

double RadonMeasureApprox::ball_mass(const VectorXd& x, double r) const {
  double sum = 0.0;
  const double wmax = widths.size() ? widths.maxCoeff() : 0.0;
  const double reach = r + 0.5 * wmax;
  const double chord = kind == GridKind::sphere3 ? 2.0 * std::sin(std::min(reach, std::numbers::pi) / 2) : reach;
  const double chord2 = chord * chord;
  for (int i = 0; i < size(); ++i) {
    if (masses(i) == 0.0) continue;
    if (kind != GridKind::torus3 && (points.col(i) - x).squaredNorm() > chord2 * (1 + 1e-12) && reach < std::numbers::pi)
      continue;
    sum += masses(i) * ball_indicator(distance(points.col(i), x), r, widths(i));
  }
  return sum;
}

RadonMeasureApprox energy_measure(const SectionSample& u, std::string provenance) {
  RadonMeasureApprox mu;
  mu.kind = u.grid->kind;
  mu.period = u.grid->kind == GridKind::torus3 ? u.grid->extent : 0.0;
  mu.points = u.grid->points;
  mu.masses = u.grid->weights.cwiseProduct(u.energy_density);
  mu.widths = u.grid->diameter;
  mu.provenance = std::move(provenance);
  return mu;
}

RadonMeasureApprox coarsen(const RadonMeasureApprox& mu, double cell) {
  if (!(cell > 0)) throw InputError("coarsening cell must be positive");
  struct Acc {
    VectorXd moment;
    double mass = 0.0, width = 0.0, count = 0.0;
  };
  std::map<std::vector<long>, Acc> bins;
  const int dim = static_cast<int>(mu.points.rows());
  for (int i = 0; i < mu.size(); ++i) {
    std::vector<long> key(dim);
    for (int k = 0; k < dim; ++k) key[k] = static_cast<long>(std::floor(mu.points(k, i) / cell));
    Acc& a = bins[key];
    if (a.moment.size() == 0) a.moment = VectorXd::Zero(dim);
    // Unweighted fallback keeps massless bins well placed.
    a.moment += (mu.masses(i) + 1e-300) * mu.points.col(i);
    a.mass += mu.masses(i);
    a.width += (mu.masses(i) + 1e-300) * mu.widths(i);
    a.count += mu.masses(i) + 1e-300;
  }
  RadonMeasureApprox out;
  out.kind = mu.kind;
  out.period = mu.period;
  out.provenance = mu.provenance + " (coarsened)";
  out.points.resize(dim, static_cast<long>(bins.size()));
  out.masses.resize(static_cast<long>(bins.size()));
  out.widths.resize(static_cast<long>(bins.size()));
  long j = 0;
  for (const auto& [key, a] : bins) {
    VectorXd c = a.moment / a.count;
    if (mu.kind == GridKind::sphere3) c.normalize();
    out.points.col(j) = c;
    out.masses(j) = a.mass;
    out.widths(j) = std::max(cell, a.width / a.count);
    ++j;
  }
  return out;
}

double renormalized_energy(const SectionSample& u, const VectorXd& x, double r) {
  if (!(r > 0)) throw InputError("radius must be positive");
  const DomainGrid& g = *u.grid;
  const double rmax = g.max_radius(x);
  if (r > rmax * (1 + 1e-12))
    throw DomainError("ball exits the domain; largest admissible radius is " + std::to_string(rmax));
  double sum = 0.0;
  for (int i = 0; i < u.size(); ++i) {
    const double ind = ball_indicator(g.distance(g.points.col(i), x), r, g.diameter(i));
    if (ind > 0) sum += ind * g.weights(i) * u.energy_density(i);
  }
  return sum / r;
}

MonotonicityReport monotonicity_report(const SectionSample& u, const VectorXd& x, const std::vector<double>& radii) {
  if (radii.size() < 2) throw InputError("monotonicity_report needs at least two radii");
  for (size_t k = 1; k < radii.size(); ++k)
    if (!(radii[k] > radii[k - 1])) throw InputError("radii must be strictly ascending");
  if (!(radii.front() > 0)) throw InputError("radii must be positive");
  const DomainGrid& g = *u.grid;
  const double rmax = g.max_radius(x);
  if (radii.back() > rmax * (1 + 1e-12))
    throw DomainError("ball exits the domain; largest admissible radius is " + std::to_string(rmax));

  MonotonicityReport rep;
  double maxres = 0.0, maxdens = 0.0;
  std::vector<double> energy(radii.size(), 0.0), radial(radii.size(), 0.0);
  for (int i = 0; i < u.size(); ++i) {
    const VectorXd p = g.points.col(i);
    const double d = g.distance(p, x);
    const HKStructured h = u.target->structure_at(u.values.col(i));
    const MatrixXd D = u.derivative_at(i);
    const VectorXd f = fueter_residual_jet(h, D);
    maxres = std::max(maxres, f.dot(h.metric * f));
    maxdens = std::max(maxdens, u.energy_density(i));
    if (d > radii.back() + g.diameter(i)) continue;
    const VectorXd dr = D * g.radial_direction(x, p);
    const double rad = d > 0 ? dr.dot(h.metric * dr) / d : 0.0;
    for (size_t k = 0; k < radii.size(); ++k) {
      const double ind = ball_indicator(d, radii[k], g.diameter(i));
      energy[k] += ind * g.weights(i) * u.energy_density(i);
      radial[k] += ind * g.weights(i) * rad;
    }
  }
  rep.identity_form = maxres <= 1e-8 * (maxdens + 1.0);
  for (size_t k = 1; k < radii.size(); ++k) {
    MonotonicityRow row;
    row.s = radii[k - 1];
    row.r = radii[k];
    row.lhs = energy[k] / row.r - energy[k - 1] / row.s;
    row.rhs = 2.0 * (radial[k] - radial[k - 1]);
    rep.rows.push_back(row);
  }
  return rep;
}

DensityEstimate density_theta(const RadonMeasureApprox& mu, const VectorXd& x, const std::vector<double>& radii) {
  if (radii.size() < 3) throw InputError("density_theta needs at least 3 radii");
  for (size_t k = 1; k < radii.size(); ++k)
    if (!(radii[k] < radii[k - 1])) throw InputError("density_theta radii must be strictly decreasing");
  if (!(radii.back() > 0)) throw InputError("radii must be positive");
  DensityEstimate est;
  est.radii = radii;
  double sr = 0, sy = 0, srr = 0, sry = 0;
  const double n = static_cast<double>(radii.size());
  for (double r : radii) {
    const double y = mu.ball_mass(x, r) / r;
    est.ratios.push_back(y);
    sr += r;
    sy += y;
    srr += r * r;
    sry += r * y;
  }
  est.slope = (n * sry - sr * sy) / (n * srr - sr * sr);
  est.theta = (sy - est.slope * sr) / n;
  return est;
}

BlowupReport detect_blowup_locus(const std::vector<RadonMeasureApprox>& seq, const MatrixXd& candidates,
                                 double epsilon0, const std::vector<double>& radii) {
  if (seq.empty()) throw InputError("detect_blowup_locus needs a nonempty sequence");
  if (!(epsilon0 > 0)) throw InputError("epsilon0 must be positive");
  if (radii.empty()) throw InputError("detect_blowup_locus needs radii");
  BlowupReport rep;
  rep.epsilon0_used = epsilon0;
  rep.radii_used = radii;
  std::sort(rep.radii_used.begin(), rep.radii_used.end(), std::greater<>());
  rep.tail_start = static_cast<int>(seq.size()) / 2;
  for (int c = 0; c < candidates.cols(); ++c) {
    bool in = true;
    for (size_t i = rep.tail_start; i < seq.size() && in; ++i)
      for (double r : rep.radii_used)
        if (seq[i].ball_mass(candidates.col(c), r) / r < epsilon0) {
          in = false;
          break;
        }
    if (in) rep.locus_cells.push_back(c);
  }
  rep.locus_points.resize(candidates.rows(), static_cast<long>(rep.locus_cells.size()));
  for (size_t k = 0; k < rep.locus_cells.size(); ++k) {
    rep.locus_points.col(k) = candidates.col(rep.locus_cells[k]);
    rep.theta_estimates.push_back(rep.radii_used.size() >= 3
                                      ? density_theta(seq.back(), rep.locus_points.col(k), rep.radii_used).theta
                                      : seq.back().ball_mass(rep.locus_points.col(k), rep.radii_used.back()) /
                                            rep.radii_used.back());
  }
  return rep;
}

BlowupReport detect_blowup_locus(const std::vector<SectionSample>& seq, const MatrixXd& candidates, double epsilon0,
                                 const std::vector<double>& radii) {
  if (seq.empty()) throw InputError("detect_blowup_locus needs a nonempty sequence");
  for (const auto& s : seq)
    if (s.grid != seq.front().grid) throw InputError("all samples must share one grid");
  std::vector<RadonMeasureApprox> mus;
  for (const auto& s : seq) mus.push_back(energy_measure(s));
  return detect_blowup_locus(mus, candidates, epsilon0, radii);
}

DefectDecomposition defect_decompose(const RadonMeasureApprox& mu_limit, const SectionSample& u_limit) {
  if (mu_limit.size() != u_limit.size()) throw InputError("defect_decompose needs a measure on the sample's grid");
  DefectDecomposition d;
  d.absolutely_continuous = u_limit.grid->weights.cwiseProduct(u_limit.energy_density);
  d.nu = mu_limit;
  d.nu.provenance = "defect of " + mu_limit.provenance;
  d.noise_floor = 1e-3 * mu_limit.total() / std::max(1, mu_limit.size());
  for (int i = 0; i < mu_limit.size(); ++i) {
    double m = std::max(mu_limit.masses(i) - d.absolutely_continuous(i), 0.0);
    if (m < d.noise_floor) m = 0.0;
    d.nu.masses(i) = m;
    if (m > 0) d.support.push_back(i);
  }
  return d;
}

VectorXd hardy_littlewood_max(const VectorXd& f, double h, double smax) {
  if (!(h > 0)) throw InputError("grid spacing must be positive");
  if ((f.array() < 0).any()) throw InputError("hardy_littlewood_max needs f >= 0");
  const int n = static_cast<int>(f.size());
  const int kmax = static_cast<int>(std::floor(smax / h + 1e-9));
  std::vector<double> prefix(n + 1, 0.0);
  for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + f(i);
  const auto at = [&](int j) { return j >= 0 && j < n ? f(j) : 0.0; };
  const auto sum = [&](int a, int b) {  // inclusive, clipped
    a = std::max(a, 0);
    b = std::min(b, n - 1);
    return b >= a ? prefix[b + 1] - prefix[a] : 0.0;
  };
  VectorXd m(n);
  for (int i = 0; i < n; ++i) {
    double best = 2.0 * f(i);
    for (int k = 1; k <= kmax; ++k) {
      const double integral = h * (sum(i - k + 1, i + k - 1) + 0.5 * (at(i - k) + at(i + k)));
      best = std::max(best, integral / (k * h));
    }
    m(i) = best;
  }
  return m;
}

LocusFrame estimate_locus_frame(const RadonMeasureApprox& nu, const VectorXd& x, double radius) {
  if (nu.kind == GridKind::flat4) throw InputError("estimate_locus_frame needs a 3-dimensional domain");
  const int dim = static_cast<int>(nu.points.rows());
  VectorXd c = VectorXd::Zero(dim);
  double mass = 0.0;
  std::vector<int> idx;
  for (int i = 0; i < nu.size(); ++i) {
    if (nu.masses(i) <= 0 || nu.distance(nu.points.col(i), x) > radius) continue;
    idx.push_back(i);
    VectorXd p = nu.points.col(i);
    if (nu.kind == GridKind::torus3)
      for (int k = 0; k < dim; ++k) p(k) = x(k) + (p(k) - x(k)) - nu.period * std::round((p(k) - x(k)) / nu.period);
    c += nu.masses(i) * p;
    mass += nu.masses(i);
  }
  if (mass <= 0) throw InputError("no mass near the requested point");
  c /= mass;
  if (nu.kind == GridKind::sphere3) c.normalize();
  const MatrixXd frame = frame_of(nu.kind, c);
  Matrix3d m = Matrix3d::Zero();
  for (int i : idx) {
    VectorXd d = nu.points.col(i) - c;
    if (nu.kind == GridKind::torus3)
      for (int k = 0; k < dim; ++k) d(k) -= nu.period * std::round(d(k) / nu.period);
    const Vector3d y = frame.transpose() * d;
    m += nu.masses(i) * y * y.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Matrix3d> es(m);
  Vector3d v = es.eigenvectors().col(2);
  int lead = 0;
  for (int k = 1; k < 3; ++k)
    if (std::abs(v(k)) > std::abs(v(lead)) + 1e-12) lead = k;
  if (v(lead) < 0) v = -v;
  LocusFrame out;
  out.point = c;
  out.direction = v;
  out.anisotropy = es.eigenvalues()(2) / std::max(es.eigenvalues().sum(), 1e-300);
  return out;
}

void write_measure_csv(const RadonMeasureApprox& mu, std::ostream& os) {
  const int dim = static_cast<int>(mu.points.rows());
  for (int k = 0; k < dim; ++k) os << (k ? "," : "") << "x" << k;
  os << ",mass\n";
  os.precision(17);
  for (int i = 0; i < mu.size(); ++i) {
    for (int k = 0; k < dim; ++k) os << (k ? "," : "") << mu.points(k, i);
    os << ',' << mu.masses(i) << "\n";
  }
}

}  // namespace fueter
