#include "fueter/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "fueter/bubbles.hpp"
#include "fueter/constants.hpp"
#include "fueter/errors.hpp"
#include "fueter/fueter.hpp"
#include "fueter/lattice.hpp"
#include "fueter/measures.hpp"
#include "fueter/regularity.hpp"

namespace fueter {

using std::numbers::pi;
using nlohmann::json;

// ---------------------------------------------------------------------------------------------
// Config

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse(std::istream& is, const std::string& origin) {
  Config c;
  c.origin_ = origin;
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw InputError(where + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw InputError(where + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw InputError(where + ": empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (c.values_.count(full)) throw InputError(where + ": duplicate key '" + full + "'");
    c.values_[full] = trim(line.substr(eq + 1));
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read config '" + path.string() + "'");
  return parse(in, path.string());
}

std::string Config::text(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw InputError(origin_ + ": missing key '" + key + "'");
  return it->second;
}

std::string Config::text(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

namespace {

double parseNumber(const std::string& origin, const std::string& key, const std::string& s) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError(origin + ": '" + key + "' is not a number: '" + s + "'");
  }
}

}  // namespace

double Config::number(const std::string& key) const { return parseNumber(origin_, key, text(key)); }

double Config::number(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

double Config::positive(const std::string& key, double fallback) const {
  const double v = number(key, fallback);
  if (!(v > 0)) throw InputError(origin_ + ": '" + key + "' must be positive");
  return v;
}

long Config::integer(const std::string& key, long fallback) const {
  if (!has(key)) return fallback;
  const std::string s = text(key);
  try {
    size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError(origin_ + ": '" + key + "' is not an integer: '" + s + "'");
  }
}

std::vector<double> Config::numbers(const std::string& key, const std::vector<double>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<double> out;
  std::stringstream ss(text(key));
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parseNumber(origin_, key, trim(item)));
  if (out.empty()) throw InputError(origin_ + ": '" + key + "' is empty");
  return out;
}

// ---------------------------------------------------------------------------------------------
// Reports

bool ExperimentOutput::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

json ExperimentOutput::report(const Config& config) const {
  json r;
  r["schema_version"] = kReportSchema;
  r["experiment"] = experiment;
  json cfg = json::object();
  for (const auto& [k, v] : config.values()) cfg[k] = v;
  r["config"] = cfg;
  json cs = json::array();
  for (const Check& c : checks) {
    cs.push_back({{"name", c.name},
                  {"criterion", c.criterion},
                  {"passed", c.passed},
                  {"value", c.value},
                  {"threshold", c.threshold},
                  {"relation", c.relation},
                  {"expected_failure", c.expected_failure}});
  }
  r["checks"] = cs;
  r["results"] = results;
  r["passed"] = passed();
  return r;
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

namespace {

Check check(std::string name, int criterion, double value, const std::string& relation, double threshold,
            double upper = 0.0) {
  Check c;
  c.name = std::move(name);
  c.criterion = criterion;
  c.value = value;
  c.threshold = threshold;
  c.relation = relation;
  if (relation == "<") c.passed = value < threshold;
  else if (relation == "<=") c.passed = value <= threshold;
  else if (relation == ">=") c.passed = value >= threshold;
  else if (relation == ">") c.passed = value > threshold;
  else if (relation == "==") c.passed = value == threshold;
  else if (relation == "in") {
    c.passed = value >= threshold && value <= upper;
    c.relation = "in [" + std::to_string(threshold) + ", " + std::to_string(upper) + "]";
  } else {
    throw std::logic_error("unknown relation " + relation);
  }
  return c;
}

Check flag(std::string name, int criterion, bool ok, const std::string& note) {
  Check c;
  c.name = std::move(name);
  c.criterion = criterion;
  c.passed = ok;
  c.value = ok ? 1.0 : 0.0;
  c.threshold = 1.0;
  c.relation = note;
  return c;
}

Constants constantsFrom(const Config& c) {
  Constants k = kDefaultConstants;
  k.epsilon0 = c.positive("thresholds.epsilon0", k.epsilon0);
  k.mean_value = c.positive("thresholds.mean_value_constant", k.mean_value);
  k.heinz_c = c.positive("thresholds.heinz_c", k.heinz_c);
  k.heinz_constant = c.positive("thresholds.heinz_constant", k.heinz_constant);
  k.epsilon_regularity = c.positive("thresholds.epsilon_regularity_constant", k.epsilon_regularity);
  return k;
}

std::string csvNumber(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

// ---------------------------------------------------------------------------------------------
// Test maps

VectorXd quaternionVector(double w, double x, double y, double z) {
  VectorXd v(4);
  v << w, x, y, z;
  return v;
}

// Linear map x -> sum_a x_a c_a into flat H with image columns c_a (4 x 3).
SourceMap linearMap(const MatrixXd& cols, const DomainGrid& grid) {
  return affine_map(VectorXd::Zero(4), cols, grid);
}

MatrixXd fueterLinearColumns() {
  MatrixXd a = MatrixXd::Zero(4, 3);
  a(1, 0) = 1.0;   // x1 i
  a(2, 1) = -1.0;  // - x2 j
  return a;
}

MatrixXd imaginaryColumns() {
  MatrixXd a = MatrixXd::Zero(4, 3);
  a(1, 0) = a(2, 1) = a(3, 2) = 1.0;
  return a;
}

// Trigonometric map of the unit torus into H with its exact derivative.
SourceMap torusTrigMap() {
  const double t = 2 * pi;
  SourceMap m;
  m.value = [t](const VectorXd& x) -> VectorXd {
    return quaternionVector(std::sin(t * x(0)) * std::cos(t * x(1)), std::sin(t * x(1)) + 0.5 * std::cos(t * x(2)),
                            std::cos(t * x(0)) * std::sin(t * x(2)), std::sin(t * (x(0) + x(1) + x(2))));
  };
  m.derivative = [t](const VectorXd& x) -> MatrixXd {
    const double s0 = std::sin(t * x(0)), c0 = std::cos(t * x(0));
    const double s1 = std::sin(t * x(1)), c1 = std::cos(t * x(1));
    const double s2 = std::sin(t * x(2)), c2 = std::cos(t * x(2));
    const double cs = std::cos(t * (x(0) + x(1) + x(2)));
    MatrixXd d(4, 3);
    d << t * c0 * c1, -t * s0 * s1, 0.0,  //
        0.0, t * c1, -0.5 * t * s2,        //
        -t * s0 * s2, 0.0, t * c0 * c2,     //
        t * cs, t * cs, t * cs;
    return d;
  };
  return m;
}

// x -> x/|x| as an imaginary quaternion; set to 0 at the origin.
SourceMap conicalMap() {
  SourceMap m;
  m.value = [](const VectorXd& x) -> VectorXd {
    const double r = x.head<3>().norm();
    if (r == 0) return VectorXd::Zero(4);
    return quaternionVector(0.0, x(0) / r, x(1) / r, x(2) / r);
  };
  m.derivative = [](const VectorXd& x) -> MatrixXd {
    MatrixXd d = MatrixXd::Zero(4, 3);
    const Vector3d p = x.head<3>();
    const double r = p.norm();
    if (r == 0) return d;
    const Vector3d n = p / r;
    d.bottomRows(3) = (Matrix3d::Identity() - n * n.transpose()) / r;
    return d;
  };
  return m;
}

std::shared_ptr<const DomainGrid> makeGrid(GridKind kind, double h, double extent,
                                           const SphereGridOptions& o = {}) {
  return std::make_shared<const DomainGrid>(build_grid(kind, h, extent, o));
}

std::shared_ptr<const TargetChart> flatH() { return std::make_shared<const TargetChart>(flat_quaternion_target(1, false)); }

// ---------------------------------------------------------------------------------------------
// energy-identity

ExperimentOutput runEnergyIdentity(const Config& c) {
  ExperimentOutput out;
  const double h = c.positive("grid.h", 0.125);
  const double tol = c.positive("thresholds.exact_residual", 1e-10);
  const double lo = c.number("thresholds.order_min", 1.8), hi = c.number("thresholds.order_max", 2.2);
  const auto target = flatH();

  const auto ball = makeGrid(GridKind::ball3, h, 1.0);
  const auto torus = makeGrid(GridKind::torus3, h, 1.0);
  struct Case {
    std::string name;
    std::shared_ptr<const DomainGrid> grid;
    SourceMap map;
  };
  const std::vector<Case> cases{{"linear-fueter", ball, linearMap(fueterLinearColumns(), *ball)},
                                {"linear-imaginary", ball, linearMap(imaginaryColumns(), *ball)},
                                {"torus-trig", torus, torusTrigMap()}};
  double worst = 0.0;
  json maps = json::object();
  for (const Case& k : cases) {
    const SectionSample u = sample_section(k.grid, target, k.map, {DerivativeMode::exact, 1.0});
    const VectorXd r = energy_identity_residual(u);
    const double m = r.cwiseAbs().maxCoeff();
    const auto f = fueter_residual_3d(u);
    worst = std::max(worst, m);
    maps[k.name] = {{"points", u.size()},
                    {"max_residual", m},
                    {"total_energy", total_energy(u)},
                    {"fueter_l2", std::sqrt((f.norm.array().square() * k.grid->weights.array()).sum())}};
  }
  out.results["exact_mode"] = maps;
  out.checks.push_back(check("exact_residual_max", 1, worst, "<", tol));

  // Finite-difference mode on the torus map: error of the computed terms against the exact ones.
  std::vector<double> hs{h, h / 2, h / 4}, errors, fd_residuals;
  for (double hk : hs) {
    const auto g = makeGrid(GridKind::torus3, hk, 1.0);
    const SectionSample fd = sample_section(g, target, torusTrigMap(), {DerivativeMode::finite_difference, 1.0});
    const SectionSample ex = sample_section(g, target, torusTrigMap(), {DerivativeMode::exact, 1.0});
    double err = 0.0;
    const HKStructured hk_s = target->structure_at(VectorXd::Zero(4));
    for (int i = 0; i < g->size(); ++i) {
      const auto a = energy_identity_terms(hk_s, fd.derivative_at(i));
      const auto b = energy_identity_terms(hk_s, ex.derivative_at(i));
      err = std::max({err, std::abs(a.energy - b.energy), std::abs(a.fueter - b.fueter),
                      std::abs(a.pairing - b.pairing)});
    }
    errors.push_back(err);
    fd_residuals.push_back(energy_identity_residual(fd).cwiseAbs().maxCoeff());
  }
  const double o1 = std::log2(errors[0] / errors[1]), o2 = std::log2(errors[1] / errors[2]);
  out.results["finite_difference"] = {
      {"h", hs}, {"term_error", errors}, {"identity_residual", fd_residuals}, {"orders", {o1, o2}}};
  out.checks.push_back(check("fd_order_h_to_h2", 1, o1, "in", lo, hi));
  out.checks.push_back(check("fd_order_h2_to_h4", 1, o2, "in", lo, hi));
  return out;
}

// ---------------------------------------------------------------------------------------------
// flat-monotonicity

ExperimentOutput runFlatMonotonicity(const Config& c) {
  ExperimentOutput out;
  const double h = c.positive("grid.h", 1.0 / 16);
  const double extent = c.positive("grid.extent", 1.0);
  const double s = c.positive("ball.s", 0.25), r = c.positive("ball.r", 0.5);
  const double tol = c.positive("thresholds.relative", 0.05);
  if (!(s < r)) throw InputError("ball.s must be below ball.r");
  const auto grid = makeGrid(GridKind::ball3, h, extent);
  const SectionSample u = sample_section(grid, flatH(), linearMap(fueterLinearColumns(), *grid),
                                         {DerivativeMode::exact, 1.0});
  const MonotonicityReport rep = monotonicity_report(u, VectorXd::Zero(3), {s, r});
  const MonotonicityRow& row = rep.rows.front();
  const double closed = 8 * pi / 3 * (r * r - s * s);
  out.results = {{"lhs", row.lhs},
                 {"rhs", row.rhs},
                 {"closed_form", closed},
                 {"identity_form", rep.identity_form},
                 {"total_energy", total_energy(u)},
                 {"points", u.size()}};
  out.checks.push_back(check("lhs_relative_error", 2, std::abs(row.lhs - closed) / closed, "<", tol));
  out.checks.push_back(check("rhs_relative_error", 2, std::abs(row.rhs - closed) / closed, "<", tol));
  return out;
}

// ---------------------------------------------------------------------------------------------
// hns-blowup

struct HnsSetup {
  std::shared_ptr<const TargetChart> target;
  SphereMap z;
  std::shared_ptr<const DomainGrid> fine, coarse;
  double cell = 0.0;       // coarse eta-cell, the resolution of the locus
  double fine_h = 0.0;
  std::vector<double> lambdas;
  std::vector<SectionSample> seq;
  std::vector<RadonMeasureApprox> coarse_measures;
  std::vector<double> radii;
};

HnsSetup hnsSetup(const Config& c) {
  HnsSetup s;
  const std::string tname = c.text("target.name", "eguchi-hanson");
  if (tname != "eguchi-hanson") throw InputError("hns-blowup needs target.name = eguchi-hanson");
  s.target = std::make_shared<const TargetChart>(eguchi_hanson_target(c.positive("target.scale", 1.0)));
  s.z = s.target->holomorphic_spheres.front().map;
  const long fine_cells = c.integer("grid.eta_cells", 48), coarse_cells = c.integer("grid.coarse_eta_cells", 8);
  const long xi = c.integer("grid.xi_cells", 40), coarse_xi = c.integer("grid.coarse_xi_cells", 16);
  if (fine_cells < 4 || coarse_cells < 2 || xi < 4 || coarse_xi < 4) throw InputError("grid too small");
  s.fine_h = pi / 2 / static_cast<double>(fine_cells);
  s.cell = pi / 2 / static_cast<double>(coarse_cells);
  SphereGridOptions fo{static_cast<int>(xi), static_cast<int>(xi), true, c.positive("grid.core", 1e-4),
                       c.positive("grid.ratio", 0.15)};
  s.fine = makeGrid(GridKind::sphere3, s.fine_h, pi / 2, fo);
  s.coarse = makeGrid(GridKind::sphere3, s.cell, pi / 2,
                      {static_cast<int>(coarse_xi), static_cast<int>(coarse_xi), false});
  const double base = c.positive("sequence.lambda_base", 0.5);
  const long count = c.integer("sequence.count", 8);
  if (count < 2 || !(base < 1)) throw InputError("sequence needs count >= 2 and lambda_base < 1");
  const double coarsen_cell = c.positive("grid.coarsen_cell", 0.08);
  for (long i = 1; i <= count; ++i) {
    const double l = std::pow(base, static_cast<double>(i));
    s.lambdas.push_back(l);
    s.seq.push_back(hns_family(s.z, l, s.fine, s.target));
    s.coarse_measures.push_back(coarsen(energy_measure(s.seq.back(), "hns"), coarsen_cell));
  }
  for (double f : c.numbers("locus.radii_cells", {1.5, 2.0, 3.0})) s.radii.push_back(f * s.cell);
  return s;
}

// Coarse cells whose center lies within half a cell of the circle.
std::vector<int> circleCells(const HnsSetup& s) {
  std::vector<int> out;
  for (int i = 0; i < s.coarse->size(); ++i)
    if (distance_to_blowup_circle(s.coarse->points.col(i).head<4>()) <= 0.5 * s.cell * (1 + 1e-9)) out.push_back(i);
  return out;
}

ExperimentOutput runHnsBlowup(const Config& c) {
  ExperimentOutput out;
  const Constants k = constantsFrom(c);
  const HnsSetup s = hnsSetup(c);

  // (b) energies.
  std::vector<double> energies;
  for (const auto& u : s.seq) energies.push_back(total_energy(u));
  const auto [emin, emax] = std::minmax_element(energies.begin(), energies.end());
  double mean = 0.0;
  for (double e : energies) mean += e;
  mean /= static_cast<double>(energies.size());
  const double variation = (*emax - *emin) / mean;
  const double a = c.positive("target.scale", 1.0);

  // (a) locus.
  const BlowupReport rep = detect_blowup_locus(s.coarse_measures, s.coarse->points, k.epsilon0, s.radii);
  const std::vector<int> circle = circleCells(s);
  const std::set<int> locus(rep.locus_cells.begin(), rep.locus_cells.end());
  double far = 0.0;
  for (int i : rep.locus_cells) far = std::max(far, distance_to_blowup_circle(s.coarse->points.col(i).head<4>()));
  int covered = 0;
  for (int i : circle) covered += static_cast<int>(locus.count(i));
  const double coverage = circle.empty() ? 0.0 : static_cast<double>(covered) / static_cast<double>(circle.size());

  // (c) defect measure against the constant weak limit z(0).
  const SectionSample limit =
      sample_section(s.fine, s.target, constant_map(s.z.at(Complex(0.0, 0.0)), 3), {DerivativeMode::exact, 1.0});
  const DefectDecomposition dd = defect_decompose(energy_measure(s.seq.back(), "hns"), limit);
  const double tube = c.number("thresholds.tube_cells", 8.0) * s.fine_h;
  double in_tube = 0.0;
  for (int i = 0; i < dd.nu.size(); ++i)
    if (distance_to_blowup_circle(dd.nu.points.col(i).head<4>()) <= tube) in_tube += dd.nu.masses(i);
  const double tube_fraction = dd.nu.total() > 0 ? in_tube / dd.nu.total() : 0.0;

  out.results["lambdas"] = s.lambdas;
  out.results["energies"] = energies;
  out.results["energy_closed_form"] = 8 * pi * pi * a;
  out.results["epsilon0"] = k.epsilon0;
  out.results["locus"] = {{"cells", rep.locus_cells.size()},
                          {"circle_cells", circle.size()},
                          {"covered", covered},
                          {"max_distance", far},
                          {"cell", s.cell},
                          {"radii", s.radii},
                          {"tail_start", rep.tail_start}};
  out.results["defect"] = {{"mass", dd.nu.total()}, {"tube_radius", tube}, {"tube_fraction", tube_fraction},
                           {"noise_floor", dd.noise_floor}};
  out.checks.push_back(check("locus_max_distance", 3, far, "<=", s.cell));
  out.checks.push_back(check("locus_coverage", 3, coverage, ">=", c.number("thresholds.coverage", 0.9)));
  out.checks.push_back(check("energy_variation", 3, variation, "<", c.number("thresholds.energy_variation", 0.1)));
  out.checks.push_back(check("defect_tube_fraction", 3, tube_fraction, ">=", c.number("thresholds.tube_mass", 0.9)));

  // epsilon-regularity on the last member: not applicable on the circle, holds away from it.
  const VectorXd on = from_hopf_coordinates(pi / 2, 0.0, 0.0);
  int nearest = 0;
  for (int i = 1; i < s.fine->size(); ++i)
    if (std::abs(hopf_coordinates(s.fine->points.col(i).head<4>())(0) - pi / 4) <
        std::abs(hopf_coordinates(s.fine->points.col(nearest).head<4>())(0) - pi / 4))
      nearest = i;
  const VectorXd away = s.fine->points.col(nearest);
  const auto er_on = epsilon_regularity_check(s.seq.back(), on, s.cell, k.epsilon0, k.epsilon_regularity);
  const auto er_off = epsilon_regularity_check(s.seq.back(), away, s.cell, k.epsilon0, k.epsilon_regularity);
  out.results["epsilon_regularity"] = {{"on_circle", {{"epsilon", er_on.epsilon}, {"applicable", er_on.applicable}}},
                                       {"off_circle",
                                        {{"epsilon", er_off.epsilon},
                                         {"sup_quarter", er_off.sup_quarter},
                                         {"bound", er_off.bound},
                                         {"holds", er_off.holds}}}};
  out.checks.push_back(flag("epsilon_regularity_on_circle", 0, !er_on.applicable, "not applicable"));
  out.checks.push_back(flag("epsilon_regularity_off_circle", 0, er_off.holds, "applies and holds"));

  std::ostringstream lcsv;
  lcsv << "cell,q0,q1,q2,q3,eta,xi1,xi2,distance_to_circle,theta\n";
  for (size_t n = 0; n < rep.locus_cells.size(); ++n) {
    const int i = rep.locus_cells[n];
    const Vector4d q = s.coarse->points.col(i).head<4>();
    const Vector3d hc = hopf_coordinates(q);
    lcsv << i;
    for (int d = 0; d < 4; ++d) lcsv << ',' << csvNumber(q(d));
    for (int d = 0; d < 3; ++d) lcsv << ',' << csvNumber(hc(d));
    lcsv << ',' << csvNumber(distance_to_blowup_circle(q)) << ',' << csvNumber(rep.theta_estimates[n]) << "\n";
  }
  out.files["locus.csv"] = lcsv.str();

  // Bubble at the first locus cell, along the locus frame of nu.
  std::ostringstream bcsv;
  bcsv << "w1,w2,weight,y0,y1,y2,y3\n";
  if (rep.locus_cells.empty()) {
    out.checks.push_back(flag("bubble_found", 4, false, "no locus cell to extract at"));
  } else {
    const LocusFrame fr = estimate_locus_frame(dd.nu, s.coarse->points.col(rep.locus_cells.front()),
                                               c.number("bubble.frame_radius_cells", 6.0) * s.fine_h);
    BubbleOptions bo;
    bo.delta_min = c.positive("bubble.delta_min", bo.delta_min);
    const BubbleOutcome b = extract_bubble(s.seq, fr.point, fr.direction, k.epsilon0, bo);
    const BubbleReport& br = b.report;
    out.results["bubble"] = {{"found", b.found},
                             {"reason", b.reason},
                             {"base_distance_to_circle", distance_to_blowup_circle(fr.point.head<4>())},
                             {"direction", {fr.direction(0), fr.direction(1), fr.direction(2)}},
                             {"anisotropy", fr.anisotropy},
                             {"energy", br.bubble_energy},
                             {"energy_closed_form", 4 * pi * a},
                             {"theta", br.theta_at_x},
                             {"theta_closed_form", 8 * pi * a},
                             {"residual", br.antiholomorphy_residual},
                             {"capture", br.energy_capture},
                             {"epsilon", br.epsilon},
                             {"delta", br.delta},
                             {"outer_radius", br.outer_radius},
                             {"step1_fraction", b.step1_fraction}};
    out.checks.push_back(flag("bubble_found", 4, b.found, b.found ? "found" : b.reason));
    if (b.found) {
      out.checks.push_back(check("bubble_residual", 4, br.antiholomorphy_residual, "<",
                                 c.positive("thresholds.residual", 0.05)));
      const double excess = c.number("thresholds.bubble_excess", 0.15);
      out.checks.push_back(check("bubble_energy_over_theta", 4, br.bubble_energy / br.theta_at_x, "<=", 1 + excess));
      for (const auto& p : br.bubble) {
        bcsv << csvNumber(p.w(0)) << ',' << csvNumber(p.w(1)) << ',' << csvNumber(p.weight);
        for (int d = 0; d < p.value.size(); ++d) bcsv << ',' << csvNumber(p.value(d));
        bcsv << "\n";
      }
    }
    const double eta = c.number("bubble.off_locus_eta", pi / 4);
    const VectorXd off = from_hopf_coordinates(eta, 0.0, 0.0);
    const BubbleOutcome nb = extract_bubble(s.seq, off, fr.direction, k.epsilon0, bo);
    out.results["off_locus"] = {{"eta", eta}, {"found", nb.found}, {"reason", nb.reason}};
    out.checks.push_back(flag("off_locus_no_bubble", 4, !nb.found, nb.found ? "bubble found" : "no bubble"));
  }
  out.files["bubble.csv"] = bcsv.str();
  return out;
}

// ---------------------------------------------------------------------------------------------
// psi-spectrum

ExperimentOutput runPsiSpectrum(const Config& c) {
  ExperimentOutput out;
  const int n = static_cast<int>(c.integer("psi.n", 1));
  if (n < 1) throw InputError("psi.n must be positive");
  const double tol = c.positive("thresholds.eigenvalue", 1e-9);
  const MatrixXd psi = psi_endomorphism(n);
  Eigen::EigenSolver<MatrixXd> es(psi);
  std::vector<double> ev;
  double imag = 0.0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    ev.push_back(es.eigenvalues()(i).real());
    imag = std::max(imag, std::abs(es.eigenvalues()(i).imag()));
  }
  std::sort(ev.begin(), ev.end());
  int ones = 0, threes = 0;
  double dev = imag;
  for (double e : ev) {
    if (std::abs(e - 1) < 0.5) {
      ++ones;
      dev = std::max(dev, std::abs(e - 1));
    } else if (std::abs(e + 3) < 0.5) {
      ++threes;
      dev = std::max(dev, std::abs(e + 3));
    } else {
      dev = std::max(dev, 1.0);
    }
  }
  const MatrixXd id = MatrixXd::Identity(psi.rows(), psi.cols());
  const double minpoly = ((psi - id) * (psi + 3 * id)).norm();
  out.results = {{"n", n}, {"eigenvalues", ev}, {"multiplicity_1", ones}, {"multiplicity_-3", threes},
                 {"minimal_polynomial_residual", minpoly}, {"symmetry_defect", (psi - psi.transpose()).norm()}};
  out.checks.push_back(check("multiplicity_1", 5, ones, "==", 12.0 * n));
  out.checks.push_back(check("multiplicity_minus3", 5, threes, "==", 4.0 * n));
  out.checks.push_back(check("eigenvalue_deviation", 5, dev, "<", tol));
  out.checks.push_back(check("minimal_polynomial_residual", 5, minpoly, "<", tol));
  return out;
}

// ---------------------------------------------------------------------------------------------
// lattice-directions

// All v with v^T G v <= bound by scanning the box |v_i| <= sqrt(bound (G^-1)_ii), in int64 arithmetic.
std::vector<IntVector> bruteForceShort(const IntMatrix& g, std::int64_t bound) {
  const int n = static_cast<int>(g.rows());
  const MatrixXd inv = g.cast<double>().inverse();
  std::vector<std::int64_t> m(n);
  for (int i = 0; i < n; ++i) m[i] = static_cast<std::int64_t>(std::floor(std::sqrt(bound * inv(i, i)) + 1e-6)) + 1;
  std::vector<IntVector> out;
  IntVector v(n);
  for (int i = 0; i < n; ++i) v(i) = -m[i];
  while (true) {
    std::int64_t q = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) q += v(i) * g(i, j) * v(j);
    if (q <= bound) out.push_back(v);
    int i = n - 1;
    while (i >= 0 && v(i) == m[i]) {
      v(i) = -m[i];
      --i;
    }
    if (i < 0) break;
    ++v(i);
  }
  std::sort(out.begin(), out.end(), [](const IntVector& a, const IntVector& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
  });
  return out;
}

IntMatrix randomPositiveGram(std::mt19937_64& rng, int n) {
  std::uniform_int_distribution<int> entry(-1, 1), diag(1, 3);
  IntMatrix b = IntMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = j < i ? entry(rng) : 0;
  for (int i = 0; i < n; ++i) b(i, i) = diag(rng);
  // Lower triangular with positive diagonal, so b^T b is positive definite.
  return b.transpose() * b;
}

ExperimentOutput runLatticeDirections(const Config& c) {
  ExperimentOutput out;
  std::mt19937_64 rng(c.seed());
  const int trials = static_cast<int>(c.integer("enumeration.trials", 20));
  const int max_rank = static_cast<int>(c.integer("enumeration.max_rank", 6));
  const int max_bound = static_cast<int>(c.integer("enumeration.max_bound", 50));
  if (trials < 1 || max_rank < 1 || max_bound < 1) throw InputError("enumeration parameters must be positive");
  std::uniform_int_distribution<int> rank(1, max_rank), bound(1, max_bound);
  int agree = 0;
  json rows = json::array();
  for (int t = 0; t < trials; ++t) {
    const int n = rank(rng);
    const IntMatrix g = randomPositiveGram(rng, n);
    const int b = bound(rng);
    RationalMatrix gr(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) gr(i, j) = Rational(g(i, j));
    const auto fast = enumerate_short_vectors(gr, Rational(b));
    const auto slow = bruteForceShort(g, b);
    const bool same = fast.size() == slow.size() && std::equal(fast.begin(), fast.end(), slow.begin());
    agree += same;
    rows.push_back({{"rank", n}, {"bound", b}, {"count", fast.size()}, {"brute_force", slow.size()}, {"equal", same}});
  }
  out.results["enumeration"] = rows;
  out.checks.push_back(check("enumeration_matches_brute_force", 6, agree, "==", trials));

  const PlantedInstance pl = planted_instance();
  const int sigma = static_cast<int>(c.integer("planted.sigma", 2));
  const Rational a_hi = parse_rational(c.text("planted.a_max", "1"));
  const Rational a_lo = parse_rational(c.text("planted.a_small", "1/2"));
  const DirectionSet hi = admissible_directions(pl.lattice, pl.period, a_hi, sigma);
  const DirectionSet lo = admissible_directions(pl.lattice, pl.period, a_lo, sigma);
  const ClassDecomposition planted = class_decomposition(pl.lattice, pl.period, pl.planted);
  bool planted_match = hi.entries.size() == 1 && planted.xi.has_value();
  if (planted_match) {
    const Vector3d d = hi.entries.front().xi;
    planted_match = std::min((d - *planted.xi).norm(), (d + *planted.xi).norm()) < 1e-12;
  }
  json dirs = json::array();
  for (const auto& e : hi.entries) {
    std::vector<long> gamma(e.gamma.data(), e.gamma.data() + e.gamma.size());
    dirs.push_back({{"xi", {e.xi(0), e.xi(1), e.xi(2)}}, {"gamma", gamma}, {"area", e.area},
                    {"area_squared", to_string(e.area_squared)}, {"square", e.square}});
  }
  out.results["planted"] = {{"a_max", to_string(a_hi)},
                            {"a_small", to_string(a_lo)},
                            {"sigma", sigma},
                            {"directions", dirs},
                            {"candidates", hi.candidates},
                            {"directions_small", lo.entries.size()},
                            {"planted_area", planted.area}};
  out.checks.push_back(flag("planted_direction_only", 6, planted_match, "exactly the planted xi at a_max"));
  out.checks.push_back(check("directions_below_planted_area", 6, static_cast<double>(lo.entries.size()), "==", 0.0));

  const BBFLattice k3 = k3_lattice();
  out.results["k3"] = {{"rank", k3.rank}, {"positive", k3.positive}, {"negative", k3.negative}};
  out.checks.push_back(flag("k3_signature", 6, k3.positive == 3 && k3.negative == 19, "(3, 19)"));
  return out;
}

// ---------------------------------------------------------------------------------------------
// heinz

ExperimentOutput runHeinz(const Config& c) {
  ExperimentOutput out;
  const Constants k = constantsFrom(c);
  std::mt19937_64 rng(c.seed());

  // Root solver against the d = 2 closed form.
  const double eps = c.positive("root.epsilon", 0.01);
  const auto root = heinz_root_solve(2.0, 1.0, eps);
  const double closed = std::sqrt((1 - std::sqrt(1 - 4 * eps)) / 2);
  const double root_err = root ? std::abs(*root - closed) : std::numeric_limits<double>::infinity();
  out.results["root"] = {{"epsilon", eps}, {"root", root ? *root : -1.0}, {"closed_form", closed}};
  out.checks.push_back(check("root_error_d2", 7, root_err, "<", c.positive("thresholds.root", 1e-10)));

  // Weak-type bound on random nonnegative step functions.
  const int functions = static_cast<int>(c.integer("weak_type.functions", 200));
  const int n = static_cast<int>(c.integer("weak_type.points", 256));
  if (functions < 1 || n < 4) throw InputError("weak_type parameters too small");
  const double h = 1.0 / n;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int holds = 0;
  double worst = 0.0;
  for (int f = 0; f < functions; ++f) {
    VectorXd v = VectorXd::Zero(n);
    const int bumps = 1 + static_cast<int>(unit(rng) * 5);
    for (int b = 0; b < bumps; ++b) {
      const int at = static_cast<int>(unit(rng) * n), width = 1 + static_cast<int>(unit(rng) * n / 8);
      const double height = std::exp(6 * unit(rng) - 3);
      for (int i = at; i < std::min(n, at + width); ++i) v(i) += height;
    }
    const double delta = v.maxCoeff() * (0.05 + 0.9 * unit(rng));
    const WeakTypeCheck w = weak_type_check(v, h, 1.0, delta);
    holds += w.holds;
    worst = std::max(worst, w.measure / w.bound);
  }
  out.results["weak_type"] = {{"functions", functions}, {"holding", holds}, {"max_measure_over_bound", worst}};
  out.checks.push_back(check("weak_type_holds", 7, holds, "==", functions));

  // Spike: tall, thin bump with a tiny integral.
  const double amp = c.positive("spike.amplitude", 5.0), width = c.positive("spike.width", 0.02);
  const double gh = c.positive("spike.h", 0.02), r = c.positive("spike.radius", 0.5);
  const auto grid = makeGrid(GridKind::ball3, gh, r);
  const GridFunction f = make_grid_function(
      grid, [amp, width](const VectorXd& x) { return amp * std::exp(-x.squaredNorm() / (width * width)); });
  const HeinzParams params = HeinzParams::make(c.positive("spike.d", 1.0), 1, 0, k.heinz_c);
  const HeinzReport rep = heinz_verify(f, params, VectorXd::Zero(3), r, k.epsilon0, k.heinz_constant);
  out.results["spike"] = {{"status", rep.status},
                          {"inequality_ratio", rep.inequality_ratio},
                          {"monotonicity_ratio", rep.monotonicity_ratio},
                          {"epsilon", rep.epsilon},
                          {"sup_quarter", rep.sup_quarter},
                          {"bound_scale", rep.bound_scale},
                          {"fitted_constant", rep.fitted_constant},
                          {"c", params.c}};
  out.checks.push_back(flag("spike_no_false_assertion", 7, rep.status == "hypotheses violated", rep.status));

  // Mean-value inequality on |x|^2 with the configured constant.
  const GridFunction q = make_grid_function(grid, [](const VectorXd& x) { return x.squaredNorm(); });
  const MeanValueCheck mv = mean_value_check(q, VectorXd::Zero(3), r, k.mean_value);
  out.results["mean_value"] = {{"lhs", mv.lhs}, {"volume_term", mv.volume_term},
                               {"laplacian_term", mv.laplacian_term}, {"constant", mv.constant}};
  out.checks.push_back(flag("mean_value_square", 0, mv.holds, "f(x) <= C rhs"));
  return out;
}

// ---------------------------------------------------------------------------------------------
// tangent-cones

ExperimentOutput runTangentCones(const Config& c) {
  ExperimentOutput out;
  const double theta = c.positive("cones.theta", 1.0);
  const double tol = c.positive("thresholds.balancing", 1e-12);
  const Vector3d e = Vector3d::UnitZ();
  TangentConeSample antipodal, tripod, single;
  antipodal.rays = {{e, theta}, {-e, theta}};
  for (int k = 0; k < 3; ++k) {
    const double t = 2 * pi * k / 3;
    tripod.rays.push_back({Vector3d(std::cos(t), std::sin(t), 0.0), theta});
  }
  single.rays = {{e, theta}};
  const double da = balancing_deficit(antipodal), dt = balancing_deficit(tripod), ds = balancing_deficit(single);
  out.results["balancing"] = {{"antipodal", da}, {"tripod", dt}, {"single", ds}, {"theta", theta}};
  out.checks.push_back(check("balancing_antipodal", 8, da, "<=", tol));
  out.checks.push_back(check("balancing_tripod", 8, dt, "<=", tol));
  out.checks.push_back(check("balancing_single_ray", 8, std::abs(ds - theta), "<=", tol));

  const double a = c.positive("conical.inner", 0.25), b = c.positive("conical.outer", 0.5);
  const double R = c.positive("conical.R", 2.0), h = c.positive("grid.h", 1.0 / 16);
  const auto grid = makeGrid(GridKind::ball3, h, R * b + 2 * h);
  const SectionSample u = sample_section(grid, flatH(), conicalMap(), {DerivativeMode::exact, 1.0});
  const TestWeight phi = annulus_bump(a, b);
  const ConicalDeviation cd = conical_deviation(u, phi, R);
  double scale = 0.0;
  for (int i = 0; i < u.size(); ++i) scale += grid->weights(i) * phi.value(grid->points.col(i)) * u.energy_density(i);
  const double rel = scale > 0 ? cd.lhs / scale : std::numeric_limits<double>::infinity();
  out.results["conical"] = {{"lhs", cd.lhs}, {"rhs_bound", cd.rhs_bound}, {"weighted_energy", scale},
                            {"relative", rel}, {"R", R}, {"holds", cd.holds()}};
  out.checks.push_back(check("conical_relative_lhs", 8, rel, "<", c.positive("thresholds.conical", 1e-3)));
  return out;
}

// ---------------------------------------------------------------------------------------------
// twistor

ExperimentOutput runTwistor(const Config& c) {
  ExperimentOutput out;
  const double a = c.positive("target.scale", 1.0);
  const TargetChart chart = eguchi_hanson_target(a);
  const HolomorphicSphere& bolt = chart.holomorphic_spheres.front();
  const int n = static_cast<int>(c.integer("sphere.n", 64));
  const TwistorCheck tc = twistor_check(chart, bolt.map, bolt.xi, n);
  const TwistorCheck anti = twistor_check(chart, bolt.map, -bolt.xi, n);
  out.results["bolt"] = {{"dbar_residual", tc.dbar_residual}, {"energy", tc.energy},
                         {"twistor_residual", tc.twistor_residual}, {"anti_dbar_residual", anti.dbar_residual},
                         {"area", bolt.area}, {"area_closed_form", eguchi_hanson_bolt_area(a)}};
  out.checks.push_back(check("bolt_dbar_residual", 9, tc.dbar_residual, "<", c.positive("thresholds.dbar", 1e-6)));
  out.checks.push_back(check("anti_bolt_dbar_residual", 9, anti.dbar_residual, ">", 0.1));

  const double h0 = c.positive("radial.h", 0.2);
  std::vector<double> hs{h0, h0 / 2, h0 / 4}, res;
  for (double h : hs) res.push_back(twistor_check(chart, bolt.map, bolt.xi, 4, h).radial_fueter);
  const double o1 = std::log2(res[0] / res[1]), o2 = std::log2(res[1] / res[2]);
  out.results["radial_extension"] = {{"h", hs}, {"fueter_residual", res}, {"orders", {o1, o2}}};
  Check rc = check("radial_fueter_order", 9, std::min(o1, o2), ">=", c.number("thresholds.radial_order", 1.8));
  rc.expected_failure = true;
  out.checks.push_back(rc);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// Registry and driver

const std::vector<ExperimentInfo>& experiment_registry() {
  static const std::vector<ExperimentInfo> reg = [] {
    std::vector<ExperimentInfo> r{
        {"energy-identity", "pointwise energy identity on flat targets, exact and finite-difference modes",
         runEnergyIdentity},
        {"flat-monotonicity", "monotonicity formula for the linear Fueter map against its closed form",
         runFlatMonotonicity},
        {"heinz", "Heinz root solver, weak-type maximal bound and the spike counterexample", runHeinz},
        {"hns-blowup", "HNS family on S^3 into Eguchi-Hanson: locus, energies, defect measure, bubble",
         runHnsBlowup},
        {"lattice-directions", "short-vector enumeration, planted tangent direction, K3 signature",
         runLatticeDirections},
        {"psi-spectrum", "spectrum and minimal polynomial of Psi", runPsiSpectrum},
        {"tangent-cones", "balancing deficit of model cones and conical deviation", runTangentCones},
        {"twistor", "Eguchi-Hanson bolt holomorphy and its radial extension", runTwistor},
    };
    std::sort(r.begin(), r.end(), [](const auto& x, const auto& y) { return x.name < y.name; });
    return r;
  }();
  return reg;
}

std::string experiment_names() {
  std::string s;
  for (const auto& e : experiment_registry()) s += (s.empty() ? "" : ", ") + e.name;
  return s;
}

ExperimentOutput run_experiment(const Config& config) {
  const std::string name = config.text("experiment.name");
  for (const auto& e : experiment_registry()) {
    if (e.name != name) continue;
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentOutput out = e.run(config);
    out.experiment = name;
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
  }
  throw InputError("unknown experiment '" + name + "' (valid: " + experiment_names() + ")");
}

std::filesystem::path output_directory(const Config& config) {
  return config.text("experiment.output", "out/" + config.text("experiment.name"));
}

void write_outputs(const ExperimentOutput& out, const Config& config, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& text) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw InputError("cannot write '" + (dir / name).string() + "'");
    f << text;
  };
  put("report.json", dump_json(out.report(config)));
  put("meta.json", dump_json({{"schema_version", kReportSchema}, {"seconds", out.seconds}}));
  for (const auto& [name, text] : out.files) put(name, text);
}

int run_config_file(const std::filesystem::path& path, std::ostream& os, std::ostream& err,
                    const std::filesystem::path& output_override) {
  try {
    const Config config = Config::load(path);
    const ExperimentOutput out = run_experiment(config);
    const auto dir = output_override.empty() ? output_directory(config) : output_override;
    write_outputs(out, config, dir);
    static const std::set<std::string> comparisons{"<", "<=", ">", ">=", "=="};
    for (const Check& c : out.checks) {
      os << (c.passed ? "PASS " : (c.expected_failure ? "XFAIL " : "FAIL ")) << c.name << " = " << c.value << " ("
         << c.relation;
      if (comparisons.count(c.relation)) os << " " << c.threshold;
      os << ")\n";
    }
    os << out.experiment << ": " << (out.passed() ? "passed" : "failed") << ", report in " << dir.string() << "\n";
    return out.passed() ? 0 : 1;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

// ---------------------------------------------------------------------------------------------
// Calibration

namespace {

// Rounds up to two significant digits.
double roundUp2(double v) {
  if (!(v > 0)) return v;
  const double p = std::pow(10.0, std::floor(std::log10(v)) - 1);
  return std::ceil(v / p - 1e-9) * p;
}

// Rounds down to two significant digits.
double roundDown2(double v) {
  if (!(v > 0)) return v;
  const double p = std::pow(10.0, std::floor(std::log10(v)) - 1);
  return std::floor(v / p + 1e-9) * p;
}

}  // namespace

std::string calibrate_constants(std::ostream& log) {
  // epsilon0: half the smallest renormalized energy on the circle cells over the tail of the sequence.
  Config hc;
  const HnsSetup s = hnsSetup(hc);
  double smallest = std::numeric_limits<double>::infinity();
  const size_t tail = s.coarse_measures.size() / 2;
  for (size_t m = tail; m < s.coarse_measures.size(); ++m)
    for (int i : circleCells(s))
      for (double r : s.radii)
        smallest = std::min(smallest, s.coarse_measures[m].ball_mass(s.coarse->points.col(i), r) / r);
  const double eps0 = roundDown2(0.5 * smallest);
  log << "smallest renormalized energy on the circle: " << smallest << "\n";

  // Mean-value constant on constant, linear and quadratic functions.
  const auto ball = makeGrid(GridKind::ball3, 1.0 / 16, 1.0);
  double mv = 0.0;
  const std::vector<std::function<double(const VectorXd&)>> fs{
      [](const VectorXd&) { return 1.0; }, [](const VectorXd& x) { return 1.0 + x(0); },
      [](const VectorXd& x) { return x.squaredNorm(); }};
  for (const auto& f : fs)
    for (double r : {0.25, 0.5, 1.0}) {
      const MeanValueCheck m = mean_value_check(make_grid_function(ball, f), VectorXd::Zero(3), r);
      if (m.rhs > 0) mv = std::max(mv, m.lhs / m.rhs);
    }
  log << "mean-value ratio: " << mv << "\n";

  // Heinz constants on |du|^2 of the lambda = 1 HNS member (d = 1, p = 1).
  const auto sphere = makeGrid(GridKind::sphere3, pi / 32, pi / 2, {32, 32, false});
  const auto eh = std::make_shared<const TargetChart>(eguchi_hanson_target(1.0));
  const SectionSample u1 = hns_family(eh->holomorphic_spheres.front().map, 1.0, sphere, eh);
  const GridFunction f1 = energy_density_function(u1);
  const VectorXd x1 = from_hopf_coordinates(pi / 4, 0.3, 0.7);
  const HeinzReport hr = heinz_verify(f1, HeinzParams::make(1.0, 1, 0, 1e300), x1, 1.0, 1e300, 1e300);
  const double heinz_c = roundUp2(2 * std::max(hr.inequality_ratio, hr.monotonicity_ratio));
  const double heinz_constant = roundUp2(2 * hr.fitted_constant);
  log << "heinz ratios: " << hr.inequality_ratio << ", " << hr.monotonicity_ratio << ", fitted "
      << hr.fitted_constant << "\n";

  // epsilon-regularity constant on the flat linear maps and the HNS member off the circle.
  double er = 0.0;
  const auto flat = flatH();
  for (const MatrixXd& cols : {fueterLinearColumns(), imaginaryColumns()}) {
    const SectionSample u = sample_section(ball, flat, linearMap(cols, *ball), {DerivativeMode::exact, 1.0});
    for (double r : {0.25, 0.5, 1.0}) {
      const auto rep = epsilon_regularity_check(u, VectorXd::Zero(3), r, 1e300, 1.0);
      er = std::max(er, rep.sup_quarter / rep.bound);
    }
  }
  for (double r : {0.25, 0.5}) {
    const auto rep = epsilon_regularity_check(u1, x1, r, 1e300, 1.0);
    er = std::max(er, rep.sup_quarter / rep.bound);
  }
  log << "epsilon-regularity ratio: " << er << "\n";

  std::ostringstream os;
  os << "# Written by `fueterlab calibrate`.\n[thresholds]\n";
  os << "epsilon0 = " << eps0 << "\n";
  os << "mean_value_constant = " << roundUp2(2 * mv) << "\n";
  os << "heinz_c = " << heinz_c << "\n";
  os << "heinz_constant = " << heinz_constant << "\n";
  os << "epsilon_regularity_constant = " << roundUp2(2 * er) << "\n";
  return os.str();
}

}  // namespace fueter
