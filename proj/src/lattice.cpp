#include "fueter/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "fueter/errors.hpp"

namespace fueter {

namespace mp = boost::multiprecision;

namespace {

RationalMatrix toRational(const IntMatrix& m) {
  RationalMatrix r(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) r(i, j) = Rational(m(i, j));
  return r;
}

RationalVector toRational(const IntVector& v) {
  RationalVector r(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) r(i) = Rational(v(i));
  return r;
}

Rational dot(const RationalVector& a, const RationalMatrix& g, const RationalVector& b) {
  Rational s = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) == 0) continue;
    Rational t = 0;
    for (Eigen::Index j = 0; j < b.size(); ++j)
      if (b(j) != 0 && g(i, j) != 0) t += g(i, j) * b(j);
    s += a(i) * t;
  }
  return s;
}

std::int64_t floorRational(const Rational& r) {
  mp::cpp_int n = mp::numerator(r), d = mp::denominator(r);
  mp::cpp_int q = n / d;
  if (n % d != 0 && n < 0) q -= 1;
  return q.convert_to<std::int64_t>();
}

bool lexLess(const IntVector& a, const IntVector& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

}  // namespace

double to_double(const Rational& r) { return r.convert_to<double>(); }

std::string to_string(const Rational& r) {
  std::ostringstream os;
  os << mp::numerator(r);
  if (mp::denominator(r) != 1) os << '/' << mp::denominator(r);
  return os.str();
}

Rational parse_rational(const std::string& text) {
  const auto slash = text.find('/');
  try {
    if (slash == std::string::npos) return Rational(mp::cpp_int(text));
    const mp::cpp_int n(text.substr(0, slash)), d(text.substr(slash + 1));
    if (d == 0) throw InputError("zero denominator in '" + text + "'");
    return Rational(n, d);
  } catch (const std::runtime_error&) {
    throw InputError("not a rational number: '" + text + "'");
  }
}

std::tuple<int, int, int> inertia(const RationalMatrix& m0) {
  if (m0.rows() != m0.cols()) throw InputError("inertia needs a square matrix");
  RationalMatrix a = m0;
  const int n = static_cast<int>(a.rows());
  int pos = 0, neg = 0, zero = 0;
  for (int k = 0; k < n; ++k) {
    int piv = -1;
    for (int i = k; i < n; ++i)
      if (a(i, i) != 0) {
        piv = i;
        break;
      }
    if (piv < 0) {
      // Zero diagonal: add a row/column with a nonzero off-diagonal entry.
      int pi = -1, pj = -1;
      for (int i = k; i < n && pi < 0; ++i)
        for (int j = i + 1; j < n; ++j)
          if (a(i, j) != 0) {
            pi = i;
            pj = j;
            break;
          }
      if (pi < 0) {
        zero += n - k;
        break;
      }
      for (int j = 0; j < n; ++j) a(pi, j) += a(pj, j);
      for (int i = 0; i < n; ++i) a(i, pi) += a(i, pj);
      piv = pi;
    }
    if (piv != k) {
      a.row(k).swap(a.row(piv));
      a.col(k).swap(a.col(piv));
    }
    const Rational d = a(k, k);
    (d > 0 ? pos : neg)++;
    for (int i = k + 1; i < n; ++i) {
      if (a(i, k) == 0) continue;
      const Rational f = a(i, k) / d;
      for (int j = k; j < n; ++j) a(i, j) -= f * a(k, j);
    }
    for (int j = k + 1; j < n; ++j) a(k, j) = 0;
    for (int i = k + 1; i < n; ++i) a(i, k) = 0;
  }
  return {pos, neg, zero};
}

BBFLattice make_lattice(const IntMatrix& gram, std::string name) {
  if (gram.rows() != gram.cols() || gram.rows() == 0) throw InputError("Gram matrix must be square and nonempty");
  if (gram != gram.transpose()) throw InputError("Gram matrix must be symmetric");
  const auto [p, n, z] = inertia(toRational(gram));
  if (z != 0) throw InputError("Gram matrix is degenerate");
  BBFLattice l;
  l.name = std::move(name);
  l.rank = static_cast<int>(gram.rows());
  l.gram = gram;
  l.positive = p;
  l.negative = n;
  return l;
}

IntMatrix hyperbolic_plane_gram() {
  IntMatrix u(2, 2);
  u << 0, 1, 1, 0;
  return u;
}

IntMatrix e8_gram() {
  IntMatrix e = IntMatrix::Zero(8, 8);
  for (int i = 0; i < 8; ++i) e(i, i) = 2;
  const int edges[7][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {4, 7}};
  for (const auto& ed : edges) e(ed[0], ed[1]) = e(ed[1], ed[0]) = -1;
  return e;
}

IntMatrix direct_sum(const std::vector<IntMatrix>& blocks) {
  Eigen::Index n = 0;
  for (const auto& b : blocks) n += b.rows();
  IntMatrix m = IntMatrix::Zero(n, n);
  Eigen::Index o = 0;
  for (const auto& b : blocks) {
    m.block(o, o, b.rows(), b.cols()) = b;
    o += b.rows();
  }
  return m;
}

BBFLattice k3_lattice() {
  const IntMatrix u = hyperbolic_plane_gram();
  const IntMatrix e = -e8_gram();
  return make_lattice(direct_sum({u, u, u, e, e}), "K3");
}

BBFLattice hyperbolic_lattice(int copies) {
  if (copies < 1) throw InputError("need at least one hyperbolic plane");
  return make_lattice(direct_sum(std::vector<IntMatrix>(copies, hyperbolic_plane_gram())),
                      "U" + std::to_string(copies));
}

std::int64_t bbf_eval(const BBFLattice& l, const IntVector& a, const IntVector& b) {
  if (a.size() != l.rank || b.size() != l.rank) throw InputError("vector length does not match the lattice rank");
  return a.dot(l.gram * b);
}

Rational bbf_eval(const BBFLattice& l, const RationalVector& a, const RationalVector& b) {
  if (a.size() != l.rank || b.size() != l.rank) throw InputError("vector length does not match the lattice rank");
  return dot(a, toRational(l.gram), b);
}

Period make_period(const BBFLattice& l, const RationalMatrix& vectors, std::optional<Rational> kappa) {
  if (vectors.rows() != l.rank || vectors.cols() != 3) throw InputError("period needs three vectors of lattice rank");
  if (l.positive != 3) throw InputError("degenerate period: the lattice must have positive index 3");
  const RationalMatrix g = toRational(l.gram);
  Period p;
  p.omega = vectors;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < a; ++b) {
      const RationalVector wb = p.omega.col(b);
      const Rational f = dot(p.omega.col(a), g, wb) / p.norms[b];
      for (int i = 0; i < l.rank; ++i) p.omega(i, a) -= f * wb(i);
    }
    const Rational n = dot(p.omega.col(a), g, p.omega.col(a));
    if (n <= 0) throw InputError("degenerate period: the vectors do not span a positive 3-plane");
    p.norms.push_back(n);
  }
  p.kappa = kappa ? *kappa : p.norms[0];
  if (p.kappa <= 0) throw InputError("kappa must be positive");
  p.c0 = 1 / p.kappa;
  p.unit.resize(l.rank, 3);
  for (int a = 0; a < 3; ++a) {
    const double s = std::sqrt(to_double(p.kappa / p.norms[a]));
    for (int i = 0; i < l.rank; ++i) p.unit(i, a) = to_double(p.omega(i, a)) * s;
  }
  return p;
}

Period generic_period(const BBFLattice& l, std::uint64_t seed) {
  if (l.positive != 3) throw InputError("degenerate period: the lattice must have positive index 3");
  const Eigen::MatrixXd g = l.gram.cast<double>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  std::mt19937_64 rng(seed);
  const std::int64_t den = 997;
  for (int attempt = 0; attempt < 64; ++attempt) {
    RationalMatrix v(l.rank, 3);
    for (int a = 0; a < 3; ++a) {
      const Eigen::VectorXd e = es.eigenvectors().col(l.rank - 1 - a);
      for (int i = 0; i < l.rank; ++i) {
        const std::int64_t jitter = static_cast<std::int64_t>(rng() % 41) - 20;
        v(i, a) = Rational(static_cast<std::int64_t>(std::llround(e(i) * den)) + jitter, den);
      }
    }
    try {
      return make_period(l, v);
    } catch (const InputError&) {
      continue;
    }
  }
  throw InputError("could not draw a positive period");
}

PlantedInstance planted_instance() {
  PlantedInstance inst;
  inst.lattice = hyperbolic_lattice(3);
  RationalMatrix v = RationalMatrix::Zero(6, 3);
  // omega_1 = 2 e1 + f1 gives q(e1 - f1, omega_1) = -1; omega_2, omega_3 found by brute-force search.
  v(0, 0) = 2;
  v(1, 0) = 1;
  v(2, 1) = Rational(3, 2);
  v(3, 1) = -12;
  v(4, 1) = -5;
  v(5, 1) = -4;
  v(2, 2) = 1;
  v(3, 2) = Rational(298, 63);
  v(4, 2) = Rational(4, 3);
  v(5, 2) = Rational(-43, 21);
  inst.period = make_period(inst.lattice, v, Rational(4));
  inst.planted = IntVector::Zero(6);
  inst.planted(0) = 1;
  inst.planted(1) = -1;
  return inst;
}

ClassDecomposition class_decomposition(const BBFLattice& l, const Period& p, const IntVector& gamma) {
  if (gamma.size() != l.rank) throw InputError("class length does not match the lattice rank");
  const RationalMatrix g = toRational(l.gram);
  const RationalVector x = toRational(gamma);
  ClassDecomposition d;
  d.coefficients.resize(3);
  d.projection = RationalVector::Zero(l.rank);
  Rational pp = 0;
  for (int a = 0; a < 3; ++a) {
    d.coefficients(a) = dot(x, g, p.omega.col(a)) / p.norms[a];
    for (int i = 0; i < l.rank; ++i) d.projection(i) += d.coefficients(a) * p.omega(i, a);
    pp += d.coefficients(a) * d.coefficients(a) * p.norms[a];
  }
  d.beta.resize(l.rank);
  for (int i = 0; i < l.rank; ++i) d.beta(i) = x(i) - d.projection(i);
  d.area_squared = p.kappa * pp;
  d.area = std::sqrt(to_double(d.area_squared));
  if (d.area_squared > 0) {
    Eigen::Vector3d xi;
    for (int a = 0; a < 3; ++a) xi(a) = to_double(d.coefficients(a)) * std::sqrt(to_double(p.norms[a]));
    d.xi = xi.normalized();
  }
  return d;
}

std::vector<IntVector> enumerate_short_vectors(const RationalMatrix& gram, const Rational& bound) {
  const int n = static_cast<int>(gram.rows());
  if (n == 0 || gram.cols() != n) throw InputError("Gram matrix must be square and nonempty");
  if (gram != gram.transpose()) throw InputError("Gram matrix must be symmetric");
  // G = L D L^T, Q(x) = sum_i D_i (x_i + sum_{j>i} L_ji x_j)^2.
  RationalMatrix L = RationalMatrix::Identity(n, n);
  std::vector<Rational> D(n);
  for (int j = 0; j < n; ++j) {
    Rational s = gram(j, j);
    for (int k = 0; k < j; ++k) s -= L(j, k) * L(j, k) * D[k];
    if (s <= 0) throw InputError("Gram matrix is not positive definite");
    D[j] = s;
    for (int i = j + 1; i < n; ++i) {
      Rational t = gram(i, j);
      for (int k = 0; k < j; ++k) t -= L(i, k) * L(j, k) * D[k];
      L(i, j) = t / s;
    }
  }
  std::vector<IntVector> out;
  if (bound < 0) return out;
  IntVector x = IntVector::Zero(n);
  std::vector<Rational> budget(n + 1);
  budget[n] = bound;
  // Depth-first over i = n-1 .. 0.
  const auto recurse = [&](auto&& self, int i) -> void {
    Rational c = 0;
    for (int j = i + 1; j < n; ++j)
      if (x(j) != 0) c -= L(j, i) * Rational(x(j));
    const Rational& t = budget[i + 1];
    const double half = std::sqrt(std::max(0.0, to_double(t / D[i])));
    const double cd = to_double(c);
    std::int64_t lo = static_cast<std::int64_t>(std::floor(cd - half)) - 1;
    std::int64_t hi = static_cast<std::int64_t>(std::ceil(cd + half)) + 1;
    const auto fits = [&](std::int64_t k) {
      const Rational r = Rational(k) - c;
      return D[i] * r * r <= t;
    };
    const std::int64_t mid = std::clamp(floorRational(c), lo, hi);
    while (lo <= mid && !fits(lo)) ++lo;
    while (hi >= lo && !fits(hi)) --hi;
    for (std::int64_t k = lo; k <= hi; ++k) {
      const Rational r = Rational(k) - c;
      x(i) = k;
      budget[i] = t - D[i] * r * r;
      if (i == 0)
        out.push_back(x);
      else
        self(self, i - 1);
    }
    x(i) = 0;
  };
  recurse(recurse, n - 1);
  std::sort(out.begin(), out.end(), lexLess);
  return out;
}

RationalMatrix majorant(const BBFLattice& l, const Period& p) {
  const RationalMatrix g = toRational(l.gram);
  RationalMatrix m = -g;
  for (int a = 0; a < 3; ++a) {
    RationalVector gw = RationalVector::Zero(l.rank);
    for (int i = 0; i < l.rank; ++i)
      for (int j = 0; j < l.rank; ++j)
        if (g(i, j) != 0) gw(i) += g(i, j) * p.omega(j, a);
    const Rational s = 2 / p.norms[a];
    for (int i = 0; i < l.rank; ++i)
      for (int j = 0; j < l.rank; ++j) m(i, j) += s * gw(i) * gw(j);
  }
  return m;
}

DirectionSet admissible_directions(const BBFLattice& l, const Period& p, const Rational& a_max, int sigma,
                                   bool square_equals) {
  if (a_max <= 0) throw InputError("A_max must be positive");
  if (sigma < 2) throw InputError("sigma must be >= 2");
  if (p.omega.rows() != l.rank) throw InputError("period rank mismatch");
  const Rational bound = 2 * p.c0 * a_max * a_max + sigma;
  const auto vecs = enumerate_short_vectors(majorant(l, p), bound);
  DirectionSet set;
  set.candidates = vecs.size();
  // Key: coefficient vector scaled so its first nonzero entry is 1 (xi up to sign, exactly).
  std::map<std::vector<Rational>, DirectionEntry> merged;
  for (const IntVector& v : vecs) {
    const std::int64_t sq = bbf_eval(l, v, v);
    if (square_equals ? sq != -sigma : sq < -sigma) continue;
    const ClassDecomposition d = class_decomposition(l, p, v);
    if (d.area_squared <= 0 || d.area_squared > a_max * a_max) continue;
    std::vector<Rational> key(3);
    Rational lead = 0;
    for (int a = 0; a < 3; ++a)
      if (lead == 0 && d.coefficients(a) != 0) lead = d.coefficients(a);
    for (int a = 0; a < 3; ++a) key[a] = d.coefficients(a) / lead;
    DirectionEntry e;
    e.xi = lead > 0 ? *d.xi : Eigen::Vector3d(-*d.xi);
    e.gamma = v;
    e.area = d.area;
    e.area_squared = d.area_squared;
    e.square = sq;
    auto it = merged.find(key);
    if (it == merged.end()) {
      merged.emplace(std::move(key), std::move(e));
    } else if (e.area_squared < it->second.area_squared ||
               (e.area_squared == it->second.area_squared && lexLess(e.gamma, it->second.gamma))) {
      it->second = std::move(e);
    }
  }
  for (auto& [k, e] : merged) set.entries.push_back(std::move(e));
  std::sort(set.entries.begin(), set.entries.end(), [](const DirectionEntry& a, const DirectionEntry& b) {
    if (a.area_squared != b.area_squared) return a.area_squared < b.area_squared;
    return std::lexicographical_compare(a.xi.data(), a.xi.data() + 3, b.xi.data(), b.xi.data() + 3);
  });
  return set;
}

LatticeFile read_lattice_text(std::istream& is) {
  std::string word;
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    while (ls >> word) tokens.push_back(word);
  }
  size_t pos = 0;
  const auto next = [&]() -> const std::string& {
    if (pos >= tokens.size()) throw InputError("lattice file ended early");
    return tokens[pos++];
  };
  if (next() != "rank") throw InputError("lattice file must start with 'rank'");
  int rank = 0;
  try {
    rank = std::stoi(next());
  } catch (const std::exception&) {
    throw InputError("bad rank");
  }
  if (rank <= 0 || rank > 64) throw InputError("rank out of range");
  if (next() != "gram") throw InputError("expected 'gram'");
  IntMatrix g(rank, rank);
  for (int i = 0; i < rank; ++i)
    for (int j = 0; j < rank; ++j) {
      const Rational r = parse_rational(next());
      if (mp::denominator(r) != 1) throw InputError("Gram entries must be integers");
      g(i, j) = mp::numerator(r).convert_to<std::int64_t>();
    }
  LatticeFile f;
  f.lattice = make_lattice(g, "file");
  if (pos < tokens.size()) {
    if (next() != "period") throw InputError("expected 'period'");
    RationalMatrix v(rank, 3);
    for (int a = 0; a < 3; ++a)
      for (int i = 0; i < rank; ++i) v(i, a) = parse_rational(next());
    std::optional<Rational> kappa;
    if (pos < tokens.size()) {
      if (next() != "kappa") throw InputError("expected 'kappa'");
      kappa = parse_rational(next());
    }
    if (pos != tokens.size()) throw InputError("trailing tokens in lattice file");
    f.period = make_period(f.lattice, v, kappa);
  }
  return f;
}

void write_lattice_text(const BBFLattice& l, const Period* p, std::ostream& os) {
  os << "rank " << l.rank << "\ngram\n";
  for (int i = 0; i < l.rank; ++i) {
    for (int j = 0; j < l.rank; ++j) os << (j ? " " : "") << l.gram(i, j);
    os << '\n';
  }
  if (!p) return;
  os << "period\n";
  for (int a = 0; a < 3; ++a) {
    for (int i = 0; i < l.rank; ++i) os << (i ? " " : "") << to_string(p->omega(i, a));
    os << '\n';
  }
  os << "kappa " << to_string(p->kappa) << '\n';
}

}  // namespace fueter
