#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "fueter/errors.hpp"
#include "fueter/lattice.hpp"

using namespace fueter;

namespace {

RationalMatrix toRational(const IntMatrix& m) {
  RationalMatrix r(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) r(i, j) = Rational(m(i, j));
  return r;
}

// a^T m b, accumulated entrywise.
RationalMatrix product(const RationalMatrix& a, const RationalMatrix& b) {
  RationalMatrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) {
      Rational s = 0;
      for (int k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

RationalMatrix sandwich(const RationalMatrix& a, const RationalMatrix& m, const RationalMatrix& b) {
  return product(product(a.transpose(), m), b);
}

std::vector<std::int64_t> key(const IntVector& v) { return {v.data(), v.data() + v.size()}; }

// Every integer point of the box |v_i| <= floor(sqrt(bound (G^-1)_ii)) with v^T G v <= bound.
std::set<std::vector<std::int64_t>> bruteForce(const IntMatrix& g, std::int64_t bound) {
  const int n = static_cast<int>(g.rows());
  const Eigen::MatrixXd inv = g.cast<double>().inverse();
  std::vector<std::int64_t> box(n);
  for (int i = 0; i < n; ++i) box[i] = static_cast<std::int64_t>(std::floor(std::sqrt(bound * inv(i, i)) + 1e-9));
  std::set<std::vector<std::int64_t>> out;
  std::vector<std::int64_t> v(n);
  for (int i = 0; i < n; ++i) v[i] = -box[i];
  while (true) {
    std::int64_t q = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) q += v[i] * g(i, j) * v[j];
    if (q <= bound) out.insert(v);
    int k = 0;
    while (k < n && v[k] == box[k]) v[k] = -box[k], ++k;
    if (k == n) break;
    ++v[k];
  }
  return out;
}

IntMatrix randomPositiveForm(std::mt19937_64& rng, int n) {
  std::uniform_int_distribution<int> entry(-1, 1), diag(1, 2);
  IntMatrix b = IntMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    b(i, i) = diag(rng);
    for (int j = 0; j < i; ++j) b(i, j) = entry(rng);
  }
  return b.transpose() * b;
}

IntVector unitVector(int n, int i, std::int64_t s = 1) {
  IntVector v = IntVector::Zero(n);
  v(i) = s;
  return v;
}

// U^3 with the period spanned by e_k + f_k, so N is spanned by e_k - f_k.
Period diagonalPeriod(const BBFLattice& l) {
  RationalMatrix v = RationalMatrix::Zero(6, 3);
  for (int k = 0; k < 3; ++k) v(2 * k, k) = v(2 * k + 1, k) = Rational(1);
  return make_period(l, v);
}

}  // namespace

TEST(Lattice, HyperbolicPlaneAndE8) {
  const BBFLattice u = hyperbolic_lattice(1);
  EXPECT_EQ(bbf_eval(u, unitVector(2, 0), unitVector(2, 1)), 1);
  EXPECT_EQ(bbf_eval(u, unitVector(2, 0), unitVector(2, 0)), 0);
  const BBFLattice e8m = make_lattice(-e8_gram(), "E8(-1)");
  EXPECT_EQ(bbf_eval(e8m, unitVector(8, 3), unitVector(8, 3)), -2);
  EXPECT_EQ(e8m.negative, 8);
  EXPECT_NEAR(e8_gram().cast<double>().determinant(), 1.0, 1e-9);
}

TEST(Lattice, K3Signature) {
  const BBFLattice k3 = k3_lattice();
  EXPECT_EQ(k3.rank, 22);
  EXPECT_EQ(k3.positive, 3);
  EXPECT_EQ(k3.negative, 19);
  EXPECT_EQ(k3.gram, k3.gram.transpose());
  // Independent count of eigenvalue signs in floating point.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k3.gram.cast<double>());
  EXPECT_EQ((es.eigenvalues().array() > 0).count(), 3);
  EXPECT_EQ((es.eigenvalues().array() < 0).count(), 19);
  const IntMatrix expected = direct_sum({hyperbolic_plane_gram(), hyperbolic_plane_gram(), hyperbolic_plane_gram(),
                                         -e8_gram(), -e8_gram()});
  EXPECT_EQ(k3.gram, expected);
}

TEST(Lattice, RejectsBadGrams) {
  IntMatrix a(2, 2);
  a << 1, 2, 0, 1;
  EXPECT_THROW(make_lattice(a), InputError);
  IntMatrix d = IntMatrix::Zero(3, 3);
  d(0, 0) = 1;
  d(1, 1) = -1;
  EXPECT_THROW(make_lattice(d), InputError);
  EXPECT_EQ(inertia(toRational(d)), std::make_tuple(1, 1, 1));
}

TEST(Period, OrthogonalityAndNegativeComplement) {
  const BBFLattice l = hyperbolic_lattice(3);
  const Period p = generic_period(l, 5);
  const RationalMatrix g = toRational(l.gram);
  const RationalMatrix m = sandwich(p.omega, g, p.omega);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      if (a == b) EXPECT_TRUE(m(a, a) > 0);
      else EXPECT_TRUE(m(a, b) == 0);
    }
  const Eigen::MatrixXd u = p.unit.transpose() * l.gram.cast<double>() * p.unit;
  EXPECT_LT((u - to_double(p.kappa) * Eigen::Matrix3d::Identity()).norm(), 1e-12 * (1 + to_double(p.kappa)));
  EXPECT_TRUE(p.c0 * p.kappa == 1);
  // The complement of P is negative definite: q restricted to it has inertia (0, 3).
  // m is diagonal, so proj_P = sum_a omega_a omega_a^T g / m_aa.
  RationalMatrix proj = RationalMatrix::Zero(6, 6);
  for (int a = 0; a < 3; ++a) {
    const RationalMatrix col = p.omega.col(a);
    RationalMatrix outer = product(product(col, col.transpose()), g);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) proj(i, j) += outer(i, j) / m(a, a);
  }
  RationalMatrix compl_basis = -proj;
  for (int i = 0; i < 6; ++i) compl_basis(i, i) += 1;
  const auto [pos, neg, zero] = inertia(sandwich(compl_basis, g, compl_basis));
  EXPECT_EQ(pos, 0);
  EXPECT_EQ(neg, 3);
  EXPECT_EQ(zero, 3);
  EXPECT_THROW(make_period(hyperbolic_lattice(2), RationalMatrix::Identity(4, 3)), InputError);
}

TEST(ClassDecomposition, ComplementPeriodAndRecomposition) {
  const BBFLattice l = hyperbolic_lattice(3);
  const Period p = diagonalPeriod(l);
  IntVector n = IntVector::Zero(6);
  n(0) = 1;
  n(1) = -1;
  const ClassDecomposition inN = class_decomposition(l, p, n);
  EXPECT_TRUE(inN.area_squared == 0);
  EXPECT_FALSE(inN.xi.has_value());
  for (int i = 0; i < 6; ++i) EXPECT_TRUE(inN.beta(i) == Rational(n(i)));

  IntVector w = IntVector::Zero(6);
  w(2) = w(3) = 1;
  const ClassDecomposition onP = class_decomposition(l, p, w);
  for (int i = 0; i < 6; ++i) EXPECT_TRUE(onP.beta(i) == 0);
  ASSERT_TRUE(onP.xi.has_value());
  EXPECT_NEAR(std::abs((*onP.xi)(1)), 1.0, 1e-12);

  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> c(-5, 5);
  const Period gp = generic_period(l, 2);
  for (int t = 0; t < 50; ++t) {
    IntVector g(6);
    for (int i = 0; i < 6; ++i) g(i) = c(rng);
    const ClassDecomposition d = class_decomposition(l, gp, g);
    for (int i = 0; i < 6; ++i) ASSERT_TRUE(d.beta(i) + d.projection(i) == Rational(g(i)));
    const RationalMatrix dot = sandwich(gp.omega, toRational(l.gram), d.beta);
    for (int a = 0; a < 3; ++a) ASSERT_TRUE(dot(a, 0) == 0);
    EXPECT_NEAR(d.area * d.area, to_double(d.area_squared), 1e-9 * (1 + d.area * d.area));
  }
}

TEST(ShortVectors, SmallCases) {
  const RationalMatrix id = RationalMatrix::Identity(2, 2);
  EXPECT_EQ(enumerate_short_vectors(id, Rational(1)).size(), 5u);
  RationalMatrix d = RationalMatrix::Zero(2, 2);
  d(0, 0) = 1;
  d(1, 1) = 3;
  const auto v = enumerate_short_vectors(d, Rational(3));
  EXPECT_EQ(v.size(), 5u);
  IntMatrix di = IntMatrix::Zero(2, 2);
  di(0, 0) = 1;
  di(1, 1) = 3;
  std::set<std::vector<std::int64_t>> got;
  for (const auto& x : v) got.insert(key(x));
  EXPECT_EQ(got, bruteForce(di, 3));
  EXPECT_THROW(enumerate_short_vectors(toRational(hyperbolic_plane_gram()), Rational(1)), InputError);
}

TEST(ShortVectors, MatchBruteForce) {
  std::mt19937_64 rng(20240611);
  std::uniform_int_distribution<int> rankDist(2, 6);
  for (int t = 0; t < 30; ++t) {
    const int n = rankDist(rng);
    const IntMatrix g = randomPositiveForm(rng, n);
    const std::int64_t bound = n <= 4 ? 50 : 12;
    std::set<std::vector<std::int64_t>> got;
    const auto vs = enumerate_short_vectors(toRational(g), Rational(bound));
    for (const auto& x : vs) got.insert(key(x));
    ASSERT_EQ(got.size(), vs.size()) << "duplicates";
    ASSERT_TRUE(std::is_sorted(vs.begin(), vs.end(), [](const IntVector& a, const IntVector& b) {
      return key(a) < key(b);
    }));
    EXPECT_EQ(got, bruteForce(g, bound)) << "trial " << t << " rank " << n;
  }
}

TEST(Directions, PlantedInstance) {
  const PlantedInstance inst = planted_instance();
  EXPECT_EQ(bbf_eval(inst.lattice, inst.planted, inst.planted), -2);
  const ClassDecomposition planted = class_decomposition(inst.lattice, inst.period, inst.planted);
  EXPECT_TRUE(planted.area_squared == 1);
  ASSERT_TRUE(planted.xi.has_value());

  const DirectionSet one = admissible_directions(inst.lattice, inst.period, Rational(1), 2);
  ASSERT_EQ(one.entries.size(), 1u);
  EXPECT_NEAR(std::abs(one.entries[0].xi.dot(*planted.xi)), 1.0, 1e-12);
  EXPECT_TRUE(admissible_directions(inst.lattice, inst.period, Rational(1, 2), 2).entries.empty());

  const DirectionSet two = admissible_directions(inst.lattice, inst.period, Rational(2), 2);
  EXPECT_GE(two.entries.size(), one.entries.size());
  for (const auto& e : one.entries) {
    const bool found = std::any_of(two.entries.begin(), two.entries.end(),
                                   [&](const DirectionEntry& f) { return std::abs(std::abs(f.xi.dot(e.xi)) - 1) < 1e-12; });
    EXPECT_TRUE(found);
  }

  // Every returned class recomposes, satisfies the filters and lies in the majorant ellipsoid.
  const RationalMatrix qt = majorant(inst.lattice, inst.period);
  for (const auto& e : two.entries) {
    const ClassDecomposition d = class_decomposition(inst.lattice, inst.period, e.gamma);
    for (int i = 0; i < e.gamma.size(); ++i) ASSERT_TRUE(d.beta(i) + d.projection(i) == Rational(e.gamma(i)));
    EXPECT_GE(e.square, -2);
    EXPECT_TRUE(e.area_squared > 0);
    EXPECT_TRUE(e.area_squared <= 4);
    RationalMatrix g(e.gamma.size(), 1);
    for (int i = 0; i < e.gamma.size(); ++i) g(i, 0) = Rational(e.gamma(i));
    const Rational q = sandwich(g, qt, g)(0, 0);
    EXPECT_TRUE(q <= 2 * inst.period.c0 * Rational(4) + 2);
  }

  const DirectionSet eq = admissible_directions(inst.lattice, inst.period, Rational(2), 2, true);
  for (const auto& e : eq.entries) EXPECT_EQ(e.square, -2);
  EXPECT_LE(eq.entries.size(), two.entries.size());
}

TEST(Directions, GenericPeriodHasNoTinyAreas) {
  const BBFLattice l = hyperbolic_lattice(3);
  EXPECT_TRUE(admissible_directions(l, generic_period(l, 3), Rational(1, 1000), 2).entries.empty());
}

TEST(Directions, SizeIsNondecreasingInAreaBound) {
  const PlantedInstance inst = planted_instance();
  std::size_t prev = 0;
  for (int k = 1; k <= 4; ++k) {
    const std::size_t n = admissible_directions(inst.lattice, inst.period, Rational(k, 2), 2).entries.size();
    EXPECT_GE(n, prev);
    prev = n;
  }
}

TEST(LatticeText, RoundTrip) {
  const PlantedInstance inst = planted_instance();
  std::stringstream ss;
  write_lattice_text(inst.lattice, &inst.period, ss);
  const LatticeFile f = read_lattice_text(ss);
  EXPECT_EQ(f.lattice.gram, inst.lattice.gram);
  ASSERT_TRUE(f.period.has_value());
  EXPECT_TRUE(f.period->kappa == inst.period.kappa);
  EXPECT_TRUE(parse_rational("-3/6") == Rational(-1, 2));
  EXPECT_EQ(to_string(Rational(7, 3)), "7/3");
  std::istringstream bad("rank 2\ngram\n1 0\n");
  EXPECT_THROW(read_lattice_text(bad), InputError);
}
