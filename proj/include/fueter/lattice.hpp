#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>
#include <boost/multiprecision/eigen.hpp>

namespace fueter {

using Rational = boost::multiprecision::number<boost::multiprecision::cpp_rational_backend,
                                               boost::multiprecision::et_off>;
using RationalMatrix = Eigen::Matrix<Rational, Eigen::Dynamic, Eigen::Dynamic>;
using RationalVector = Eigen::Matrix<Rational, Eigen::Dynamic, 1>;
using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using IntVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

/// Integral symmetric bilinear form q on Z^rank.
struct BBFLattice {
  std::string name;
  int rank = 0;
  IntMatrix gram;
  int positive = 0;  // signature (positive, negative)
  int negative = 0;
};

/// Validates symmetry and non-degeneracy, computes the signature exactly.
BBFLattice make_lattice(const IntMatrix& gram, std::string name = "custom");

IntMatrix hyperbolic_plane_gram();
/// Positive-definite E8 Cartan form; E8(-1) is its negative.
IntMatrix e8_gram();
IntMatrix direct_sum(const std::vector<IntMatrix>& blocks);

/// U^3 + E8(-1)^2, rank 22.
BBFLattice k3_lattice();
/// U^n.
BBFLattice hyperbolic_lattice(int copies);

/// Exact inertia (positive, negative, zero) by congruence diagonalization.
std::tuple<int, int, int> inertia(const RationalMatrix& m);

std::int64_t bbf_eval(const BBFLattice& lattice, const IntVector& a, const IntVector& b);
Rational bbf_eval(const BBFLattice& lattice, const RationalVector& a, const RationalVector& b);

/// A positive 3-plane P with an exact q-orthogonal rational basis and the scale kappa = q(omega_xi, omega_xi).
/// `unit` is the real basis omega_a * sqrt(kappa / q(omega_a, omega_a)), q-orthonormal up to kappa.
struct Period {
  RationalMatrix omega;              // rank x 3, mutually q-orthogonal
  std::vector<Rational> norms;       // q(omega_a, omega_a) > 0
  Rational kappa;
  Rational c0;                       // 1 / kappa
  Eigen::MatrixXd unit;
};

/// Gram-Schmidt over the rationals. kappa defaults to q(omega_1, omega_1) after orthogonalization.
/// Throws InputError when the vectors do not span a positive 3-plane or the lattice has positive index != 3.
Period make_period(const BBFLattice& lattice, const RationalMatrix& vectors, std::optional<Rational> kappa = {});

/// Seeded generic period: the positive eigenvectors of the Gram matrix rounded to rationals of
/// denominator 997 plus a seeded perturbation, then orthogonalized.
Period generic_period(const BBFLattice& lattice, std::uint64_t seed);

/// The rank-6 instance on U^3 with planted class e1 - f1 of square -2 and area 1.
struct PlantedInstance {
  BBFLattice lattice;
  Period period;
  IntVector planted;
};
PlantedInstance planted_instance();

struct ClassDecomposition {
  RationalVector beta;        // gamma - proj_P gamma
  RationalVector projection;  // proj_P gamma = c0 A omega_xi
  RationalVector coefficients;  // proj_P gamma = sum coefficients_a omega_a
  Rational area_squared;      // A^2 = kappa q(proj, proj)
  double area = 0.0;
  std::optional<Eigen::Vector3d> xi;
};

ClassDecomposition class_decomposition(const BBFLattice& lattice, const Period& period, const IntVector& gamma);

/// All integral v with v^T G v <= bound (including 0), Fincke-Pohst on the exact LDL^T factorization,
/// lexicographically sorted. Throws InputError unless G is symmetric positive definite.
std::vector<IntVector> enumerate_short_vectors(const RationalMatrix& gram, const Rational& bound);

/// q~ = 2 q(proj_P ., proj_P .) - q.
RationalMatrix majorant(const BBFLattice& lattice, const Period& period);

struct DirectionEntry {
  Eigen::Vector3d xi;
  IntVector gamma;
  double area = 0.0;
  Rational area_squared;
  std::int64_t square = 0;  // q(gamma, gamma)
};

struct DirectionSet {
  std::vector<DirectionEntry> entries;
  std::size_t candidates = 0;  // vectors inside the majorant ellipsoid
};

/// Integral gamma with q(gamma, gamma) >= -sigma and 0 < A(gamma) <= a_max, merged by xi up to sign
/// (keeping the smallest area), sorted by area then xi. With `square_equals`, keeps q(gamma, gamma) = -sigma only.
DirectionSet admissible_directions(const BBFLattice& lattice, const Period& period, const Rational& a_max,
                                   int sigma, bool square_equals = false);

/// Plain-text format:
///   rank N
///   gram
///   <N rows of integers>
///   period            (optional)
///   <3 rows of N fractions>
///   kappa <fraction>  (optional)
struct LatticeFile {
  BBFLattice lattice;
  std::optional<Period> period;
};
LatticeFile read_lattice_text(std::istream& is);
void write_lattice_text(const BBFLattice& lattice, const Period* period, std::ostream& os);

Rational parse_rational(const std::string& text);
std::string to_string(const Rational& r);
double to_double(const Rational& r);

}  // namespace fueter
