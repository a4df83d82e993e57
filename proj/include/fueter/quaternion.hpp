#pragma once

#include <cmath>
#include <ostream>

#include <Eigen/Core>

namespace fueter {

/// Hamilton quaternion w + x i + y j + z k with ij = k.
template <typename Scalar>
struct Quaternion {
  Scalar w{0}, x{0}, y{0}, z{0};

  constexpr Quaternion() = default;
  constexpr Quaternion(Scalar w_, Scalar x_, Scalar y_, Scalar z_) : w(w_), x(x_), y(y_), z(z_) {}

  static Quaternion fromVector(const Eigen::Matrix<Scalar, 4, 1>& v) { return {v(0), v(1), v(2), v(3)}; }
  static Quaternion imaginary(const Eigen::Matrix<Scalar, 3, 1>& v) { return {Scalar(0), v(0), v(1), v(2)}; }

  Eigen::Matrix<Scalar, 4, 1> vec() const { return {w, x, y, z}; }
  Eigen::Matrix<Scalar, 3, 1> imag() const { return {x, y, z}; }

  Quaternion conjugate() const { return {w, -x, -y, -z}; }
  Scalar squaredNorm() const { return w * w + x * x + y * y + z * z; }
  Scalar norm() const {
    using std::sqrt;
    return sqrt(squaredNorm());
  }

  Quaternion operator+(const Quaternion& o) const { return {w + o.w, x + o.x, y + o.y, z + o.z}; }
  Quaternion operator-(const Quaternion& o) const { return {w - o.w, x - o.x, y - o.y, z - o.z}; }
  Quaternion operator-() const { return {-w, -x, -y, -z}; }
  Quaternion operator*(Scalar s) const { return {w * s, x * s, y * s, z * s}; }

  Quaternion operator*(const Quaternion& o) const {
    return {w * o.w - x * o.x - y * o.y - z * o.z,  //
            w * o.x + x * o.w + y * o.z - z * o.y,  //
            w * o.y - x * o.z + y * o.w + z * o.x,  //
            w * o.z + x * o.y - y * o.x + z * o.w};
  }

  bool operator==(const Quaternion&) const = default;
};

template <typename Scalar>
Quaternion<Scalar> operator*(Scalar s, const Quaternion<Scalar>& q) {
  return q * s;
}

template <typename Scalar>
std::ostream& operator<<(std::ostream& os, const Quaternion<Scalar>& q) {
  return os << '(' << q.w << ", " << q.x << ", " << q.y << ", " << q.z << ')';
}

using Quaterniond = Quaternion<double>;

template <typename Scalar>
Quaternion<Scalar> quat_mul(const Quaternion<Scalar>& p, const Quaternion<Scalar>& q) {
  return p * q;
}

/// Matrix of p -> q p on R^4 = H in the basis (1, i, j, k).
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 4> leftMultiplication(const Quaternion<Scalar>& q) {
  Eigen::Matrix<Scalar, 4, 4> m;
  m << q.w, -q.x, -q.y, -q.z,  //
      q.x, q.w, -q.z, q.y,     //
      q.y, q.z, q.w, -q.x,     //
      q.z, -q.y, q.x, q.w;
  return m;
}

/// Matrix of p -> p q.
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 4> rightMultiplication(const Quaternion<Scalar>& q) {
  Eigen::Matrix<Scalar, 4, 4> m;
  m << q.w, -q.x, -q.y, -q.z,  //
      q.x, q.w, q.z, -q.y,     //
      q.y, -q.z, q.w, q.x,     //
      q.z, q.y, -q.x, q.w;
  return m;
}

/// exp of a purely imaginary quaternion v: cos|v| + sin|v| v/|v|.
template <typename Scalar>
Quaternion<Scalar> expImaginary(const Eigen::Matrix<Scalar, 3, 1>& v) {
  using std::cos;
  using std::sin;
  const Scalar t = v.norm();
  if (t == Scalar(0)) return {Scalar(1), Scalar(0), Scalar(0), Scalar(0)};
  const Scalar s = sin(t) / t;
  return {cos(t), s * v(0), s * v(1), s * v(2)};
}

namespace units {
template <typename Scalar = double>
constexpr Quaternion<Scalar> one{1, 0, 0, 0};
template <typename Scalar = double>
constexpr Quaternion<Scalar> i{0, 1, 0, 0};
template <typename Scalar = double>
constexpr Quaternion<Scalar> j{0, 0, 1, 0};
template <typename Scalar = double>
constexpr Quaternion<Scalar> k{0, 0, 0, 1};
}  // namespace units

}  // namespace fueter
