#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <initializer_list>

namespace ciwave {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Real = double;
using Complex = std::complex<Real>;

using RealMatrix = Matrix<Real>;
using RealVector = Vector<Real>;
using ComplexMatrix = Matrix<Complex>;
using ComplexVector = Vector<Complex>;
using IndexVector = Eigen::VectorXi;

/// Real lift of a complex matrix: A -> [[Re A, -Im A], [Im A, Re A]].
/// The lift is a ring homomorphism, so lift(A*B) = lift(A)*lift(B) and
/// lift(A)^{-1} = lift(A^{-1}); for Hermitian A the lift is symmetric.
template <typename Scalar>
Matrix<Scalar> real_lift(const Matrix<std::complex<Scalar>>& a) {
  const Eigen::Index r = a.rows();
  const Eigen::Index c = a.cols();
  Matrix<Scalar> out(2 * r, 2 * c);
  out.topLeftCorner(r, c) = a.real();
  out.topRightCorner(r, c) = -a.imag();
  out.bottomLeftCorner(r, c) = a.imag();
  out.bottomRightCorner(r, c) = a.real();
  return out;
}

/// Companion vector lift: v -> [Re v; Im v], so that (A v)^ = lift(A) v^.
template <typename Scalar>
Vector<Scalar> real_lift(const Vector<std::complex<Scalar>>& v) {
  Vector<Scalar> out(2 * v.size());
  out.head(v.size()) = v.real();
  out.tail(v.size()) = v.imag();
  return out;
}

template <typename Scalar>
Vector<std::complex<Scalar>> complex_unlift(const Vector<Scalar>& v) {
  const Eigen::Index n = v.size() / 2;
  Vector<std::complex<Scalar>> out(n);
  out.real() = v.head(n);
  out.imag() = v.tail(n);
  return out;
}

/// Deterministic sub-stream seeding. Every random draw in the library is
/// keyed by seed_split(root, {path...}), where the path encodes trial index
/// and purpose, so channel, symbol and noise streams are independent and a
/// run is reproducible for any worker count.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t seed_split(std::uint64_t root,
                                std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(root);
  for (std::uint64_t p : path) s = splitmix64(s ^ splitmix64(p));
  return s;
}

/// Sub-stream purposes for seed_split paths.
enum class SeedPurpose : std::uint64_t {
  Channel = 1,
  Symbols = 2,
  Noise = 3,
};

inline std::uint64_t seed_split(std::uint64_t root, std::uint64_t trial,
                                SeedPurpose purpose) {
  return seed_split(root, {trial, static_cast<std::uint64_t>(purpose)});
}

}  // namespace ciwave
