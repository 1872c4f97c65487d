#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include "ciwave/types.hpp"

namespace ciwave {

enum class ModKind { Psk, Qam };

/// A fixed constellation with a documented point ordering.
///
/// PSK points sit at odd multiples of pi/M in ascending angle, starting in
/// the first quadrant, so the decision boundaries are the even multiples
/// (for QPSK: the axes). QAM points enumerate the odd-integer level grid
/// row-major, imaginary level slowest, both levels ascending.
struct Constellation {
  ModKind kind = ModKind::Psk;
  int order = 0;                 // M
  ComplexVector points;          // size M, documented order
  Real theta_t = 0.0;            // PSK threshold angle pi/M; unused for QAM
  RealVector qam_levels;         // ascending odd grid, before norm_factor
  Real norm_factor = 1.0;

  bool is_psk() const { return kind == ModKind::Psk; }
  /// Outermost QAM amplitude level including norm_factor.
  Real outer_level() const { return qam_levels(qam_levels.size() - 1) * norm_factor; }
};

/// Symbols drawn for one transmission block, one user per row.
struct SymbolBlock {
  ComplexMatrix symbols;   // K x N constellation points
  Eigen::MatrixXi indices; // K x N point indices into the constellation
  int users() const { return static_cast<int>(symbols.rows()); }
  int slots() const { return static_cast<int>(symbols.cols()); }
};

/// Per-component constructive-interference class of a QAM symbol:
/// Exploitable components sit on the outermost level and may scale past the
/// common margin, Fixed components are pinned to it exactly.
enum class CompClass : std::uint8_t { Exploitable, Fixed };

struct ComponentClass {
  CompClass real_class = CompClass::Fixed;
  CompClass imag_class = CompClass::Fixed;
};

struct QamDecomposition {
  Real real_part = 0.0;     // Re{s}
  Complex imag_part;        // j*Im{s}
  ComponentClass cls;
};

Constellation make_constellation(const std::string& id, bool normalize = false);
Constellation make_psk(int order);
Constellation make_qam(int order, bool normalize = false);

SymbolBlock draw_block(const Constellation& c, int users, int slots,
                       std::uint64_t seed);

/// Margin pair of the PSK sector constraint: m_minus/m_plus are the signed
/// distances of lambda from the two sector edges, so the CI constraint holds
/// for threshold t iff t <= min(m_minus, m_plus).
template <typename Scalar>
std::pair<Scalar, Scalar> psk_margins(const std::complex<Scalar>& lambda,
                                      Scalar theta_t) {
  const Scalar ratio = lambda.imag() / std::tan(theta_t);
  return {lambda.real() - ratio, lambda.real() + ratio};
}

QamDecomposition qam_decompose(const Complex& s, const Constellation& c);

/// Maximum-margin detector. PSK picks the angular sector containing arg(y)
/// (scale invariant, t_star ignored); QAM slices each component against the
/// level grid scaled by the genie block margin t_star. Ties go to the
/// lower-index point.
int detect_index(const Constellation& c, const Complex& y, Real t_star);
Complex detect(const Constellation& c, const Complex& y, Real t_star);

}  // namespace ciwave
