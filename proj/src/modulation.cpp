#include "ciwave/modulation.hpp"

#include <algorithm>
#include <cctype>
#include <numbers>
#include <random>
#include <stdexcept>

namespace ciwave {

namespace {

constexpr Real kPi = std::numbers::pi_v<Real>;

bool is_power_of_two(int m) { return m >= 1 && (m & (m - 1)) == 0; }

int exact_sqrt(int m) {
  const int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(m))));
  return r * r == m ? r : 0;
}

}  // namespace

Constellation make_psk(int order) {
  if (order < 2 || !is_power_of_two(order)) {
    throw std::invalid_argument("PSK order must be a power of two >= 2, got " +
                                std::to_string(order));
  }
  Constellation c;
  c.kind = ModKind::Psk;
  c.order = order;
  c.theta_t = kPi / order;
  c.points.resize(order);
  for (int m = 0; m < order; ++m) {
    const Real angle = (2 * m + 1) * kPi / order;
    c.points(m) = Complex(std::cos(angle), std::sin(angle));
  }
  return c;
}

Constellation make_qam(int order, bool normalize) {
  if (order == 4) return make_psk(4);  // 4-QAM is QPSK
  const int levels = exact_sqrt(order);
  if (order < 16 || levels == 0 || levels % 2 != 0) {
    throw std::invalid_argument(
        "QAM order must be a square with an even side and >= 16, got " +
        std::to_string(order));
  }
  Constellation c;
  c.kind = ModKind::Qam;
  c.order = order;
  c.qam_levels.resize(levels);
  for (int i = 0; i < levels; ++i) c.qam_levels(i) = 2 * i - (levels - 1);
  c.points.resize(order);
  Real power = 0.0;
  for (int iq = 0; iq < levels; ++iq) {
    for (int ir = 0; ir < levels; ++ir) {
      const Complex p(c.qam_levels(ir), c.qam_levels(iq));
      c.points(iq * levels + ir) = p;
      power += std::norm(p);
    }
  }
  if (normalize) {
    c.norm_factor = 1.0 / std::sqrt(power / order);
    c.points *= c.norm_factor;
  }
  return c;
}

Constellation make_constellation(const std::string& id, bool normalize) {
  std::string s;
  s.reserve(id.size());
  for (char ch : id) s.push_back(static_cast<char>(std::tolower(ch)));
  if (s == "bpsk") return make_psk(2);
  if (s == "qpsk") return make_psk(4);
  const auto parse_order = [&](std::size_t suffix_len) {
    const std::string digits = s.substr(0, s.size() - suffix_len);
    if (digits.empty() ||
        !std::all_of(digits.begin(), digits.end(),
                     [](char ch) { return std::isdigit(ch) != 0; })) {
      throw std::invalid_argument("unsupported modulation id: " + id);
    }
    return std::stoi(digits);
  };
  if (s.size() > 3 && s.ends_with("psk")) return make_psk(parse_order(3));
  if (s.size() > 3 && s.ends_with("qam")) return make_qam(parse_order(3), normalize);
  throw std::invalid_argument("unsupported modulation id: " + id);
}

SymbolBlock draw_block(const Constellation& c, int users, int slots,
                       std::uint64_t seed) {
  if (users < 1 || slots < 1) {
    throw std::invalid_argument("draw_block needs users >= 1 and slots >= 1");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, c.order - 1);
  SymbolBlock block;
  block.symbols.resize(users, slots);
  block.indices.resize(users, slots);
  for (int n = 0; n < slots; ++n) {
    for (int k = 0; k < users; ++k) {
      const int idx = pick(rng);
      block.indices(k, n) = idx;
      block.symbols(k, n) = c.points(idx);
    }
  }
  return block;
}

QamDecomposition qam_decompose(const Complex& s, const Constellation& c) {
  if (c.kind != ModKind::Qam) {
    throw std::invalid_argument("qam_decompose expects a QAM constellation");
  }
  if (s.real() == 0.0 || s.imag() == 0.0) {
    throw std::invalid_argument("QAM symbol has a zero component");
  }
  const Real outer = c.outer_level();
  const Real tol = 1e-9 * outer;
  QamDecomposition d;
  d.real_part = s.real();
  d.imag_part = Complex(0.0, s.imag());
  d.cls.real_class = std::abs(std::abs(s.real()) - outer) <= tol
                         ? CompClass::Exploitable
                         : CompClass::Fixed;
  d.cls.imag_class = std::abs(std::abs(s.imag()) - outer) <= tol
                         ? CompClass::Exploitable
                         : CompClass::Fixed;
  return d;
}

int detect_index(const Constellation& c, const Complex& y, Real t_star) {
  if (c.kind == ModKind::Psk) {
    const Real sector = 2.0 * kPi / c.order;
    Real a = std::arg(y);  // (-pi, pi]
    if (a < 0.0) a += 2.0 * kPi;
    int idx = static_cast<int>(std::floor(a / sector));
    if (idx >= c.order) idx = c.order - 1;
    // Exact boundary hits belong to the lower-index sector.
    if (idx > 0 && a == idx * sector) --idx;
    return idx;
  }
  if (!(t_star > 0.0)) {
    throw std::invalid_argument("QAM detection needs t_star > 0");
  }
  const int levels = static_cast<int>(c.qam_levels.size());
  const Real scale = t_star * c.norm_factor;
  const auto slice = [&](Real component) {
    const Real u = (component / scale + (levels - 1)) / 2.0;
    const int i = static_cast<int>(std::ceil(u - 0.5));  // ties to lower level
    return std::clamp(i, 0, levels - 1);
  };
  return slice(y.imag()) * levels + slice(y.real());
}

Complex detect(const Constellation& c, const Complex& y, Real t_star) {
  return c.points(detect_index(c, y, t_star));
}

}  // namespace ciwave
