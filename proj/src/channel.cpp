#include "ciwave/channel.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace ciwave {

namespace {

ComplexMatrix draw_gaussian(int rows, int cols, std::uint64_t seed,
                            Real stddev) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<Real> gauss(0.0, stddev);
  ComplexMatrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const Real re = gauss(rng);
      const Real im = gauss(rng);
      m(r, c) = Complex(re, im);
    }
  }
  return m;
}

}  // namespace

Channel rayleigh_channel(int antennas, int users, std::uint64_t seed,
                         Real cond_threshold, int max_retries) {
  if (users < 1 || antennas < 1) {
    throw std::invalid_argument("rayleigh_channel needs positive dimensions");
  }
  if (users > antennas) {
    throw std::invalid_argument("rayleigh_channel requires K <= N_T");
  }
  const Real stddev = 1.0 / std::sqrt(2.0);
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    const std::uint64_t sub =
        attempt == 0 ? seed : seed_split(seed, {0x524544524157ull, static_cast<std::uint64_t>(attempt)});
    Channel ch{draw_gaussian(users, antennas, sub, stddev)};
    const ComplexMatrix gram = ch.H * ch.H.adjoint();
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(gram);
    const Real lo = eig.eigenvalues()(0);
    const Real hi = eig.eigenvalues()(users - 1);
    if (lo > 0.0 && hi / lo < cond_threshold && ch.H.allFinite()) return ch;
  }
  throw std::runtime_error("rayleigh_channel: conditioning rejection retries exhausted");
}

Real noise_variance(Real snr_db, Real p0) {
  if (!(p0 > 0.0)) throw std::invalid_argument("noise_variance needs p0 > 0");
  return p0 * std::pow(10.0, -snr_db / 10.0);
}

ComplexMatrix add_awgn(const ComplexMatrix& samples, Real sigma2,
                       std::uint64_t seed) {
  if (sigma2 < 0.0) throw std::invalid_argument("add_awgn needs sigma2 >= 0");
  if (sigma2 == 0.0) return samples;
  return samples + draw_gaussian(static_cast<int>(samples.rows()),
                                 static_cast<int>(samples.cols()), seed,
                                 std::sqrt(sigma2 / 2.0));
}

}  // namespace ciwave
