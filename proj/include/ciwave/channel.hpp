#pragma once

#include <cstdint>

#include "ciwave/types.hpp"

namespace ciwave {

/// Flat-fading downlink channel; row k is the k-th user's channel transposed,
/// so noiseless reception is H * X.
struct Channel {
  ComplexMatrix H;  // K x N_T
  int users() const { return static_cast<int>(H.rows()); }
  int antennas() const { return static_cast<int>(H.cols()); }
};

/// i.i.d. CN(0,1) entries (real/imag variance 1/2 each), deterministic per
/// seed. Draws whose Gram matrix H*H^H exceeds cond_threshold are redrawn
/// from the next sub-seed; the Gram is what the precoders invert.
Channel rayleigh_channel(int antennas, int users, std::uint64_t seed,
                         Real cond_threshold = 1e8, int max_retries = 64);

/// Transmit-SNR convention: sigma2 = p0 * 10^(-snr_db/10) per slot.
Real noise_variance(Real snr_db, Real p0);

/// Adds i.i.d. CN(0, sigma2) to every entry; sigma2 = 0 is the identity.
ComplexMatrix add_awgn(const ComplexMatrix& samples, Real sigma2,
                       std::uint64_t seed);

}  // namespace ciwave
