#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "sjed/config.hpp"
#include "sjed/linalg.hpp"
#include "sjed/rng.hpp"

namespace sjed {

/// One coherence block. Y = channel * [pilots, data_symbols] + noise holds by
/// construction; noise entries are CN(0, N0).
struct Frame {
  BitTensor bits;     // 2 x U x D payload bits
  CMat pilots;        // U x T
  CMat data_symbols;  // U x D
  CMat channel;       // B x U
  CMat Y;             // B x K
  double N0 = 0.0;

  CMat tx_matrix() const {
    CMat S(pilots.rows(), pilots.cols() + data_symbols.cols());
    S << pilots, data_symbols;
    return S;
  }
  CMat Y_pilot() const { return Y.leftCols(pilots.cols()); }
  CMat Y_data() const { return Y.rightCols(data_symbols.cols()); }
};

/// Sylvester Hadamard rows as pilots: U x T real +-1 with S_T S_T^H = T I_U.
/// Requires T == U and U a power of two.
inline CMat gen_pilots(const SystemConfig& cfg) {
  if (cfg.T != cfg.U)
    throw std::invalid_argument("gen_pilots: requires T == U");
  const int u = cfg.U;
  if (u < 1 || (u & (u - 1)) != 0)
    throw std::invalid_argument(
        "gen_pilots: no Hadamard matrix of order " + std::to_string(u));
  RMat h(1, 1);
  h(0, 0) = 1.0;
  while (h.rows() < u) {
    const auto n = h.rows();
    RMat h2(2 * n, 2 * n);
    h2.topLeftCorner(n, n) = h;
    h2.topRightCorner(n, n) = h;
    h2.bottomLeftCorner(n, n) = h;
    h2.bottomRightCorner(n, n) = -h;
    h = std::move(h2);
  }
  return h.cast<cplx>();
}

/// Gray-mapped QPSK: bit 1 <-> positive component, amplitude 1/sqrt(2).
inline CMat map_bits(const BitTensor& bits) {
  const auto u = bits.b1.rows(), d = bits.b1.cols();
  CMat s(u, d);
  for (Eigen::Index i = 0; i < u; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      s(i, j) = cplx(kQpskAmp * (2.0 * bits.b1(i, j) - 1.0),
                     kQpskAmp * (2.0 * bits.b2(i, j) - 1.0));
  return s;
}

inline BitTensor hard_demap(const CMat& symbols) {
  BitTensor out;
  out.b1 = symbols.real().unaryExpr([](double x) { return x > 0.0; }).cast<std::uint8_t>();
  out.b2 = symbols.imag().unaryExpr([](double x) { return x > 0.0; }).cast<std::uint8_t>();
  return out;
}

/// Average receive SNR per antenna: SNR = U * Eh * Es / N0 with Es = 1.
/// snr_db = +inf yields N0 = 0 (noiseless).
inline double snr_to_noise_var(double snr_db, const SystemConfig& cfg) {
  return cfg.U * cfg.Eh / std::pow(10.0, snr_db / 10.0);
}

/// B x U channel, i.i.d. CN(0, Eh) entries.
inline CMat gen_channel(Rng& rng, const SystemConfig& cfg) {
  CMat h(cfg.B, cfg.U);
  for (int j = 0; j < cfg.U; ++j)
    for (int i = 0; i < cfg.B; ++i) h(i, j) = rng.cgauss(cfg.Eh);
  return h;
}

inline BitTensor gen_bits(Rng& rng, int users, int slots) {
  BitTensor b;
  b.b1.resize(users, slots);
  b.b2.resize(users, slots);
  for (int j = 0; j < slots; ++j)
    for (int i = 0; i < users; ++i) {
      b.b1(i, j) = rng.bit();
      b.b2(i, j) = rng.bit();
    }
  return b;
}

/// Assembles a frame around the given payload bits. Draw order within the
/// stream is fixed: channel, then noise.
inline Frame gen_frame_with_bits(Rng& rng, const SystemConfig& cfg,
                                 double snr_db, BitTensor bits) {
  Frame f;
  f.bits = std::move(bits);
  f.pilots = gen_pilots(cfg);
  f.data_symbols = map_bits(f.bits);
  f.channel = gen_channel(rng, cfg);
  f.N0 = snr_to_noise_var(snr_db, cfg);
  f.Y = f.channel * f.tx_matrix();
  if (f.N0 > 0.0) {
    for (int k = 0; k < cfg.K(); ++k)
      for (int i = 0; i < cfg.B; ++i) f.Y(i, k) += rng.cgauss(f.N0);
  }
  return f;
}

inline Frame gen_frame(Rng& rng, const SystemConfig& cfg, double snr_db) {
  return gen_frame_with_bits(rng, cfg, snr_db, gen_bits(rng, cfg.U, cfg.D));
}

}  // namespace sjed
