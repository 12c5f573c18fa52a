#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>

namespace sjed {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;
using BitMat = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// QPSK per-component amplitude, i.e. the half-width of the convex hull.
inline constexpr double kQpskAmp = 0.70710678118654752440;

/// Detectors clip LLR magnitudes here before metrics and decoding.
inline constexpr double kLlrClamp = 60.0;

/// Per-bit tensors indexed [bit][user][slot]; bit 1 rides on Re, bit 2 on Im.
struct BitTensor {
  BitMat b1, b2;  // each U x D
};

struct LlrTensor {
  RMat l1, l2;  // each U x D
};

inline double clamp_llr(double l) {
  return l > kLlrClamp ? kLlrClamp : (l < -kLlrClamp ? -kLlrClamp : l);
}

inline void clamp_llr(LlrTensor& t) {
  t.l1 = t.l1.cwiseMax(-kLlrClamp).cwiseMin(kLlrClamp);
  t.l2 = t.l2.cwiseMax(-kLlrClamp).cwiseMin(kLlrClamp);
}

/// sigma(L) = 1/(1+exp(-L)) = (1+tanh(L/2))/2, the LLR-to-probability map.
inline double llr_to_prob(double l) { return 0.5 * (1.0 + std::tanh(0.5 * l)); }

/// Probabilities are clamped here before any log, bounding per-bit BCE by
/// -ln(1e-12).
inline constexpr double kProbClamp = 1e-12;

/// Per-bit cross-entropy term -[b ln p + (1-b) ln(1-p)], clamped.
inline double bce_term(double p, std::uint8_t b) {
  p = std::min(std::max(p, kProbClamp), 1.0 - kProbClamp);
  return b ? -std::log(p) : -std::log1p(-p);
}

}  // namespace sjed
