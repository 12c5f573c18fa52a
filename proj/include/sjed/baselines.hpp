#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sjed/linalg.hpp"

namespace sjed {

struct DetectorOutput {
  RMat llr1, llr2;  // U x D, clamped to +-kLlrClamp
  int diag_mu_clamped = 0;

  BitTensor hard_bits() const {
    BitTensor b;
    b.b1 = (llr1.array() > 0.0).cast<uint8_t>();
    b.b2 = (llr2.array() > 0.0).cast<uint8_t>();
    return b;
  }
};

inline constexpr double kQpskLlrScale = 2.0 * 1.41421356237309504880;  // 2*sqrt(2)

/// H_ls = Y_T S_T^H (S_T S_T^H)^{-1}; for square invertible pilots this is
/// Y_T S_T^{-1}.
inline CMat ls_channel_estimate(const CMat& Y_T, const CMat& S_T) {
  if (Y_T.cols() != S_T.cols())
    throw std::invalid_argument("ls_channel_estimate: pilot length mismatch");
  if (S_T.cols() < S_T.rows())
    throw std::invalid_argument("ls_channel_estimate: need T >= U");
  const CMat Gram = S_T * S_T.adjoint();
  Eigen::FullPivLU<CMat> lu(Gram);
  if (!lu.isInvertible())
    throw std::invalid_argument("ls_channel_estimate: rank-deficient pilots");
  return Y_T * S_T.adjoint() * lu.inverse();
}

/// Soft-output L-MMSE with per-UE unbiasing. W = (H^H H + N0 I)^{-1} H^H,
/// bias mu_u = (W H)_uu, post-equalization variance (mu - mu^2)/mu^2.
inline DetectorOutput lmmse_soft_detect(const CMat& Y_D, const CMat& H_hat,
                                        double N0) {
  const auto u = H_hat.cols(), d = Y_D.cols();
  const CMat Hh = H_hat.adjoint();
  const CMat W =
      (Hh * H_hat + N0 * CMat::Identity(u, u)).ldlt().solve(Hh);
  const CMat Z = W * Y_D;
  const RVec mu_raw = (W * H_hat).diagonal().real();

  DetectorOutput out;
  out.llr1.resize(u, d);
  out.llr2.resize(u, d);
  constexpr double eps = 1e-12;
  for (Eigen::Index i = 0; i < u; ++i) {
    double mu = mu_raw(i);
    if (mu <= eps || mu >= 1.0 - eps) {
      mu = std::min(std::max(mu, eps), 1.0 - eps);
      ++out.diag_mu_clamped;
    }
    const double sigma2 = (mu - mu * mu) / (mu * mu);
    const double scale = kQpskLlrScale / (mu * sigma2);
    for (Eigen::Index j = 0; j < d; ++j) {
      out.llr1(i, j) = clamp_llr(scale * Z(i, j).real());
      out.llr2(i, j) = clamp_llr(scale * Z(i, j).imag());
    }
  }
  return out;
}

/// Exhaustive max-log detection over QPSK^U:
/// L_b = (min_{bit=0} ||y - H s||^2 - min_{bit=1} ||y - H s||^2) / N0.
/// Output-equivalent to a max-log sphere decoder; U capped (4^U hypotheses).
inline DetectorOutput maxlog_soft_detect(const CMat& Y_D, const CMat& H_hat,
                                         double N0, int max_users = 8) {
  const int u = static_cast<int>(H_hat.cols());
  const auto d = Y_D.cols();
  if (u > max_users)
    throw std::invalid_argument("maxlog_soft_detect: U too large to enumerate");

  // Constellation indexed by (b1, b2): Re = (2 b1 - 1) a, Im = (2 b2 - 1) a.
  const std::array<cplx, 4> pts = {
      cplx(-kQpskAmp, -kQpskAmp), cplx(kQpskAmp, -kQpskAmp),
      cplx(-kQpskAmp, kQpskAmp), cplx(kQpskAmp, kQpskAmp)};
  const long n_hyp = 1L << (2 * u);

  std::vector<CMat> col_pts(u);  // precomputed H.col(i) * point
  for (int i = 0; i < u; ++i) {
    col_pts[i].resize(H_hat.rows(), 4);
    for (int q = 0; q < 4; ++q) col_pts[i].col(q) = H_hat.col(i) * pts[q];
  }

  DetectorOutput out;
  out.llr1.resize(u, d);
  out.llr2.resize(u, d);
  const double big = std::numeric_limits<double>::infinity();
  RMat min1_b1(u, 2), min1_b2(u, 2);  // per-UE mins over bit value
  CVec resid(H_hat.rows());
  for (Eigen::Index j = 0; j < d; ++j) {
    min1_b1.setConstant(big);
    min1_b2.setConstant(big);
    for (long h = 0; h < n_hyp; ++h) {
      resid = Y_D.col(j);
      for (int i = 0; i < u; ++i)
        resid -= col_pts[i].col((h >> (2 * i)) & 3);
      const double dist = resid.squaredNorm();
      for (int i = 0; i < u; ++i) {
        const int q = (h >> (2 * i)) & 3;
        double& m1 = min1_b1(i, q & 1);
        if (dist < m1) m1 = dist;
        double& m2 = min1_b2(i, (q >> 1) & 1);
        if (dist < m2) m2 = dist;
      }
    }
    for (int i = 0; i < u; ++i) {
      out.llr1(i, j) = clamp_llr((min1_b1(i, 0) - min1_b1(i, 1)) / N0);
      out.llr2(i, j) = clamp_llr((min1_b2(i, 0) - min1_b2(i, 1)) / N0);
    }
  }
  return out;
}

enum class CsiMode { perfect, estimated };

/// Genie-aided SIMO bound: per UE, subtract the other UEs' true transmit
/// contributions, then MRC. csi_mode picks the channel used for both the
/// cancellation and the MRC (H for perfect, *H_est for estimated).
inline DetectorOutput simo_genie_detect(const CMat& Y_D, const CMat& H,
                                        const CMat& S_true_data, double N0,
                                        CsiMode csi_mode,
                                        const CMat* H_est = nullptr) {
  if (csi_mode == CsiMode::estimated && H_est == nullptr)
    throw std::invalid_argument("simo_genie_detect: estimated mode needs H_est");
  const CMat& Hc = (csi_mode == CsiMode::perfect) ? H : *H_est;
  const auto u = Hc.cols(), d = Y_D.cols();

  DetectorOutput out;
  out.llr1.resize(u, d);
  out.llr2.resize(u, d);
  CVec yp(Y_D.rows());
  for (Eigen::Index i = 0; i < u; ++i) {
    const double h2 = Hc.col(i).squaredNorm();
    const double scale = kQpskLlrScale * h2 / N0;
    for (Eigen::Index j = 0; j < d; ++j) {
      yp = Y_D.col(j);
      for (Eigen::Index m = 0; m < u; ++m)
        if (m != i) yp -= Hc.col(m) * S_true_data(m, j);
      const cplx s_tilde = Hc.col(i).dot(yp) / h2;  // h^H y' / ||h||^2
      out.llr1(i, j) = clamp_llr(scale * s_tilde.real());
      out.llr2(i, j) = clamp_llr(scale * s_tilde.imag());
    }
  }
  return out;
}

}  // namespace sjed
