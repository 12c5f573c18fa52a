#pragma once

#include <stdexcept>

#include "sjed/config.hpp"
#include "sjed/jed.hpp"
#include "sjed/linalg.hpp"

namespace sjed {

/// Loss gradients w.r.t. the unfolded parameters, same shapes as
/// UnfoldedParams.
struct ParamGrads {
  RVec tau;
  RVec lambda;
  RMat eta;

  /// Flatten into the hyper-network output layout: per layer
  /// [tau, lambda, eta_1..eta_U].
  RVec pack() const {
    const auto tmax = tau.size();
    const auto users = eta.cols();
    RVec v(tmax * (2 + users));
    for (Eigen::Index t = 0; t < tmax; ++t) {
      const Eigen::Index o = t * (2 + users);
      v(o) = tau(t);
      v(o + 1) = lambda(t);
      for (Eigen::Index u = 0; u < users; ++u) v(o + 2 + u) = eta(t, u);
    }
    return v;
  }
};

/// Reverse-mode pass through the unfolded layers. dP1/dP2 are dLoss/dP at
/// the final layer (U x D). Complex adjoints use the convention
/// G = dLoss/dRe + j dLoss/dIm, so dLoss = Re Tr[G^H dZ] for a complex
/// perturbation dZ.
inline ParamGrads run_sjed_backward(const SjedTape& tape, const RMat& dP1,
                                    const RMat& dP2, const SystemConfig& cfg) {
  if (tape.layers.size() != static_cast<size_t>(cfg.Tmax))
    throw std::runtime_error("run_sjed_backward: tape incomplete");

  const int u = cfg.U, k = cfg.K(), t_pilot = cfg.T, d = cfg.D;
  const CMat& A = tape.A;
  const double N0 = tape.N0;
  const CMat eye = CMat::Identity(k, k);

  ParamGrads g;
  g.tau = RVec::Zero(cfg.Tmax);
  g.lambda = RVec::Zero(cfg.Tmax);
  g.eta = RMat::Zero(cfg.Tmax, u);

  CMat GS_next = CMat::Zero(u, k);
  for (int t = cfg.Tmax - 1; t >= 0; --t) {
    const LayerTape& ly = tape.layers[t];

    // S'(data) = alpha ((2 P1 - 1) + j (2 P2 - 1)); pilots constant.
    RMat GP1 = 2.0 * kQpskAmp * GS_next.rightCols(d).real();
    RMat GP2 = 2.0 * kQpskAmp * GS_next.rightCols(d).imag();
    if (t == cfg.Tmax - 1) {
      GP1 += dP1;
      GP2 += dP2;
    }

    // P = sigmoid(L)
    const RMat GL1 = GP1.cwiseProduct(ly.P1.cwiseProduct(RMat::Ones(u, d) - ly.P1));
    const RMat GL2 = GP2.cwiseProduct(ly.P2.cwiseProduct(RMat::Ones(u, d) - ly.P2));

    // L = 4 Re/Im(X_data) / nu
    CMat GX = CMat::Zero(u, k);
    RVec Gnu = RVec::Zero(u);
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index i = 0; i < u; ++i) {
        const double inv_nu = 4.0 / ly.nu(i);
        GX(i, t_pilot + j) = cplx(GL1(i, j) * inv_nu, GL2(i, j) * inv_nu);
        Gnu(i) -= (GL1(i, j) * ly.L1(i, j) + GL2(i, j) * ly.L2(i, j)) / ly.nu(i);
      }
    for (Eigen::Index i = 0; i < u; ++i) {
      // nu = N0 / clamp(eta); hard stop outside the clamp window
      if (ly.eta(i) > kEtaMin && ly.eta(i) < kEtaMax)
        g.eta(t, i) = Gnu(i) * (-N0 / (ly.eta(i) * ly.eta(i)));
    }

    // X = S + tau V (pilot columns of GX stay zero: overwritten in forward)
    g.tau(t) = GX.conjugate().cwiseProduct(ly.V).sum().real();
    const CMat GV = ly.tau * GX;
    CMat GS = GX;

    // V = B (I - C)
    const CMat GB = GV * (eye - ly.C).adjoint();
    const CMat GC = -(ly.B.adjoint() * GV);

    // B = G A; C = S^H G
    CMat GG = GB * A.adjoint();
    GS += ly.G * GC.adjoint();
    GG += ly.S * GC;

    // G = M^{-1} S; dM^{-1} = -M^{-1} dM M^{-1}
    const CMat Z = ly.Minv.adjoint() * GG;
    GS += Z;
    const CMat GM = -(Z * ly.G.adjoint());

    // M = S S^H + lambda I
    GS += (GM + GM.adjoint()) * ly.S;
    g.lambda(t) = GM.trace().real();

    GS_next = std::move(GS);
  }
  return g;
}

}  // namespace sjed
