#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sjed/config.hpp"
#include "sjed/linalg.hpp"

namespace sjed {

/// Per-layer parameters of the unfolded solver. All entries are nonnegative
/// (the hyper-network ends in an absolute-value activation); eta is clamped
/// to [kEtaMin, kEtaMax] before use.
struct UnfoldedParams {
  RVec tau;     // step sizes, length Tmax
  RVec lambda;  // ridge weights, length Tmax
  RMat eta;     // normalized error precisions, Tmax x U
};

inline constexpr double kEtaMin = 1e-6;
inline constexpr double kEtaMax = 1e6;

/// Final-layer soft outputs over the data block.
struct SoftOutput {
  RMat llr1, llr2;    // U x D
  RMat prob1, prob2;  // U x D, prob = (1+tanh(llr/2))/2
  CMat soft_symbols;  // U x K, last iterate (pilot columns included)
};

inline CMat compute_M(const CMat& S, double lambda) {
  const auto u = S.rows();
  return S * S.adjoint() + lambda * CMat::Identity(u, u);
}

namespace detail {

/// Hermitian solve with an explicit singularity check (LDLT pivots).
class MSolver {
 public:
  explicit MSolver(const CMat& M) : ldlt_(M) {
    const RVec d = ldlt_.vectorD().real().cwiseAbs();
    const double dmax = d.maxCoeff();
    singular_ = !(dmax > 0.0) || d.minCoeff() < 1e-13 * dmax;
  }
  bool singular() const { return singular_; }
  void require_invertible() const {
    if (singular_)
      throw std::runtime_error("singular M: need lambda > 0 or full-rank S");
  }
  CMat solve(const CMat& rhs) const { return ldlt_.solve(rhs); }
  CMat inverse(Eigen::Index u) const { return ldlt_.solve(CMat::Identity(u, u)); }

 private:
  Eigen::LDLT<CMat> ldlt_;
  bool singular_ = false;
};

}  // namespace detail

/// Closed-form channel estimate given the symbol matrix: H = Y S^H M^{-1}.
inline CMat channel_estimate(const CMat& Y, const CMat& S, double lambda) {
  detail::MSolver ms(compute_M(S, lambda));
  ms.require_invertible();
  return Y * ms.solve(S).adjoint();
}

/// Ridge-regularized fit residual: ||Y - H S||_F^2 + lambda ||H||_F^2.
inline double map_jed_objective(const CMat& Y, const CMat& H, const CMat& S,
                                double lambda) {
  return (Y - H * S).squaredNorm() + lambda * H.squaredNorm();
}

/// Tr[A S^H M^{-1} S] for A = Y^H Y; the symbol-only form of the fit.
inline double trace_objective(const CMat& A, const CMat& S, double lambda) {
  detail::MSolver ms(compute_M(S, lambda));
  ms.require_invertible();
  const CMat C = S.adjoint() * ms.solve(S);
  return (A.transpose().cwiseProduct(C)).sum().real();
}

/// Ascent gradient of trace_objective in S (Wirtinger, conjugate coordinates):
/// M^{-1} S A (I_K - S^H M^{-1} S). The real directional derivative along
/// dS equals 2 Re<grad, dS>.
inline CMat gradient(const CMat& A, const CMat& S, double lambda) {
  const auto k = S.cols();
  detail::MSolver ms(compute_M(S, lambda));
  ms.require_invertible();
  const CMat G = ms.solve(S);
  return G * A * (CMat::Identity(k, k) - S.adjoint() * G);
}

/// X = S + tau * grad, with pilot columns overwritten by the known pilots.
inline CMat gradient_step(const CMat& S, const CMat& grad, double tau,
                          const CMat& pilots) {
  CMat x = S + tau * grad;
  x.leftCols(pilots.cols()) = pilots;
  return x;
}

/// Entrywise projection onto the QPSK convex hull, sign preserving.
inline CMat project_hull(const CMat& S, double alpha = kQpskAmp) {
  if (!(alpha > 0.0)) throw std::invalid_argument("project_hull: alpha <= 0");
  CMat out(S.rows(), S.cols());
  for (Eigen::Index j = 0; j < S.cols(); ++j)
    for (Eigen::Index i = 0; i < S.rows(); ++i) {
      const auto clip = [alpha](double v) {
        return std::min(std::max(v, -alpha), alpha);
      };
      out(i, j) = cplx(clip(S(i, j).real()), clip(S(i, j).imag()));
    }
  return out;
}

/// Iterate state threaded through the unfolded layers.
struct FbsState {
  CMat S;  // U x K
  CMat A;  // Y^H Y, K x K
  int t = 0;
};

struct PmeResult {
  RMat llr1, llr2;    // U x D
  RMat prob1, prob2;  // U x D
  CMat soft;          // U x D soft symbols
};

/// LLR -> probability -> soft-symbol chain over a data block. nu holds the
/// per-user error variances (already formed as N0 / eta).
inline PmeResult pme_approx_step(const CMat& X_data, const RVec& nu) {
  const auto u = X_data.rows(), d = X_data.cols();
  PmeResult r;
  r.llr1.resize(u, d);
  r.llr2.resize(u, d);
  r.prob1.resize(u, d);
  r.prob2.resize(u, d);
  r.soft.resize(u, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < u; ++i) {
      const double l1 = 4.0 * X_data(i, j).real() / nu(i);
      const double l2 = 4.0 * X_data(i, j).imag() / nu(i);
      const double p1 = llr_to_prob(l1);
      const double p2 = llr_to_prob(l2);
      r.llr1(i, j) = l1;
      r.llr2(i, j) = l2;
      r.prob1(i, j) = p1;
      r.prob2(i, j) = p2;
      r.soft(i, j) = cplx(kQpskAmp * (2.0 * p1 - 1.0), kQpskAmp * (2.0 * p2 - 1.0));
    }
  return r;
}

/// Intermediates of one unfolded layer, retained for the analytic backward
/// pass.
struct LayerTape {
  CMat S;       // input iterate U x K
  CMat Minv;    // U x U
  CMat G;       // M^{-1} S
  CMat C;       // S^H G, K x K
  CMat B;       // G A
  CMat V;       // gradient B (I - C)
  CMat X;       // post-step iterate (pilots reset)
  RMat L1, L2;  // U x D
  RMat P1, P2;  // U x D
  RVec nu;      // per-user error variance used
  RVec eta;     // raw (unclamped) eta
  double tau = 0.0;
  double lambda = 0.0;
};

struct SjedTape {
  CMat A;  // Y^H Y, cached once per frame
  CMat pilots;
  double N0 = 0.0;
  std::vector<LayerTape> layers;
};

inline RVec clamped_nu(const RVec& eta, double N0) {
  return eta.cwiseMax(kEtaMin).cwiseMin(kEtaMax).cwiseInverse() * N0;
}

/// Unfolded forward pass: Tmax layers of gradient ascent on the trace
/// objective followed by the approximate-PME soft-symbol update on the data
/// block. Pilot columns are pinned to the known pilots throughout. Pass a
/// tape to retain intermediates for run_sjed_backward.
inline SoftOutput run_sjed_forward(const CMat& Y, const CMat& pilots,
                                   const UnfoldedParams& params, double N0,
                                   const SystemConfig& cfg,
                                   SjedTape* tape = nullptr) {
  const int u = cfg.U, k = cfg.K(), t_pilot = cfg.T;
  if (params.tau.size() != cfg.Tmax || params.lambda.size() != cfg.Tmax ||
      params.eta.rows() != cfg.Tmax || params.eta.cols() != u)
    throw std::invalid_argument("run_sjed_forward: params do not match Tmax/U");

  const CMat A = Y.adjoint() * Y;
  CMat S = CMat::Zero(u, k);
  S.leftCols(t_pilot) = pilots;

  if (tape) {
    tape->A = A;
    tape->pilots = pilots;
    tape->N0 = N0;
    tape->layers.clear();
    tape->layers.reserve(cfg.Tmax);
  }

  SoftOutput out;
  const CMat eye = CMat::Identity(k, k);
  for (int t = 0; t < cfg.Tmax; ++t) {
    const CMat M = compute_M(S, params.lambda(t));
    detail::MSolver ms(M);  // pilots keep M well conditioned (S_T S_T^H = T I)
    ms.require_invertible();
    const CMat Minv = ms.inverse(u);
    const CMat G = Minv * S;
    const CMat C = S.adjoint() * G;
    const CMat B = G * A;
    const CMat V = B * (eye - C);
    CMat X = S + params.tau(t) * V;
    X.leftCols(t_pilot) = pilots;

    const RVec nu = clamped_nu(params.eta.row(t).transpose(), N0);
    const PmeResult pme = pme_approx_step(X.rightCols(cfg.D), nu);

    CMat S_next(u, k);
    S_next.leftCols(t_pilot) = pilots;
    S_next.rightCols(cfg.D) = pme.soft;

    if (tape) {
      LayerTape lt;
      lt.S = S;
      lt.Minv = Minv;
      lt.G = G;
      lt.C = C;
      lt.B = B;
      lt.V = V;
      lt.X = X;
      lt.L1 = pme.llr1;
      lt.L2 = pme.llr2;
      lt.P1 = pme.prob1;
      lt.P2 = pme.prob2;
      lt.nu = nu;
      lt.eta = params.eta.row(t).transpose();
      lt.tau = params.tau(t);
      lt.lambda = params.lambda(t);
      tape->layers.push_back(std::move(lt));
    }

    if (t == cfg.Tmax - 1) {
      out.llr1 = pme.llr1;
      out.llr2 = pme.llr2;
      out.prob1 = pme.prob1;
      out.prob2 = pme.prob2;
      out.soft_symbols = std::move(S_next);
    } else {
      S = std::move(S_next);
    }
  }
  return out;
}

/// Hyper-network output layout: per layer t the block [tau, lambda,
/// eta_1..eta_U], layers ascending. Frozen for weight-file portability.
inline UnfoldedParams unpack_params(const RVec& v, int tmax, int users) {
  if (v.size() != static_cast<Eigen::Index>(tmax) * (2 + users))
    throw std::invalid_argument("unpack_params: bad vector length");
  UnfoldedParams p;
  p.tau.resize(tmax);
  p.lambda.resize(tmax);
  p.eta.resize(tmax, users);
  for (int t = 0; t < tmax; ++t) {
    const int o = t * (2 + users);
    p.tau(t) = v(o);
    p.lambda(t) = v(o + 1);
    for (int u = 0; u < users; ++u) p.eta(t, u) = v(o + 2 + u);
  }
  return p;
}

}  // namespace sjed
