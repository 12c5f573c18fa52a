#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "sjed/channel.hpp"
#include "sjed/config.hpp"
#include "sjed/hypernet.hpp"
#include "sjed/jed.hpp"
#include "sjed/jed_backward.hpp"
#include "sjed/rng.hpp"
#include "sjed/train.hpp"

namespace sjed {

namespace detail {

inline double fd_rel_err(double analytic, double fd) {
  const double den = std::max({std::abs(analytic), std::abs(fd), 1e-10});
  return std::abs(analytic - fd) / den;
}

inline double central_diff(const std::function<double(double)>& f, double x,
                           double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace detail

/// Pinned tiny system for derivative checks.
inline SystemConfig gradcheck_system() { return SystemConfig(2, 2, 2, 2, 1.0, 2); }

/// FD check of run_sjed_backward over every tau, lambda, eta entry on one
/// seeded frame. Returns the worst relative error.
inline double gradcheck_unfolded_params(std::uint64_t seed = 7) {
  const SystemConfig cfg = gradcheck_system();
  Rng rng(seed);
  const Frame fr = gen_frame(rng, cfg, 6.0);

  UnfoldedParams p;
  p.tau = RVec(2);
  p.tau << 0.31, 0.17;
  p.lambda = RVec(2);
  p.lambda << 0.8, 0.4;
  p.eta = RMat(2, 2);
  p.eta << 0.9, 1.3, 0.7, 1.1;

  const auto loss_of = [&](const UnfoldedParams& q) {
    const SoftOutput so = run_sjed_forward(fr.Y, fr.pilots, q, fr.N0, cfg);
    return bce_loss(so.prob1, so.prob2, fr.bits.b1, fr.bits.b2);
  };

  SjedTape tape;
  const SoftOutput so = run_sjed_forward(fr.Y, fr.pilots, p, fr.N0, cfg, &tape);
  const auto [dP1, dP2] = bce_grad(so.prob1, so.prob2, fr.bits.b1, fr.bits.b2);
  const ParamGrads g = run_sjed_backward(tape, dP1, dP2, cfg);

  const double h = 1e-6;
  double worst = 0.0;
  for (int t = 0; t < cfg.Tmax; ++t) {
    worst = std::max(worst, detail::fd_rel_err(g.tau(t), detail::central_diff(
        [&](double v) {
          UnfoldedParams q = p;
          q.tau(t) = v;
          return loss_of(q);
        },
        p.tau(t), h)));
    worst = std::max(worst, detail::fd_rel_err(g.lambda(t), detail::central_diff(
        [&](double v) {
          UnfoldedParams q = p;
          q.lambda(t) = v;
          return loss_of(q);
        },
        p.lambda(t), h)));
    for (int u = 0; u < cfg.U; ++u)
      worst = std::max(worst, detail::fd_rel_err(g.eta(t, u), detail::central_diff(
          [&](double v) {
            UnfoldedParams q = p;
            q.eta(t, u) = v;
            return loss_of(q);
          },
          p.eta(t, u), h)));
  }
  return worst;
}

/// End-to-end FD check (LS input, hyper-net, unfolded pass, BCE) over every
/// weight and bias of a small net. Returns the worst relative error.
inline double gradcheck_hypernet(std::uint64_t seed = 11,
                                 const std::vector<int>& hidden = {8, 8, 8, 8}) {
  const SystemConfig cfg = gradcheck_system();
  Rng net_rng(Rng::derive(seed, 1));
  HyperNet net = make_hypernet(cfg, net_rng, hidden);
  Rng frame_rng(Rng::derive(seed, 2));
  const Frame fr = gen_frame(frame_rng, cfg, 6.0);

  HyperNetGrads grads;
  frame_loss_and_grads(net, fr, cfg, &grads);
  const auto loss_now = [&]() { return frame_loss_and_grads(net, fr, cfg, nullptr); };

  double worst = 0.0;
  const auto probe = [&](double& w, double analytic) {
    const double keep = w;
    const double h = 1e-6 * std::max(1.0, std::abs(keep));
    w = keep + h;
    const double lp = loss_now();
    w = keep - h;
    const double lm = loss_now();
    w = keep;
    worst = std::max(worst, detail::fd_rel_err(analytic, (lp - lm) / (2.0 * h)));
  };
  for (size_t l = 0; l < net.weights.size(); ++l) {
    for (Eigen::Index r = 0; r < net.weights[l].rows(); ++r)
      for (Eigen::Index c = 0; c < net.weights[l].cols(); ++c)
        probe(net.weights[l](r, c), grads.dW[l](r, c));
    for (Eigen::Index r = 0; r < net.biases[l].size(); ++r)
      probe(net.biases[l](r), grads.db[l](r));
  }
  return worst;
}

}  // namespace sjed
