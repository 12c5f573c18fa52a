#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sjed/baselines.hpp"
#include "sjed/channel.hpp"
#include "sjed/config.hpp"
#include "sjed/config_io.hpp"
#include "sjed/hypernet.hpp"
#include "sjed/jed.hpp"
#include "sjed/jed_backward.hpp"
#include "sjed/rng.hpp"

namespace sjed {

struct TrainConfig {
  SystemConfig system;
  int batch_size = 128;
  std::int64_t total_frames = 100000;
  double snr_lo_db = 0.0;
  double snr_hi_db = 12.0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double lr_decay_factor = 0.5;
  double lr_decay_every_frac = 0.2;
  std::vector<int> hidden = kDefaultHidden;
  std::uint64_t seed = 1;

  void validate() const {
    system.validate();
    if (batch_size < 1) throw std::runtime_error("train config: batch_size < 1");
    if (total_frames < 0)
      throw std::runtime_error("train config: total_frames < 0");
    if (snr_lo_db > snr_hi_db)
      throw std::runtime_error("train config: snr range lo > hi");
    if (!(learning_rate > 0.0))
      throw std::runtime_error("train config: learning_rate <= 0");
    if (!(lr_decay_every_frac > 0.0 && lr_decay_every_frac <= 1.0))
      throw std::runtime_error("train config: lr_decay_every_frac out of (0,1]");
  }
};

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j,
                      {"system", "batch_size", "total_frames", "snr_range_db",
                       "learning_rate", "adam", "lr_decay_factor",
                       "lr_decay_every_frac", "hidden", "seed"},
                      "train config");
  TrainConfig cfg;
  if (j.contains("system")) cfg.system = system_from_json(j.at("system"));
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.total_frames = j.value("total_frames", cfg.total_frames);
  if (j.contains("snr_range_db")) {
    const auto& r = j.at("snr_range_db");
    if (!r.is_array() || r.size() != 2)
      throw std::runtime_error("train config: snr_range_db must be [lo, hi]");
    cfg.snr_lo_db = r[0].get<double>();
    cfg.snr_hi_db = r[1].get<double>();
  }
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  if (j.contains("adam")) {
    const auto& a = j.at("adam");
    reject_unknown_keys(a, {"beta1", "beta2", "eps"}, "train config adam");
    cfg.beta1 = a.value("beta1", cfg.beta1);
    cfg.beta2 = a.value("beta2", cfg.beta2);
    cfg.adam_eps = a.value("eps", cfg.adam_eps);
  }
  cfg.lr_decay_factor = j.value("lr_decay_factor", cfg.lr_decay_factor);
  cfg.lr_decay_every_frac =
      j.value("lr_decay_every_frac", cfg.lr_decay_every_frac);
  if (j.contains("hidden")) cfg.hidden = j.at("hidden").get<std::vector<int>>();
  cfg.seed = j.value("seed", cfg.seed);
  cfg.validate();
  return cfg;
}

namespace detail {

struct AdamState {
  std::vector<RMat> mW, vW;
  std::vector<RVec> mb, vb;
  std::int64_t step = 0;

  explicit AdamState(const HyperNet& net) {
    for (size_t i = 0; i < net.weights.size(); ++i) {
      mW.push_back(RMat::Zero(net.weights[i].rows(), net.weights[i].cols()));
      vW.push_back(RMat::Zero(net.weights[i].rows(), net.weights[i].cols()));
      mb.push_back(RVec::Zero(net.biases[i].size()));
      vb.push_back(RVec::Zero(net.biases[i].size()));
    }
  }

  void update(HyperNet& net, const HyperNetGrads& g, const TrainConfig& cfg,
              double lr) {
    ++step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    for (size_t i = 0; i < net.weights.size(); ++i) {
      mW[i] = cfg.beta1 * mW[i] + (1.0 - cfg.beta1) * g.dW[i];
      vW[i] = cfg.beta2 * vW[i] + (1.0 - cfg.beta2) * g.dW[i].cwiseAbs2();
      net.weights[i] -= lr * (mW[i] / bc1)
                                 .cwiseQuotient((vW[i] / bc2).cwiseSqrt() +
                                                RMat::Constant(mW[i].rows(),
                                                               mW[i].cols(),
                                                               cfg.adam_eps));
      mb[i] = cfg.beta1 * mb[i] + (1.0 - cfg.beta1) * g.db[i];
      vb[i] = cfg.beta2 * vb[i] + (1.0 - cfg.beta2) * g.db[i].cwiseAbs2();
      net.biases[i] -=
          lr * (mb[i] / bc1)
                   .cwiseQuotient((vb[i] / bc2).cwiseSqrt() +
                                  RVec::Constant(mb[i].size(), cfg.adam_eps));
    }
  }
};

}  // namespace detail

/// One frame's loss and gradients through the full chain: LS estimate,
/// hyper-net, unfolded forward, BCE, analytic backward. Shared by the
/// training loop and the gradcheck suite.
inline double frame_loss_and_grads(const HyperNet& net, const Frame& fr,
                                   const SystemConfig& cfg,
                                   HyperNetGrads* grads) {
  const CMat H_ls = ls_channel_estimate(fr.Y_pilot(), fr.pilots);
  const RVec x = build_input(H_ls, fr.N0);
  HyperNetTape htape;
  const RVec v = hypernet_forward(net, x, &htape);
  const UnfoldedParams params = unpack_params(v, cfg.Tmax, cfg.U);
  SjedTape stape;
  const SoftOutput so =
      run_sjed_forward(fr.Y, fr.pilots, params, fr.N0, cfg, grads ? &stape : nullptr);
  const double loss = bce_loss(so.prob1, so.prob2, fr.bits.b1, fr.bits.b2);
  if (grads) {
    const auto [dP1, dP2] = bce_grad(so.prob1, so.prob2, fr.bits.b1, fr.bits.b2);
    const ParamGrads pg = run_sjed_backward(stape, dP1, dP2, cfg);
    *grads = hypernet_backward(net, htape, pg.pack());
  }
  return loss;
}

inline constexpr std::uint64_t kSaltTrainFrame = 0x7261696e66726dull;

/// Training frame i is a pure function of (seed, i): SNR uniform in the
/// configured range, then a fresh frame.
inline Frame gen_train_frame(const TrainConfig& cfg, std::int64_t frame_idx) {
  Rng rng(Rng::derive(cfg.seed, kSaltTrainFrame, static_cast<std::uint64_t>(frame_idx)));
  const double snr_db = rng.uniform(cfg.snr_lo_db, cfg.snr_hi_db);
  return gen_frame(rng, cfg.system, snr_db);
}

struct TrainResult {
  HyperNet net;
  std::vector<double> batch_loss;  // mean BCE per optimizer step
};

/// Sequential loop: frames are consumed in index order, one Adam step per
/// batch, learning rate halved at every lr_decay_every_frac of progress.
/// Loss turning non-finite aborts with a diagnostic.
inline TrainResult train(const TrainConfig& cfg,
                         const std::function<void(std::int64_t, double)>&
                             progress = nullptr) {
  cfg.validate();
  Rng init_rng(Rng::derive(cfg.seed, 0x696e6974ull));
  TrainResult res;
  res.net = make_hypernet(cfg.system, init_rng, cfg.hidden);
  if (cfg.total_frames == 0) return res;

  detail::AdamState adam(res.net);
  HyperNetGrads batch_grads, frame_grads;
  std::int64_t done = 0;
  const double decay_span =
      std::max(1.0, cfg.lr_decay_every_frac * static_cast<double>(cfg.total_frames));
  while (done < cfg.total_frames) {
    const int n = static_cast<int>(
        std::min<std::int64_t>(cfg.batch_size, cfg.total_frames - done));
    batch_grads.setZero(res.net);
    double loss_sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const Frame fr = gen_train_frame(cfg, done + i);
      loss_sum += frame_loss_and_grads(res.net, fr, cfg.system, &frame_grads);
      batch_grads.add(frame_grads);
    }
    const double mean_loss = loss_sum / n;
    if (!std::isfinite(mean_loss))
      throw std::runtime_error(
          "train: loss diverged (non-finite) at frame " + std::to_string(done));
    batch_grads.scale(1.0 / n);

    const int stage = static_cast<int>(static_cast<double>(done) / decay_span);
    const double lr = cfg.learning_rate * std::pow(cfg.lr_decay_factor, stage);
    adam.update(res.net, batch_grads, cfg, lr);

    done += n;
    res.batch_loss.push_back(mean_loss);
    if (progress) progress(done, mean_loss);
  }
  return res;
}

}  // namespace sjed
