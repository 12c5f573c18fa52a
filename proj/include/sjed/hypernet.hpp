#pragma once

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sjed/config.hpp"
#include "sjed/jed.hpp"
#include "sjed/linalg.hpp"
#include "sjed/rng.hpp"

namespace sjed {

/// Dense net: ReLU on the four hidden layers, absolute value on the output.
/// Maps [Re vec(H_ls); Im vec(H_ls); N0] to the per-layer unfolded
/// parameters.
struct HyperNet {
  std::vector<int> layer_dims;  // 6 entries: input, 4 hidden, output
  std::vector<RMat> weights;    // 5 matrices, dims[i+1] x dims[i]
  std::vector<RVec> biases;     // 5 vectors

  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
};

inline const std::vector<int> kDefaultHidden = {256, 256, 128, 128};

/// Glorot-uniform weights, zero biases. Fill order (layers ascending,
/// weights row-major before bias) is frozen so a seed pins the init.
inline HyperNet make_hypernet(const SystemConfig& cfg, Rng& rng,
                              const std::vector<int>& hidden = kDefaultHidden) {
  HyperNet net;
  net.layer_dims.push_back(2 * cfg.B * cfg.U + 1);
  for (int h : hidden) {
    if (h < 1) throw std::invalid_argument("make_hypernet: hidden dim < 1");
    net.layer_dims.push_back(h);
  }
  net.layer_dims.push_back(cfg.Tmax * (2 + cfg.U));
  const size_t n_layers = net.layer_dims.size() - 1;
  for (size_t i = 0; i < n_layers; ++i) {
    const int fan_in = net.layer_dims[i], fan_out = net.layer_dims[i + 1];
    const double lim = std::sqrt(6.0 / (fan_in + fan_out));
    RMat w(fan_out, fan_in);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-lim, lim);
    net.weights.push_back(std::move(w));
    net.biases.push_back(RVec::Zero(fan_out));
  }
  return net;
}

/// [Re vec(H_ls); Im vec(H_ls); N0], column-major vectorization.
inline RVec build_input(const CMat& H_ls, double N0) {
  const auto n = H_ls.size();
  RVec x(2 * n + 1);
  Eigen::Index idx = 0;
  for (Eigen::Index c = 0; c < H_ls.cols(); ++c)
    for (Eigen::Index r = 0; r < H_ls.rows(); ++r) x(idx++) = H_ls(r, c).real();
  for (Eigen::Index c = 0; c < H_ls.cols(); ++c)
    for (Eigen::Index r = 0; r < H_ls.rows(); ++r) x(idx++) = H_ls(r, c).imag();
  x(idx) = N0;
  return x;
}

struct HyperNetTape {
  RVec x;                 // input
  std::vector<RVec> pre;  // pre-activations z_i, one per layer
  std::vector<RVec> act;  // post-activations a_i (act.back() = output)
};

inline RVec hypernet_forward(const HyperNet& net, const RVec& x,
                             HyperNetTape* tape = nullptr) {
  if (x.size() != net.input_dim())
    throw std::invalid_argument("hypernet_forward: input dim mismatch");
  if (tape) {
    tape->x = x;
    tape->pre.clear();
    tape->act.clear();
  }
  RVec a = x;
  const size_t last = net.weights.size() - 1;
  for (size_t i = 0; i < net.weights.size(); ++i) {
    RVec z = net.weights[i] * a + net.biases[i];
    if (i == last)
      a = z.cwiseAbs();
    else
      a = z.cwiseMax(0.0);
    if (tape) {
      tape->pre.push_back(z);
      tape->act.push_back(a);
    }
  }
  return a;
}

inline UnfoldedParams hypernet_params(const HyperNet& net, const RVec& x,
                                      const SystemConfig& cfg,
                                      HyperNetTape* tape = nullptr) {
  return unpack_params(hypernet_forward(net, x, tape), cfg.Tmax, cfg.U);
}

struct HyperNetGrads {
  std::vector<RMat> dW;
  std::vector<RVec> db;

  void setZero(const HyperNet& net) {
    dW.clear();
    db.clear();
    for (size_t i = 0; i < net.weights.size(); ++i) {
      dW.push_back(RMat::Zero(net.weights[i].rows(), net.weights[i].cols()));
      db.push_back(RVec::Zero(net.biases[i].size()));
    }
  }
  void add(const HyperNetGrads& o) {
    for (size_t i = 0; i < dW.size(); ++i) {
      dW[i] += o.dW[i];
      db[i] += o.db[i];
    }
  }
  void scale(double s) {
    for (size_t i = 0; i < dW.size(); ++i) {
      dW[i] *= s;
      db[i] *= s;
    }
  }
};

/// Reverse pass; d_out = dLoss/d(output vector). Subgradient 0 at the ReLU
/// and |.| kinks.
inline HyperNetGrads hypernet_backward(const HyperNet& net,
                                       const HyperNetTape& tape,
                                       const RVec& d_out) {
  const size_t n = net.weights.size();
  if (tape.pre.size() != n || tape.act.size() != n)
    throw std::runtime_error("hypernet_backward: tape incomplete");
  HyperNetGrads g;
  g.dW.resize(n);
  g.db.resize(n);

  const auto sign0 = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };
  RVec delta = d_out.cwiseProduct(tape.pre.back().unaryExpr(sign0));
  for (size_t i = n; i-- > 0;) {
    const RVec& a_prev = (i == 0) ? tape.x : tape.act[i - 1];
    g.dW[i] = delta * a_prev.transpose();
    g.db[i] = delta;
    if (i > 0) {
      delta = net.weights[i].transpose() * delta;
      for (Eigen::Index j = 0; j < delta.size(); ++j)
        if (!(tape.pre[i - 1](j) > 0.0)) delta(j) = 0.0;
    }
  }
  return g;
}

/// Mean binary cross entropy over the 2 U D data bits.
inline double bce_loss(const RMat& P1, const RMat& P2, const BitMat& b1,
                       const BitMat& b2) {
  const double n = 2.0 * static_cast<double>(P1.size());
  double acc = 0.0;
  for (Eigen::Index j = 0; j < P1.cols(); ++j)
    for (Eigen::Index i = 0; i < P1.rows(); ++i)
      acc += bce_term(P1(i, j), b1(i, j)) + bce_term(P2(i, j), b2(i, j));
  return acc / n;
}

/// dLoss/dP; zero where the clamp is active (hard stop).
inline std::pair<RMat, RMat> bce_grad(const RMat& P1, const RMat& P2,
                                      const BitMat& b1, const BitMat& b2) {
  const double n = 2.0 * static_cast<double>(P1.size());
  const auto d = [n](const RMat& P, const BitMat& b) {
    RMat g = RMat::Zero(P.rows(), P.cols());
    for (Eigen::Index j = 0; j < P.cols(); ++j)
      for (Eigen::Index i = 0; i < P.rows(); ++i) {
        const double p = P(i, j);
        if (p > kProbClamp && p < 1.0 - kProbClamp)
          g(i, j) = (p - static_cast<double>(b(i, j))) / (p * (1.0 - p)) / n;
      }
    return g;
  };
  return {d(P1, b1), d(P2, b2)};
}

inline void save_weights(const HyperNet& net, const SystemConfig& cfg,
                         const std::string& path) {
  nlohmann::json j;
  j["fingerprint"] = {{"B", cfg.B}, {"U", cfg.U}, {"T", cfg.T},
                      {"D", cfg.D}, {"Tmax", cfg.Tmax}};
  j["layer_dims"] = net.layer_dims;
  auto& jw = j["weights"] = nlohmann::json::array();
  auto& jb = j["biases"] = nlohmann::json::array();
  for (size_t i = 0; i < net.weights.size(); ++i) {
    std::vector<double> flat(net.weights[i].size());
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>>(
        flat.data(), net.weights[i].rows(), net.weights[i].cols()) =
        net.weights[i];
    jw.push_back(flat);
    jb.push_back(std::vector<double>(net.biases[i].data(),
                                     net.biases[i].data() + net.biases[i].size()));
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_weights: cannot open " + path);
  out << j.dump(1) << "\n";
  if (!out) throw std::runtime_error("save_weights: write failed: " + path);
}

inline HyperNet load_weights(const std::string& path, const SystemConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_weights: cannot open " + path);
  nlohmann::json j;
  in >> j;

  const auto& fp = j.at("fingerprint");
  if (fp.at("B") != cfg.B || fp.at("U") != cfg.U || fp.at("T") != cfg.T ||
      fp.at("D") != cfg.D || fp.at("Tmax") != cfg.Tmax)
    throw std::runtime_error("load_weights: fingerprint mismatch in " + path);

  HyperNet net;
  net.layer_dims = j.at("layer_dims").get<std::vector<int>>();
  if (net.layer_dims.size() < 2)
    throw std::runtime_error("load_weights: bad layer_dims");
  if (net.layer_dims.front() != 2 * cfg.B * cfg.U + 1 ||
      net.layer_dims.back() != cfg.Tmax * (2 + cfg.U))
    throw std::runtime_error("load_weights: layer_dims do not match config");

  const auto& jw = j.at("weights");
  const auto& jb = j.at("biases");
  const size_t n = net.layer_dims.size() - 1;
  if (jw.size() != n || jb.size() != n)
    throw std::runtime_error("load_weights: layer count mismatch");
  for (size_t i = 0; i < n; ++i) {
    const int rows = net.layer_dims[i + 1], cols = net.layer_dims[i];
    const auto wf = jw[i].get<std::vector<double>>();
    const auto bf = jb[i].get<std::vector<double>>();
    if (wf.size() != static_cast<size_t>(rows) * cols ||
        bf.size() != static_cast<size_t>(rows))
      throw std::runtime_error("load_weights: array size mismatch");
    RMat w(rows, cols);
    w = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                       Eigen::RowMajor>>(wf.data(), rows, cols);
    net.weights.push_back(std::move(w));
    net.biases.push_back(Eigen::Map<const RVec>(bf.data(), rows));
  }
  return net;
}

}  // namespace sjed
