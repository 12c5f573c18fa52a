#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "sjed/baselines.hpp"
#include "sjed/channel.hpp"
#include "sjed/config_io.hpp"
#include "sjed/hypernet.hpp"
#include "sjed/jed.hpp"
#include "sjed/ldpc.hpp"
#include "sjed/metrics.hpp"
#include "sjed/rng.hpp"

namespace sjed {

enum class Detector { sjed, lmmse, maxlog, simo_perfect, simo_est };

inline std::string detector_name(Detector d) {
  switch (d) {
    case Detector::sjed: return "sjed";
    case Detector::lmmse: return "lmmse";
    case Detector::maxlog: return "maxlog";
    case Detector::simo_perfect: return "simo_perfect";
    case Detector::simo_est: return "simo_est";
  }
  throw std::logic_error("detector_name: bad enum");
}

inline Detector detector_from_name(const std::string& s) {
  if (s == "sjed") return Detector::sjed;
  if (s == "lmmse") return Detector::lmmse;
  if (s == "maxlog") return Detector::maxlog;
  if (s == "simo_perfect") return Detector::simo_perfect;
  if (s == "simo_est") return Detector::simo_est;
  throw std::runtime_error("unknown detector '" + s + "'");
}

struct SweepConfig {
  SystemConfig system;
  std::vector<Detector> detectors;
  std::string weights_path;
  double snr_lo_db = 0.0;
  double snr_hi_db = 12.0;
  double snr_step_db = 2.0;
  std::int64_t frames = 100;
  bool coded = false;
  std::string code_path;
  CsiMode csi_mode = CsiMode::estimated;  // CSI fed to lmmse/maxlog
  std::uint64_t seed = 1;
  std::string out_path = "results.csv";

  std::vector<double> snr_grid() const {
    std::vector<double> g;
    const double tol = 1e-9 * std::max(1.0, std::abs(snr_step_db));
    for (double s = snr_lo_db; s <= snr_hi_db + tol; s += snr_step_db)
      g.push_back(s);
    return g;
  }

  void validate() const {
    system.validate();
    if (detectors.empty()) throw std::runtime_error("sweep config: no detectors");
    if (frames < 1) throw std::runtime_error("sweep config: frames < 1");
    if (!(snr_step_db > 0.0))
      throw std::runtime_error("sweep config: snr step must be > 0");
    if (snr_lo_db > snr_hi_db)
      throw std::runtime_error("sweep config: snr lo > hi");
    bool wants_sjed = false;
    for (Detector d : detectors) wants_sjed |= (d == Detector::sjed);
    if (wants_sjed && weights_path.empty())
      throw std::runtime_error("sweep config: sjed detector needs weights");
    if (coded && code_path.empty())
      throw std::runtime_error("sweep config: coded mode needs code_path");
  }
};

inline SweepConfig sweep_config_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j,
                      {"system", "detectors", "weights", "snr_db", "frames",
                       "coded", "code_path", "csi_mode", "seed", "out"},
                      "sweep config");
  SweepConfig cfg;
  if (j.contains("system")) cfg.system = system_from_json(j.at("system"));
  if (j.contains("detectors"))
    for (const auto& d : j.at("detectors"))
      cfg.detectors.push_back(detector_from_name(d.get<std::string>()));
  cfg.weights_path = j.value("weights", cfg.weights_path);
  if (j.contains("snr_db")) {
    const auto& s = j.at("snr_db");
    reject_unknown_keys(s, {"lo", "hi", "step"}, "sweep config snr_db");
    cfg.snr_lo_db = s.value("lo", cfg.snr_lo_db);
    cfg.snr_hi_db = s.value("hi", cfg.snr_hi_db);
    cfg.snr_step_db = s.value("step", cfg.snr_step_db);
  }
  cfg.frames = j.value("frames", cfg.frames);
  cfg.coded = j.value("coded", cfg.coded);
  cfg.code_path = j.value("code_path", cfg.code_path);
  if (j.contains("csi_mode")) {
    const std::string m = j.at("csi_mode").get<std::string>();
    if (m == "perfect")
      cfg.csi_mode = CsiMode::perfect;
    else if (m == "estimated")
      cfg.csi_mode = CsiMode::estimated;
    else
      throw std::runtime_error("sweep config: csi_mode must be perfect|estimated");
  }
  cfg.seed = j.value("seed", cfg.seed);
  cfg.out_path = j.value("out", cfg.out_path);
  cfg.validate();
  return cfg;
}

inline constexpr std::uint64_t kSaltSweepFrame = 0x73776565ull;

/// Frame whose per-UE bit stream is a concatenation of LDPC codewords
/// (code bit i of codeword w lands in slot (w*Nc+i)/2, component (w*Nc+i)%2).
inline Frame gen_coded_frame(Rng& rng, const SystemConfig& cfg, double snr_db,
                             const LdpcCode& code) {
  const int bits_per_ue = 2 * cfg.D;
  if (bits_per_ue % code.n != 0)
    throw std::runtime_error("coded mode: 2*D must be a multiple of the code length");
  const int packets = bits_per_ue / code.n;

  BitTensor bits;
  bits.b1.resize(cfg.U, cfg.D);
  bits.b2.resize(cfg.U, cfg.D);
  std::vector<uint8_t> info(code.k);
  for (int u = 0; u < cfg.U; ++u)
    for (int w = 0; w < packets; ++w) {
      for (int i = 0; i < code.k; ++i) info[i] = rng.bit();
      const std::vector<uint8_t> cw = encode(code, info);
      for (int i = 0; i < code.n; ++i) {
        const int g = w * code.n + i;
        if (g % 2 == 0)
          bits.b1(u, g / 2) = cw[i];
        else
          bits.b2(u, g / 2) = cw[i];
      }
    }
  return gen_frame_with_bits(rng, cfg, snr_db, bits);
}

namespace detail {

struct SweepContext {
  const SweepConfig& cfg;
  std::vector<double> grid;
  HyperNet net;           // loaded iff sjed runs
  bool has_net = false;
  LdpcCode code;          // loaded iff coded
};

inline void accumulate_packets(MetricsRecord& rec, const LdpcCode& code,
                               const RMat& llr1, const RMat& llr2,
                               const BitMat& b1, const BitMat& b2) {
  const int packets = static_cast<int>(2 * llr1.cols()) / code.n;
  std::vector<double> llr(code.n);
  for (Eigen::Index u = 0; u < llr1.rows(); ++u)
    for (int w = 0; w < packets; ++w) {
      for (int i = 0; i < code.n; ++i) {
        const int g = w * code.n + i;
        llr[i] = (g % 2 == 0) ? llr1(u, g / 2) : llr2(u, g / 2);
      }
      const DecodeResult dec = decode(code, llr);
      bool err = !dec.ok;
      for (int i = 0; i < code.n && !err; ++i) {
        const int g = w * code.n + i;
        const uint8_t tx = (g % 2 == 0) ? b1(u, g / 2) : b2(u, g / 2);
        err = dec.bits[i] != tx;
      }
      update_packet(rec, err);
    }
}

inline void run_one_frame(const SweepContext& ctx, int point, std::int64_t f,
                          std::vector<MetricsRecord>& out) {
  const SweepConfig& cfg = ctx.cfg;
  const double snr_db = ctx.grid[point];
  Rng rng(Rng::derive(cfg.seed, kSaltSweepFrame, static_cast<std::uint64_t>(point),
                      static_cast<std::uint64_t>(f)));
  const Frame fr = cfg.coded ? gen_coded_frame(rng, cfg.system, snr_db, ctx.code)
                             : gen_frame(rng, cfg.system, snr_db);
  const CMat Y_D = fr.Y_data();

  bool need_ls = false;
  for (Detector d : cfg.detectors)
    need_ls |= d == Detector::sjed || d == Detector::simo_est ||
               ((d == Detector::lmmse || d == Detector::maxlog) &&
                cfg.csi_mode == CsiMode::estimated);
  const CMat H_ls =
      need_ls ? ls_channel_estimate(fr.Y_pilot(), fr.pilots) : CMat();

  for (size_t di = 0; di < cfg.detectors.size(); ++di) {
    const Detector det = cfg.detectors[di];
    RMat llr1, llr2;
    switch (det) {
      case Detector::sjed: {
        const UnfoldedParams params =
            hypernet_params(ctx.net, build_input(H_ls, fr.N0), cfg.system);
        const SoftOutput so =
            run_sjed_forward(fr.Y, fr.pilots, params, fr.N0, cfg.system);
        llr1 = so.llr1.cwiseMax(-kLlrClamp).cwiseMin(kLlrClamp);
        llr2 = so.llr2.cwiseMax(-kLlrClamp).cwiseMin(kLlrClamp);
        break;
      }
      case Detector::lmmse: {
        const CMat& H = cfg.csi_mode == CsiMode::perfect ? fr.channel : H_ls;
        DetectorOutput o = lmmse_soft_detect(Y_D, H, fr.N0);
        llr1 = std::move(o.llr1);
        llr2 = std::move(o.llr2);
        break;
      }
      case Detector::maxlog: {
        const CMat& H = cfg.csi_mode == CsiMode::perfect ? fr.channel : H_ls;
        DetectorOutput o = maxlog_soft_detect(Y_D, H, fr.N0);
        llr1 = std::move(o.llr1);
        llr2 = std::move(o.llr2);
        break;
      }
      case Detector::simo_perfect: {
        DetectorOutput o = simo_genie_detect(Y_D, fr.channel, fr.data_symbols,
                                             fr.N0, CsiMode::perfect);
        llr1 = std::move(o.llr1);
        llr2 = std::move(o.llr2);
        break;
      }
      case Detector::simo_est: {
        DetectorOutput o = simo_genie_detect(Y_D, fr.channel, fr.data_symbols,
                                             fr.N0, CsiMode::estimated, &H_ls);
        llr1 = std::move(o.llr1);
        llr2 = std::move(o.llr2);
        break;
      }
    }
    MetricsRecord& rec = out[di];
    update_metrics(rec, llr1, llr2, fr.bits.b1, fr.bits.b2);
    if (cfg.coded)
      accumulate_packets(rec, ctx.code, llr1, llr2, fr.bits.b1, fr.bits.b2);
  }
}

}  // namespace detail

/// Monte Carlo sweep over the SNR grid. Frame i of point p is a pure
/// function of (seed, p, i) and per-frame partials are reduced in index
/// order, so the output is identical for any thread count.
inline std::vector<MetricsRecord> run_sweep(const SweepConfig& cfg,
                                            int threads = 1) {
  cfg.validate();
  detail::SweepContext ctx{cfg, cfg.snr_grid(), {}, false, {}};
  for (Detector d : cfg.detectors)
    if (d == Detector::sjed) {
      ctx.net = load_weights(cfg.weights_path, cfg.system);
      ctx.has_net = true;
    }
  if (cfg.coded) {
    ctx.code = load_alist(cfg.code_path);
    if ((2 * cfg.system.D) % ctx.code.n != 0)
      throw std::runtime_error("coded mode: 2*D must be a multiple of the code length");
  }

  const int n_points = static_cast<int>(ctx.grid.size());
  const int n_det = static_cast<int>(cfg.detectors.size());
  const std::int64_t n_tasks = static_cast<std::int64_t>(n_points) * cfg.frames;
  std::vector<std::vector<MetricsRecord>> slots(
      n_tasks, std::vector<MetricsRecord>(n_det));

  std::atomic<std::int64_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  const auto worker = [&]() {
    for (;;) {
      const std::int64_t t = next.fetch_add(1);
      if (t >= n_tasks) return;
      try {
        detail::run_one_frame(ctx, static_cast<int>(t / cfg.frames),
                              t % cfg.frames, slots[t]);
      } catch (...) {
        std::lock_guard<std::mutex> lk(error_mu);
        if (!first_error) first_error = std::current_exception();
        next.store(n_tasks);
        return;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::vector<MetricsRecord> records;
  for (int di = 0; di < n_det; ++di)
    for (int p = 0; p < n_points; ++p) {
      MetricsRecord total;
      total.snr_db = ctx.grid[p];
      total.detector = detector_name(cfg.detectors[di]);
      total.seed = cfg.seed;
      for (std::int64_t f = 0; f < cfg.frames; ++f)
        total.merge(slots[static_cast<std::int64_t>(p) * cfg.frames + f][di]);
      records.push_back(std::move(total));
    }
  return records;
}

}  // namespace sjed
