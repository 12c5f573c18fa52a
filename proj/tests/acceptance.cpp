// Acceptance suite: ten end-to-end criteria, one pass/fail line each.
// Slow Monte Carlo / training checks live here rather than in the unit tests.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "sjed/baselines.hpp"
#include "sjed/channel.hpp"
#include "sjed/gradcheck.hpp"
#include "sjed/hypernet.hpp"
#include "sjed/jed.hpp"
#include "sjed/jed_backward.hpp"
#include "sjed/ldpc.hpp"
#include "sjed/metrics.hpp"
#include "sjed/rng.hpp"
#include "sjed/sweep.hpp"
#include "sjed/train.hpp"

using namespace sjed;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

template <class F>
void criterion(int id, const std::string& name, F&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = fn();
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail = std::string("exception: ") + e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  std::printf("[%s] %2d. %s: %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", id,
              name.c_str(), out.detail.c_str(), secs);
  std::fflush(stdout);
  if (!out.pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

CMat random_cmat(Rng& rng, int r, int c, double var = 1.0) {
  CMat m(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) m(i, j) = rng.cgauss(var);
  return m;
}

double ci95(double p, double n) {
  return n > 0 ? 1.96 * std::sqrt(std::max(p * (1.0 - p), 0.0) / n) : 0.0;
}

int n_threads() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

fs::path tmp_path(const std::string& name) {
  return fs::temp_directory_path() / ("sjed_accept_" + name);
}

double elapsed_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// ---------------------------------------------------------------- criterion 1

Outcome c1_gradient_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double lam = (i % 2) ? 1.0 : 0.1;
    const CMat Y = random_cmat(rng, 8, 12);
    const CMat S = random_cmat(rng, 4, 12);
    const CMat A = Y.adjoint() * Y;
    const CMat g = gradient(A, S, lam);
    for (int d = 0; d < 2; ++d) {
      const CMat dS = random_cmat(rng, 4, 12);
      const double analytic = 2.0 * (g.conjugate().cwiseProduct(dS)).sum().real();
      const double h = 1e-5;
      const double fd = (trace_objective(A, S + h * dS, lam) -
                         trace_objective(A, S - h * dS, lam)) /
                        (2.0 * h);
      worst = std::max(worst, detail::fd_rel_err(analytic, fd));
    }
  }
  const double secs = elapsed_since(t0);
  Outcome out;
  out.pass = worst < 1e-6 && secs < 10.0;
  out.detail = fmt("max rel err %.3g (< 1e-6), runtime %.2f s (< 10 s)", worst, secs);
  return out;
}

// ---------------------------------------------------------------- criterion 2

Outcome c2_substitution_identity() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(102);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double lam = (i % 2) ? 1.0 : 0.1;
    const CMat Y = random_cmat(rng, 8, 12);
    const CMat S = random_cmat(rng, 4, 12);
    const CMat A = Y.adjoint() * Y;
    const CMat Hhat = channel_estimate(Y, S, lam);
    const double lhs = map_jed_objective(Y, Hhat, S, lam);
    const double rhs = Y.squaredNorm() - trace_objective(A, S, lam);
    worst = std::max(worst, std::abs(lhs - rhs) /
                                std::max({std::abs(lhs), std::abs(rhs), 1e-300}));
  }
  const double secs = elapsed_since(t0);
  Outcome out;
  out.pass = worst < 1e-10 && secs < 5.0;
  out.detail =
      fmt("max rel err %.3g (< 1e-10), runtime %.2f s (< 5 s)", worst, secs);
  return out;
}

// ---------------------------------------------------------------- criterion 3

Outcome c3_pme_composition() {
  Rng rng(103);
  const int u = 4, d = 2500;  // 10^4 scalars
  const CMat X = random_cmat(rng, u, d, 2.0);
  RVec nu(u);
  for (int i = 0; i < u; ++i) nu(i) = rng.uniform(0.05, 5.0);
  const PmeResult res = pme_approx_step(X, nu);
  double worst = 0.0;
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < u; ++i) {
      const double re = std::tanh(2.0 * X(i, j).real() / nu(i)) / std::sqrt(2.0);
      const double im = std::tanh(2.0 * X(i, j).imag() / nu(i)) / std::sqrt(2.0);
      worst = std::max(worst, std::abs(res.soft(i, j).real() - re));
      worst = std::max(worst, std::abs(res.soft(i, j).imag() - im));
    }
  Outcome out;
  out.pass = worst < 1e-14;
  out.detail = fmt("max abs err %.3g over %d scalars (< 1e-14)", worst, u * d);
  return out;
}

// ---------------------------------------------------------------- criterion 4

Outcome c4_backprop_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const double e_params = gradcheck_unfolded_params();
  const double e_net = gradcheck_hypernet();
  const double secs = elapsed_since(t0);
  Outcome out;
  out.pass = e_params < 1e-4 && e_net < 1e-4 && secs < 60.0;
  out.detail = fmt(
      "unfolded-param rel err %.3g, hyper-net weight rel err %.3g (< 1e-4), "
      "runtime %.1f s (< 60 s)",
      e_params, e_net, secs);
  return out;
}

// ---------------------------------------------------------------- criterion 5

double analytic_mrc_ber(double snr_db, int branches) {
  const double gbar = std::pow(10.0, snr_db / 10.0) / 2.0;  // per-branch Eb/N0
  const double mu = std::sqrt(gbar / (1.0 + gbar));
  double sum = 0.0, binom = 1.0;
  for (int k = 0; k < branches; ++k) {
    if (k > 0) binom *= static_cast<double>(branches - 1 + k) / k;
    sum += binom * std::pow(0.5 * (1.0 + mu), k);
  }
  return std::pow(0.5 * (1.0 - mu), branches) * sum;
}

Outcome c5_simo_analytic() {
  // SNR where the 8-branch Rayleigh MRC closed form crosses 1e-3.
  double lo = -10.0, hi = 30.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (analytic_mrc_ber(mid, 8) > 1e-3 ? lo : hi) = mid;
  }
  const double snr_star = 0.5 * (lo + hi);

  // Short frames: the BER estimator averages over channel draws, and its
  // variance is dominated by the per-channel conditional BER spread, so many
  // independent channels beat many bits per channel.
  const SystemConfig cfg(8, 1, 1, 4, 1.0, 1);
  Rng rng(105);
  long long errors = 0, bits = 0;
  while (bits < 4000000) {
    const Frame fr = gen_frame(rng, cfg, snr_star);
    const DetectorOutput out = simo_genie_detect(
        fr.Y_data(), fr.channel, fr.data_symbols, fr.N0, CsiMode::perfect);
    for (int j = 0; j < cfg.D; ++j) {
      errors += (out.llr1(0, j) > 0) != (fr.bits.b1(0, j) != 0);
      errors += (out.llr2(0, j) > 0) != (fr.bits.b2(0, j) != 0);
      bits += 2;
    }
  }
  const double ber = static_cast<double>(errors) / bits;
  const double rel = std::abs(ber - 1e-3) / 1e-3;
  Outcome out;
  out.pass = rel < 0.10;
  out.detail = fmt(
      "analytic 1e-3 at %.3f dB, simulated BER %.3e over %lld bits, rel diff "
      "%.1f%% (< 10%%)",
      snr_star, ber, bits, 100.0 * rel);
  return out;
}

// ---------------------------------------------------------------- criterion 6

struct ClusteredBer {
  double sum_e = 0.0, sum_e2 = 0.0;  // per-frame bit error counts
  long long frames = 0, bits_per_frame = 0;

  void add(long long e) {
    sum_e += static_cast<double>(e);
    sum_e2 += static_cast<double>(e) * e;
    ++frames;
  }
  double ber() const { return sum_e / (frames * bits_per_frame); }
  // 95% interval treating the frame (one channel draw) as the sampling unit.
  double ci() const {
    const double mean = sum_e / frames;
    const double var = (sum_e2 - frames * mean * mean) / (frames - 1.0);
    return 1.96 * std::sqrt(var / frames) / bits_per_frame;
  }
};

Outcome c6_detector_ordering() {
  const SystemConfig cfg(8, 4, 4, 8);
  Rng rng(106);
  ClusteredBer lm_c, ml_c, sg_c;
  lm_c.bits_per_frame = ml_c.bits_per_frame = sg_c.bits_per_frame =
      2 * cfg.U * cfg.D;
  const long long frames = 500000;  // 32M bits, 500k channel draws
  for (long long f = 0; f < frames; ++f) {
    const Frame fr = gen_frame(rng, cfg, 10.0);
    const CMat Y_D = fr.Y_data();
    const DetectorOutput lm = lmmse_soft_detect(Y_D, fr.channel, fr.N0);
    const DetectorOutput ml = maxlog_soft_detect(Y_D, fr.channel, fr.N0);
    const DetectorOutput sg = simo_genie_detect(Y_D, fr.channel,
                                                fr.data_symbols, fr.N0,
                                                CsiMode::perfect);
    long long e_lm = 0, e_ml = 0, e_sg = 0;
    for (int j = 0; j < cfg.D; ++j)
      for (int i = 0; i < cfg.U; ++i) {
        e_lm += (lm.llr1(i, j) > 0) != (fr.bits.b1(i, j) != 0);
        e_lm += (lm.llr2(i, j) > 0) != (fr.bits.b2(i, j) != 0);
        e_ml += (ml.llr1(i, j) > 0) != (fr.bits.b1(i, j) != 0);
        e_ml += (ml.llr2(i, j) > 0) != (fr.bits.b2(i, j) != 0);
        e_sg += (sg.llr1(i, j) > 0) != (fr.bits.b1(i, j) != 0);
        e_sg += (sg.llr2(i, j) > 0) != (fr.bits.b2(i, j) != 0);
      }
    lm_c.add(e_lm);
    ml_c.add(e_ml);
    sg_c.add(e_sg);
  }
  const long long bits = frames * lm_c.bits_per_frame;
  const bool ml_below_lm = ml_c.ber() + ml_c.ci() < lm_c.ber() - lm_c.ci();
  const bool sg_below_ml = sg_c.ber() + sg_c.ci() < ml_c.ber() - ml_c.ci();
  Outcome out;
  out.pass = ml_below_lm && sg_below_ml;
  out.detail = fmt(
      "BER at 10 dB over %lld bits: simo %.3e (ci %.1e) < maxlog %.3e (ci "
      "%.1e) < lmmse %.3e (ci %.1e), non-overlapping: %s",
      bits, sg_c.ber(), sg_c.ci(), ml_c.ber(), ml_c.ci(), lm_c.ber(),
      lm_c.ci(), ml_below_lm && sg_below_ml ? "yes" : "no");
  return out;
}

// ------------------------------------------------------- criteria 7 and 8

struct SweepPoint {
  double snr_db = 0.0;
  std::map<std::string, const MetricsRecord*> by_detector;
};

std::vector<MetricsRecord> g_c7_records;  // filled by criterion 7
bool g_c7_ran = false;

Outcome c7_training_efficacy() {
  const auto t0 = std::chrono::steady_clock::now();
  TrainConfig tc;
  tc.system = SystemConfig(8, 4, 4, 16, 1.0, 10);
  tc.batch_size = 256;
  tc.total_frames = 800000;
  tc.snr_lo_db = 0.0;
  tc.snr_hi_db = 12.0;
  tc.seed = 7001;

  std::int64_t last_mark = 0;
  const TrainResult tr = train(tc, [&](std::int64_t done, double loss) {
    if (done - last_mark >= tc.total_frames / 10) {
      last_mark = done;
      std::printf("        train %3d%%: frames %lld, batch BCE %.4f\n",
                  static_cast<int>(100 * done / tc.total_frames),
                  static_cast<long long>(done), loss);
      std::fflush(stdout);
    }
  });

  // (a) held-out BCE, trained vs the untrained initialization.
  Rng init_rng(Rng::derive(tc.seed, 0x696e6974ull));
  const HyperNet untrained = make_hypernet(tc.system, init_rng, tc.hidden);
  double bce_tr = 0.0, bce_un = 0.0;
  const int held_out = 2000;
  for (int f = 0; f < held_out; ++f) {
    Rng rng(Rng::derive(8999, kSaltSweepFrame, 0, static_cast<std::uint64_t>(f)));
    const double snr_db = rng.uniform(0.0, 12.0);
    const Frame fr = gen_frame(rng, tc.system, snr_db);
    bce_tr += frame_loss_and_grads(tr.net, fr, tc.system, nullptr);
    bce_un += frame_loss_and_grads(untrained, fr, tc.system, nullptr);
  }
  bce_tr /= held_out;
  bce_un /= held_out;
  const bool pass_a = bce_tr < bce_un;

  // (b) grid sweep shared with criterion 8.
  const fs::path wp = tmp_path("trained_weights.json");
  save_weights(tr.net, tc.system, wp.string());
  SweepConfig sc;
  sc.system = tc.system;
  sc.detectors = {Detector::sjed, Detector::lmmse, Detector::maxlog,
                  Detector::simo_perfect};
  sc.weights_path = wp.string();
  sc.snr_lo_db = 4.0;
  sc.snr_hi_db = 12.0;
  sc.snr_step_db = 2.0;
  sc.frames = 4000;
  sc.csi_mode = CsiMode::estimated;
  sc.seed = 77007;
  g_c7_records = run_sweep(sc, n_threads());
  g_c7_ran = true;
  fs::remove(wp);

  std::map<double, double> ber_sjed, ber_lmmse;
  for (const auto& r : g_c7_records) {
    if (r.detector == "sjed") ber_sjed[r.snr_db] = r.ber();
    if (r.detector == "lmmse") ber_lmmse[r.snr_db] = r.ber();
  }
  bool pass_b = true;
  std::ostringstream grid;
  for (const auto& [snr, bs] : ber_sjed) {
    const double bl = ber_lmmse.at(snr);
    pass_b = pass_b && bs <= bl;
    grid << fmt(" %g dB %.3e%s%.3e;", snr, bs, bs <= bl ? " <= " : " > ", bl);
  }
  const double secs = elapsed_since(t0);

  Outcome out;
  out.pass = pass_a && pass_b && secs < 4.0 * 3600.0;
  out.detail = fmt(
      "%lld frames trained; held-out BCE trained %.4f %s untrained %.4f; "
      "BER sjed vs lmmse-LS:%s runtime %.0f s (< 4 h)",
      static_cast<long long>(tc.total_frames), bce_tr,
      pass_a ? "<" : ">=", bce_un, grid.str().c_str(), secs);
  return out;
}

Outcome c8_metric_consistency() {
  Outcome out;
  if (!g_c7_ran) {
    out.detail = "criterion 7 sweep unavailable";
    return out;
  }
  std::map<double, std::vector<const MetricsRecord*>> points;
  for (const auto& r : g_c7_records) points[r.snr_db].push_back(&r);
  int comparable = 0, violations = 0;
  std::ostringstream log;
  for (const auto& [snr, recs] : points)
    for (size_t a = 0; a < recs.size(); ++a)
      for (size_t b = a + 1; b < recs.size(); ++b) {
        const double ba = recs[a]->ber(), bb = recs[b]->ber();
        const double width = ci95(ba, static_cast<double>(recs[a]->bits)) +
                             ci95(bb, static_cast<double>(recs[b]->bits));
        if (std::abs(ba - bb) <= width) continue;  // not resolvable by MC
        ++comparable;
        const bool ber_a_better = ba < bb;
        const bool bce_a_better = recs[a]->bce() < recs[b]->bce();
        if (ber_a_better != bce_a_better) {
          ++violations;
          log << fmt(" [%g dB %s vs %s]", snr, recs[a]->detector.c_str(),
                     recs[b]->detector.c_str());
        }
      }
  out.pass = comparable > 0 && violations == 0;
  out.detail = fmt(
      "%d detector pairs with BER gaps beyond MC confidence, %d BCE-order "
      "violations%s",
      comparable, violations, log.str().c_str());
  return out;
}

// ---------------------------------------------------------------- criterion 9

Outcome c9_ldpc_chain() {
  const LdpcCode code =
      load_alist(std::string(SJED_DATA_DIR) + "/ldpc_n480_r12.alist");

  Rng rng(109);
  bool noiseless_ok = true;
  for (int trial = 0; trial < 8; ++trial) {
    std::vector<uint8_t> info(code.k);
    for (auto& b : info) b = rng.bit();
    const auto cw = encode(code, info);
    std::vector<double> llr(code.n);
    for (int i = 0; i < code.n; ++i) llr[i] = cw[i] ? kLlrClamp : -kLlrClamp;
    const DecodeResult res = decode(code, llr);
    noiseless_ok = noiseless_ok && res.ok && res.bits == cw;
  }

  SweepConfig sc;
  sc.system = SystemConfig(8, 4, 4, 240);
  sc.detectors = {Detector::maxlog};
  sc.snr_lo_db = 4.0;
  sc.snr_hi_db = 12.0;
  sc.snr_step_db = 2.0;
  sc.frames = 500;
  sc.coded = true;
  sc.code_path = std::string(SJED_DATA_DIR) + "/ldpc_n480_r12.alist";
  sc.csi_mode = CsiMode::estimated;
  sc.seed = 909;
  const auto recs = run_sweep(sc, n_threads());

  double per12 = 1.0;
  std::uint64_t packets12 = 0;
  bool monotone = true;
  std::ostringstream curve;
  const MetricsRecord* prev = nullptr;
  for (const auto& r : recs) {
    curve << fmt(" %g:%.3g", r.snr_db, r.per());
    if (r.snr_db == 12.0) {
      per12 = r.per();
      packets12 = r.packets;
    }
    if (prev) {
      const double w = ci95(prev->per(), static_cast<double>(prev->packets)) +
                       ci95(r.per(), static_cast<double>(r.packets));
      monotone = monotone && r.per() <= prev->per() + w;
    }
    prev = &r;
  }

  Outcome out;
  out.pass = noiseless_ok && per12 < 1e-2 && packets12 >= 1000 && monotone;
  out.detail = fmt(
      "noiseless decode exact: %s; max-log PER@12dB %.3e over %llu packets "
      "(< 1e-2); PER curve%s monotone: %s",
      noiseless_ok ? "yes" : "no", per12,
      static_cast<unsigned long long>(packets12), curve.str().c_str(),
      monotone ? "yes" : "no");
  return out;
}

// --------------------------------------------------------------- criterion 10

Outcome c10_cli_determinism() {
  const SystemConfig sys(4, 2, 2, 4, 1.0, 3);
  Rng rng(110);
  const HyperNet net = make_hypernet(sys, rng, {8, 8, 8, 8});
  const fs::path wp = tmp_path("cli_weights.json");
  save_weights(net, sys, wp.string());

  nlohmann::json j;
  j["system"] = {{"B", 4}, {"U", 2}, {"T", 2}, {"D", 4}, {"Tmax", 3}};
  j["detectors"] = {"sjed", "lmmse", "maxlog"};
  j["weights"] = wp.string();
  j["snr_db"] = {{"lo", 0.0}, {"hi", 8.0}, {"step", 4.0}};
  j["frames"] = 25;
  j["seed"] = 321;
  const fs::path cp = tmp_path("cli_sweep.json");
  {
    std::ofstream cfg(cp);
    cfg << j.dump(2);
  }
  const fs::path oa = tmp_path("cli_a.csv"), ob = tmp_path("cli_b.csv");

  const std::string base = std::string(SJED_CLI_PATH) + " sweep --config " +
                           cp.string() + " --repro";
  const int rc1 =
      std::system((base + " --threads 1 --out " + oa.string()).c_str());
  const int rc2 =
      std::system((base + " --threads 4 --out " + ob.string()).c_str());

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string a = slurp(oa), b = slurp(ob);
  const bool identical = !a.empty() && a == b;

  Outcome out;
  out.pass = rc1 == 0 && rc2 == 0 && identical;
  out.detail = fmt(
      "exit codes %d/%d, outputs %zu bytes, byte-identical across 1 vs 4 "
      "workers: %s",
      rc1, rc2, a.size(), identical ? "yes" : "no");
  for (const fs::path& p : {wp, cp, oa, ob}) fs::remove(p);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      std::istringstream ss(argv[++i]);
      std::string tok;
      while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
    } else {
      std::fprintf(stderr, "usage: acceptance [--only 1,2,...]\n");
      return 2;
    }
  }
  const auto want = [&](int id) { return only.empty() || only.count(id); };

  if (want(1)) criterion(1, "gradient vs finite differences", c1_gradient_oracle);
  if (want(2)) criterion(2, "substitution identity", c2_substitution_identity);
  if (want(3)) criterion(3, "posterior mean composition", c3_pme_composition);
  if (want(4)) criterion(4, "backprop vs finite differences", c4_backprop_oracle);
  if (want(5)) criterion(5, "SIMO analytic MRC oracle", c5_simo_analytic);
  if (want(6)) criterion(6, "detector ordering at 10 dB", c6_detector_ordering);
  if (want(7)) criterion(7, "training efficacy", c7_training_efficacy);
  if (want(8)) criterion(8, "BCE/BER ranking consistency", c8_metric_consistency);
  if (want(9)) criterion(9, "LDPC coded chain", c9_ldpc_chain);
  if (want(10)) criterion(10, "CLI sweep determinism", c10_cli_determinism);

  const int total = only.empty() ? 10 : static_cast<int>(only.size());
  std::printf("acceptance: %d/%d criteria passed\n", total - g_failures, total);
  return g_failures == 0 ? 0 : 1;
}
