#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sjed/linalg.hpp"

namespace sjed {

struct MetricsRecord {
  double snr_db = 0.0;
  std::string detector;
  std::uint64_t bit_errors = 0;
  std::uint64_t bits = 0;
  std::uint64_t packet_errors = 0;
  std::uint64_t packets = 0;
  double bce_sum = 0.0;  // summed per-bit cross entropy
  std::uint64_t frames = 0;
  std::uint64_t seed = 0;

  double ber() const { return bits ? static_cast<double>(bit_errors) / bits : 0.0; }
  double per() const {
    return packets ? static_cast<double>(packet_errors) / packets : 0.0;
  }
  double bce() const { return bits ? bce_sum / bits : 0.0; }

  void merge(const MetricsRecord& o) {
    bit_errors += o.bit_errors;
    bits += o.bits;
    packet_errors += o.packet_errors;
    packets += o.packets;
    bce_sum += o.bce_sum;
    frames += o.frames;
  }
};

/// Accumulate one frame's LLRs against the transmitted bits: hard-decision
/// bit errors plus per-bit cross entropy through sigma(L).
inline void update_metrics(MetricsRecord& rec, const RMat& llr1,
                           const RMat& llr2, const BitMat& b1,
                           const BitMat& b2) {
  if (llr1.rows() != b1.rows() || llr1.cols() != b1.cols())
    throw std::invalid_argument("update_metrics: shape mismatch");
  for (Eigen::Index j = 0; j < llr1.cols(); ++j)
    for (Eigen::Index i = 0; i < llr1.rows(); ++i) {
      const bool h1 = llr1(i, j) > 0.0, h2 = llr2(i, j) > 0.0;
      rec.bit_errors += (h1 != (b1(i, j) != 0)) + (h2 != (b2(i, j) != 0));
      rec.bce_sum += bce_term(llr_to_prob(llr1(i, j)), b1(i, j)) +
                     bce_term(llr_to_prob(llr2(i, j)), b2(i, j));
    }
  rec.bits += 2 * static_cast<std::uint64_t>(llr1.size());
  rec.frames += 1;
}

inline void update_packet(MetricsRecord& rec, bool error) {
  rec.packets += 1;
  rec.packet_errors += error ? 1 : 0;
}

namespace detail {

inline std::string fmt9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace detail

inline void write_csv(std::vector<MetricsRecord> records,
                      const std::string& path) {
  std::sort(records.begin(), records.end(),
            [](const MetricsRecord& a, const MetricsRecord& b) {
              if (a.detector != b.detector) return a.detector < b.detector;
              return a.snr_db < b.snr_db;
            });
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path);
  out << "snr_db,detector,ber,per,bce,bits,packets,frames,seed\n";
  for (const auto& r : records)
    out << detail::fmt9(r.snr_db) << "," << r.detector << ","
        << detail::fmt9(r.ber()) << "," << detail::fmt9(r.per()) << ","
        << detail::fmt9(r.bce()) << "," << r.bits << "," << r.packets << ","
        << r.frames << "," << r.seed << "\n";
  if (!out) throw std::runtime_error("write_csv: write failed: " + path);
}

/// Inverse of write_csv for round trips; error counts are reconstructed from
/// the rounded rates (exact while counts stay below ~5e8).
inline std::vector<MetricsRecord> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) ||
      line != "snr_db,detector,ber,per,bce,bits,packets,frames,seed")
    throw std::runtime_error("read_csv: bad header in " + path);
  std::vector<MetricsRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 9) throw std::runtime_error("read_csv: bad row: " + line);
    MetricsRecord r;
    r.snr_db = std::stod(f[0]);
    r.detector = f[1];
    r.bits = std::stoull(f[5]);
    r.packets = std::stoull(f[6]);
    r.frames = std::stoull(f[7]);
    r.seed = std::stoull(f[8]);
    r.bit_errors =
        static_cast<std::uint64_t>(std::llround(std::stod(f[2]) * r.bits));
    r.packet_errors =
        static_cast<std::uint64_t>(std::llround(std::stod(f[3]) * r.packets));
    r.bce_sum = std::stod(f[4]) * r.bits;
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace sjed
