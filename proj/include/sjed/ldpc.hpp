#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sjed {

/// Binary LDPC code loaded from an alist file. The systematic generator is
/// derived at parse time by GF(2) Gaussian elimination: info bits occupy the
/// pivot-free columns, each parity (pivot) column is the XOR of a recorded
/// subset of info positions.
struct LdpcCode {
  int n = 0;  // code bits
  int m = 0;  // checks
  int k = 0;  // info bits = n - rank(H)
  std::vector<std::vector<int>> rows;  // per check: 0-based col indices
  std::vector<std::vector<int>> cols;  // per bit: 0-based row indices
  std::vector<int> info_cols;          // size k
  std::vector<int> pivot_cols;         // size rank
  // per pivot: indices into info_cols whose XOR gives the parity bit
  std::vector<std::vector<int>> parity_support;

  double rate() const { return static_cast<double>(k) / n; }
};

namespace detail {

inline void derive_generator(LdpcCode& code) {
  const int n = code.n, m = code.m;
  // Dense RREF over GF(2). Row/col counts here stay at toy-to-480 scale.
  std::vector<std::vector<uint8_t>> h(m, std::vector<uint8_t>(n, 0));
  for (int r = 0; r < m; ++r)
    for (int c : code.rows[r]) h[r][c] = 1;

  std::vector<int> pivot_of_row;
  int rank = 0;
  for (int c = 0; c < n && rank < m; ++c) {
    int sel = -1;
    for (int r = rank; r < m; ++r)
      if (h[r][c]) {
        sel = r;
        break;
      }
    if (sel < 0) continue;
    std::swap(h[rank], h[sel]);
    for (int r = 0; r < m; ++r)
      if (r != rank && h[r][c])
        for (int j = c; j < n; ++j) h[r][j] ^= h[rank][j];
    pivot_of_row.push_back(c);
    ++rank;
  }

  code.pivot_cols = pivot_of_row;
  code.info_cols.clear();
  std::vector<int> info_index(n, -1);
  {
    std::vector<uint8_t> is_pivot(n, 0);
    for (int c : pivot_of_row) is_pivot[c] = 1;
    for (int c = 0; c < n; ++c)
      if (!is_pivot[c]) {
        info_index[c] = static_cast<int>(code.info_cols.size());
        code.info_cols.push_back(c);
      }
  }
  code.k = static_cast<int>(code.info_cols.size());

  // In RREF each row touches its pivot plus info columns only.
  code.parity_support.assign(rank, {});
  for (int r = 0; r < rank; ++r)
    for (int c = 0; c < n; ++c)
      if (h[r][c] && c != pivot_of_row[r]) code.parity_support[r].push_back(info_index[c]);
}

class IntReader {
 public:
  explicit IntReader(const std::string& text) : in_(text) {}
  int next(const char* what) {
    long long v;
    if (!(in_ >> v))
      throw std::runtime_error(std::string("alist parse error: missing ") + what);
    if (v < -(1LL << 30) || v > (1LL << 30))
      throw std::runtime_error(std::string("alist parse error: absurd ") + what);
    return static_cast<int>(v);
  }
  bool at_end() {
    long long v;
    return !(in_ >> v);
  }

 private:
  std::istringstream in_;
};

}  // namespace detail

/// Unpadded alist: `N M`, max column/row degrees, per-column degrees,
/// per-row degrees, then 1-based adjacency lists (columns first). A 0 index
/// is treated as a format violation, not padding.
inline LdpcCode parse_alist(const std::string& text) {
  detail::IntReader rd(text);
  LdpcCode code;
  code.n = rd.next("N");
  code.m = rd.next("M");
  if (code.n < 1 || code.m < 1)
    throw std::runtime_error("alist parse error: nonpositive dimensions");
  const int max_col = rd.next("max column degree");
  const int max_row = rd.next("max row degree");

  std::vector<int> col_deg(code.n), row_deg(code.m);
  for (int c = 0; c < code.n; ++c) {
    col_deg[c] = rd.next("column degree");
    if (col_deg[c] < 0 || col_deg[c] > max_col)
      throw std::runtime_error("alist parse error: column degree out of range");
  }
  for (int r = 0; r < code.m; ++r) {
    row_deg[r] = rd.next("row degree");
    if (row_deg[r] < 0 || row_deg[r] > max_row)
      throw std::runtime_error("alist parse error: row degree out of range");
  }

  code.cols.assign(code.n, {});
  code.rows.assign(code.m, {});
  for (int c = 0; c < code.n; ++c)
    for (int e = 0; e < col_deg[c]; ++e) {
      const int r = rd.next("column adjacency entry");
      if (r < 1 || r > code.m)
        throw std::runtime_error("alist parse error: row index out of range (1-based)");
      code.cols[c].push_back(r - 1);
    }
  for (int r = 0; r < code.m; ++r)
    for (int e = 0; e < row_deg[r]; ++e) {
      const int c = rd.next("row adjacency entry");
      if (c < 1 || c > code.n)
        throw std::runtime_error("alist parse error: column index out of range (1-based)");
      code.rows[r].push_back(c - 1);
    }
  if (!rd.at_end())
    throw std::runtime_error("alist parse error: trailing data");

  // Cross-check the two adjacency views.
  std::vector<std::vector<uint8_t>> seen(code.m, std::vector<uint8_t>(code.n, 0));
  for (int r = 0; r < code.m; ++r)
    for (int c : code.rows[r]) {
      if (seen[r][c])
        throw std::runtime_error("alist parse error: duplicate edge");
      seen[r][c] = 1;
    }
  for (int c = 0; c < code.n; ++c)
    for (int r : code.cols[c])
      if (!seen[r][c])
        throw std::runtime_error("alist parse error: row/column lists disagree");
  size_t col_edges = 0, row_edges = 0;
  for (int c = 0; c < code.n; ++c) col_edges += code.cols[c].size();
  for (int r = 0; r < code.m; ++r) row_edges += code.rows[r].size();
  if (col_edges != row_edges)
    throw std::runtime_error("alist parse error: edge count mismatch");

  detail::derive_generator(code);
  return code;
}

inline LdpcCode load_alist(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open alist file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_alist(ss.str());
}

inline std::string serialize_alist(const LdpcCode& code) {
  std::ostringstream out;
  size_t max_col = 0, max_row = 0;
  for (const auto& c : code.cols) max_col = std::max(max_col, c.size());
  for (const auto& r : code.rows) max_row = std::max(max_row, r.size());
  out << code.n << " " << code.m << "\n" << max_col << " " << max_row << "\n";
  for (int c = 0; c < code.n; ++c)
    out << code.cols[c].size() << (c + 1 < code.n ? " " : "\n");
  for (int r = 0; r < code.m; ++r)
    out << code.rows[r].size() << (r + 1 < code.m ? " " : "\n");
  for (const auto& col : code.cols) {
    for (size_t e = 0; e < col.size(); ++e)
      out << col[e] + 1 << (e + 1 < col.size() ? " " : "");
    out << "\n";
  }
  for (const auto& row : code.rows) {
    for (size_t e = 0; e < row.size(); ++e)
      out << row[e] + 1 << (e + 1 < row.size() ? " " : "");
    out << "\n";
  }
  return out.str();
}

inline std::vector<uint8_t> encode(const LdpcCode& code,
                                   const std::vector<uint8_t>& info) {
  if (static_cast<int>(info.size()) != code.k)
    throw std::invalid_argument("encode: info length mismatch");
  std::vector<uint8_t> cw(code.n, 0);
  for (int i = 0; i < code.k; ++i) cw[code.info_cols[i]] = info[i] & 1;
  for (size_t r = 0; r < code.pivot_cols.size(); ++r) {
    uint8_t p = 0;
    for (int idx : code.parity_support[r]) p ^= info[idx] & 1;
    cw[code.pivot_cols[r]] = p;
  }
  return cw;
}

inline bool check_parity(const LdpcCode& code, const std::vector<uint8_t>& cw) {
  for (const auto& row : code.rows) {
    uint8_t s = 0;
    for (int c : row) s ^= cw[c];
    if (s) return false;
  }
  return true;
}

struct DecodeResult {
  std::vector<uint8_t> bits;  // length n
  bool ok = false;            // all parity checks satisfied
  int iterations = 0;
};

/// Layered (row-serial) sum-product decoding with the exact tanh rule and
/// early exit on parity. Input LLRs use the positive-means-1 convention;
/// the tanh rule assumes log(p0/p1), so signs are flipped on the way in and
/// the hard decision inverted on the way out.
inline DecodeResult decode(const LdpcCode& code, const std::vector<double>& llr,
                           int iters = 10) {
  if (static_cast<int>(llr.size()) != code.n)
    throw std::invalid_argument("decode: LLR length mismatch");
  std::vector<double> post(code.n);
  for (int c = 0; c < code.n; ++c) post[c] = -llr[c];

  std::vector<std::vector<double>> r_msg(code.m);
  for (int r = 0; r < code.m; ++r) r_msg[r].assign(code.rows[r].size(), 0.0);

  DecodeResult res;
  res.bits.assign(code.n, 0);
  std::vector<double> q, t, pre, suf;
  for (int it = 1; it <= iters; ++it) {
    for (int r = 0; r < code.m; ++r) {
      const auto& row = code.rows[r];
      const size_t deg = row.size();
      if (deg == 0) continue;
      q.resize(deg);
      t.resize(deg);
      for (size_t e = 0; e < deg; ++e) {
        q[e] = post[row[e]] - r_msg[r][e];
        t[e] = std::tanh(0.5 * q[e]);
      }
      pre.assign(deg + 1, 1.0);
      suf.assign(deg + 1, 1.0);
      for (size_t e = 0; e < deg; ++e) pre[e + 1] = pre[e] * t[e];
      for (size_t e = deg; e-- > 0;) suf[e] = suf[e + 1] * t[e];
      for (size_t e = 0; e < deg; ++e) {
        double prod = pre[e] * suf[e + 1];
        prod = std::min(std::max(prod, -(1.0 - 1e-15)), 1.0 - 1e-15);
        const double msg = 2.0 * std::atanh(prod);
        r_msg[r][e] = msg;
        post[row[e]] = q[e] + msg;
      }
    }
    // A posterior of exactly zero is an undecided bit (e.g. an uninformative
    // all-zero input); success requires every bit to take a side.
    bool decided = true;
    for (int c = 0; c < code.n; ++c) {
      res.bits[c] = post[c] < 0.0 ? 1 : 0;
      decided = decided && post[c] != 0.0;
    }
    res.iterations = it;
    if (decided && check_parity(code, res.bits)) {
      res.ok = true;
      return res;
    }
  }
  return res;
}

}  // namespace sjed
