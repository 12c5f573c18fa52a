#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "sjed/channel.hpp"
#include "sjed/config.hpp"
#include "sjed/rng.hpp"

using namespace sjed;

TEST_CASE("system config invariants") {
  CHECK_NOTHROW(SystemConfig(8, 4, 4, 240));
  CHECK(SystemConfig(8, 4, 4, 240).K() == 244);
  CHECK_THROWS_AS(SystemConfig(0, 4, 4, 240), std::invalid_argument);
  CHECK_THROWS_AS(SystemConfig(8, 4, 3, 240), std::invalid_argument);  // T < U
  CHECK_THROWS_AS(SystemConfig(8, 4, 4, 0), std::invalid_argument);
  CHECK_THROWS_AS(SystemConfig(8, 4, 4, 240, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(SystemConfig(8, 4, 4, 240, 1.0, 0), std::invalid_argument);
}

TEST_CASE("gen_channel statistics and determinism") {
  SystemConfig cfg(8, 4, 4, 8);
  Rng rng(123);
  // 10^5 entries: sample mean |h|^2 within [0.98, 1.02] for Eh = 1
  double acc = 0.0;
  long n = 0;
  while (n < 100000) {
    CMat h = gen_channel(rng, cfg);
    acc += h.squaredNorm();
    n += h.size();
  }
  CHECK(acc / n > 0.98);
  CHECK(acc / n < 1.02);

  Rng a(42), b(42);
  CMat ha = gen_channel(a, cfg), hb = gen_channel(b, cfg);
  CHECK(ha == hb);
}

TEST_CASE("gen_pilots Hadamard") {
  SystemConfig cfg(8, 4, 4, 8);
  CMat st = gen_pilots(cfg);
  REQUIRE(st.rows() == 4);
  REQUIRE(st.cols() == 4);
  CHECK((st * st.adjoint() - 4.0 * CMat::Identity(4, 4)).norm() == 0.0);
  for (Eigen::Index i = 0; i < st.size(); ++i)
    CHECK(std::abs(std::abs(st(i / 4, i % 4).real()) - 1.0) == 0.0);

  SystemConfig one(2, 1, 1, 4);
  CMat s1 = gen_pilots(one);
  REQUIRE(s1.rows() == 1);
  CHECK(s1(0, 0) == cplx(1.0, 0.0));

  CHECK_THROWS_AS(gen_pilots(SystemConfig(8, 3, 3, 8)), std::invalid_argument);
  CHECK_THROWS_AS(gen_pilots(SystemConfig(8, 4, 5, 8)), std::invalid_argument);
}

TEST_CASE("map_bits convention and round trip") {
  BitTensor bits;
  bits.b1.resize(1, 4);
  bits.b2.resize(1, 4);
  bits.b1 << 1, 0, 1, 0;
  bits.b2 << 1, 0, 0, 1;
  CMat s = map_bits(bits);
  const double a = kQpskAmp;
  CHECK(a == Catch::Approx(1.0 / std::sqrt(2.0)).margin(1e-15));
  CHECK(2.0 * a * a == Catch::Approx(1.0).margin(1e-15));  // unit symbol energy
  CHECK(s(0, 0) == cplx(a, a));
  CHECK(s(0, 1) == cplx(-a, -a));
  CHECK(s(0, 2) == cplx(a, -a));
  CHECK(s(0, 3) == cplx(-a, a));

  BitTensor back = hard_demap(s);
  CHECK(back.b1 == bits.b1);
  CHECK(back.b2 == bits.b2);
}

TEST_CASE("snr_to_noise_var convention") {
  CHECK(snr_to_noise_var(0.0, SystemConfig(8, 4, 4, 8)) == Catch::Approx(4.0));
  CHECK(snr_to_noise_var(10.0, SystemConfig(8, 4, 4, 8)) == Catch::Approx(0.4));
  CHECK(snr_to_noise_var(0.0, SystemConfig(8, 1, 1, 8)) == Catch::Approx(1.0));
  CHECK(snr_to_noise_var(std::numeric_limits<double>::infinity(),
                         SystemConfig(8, 4, 4, 8)) == 0.0);
}

TEST_CASE("gen_frame assembly") {
  SystemConfig cfg(8, 4, 4, 240);
  Rng rng(7);
  Frame f = gen_frame(rng, cfg, 10.0);
  CHECK(f.Y.rows() == 8);
  CHECK(f.Y.cols() == 244);
  CHECK(f.N0 == Catch::Approx(0.4));

  // all data symbols on the QPSK circle
  for (Eigen::Index j = 0; j < f.data_symbols.cols(); ++j)
    for (Eigen::Index i = 0; i < f.data_symbols.rows(); ++i) {
      CHECK(std::abs(f.data_symbols(i, j).real()) == Catch::Approx(kQpskAmp));
      CHECK(std::abs(f.data_symbols(i, j).imag()) == Catch::Approx(kQpskAmp));
    }

  // noiseless sentinel: Y = H S exactly
  Rng rng2(7);
  Frame nf = gen_frame(rng2, cfg, std::numeric_limits<double>::infinity());
  CHECK((nf.Y - nf.channel * nf.tx_matrix()).norm() == 0.0);

  // split seeds give different bit patterns
  Rng ra(Rng::derive(1, 0)), rb(Rng::derive(1, 1));
  Frame fa = gen_frame(ra, cfg, 10.0), fb = gen_frame(rb, cfg, 10.0);
  CHECK(fa.bits.b1 != fb.bits.b1);
}

TEST_CASE("empirical noise variance matches N0") {
  SystemConfig cfg(8, 4, 4, 240);
  const double snr_db = 6.0;
  const double n0 = snr_to_noise_var(snr_db, cfg);
  Rng rng(99);
  double acc = 0.0;
  long n = 0;
  while (n < 100000) {
    Frame f = gen_frame(rng, cfg, snr_db);
    acc += (f.Y - f.channel * f.tx_matrix()).squaredNorm();
    n += f.Y.size();
  }
  const double emp = acc / n;
  CHECK(emp > 0.98 * n0);
  CHECK(emp < 1.02 * n0);
}
