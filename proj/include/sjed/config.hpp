#pragma once

#include <stdexcept>
#include <string>

namespace sjed {

/// Block-fading MU-MIMO dimensions: B BS antennas, U single-antenna users,
/// a coherence block of K = T + D slots (T pilot, D data), QPSK payload.
struct SystemConfig {
  int B = 8;
  int U = 4;
  int T = 4;
  int D = 240;
  double Eh = 1.0;  // per-entry channel variance
  int Tmax = 10;    // unfolded layer count

  SystemConfig() = default;

  SystemConfig(int b, int u, int t, int d, double eh = 1.0, int tmax = 10)
      : B(b), U(u), T(t), D(d), Eh(eh), Tmax(tmax) {
    validate();
  }

  int K() const { return T + D; }

  void validate() const {
    if (B < 1) throw std::invalid_argument("SystemConfig: B must be >= 1");
    if (U < 1) throw std::invalid_argument("SystemConfig: U must be >= 1");
    if (T < U)
      throw std::invalid_argument(
          "SystemConfig: T must be >= U (pilot matrix invertible)");
    if (D < 1) throw std::invalid_argument("SystemConfig: D must be >= 1");
    if (!(Eh > 0.0))
      throw std::invalid_argument("SystemConfig: Eh must be > 0");
    if (Tmax < 1)
      throw std::invalid_argument("SystemConfig: Tmax must be >= 1");
  }

  bool operator==(const SystemConfig&) const = default;
};

}  // namespace sjed
