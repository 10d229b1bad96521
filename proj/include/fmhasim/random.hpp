#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "fmhasim/tensor.hpp"

namespace fmhasim {

// Seedable standard-normal generator: mt19937_64 with a hand-rolled
// Box-Muller transform, so fixtures reproduce across platforms (the
// distribution adapters in libstdc++/libc++ are implementation-defined).
class GaussianSource {
public:
  explicit GaussianSource(uint64_t seed) : rng_(seed) {}

  float next() {
    if (hasSpare_) {
      hasSpare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    spare_ = float(r * std::sin(theta));
    hasSpare_ = true;
    return float(r * std::cos(theta));
  }

private:
  double uniform() {
    return (rng_() >> 11) * (1.0 / 9007199254740992.0);  // 53-bit mantissa
  }
  std::mt19937_64 rng_;
  bool hasSpare_ = false;
  float spare_ = 0.0f;
};

inline Tensor4 gaussian_tensor(int64_t L, int64_t N, int64_t h, int64_t d,
                               uint64_t seed) {
  Tensor4 t(L, N, h, d);
  GaussianSource g(seed);
  for (auto& v : t.data) v = g.next();
  return t;
}

}  // namespace fmhasim
