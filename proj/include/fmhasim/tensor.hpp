#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fmhasim {

// (L, N, h, d) tensor in the kernel's gmem layout:
// shape (M,K,H,B) with stride (K*H, 1, K, H*M*K), i.e. heads interleaved
// along the embedding dimension.
struct Tensor4 {
  int64_t L = 0, N = 0, h = 0, d = 0;
  std::vector<float> data;

  Tensor4() = default;
  Tensor4(int64_t L_, int64_t N_, int64_t h_, int64_t d_)
      : L(L_), N(N_), h(h_), d(d_), data(size_t(L_) * N_ * h_ * d_, 0.0f) {}

  int64_t offset(int64_t b, int64_t n, int64_t head, int64_t k) const {
    return n * d * h + k + head * d + b * h * N * d;
  }
  float& at(int64_t b, int64_t n, int64_t head, int64_t k) {
    return data[offset(b, n, head, k)];
  }
  float at(int64_t b, int64_t n, int64_t head, int64_t k) const {
    return data[offset(b, n, head, k)];
  }
  int64_t elements() const { return int64_t(data.size()); }

  bool operator==(const Tensor4& o) const = default;
};

// Self-describing binary dump: magic, dims, precision tag, then values in
// row-major (b, n, head, k) order. precision "f16" stores rounded halves.
void save_tensor(const Tensor4& t, const std::string& path,
                 const std::string& precision = "f32");
Tensor4 load_tensor(const std::string& path);

}  // namespace fmhasim
