#include "fmhasim/tensor.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "fmhasim/half.hpp"

namespace fmhasim {

namespace {
constexpr uint32_t kMagic = 0x544D4846u;  // "FHMT"
constexpr uint32_t kVersion = 1;
constexpr uint32_t kPrecF32 = 0;
constexpr uint32_t kPrecF16 = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T read_pod(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("tensor file truncated");
  return v;
}
}  // namespace

void save_tensor(const Tensor4& t, const std::string& path,
                 const std::string& precision) {
  uint32_t prec;
  if (precision == "f32")
    prec = kPrecF32;
  else if (precision == "f16")
    prec = kPrecF16;
  else
    throw std::invalid_argument("save_tensor: unknown precision " + precision);

  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_tensor: cannot open " + path);
  write_pod(os, kMagic);
  write_pod(os, kVersion);
  write_pod(os, t.L);
  write_pod(os, t.N);
  write_pod(os, t.h);
  write_pod(os, t.d);
  write_pod(os, prec);
  for (int64_t b = 0; b < t.L; ++b)
    for (int64_t n = 0; n < t.N; ++n)
      for (int64_t head = 0; head < t.h; ++head)
        for (int64_t k = 0; k < t.d; ++k) {
          float v = t.at(b, n, head, k);
          if (prec == kPrecF16)
            write_pod(os, float_to_half_bits(v));
          else
            write_pod(os, v);
        }
  if (!os) throw std::runtime_error("save_tensor: write failed for " + path);
}

Tensor4 load_tensor(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_tensor: cannot open " + path);
  if (read_pod<uint32_t>(is) != kMagic)
    throw std::runtime_error("load_tensor: bad magic in " + path);
  if (read_pod<uint32_t>(is) != kVersion)
    throw std::runtime_error("load_tensor: unsupported version in " + path);
  int64_t L = read_pod<int64_t>(is);
  int64_t N = read_pod<int64_t>(is);
  int64_t h = read_pod<int64_t>(is);
  int64_t d = read_pod<int64_t>(is);
  uint32_t prec = read_pod<uint32_t>(is);
  Tensor4 t(L, N, h, d);
  for (int64_t b = 0; b < L; ++b)
    for (int64_t n = 0; n < N; ++n)
      for (int64_t head = 0; head < h; ++head)
        for (int64_t k = 0; k < d; ++k) {
          float v = prec == kPrecF16 ? half_bits_to_float(read_pod<uint16_t>(is))
                                     : read_pod<float>(is);
          t.at(b, n, head, k) = v;
        }
  return t;
}

}  // namespace fmhasim
