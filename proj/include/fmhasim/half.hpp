#pragma once

#include <cstdint>
#include <cstring>

namespace fmhasim {

// IEEE binary16 conversion with round-to-nearest-even, used to emulate f16
// operands on the host. Values beyond the f16 range saturate to +-65504
// (see f16_saturations counter on the caller side).

inline uint16_t float_to_half_bits(float f) {
  uint32_t x;
  std::memcpy(&x, &f, 4);
  uint32_t sign = (x >> 16) & 0x8000u;
  int32_t exp = int32_t((x >> 23) & 0xFF) - 127 + 15;
  uint32_t mant = x & 0x7FFFFFu;

  if (((x >> 23) & 0xFF) == 0xFF) {  // inf / nan
    return uint16_t(sign | 0x7C00u | (mant ? 0x200u : 0u));
  }
  if (exp >= 31) {  // overflow -> saturate to max finite
    return uint16_t(sign | 0x7BFFu);
  }
  if (exp <= 0) {  // subnormal or zero
    if (exp < -10) return uint16_t(sign);
    mant |= 0x800000u;
    int shift = 14 - exp;
    uint32_t half_mant = mant >> shift;
    uint32_t rem = mant & ((1u << shift) - 1);
    uint32_t halfway = 1u << (shift - 1);
    if (rem > halfway || (rem == halfway && (half_mant & 1)))
      ++half_mant;
    return uint16_t(sign | half_mant);
  }
  uint32_t half_mant = mant >> 13;
  uint32_t rem = mant & 0x1FFFu;
  uint16_t h = uint16_t(sign | (uint32_t(exp) << 10) | half_mant);
  if (rem > 0x1000u || (rem == 0x1000u && (h & 1))) ++h;
  if ((h & 0x7FFFu) >= 0x7C00u) h = uint16_t(sign | 0x7BFFu);  // rounded up past max
  return h;
}

inline float half_bits_to_float(uint16_t h) {
  uint32_t sign = uint32_t(h & 0x8000u) << 16;
  uint32_t exp = (h >> 10) & 0x1F;
  uint32_t mant = h & 0x3FFu;
  uint32_t x;
  if (exp == 0) {
    if (mant == 0) {
      x = sign;
    } else {  // subnormal
      int e = -1;
      do {
        ++e;
        mant <<= 1;
      } while ((mant & 0x400u) == 0);
      x = sign | uint32_t(127 - 15 - e) << 23 | ((mant & 0x3FFu) << 13);
    }
  } else if (exp == 31) {
    x = sign | 0x7F800000u | (mant << 13);
  } else {
    x = sign | ((exp - 15 + 127) << 23) | (mant << 13);
  }
  float f;
  std::memcpy(&f, &x, 4);
  return f;
}

// Round a float through f16 and back (identity on exactly representable
// values, saturating outside the f16 range).
inline float f16_round(float f) { return half_bits_to_float(float_to_half_bits(f)); }

}  // namespace fmhasim
