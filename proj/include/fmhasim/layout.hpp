#pragma once

#include <optional>
#include <string>

#include "fmhasim/int_tuple.hpp"

namespace fmhasim {

// shape:stride pair defining a multilinear coordinate-to-index map.
struct Layout {
  IntTuple shape;
  IntTuple stride;

  Layout() = default;
  Layout(IntTuple s, IntTuple d);  // checks congruence
};

int64_t size(const Layout& L);
// 1 + sum (n_i - 1) * d_i over leaves, 0 if size is 0.
int64_t cosize(const Layout& L);

// The layout function on the colex-linearized domain. Indices past size(L)
// extend through the last mode.
int64_t layout_fn(const Layout& L, int64_t i);

// Multilinear form: coord must be congruent to the shape and in bounds.
int64_t layout_fn_md(const Layout& L, const IntTuple& coord);

Layout make_col_major(int64_t m, int64_t n);
Layout make_row_major(int64_t m, int64_t n);

// XOR index permutation: bits [base+shift, base+shift+bits) are XORed into
// bits [base, base+bits). Involutive whenever shift >= bits.
struct Swizzle {
  int bits = 0;
  int base = 0;
  int shift = 0;

  int64_t apply(int64_t i) const {
    int64_t mask = (int64_t(1) << bits) - 1;
    return i ^ (((i >> (base + shift)) & mask) << base);
  }
  bool operator==(const Swizzle&) const = default;
};

// Layout with an optional post-composed swizzle on its image.
struct ComposedLayout {
  Layout inner;
  std::optional<Swizzle> post;

  ComposedLayout() = default;
  ComposedLayout(Layout l) : inner(std::move(l)) {}
  ComposedLayout(Layout l, Swizzle s) : inner(std::move(l)), post(s) {}
};

int64_t layout_fn(const ComposedLayout& L, int64_t i);
int64_t layout_fn_md(const ComposedLayout& L, const IntTuple& coord);

// Layout whose function equals layout_fn(A) o layout_fn(B) on [0, size(B)).
// Throws on failed divisibility. A carried swizzle stays post-composed.
Layout compose(const Layout& A, const Layout& B);
ComposedLayout compose(const ComposedLayout& A, const Layout& B);

// Repeat `atom` over `target` (flat tuple, one extent per top-level mode of
// the atom) in column-major tile order. Each target extent must be a positive
// multiple of the atom extent.
Layout tile_to_shape(const Layout& atom, const IntTuple& target);
ComposedLayout tile_to_shape(const ComposedLayout& atom, const IntTuple& target);

// Re-strides an MMA accumulator fragment layout ((v0,v1,v2),restM,restK) so
// that traversal in the operand layout's order visits the matching
// accumulator registers.
Layout reshape_acc_to_operand(const Layout& acc, const Layout& op);

// "((2,2,16),2,1):((1,2,4),64,0)" notation; round-trips exactly.
std::string to_string(const Layout& L);
std::string to_string(const ComposedLayout& L);
Layout parse_layout(const std::string& s);

// 128-byte K-major swizzled smem atom for 16-bit elements: (8,64):(64,1)
// post-composed with Swizzle{3,3,3}. The integer parameters are this
// artifact's preset, validated by bijectivity and bank-conflict behavior.
ComposedLayout swizzle_atom_k_major_128B();
Layout unswizzled_atom_k_major_128B();

}  // namespace fmhasim
