#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "fmhasim/layout.hpp"

using namespace fmhasim;

TEST_CASE("IntTuple basics") {
  IntTuple t{IntTuple{2, 2}, 8};
  CHECK(size(t) == 32);
  CHECK(flatten(t) == std::vector<int64_t>{2, 2, 8});
  CHECK(congruent(t, IntTuple{IntTuple{1, 2}, 4}));
  CHECK(!congruent(t, IntTuple{2, 2, 8}));
  CHECK_THROWS_AS(IntTuple(-1), std::invalid_argument);
}

TEST_CASE("colex decomposition and md agreement") {
  Layout L(IntTuple{IntTuple{4, 8, 4}, IntTuple{2, 2, 8}},
           IntTuple{IntTuple{128, 1, 16}, IntTuple{64, 8, 512}});
  for (int64_t i = 0; i < size(L); ++i) {
    auto digits = colex_decompose(i, flatten(L.shape));
    CHECK(layout_fn(L, i) == layout_fn_md(L, unflatten(digits, L.shape)));
  }
}

TEST_CASE("column-major identity and row-major sequence") {
  Layout cm = make_col_major(4, 4);
  CHECK(layout_fn(cm, 7) == 7);
  std::vector<int64_t> want{0, 4, 8, 12, 1, 5, 9, 13, 2, 6, 10, 14, 3, 7, 11, 15};
  Layout rm = make_row_major(4, 4);
  for (int64_t i = 0; i < 16; ++i) CHECK(layout_fn(rm, i) == want[i]);
}

TEST_CASE("zero-stride singleton") {
  Layout L(IntTuple{1}, IntTuple{0});
  CHECK(layout_fn(L, 0) == 0);
  CHECK(size(L) == 1);
  CHECK(cosize(L) == 1);
}

TEST_CASE("layout_fn_md examples") {
  CHECK(layout_fn_md(make_col_major(4, 4), IntTuple{2, 3}) == 14);
  Layout c64(IntTuple{IntTuple{4, 8, 4}, IntTuple{2, 2, 8}},
             IntTuple{IntTuple{128, 1, 16}, IntTuple{64, 8, 512}});
  CHECK(layout_fn_md(c64, IntTuple{IntTuple{0, 1, 0}, IntTuple{0, 0, 0}}) == 1);
  CHECK(layout_fn_md(c64, IntTuple{IntTuple{0, 0, 0}, IntTuple{0, 0, 0}}) == 0);
  CHECK_THROWS_AS(layout_fn_md(c64, IntTuple{IntTuple{4, 0, 0}, IntTuple{0, 0, 0}}),
                  std::out_of_range);
}

TEST_CASE("congruence violation rejected") {
  CHECK_THROWS_AS(Layout(IntTuple{4, 4}, IntTuple{1}), std::invalid_argument);
}

TEST_CASE("compose: identity o row-major") {
  Layout r = compose(make_col_major(4, 4), make_row_major(4, 4));
  std::vector<int64_t> want{0, 4, 8, 12, 1, 5, 9, 13, 2, 6, 10, 14, 3, 7, 11, 15};
  for (int64_t i = 0; i < 16; ++i) CHECK(layout_fn(r, i) == want[i]);
}

TEST_CASE("compose with identity column-major is function-equal to A") {
  Layout A(IntTuple{8, 4}, IntTuple{2, 32});
  Layout r = compose(A, make_col_major(8, 4));
  for (int64_t i = 0; i < size(A); ++i) CHECK(layout_fn(r, i) == layout_fn(A, i));
}

TEST_CASE("transpose by precomposition") {
  const int64_t bN = 16, bK = 8;
  Layout V(IntTuple{bN, bK}, IntTuple{bK, 1});  // K-major V tile
  Layout T = compose(V, make_row_major(bK, bN));
  for (int64_t k = 0; k < bK; ++k)
    for (int64_t n = 0; n < bN; ++n)
      CHECK(layout_fn_md(T, IntTuple{k, n}) == layout_fn_md(V, IntTuple{n, k}));
}

TEST_CASE("swizzle stays post-composed through composition") {
  ComposedLayout A(make_row_major(8, 64), Swizzle{3, 3, 3});
  Layout B = make_row_major(64, 8);
  ComposedLayout R = compose(A, B);
  REQUIRE(R.post.has_value());
  CHECK(*R.post == Swizzle{3, 3, 3});
  Layout innerOnly = compose(A.inner, B);
  for (int64_t i = 0; i < size(B); ++i) {
    CHECK(layout_fn(R.inner, i) == layout_fn(innerOnly, i));
    CHECK(layout_fn(R, i) == R.post->apply(layout_fn(innerOnly, i)));
  }
}

TEST_CASE("compose rejects indivisible modes") {
  Layout A(IntTuple{4, 4}, IntTuple{1, 4});
  CHECK_THROWS_AS(compose(A, Layout(IntTuple{5}, IntTuple{3})),
                  std::invalid_argument);
}

namespace {

// Valid-by-construction (A, B) pairs: each B mode takes a prefix-product
// stride into A and a run of full A modes (possibly ending in a divisor or
// extending past the last mode).
struct PairGen {
  std::mt19937_64 rng{12345};

  int64_t pick(std::vector<int64_t> xs) {
    return xs[rng() % xs.size()];
  }

  Layout random_A() {
    int modes = 1 + int(rng() % 3);
    std::vector<IntTuple> sh, st;
    int64_t stride = 1 + int64_t(rng() % 3);
    for (int m = 0; m < modes; ++m) {
      int64_t s = pick({2, 4, 8});
      sh.emplace_back(s);
      st.emplace_back(stride);
      stride *= s * (1 + int64_t(rng() % 2));
    }
    return Layout(IntTuple(sh), IntTuple(st));
  }

  Layout random_B(const Layout& A) {
    auto s = flatten(A.shape);
    size_t j = rng() % s.size();
    int64_t d = 1;
    for (size_t k = 0; k < j; ++k) d *= s[k];
    int64_t n = 1;
    for (size_t k = j; k < s.size() && (rng() % 2 == 0 || n == 1); ++k) n *= s[k];
    if (n == 1) n = s[j];
    return Layout(IntTuple{n}, IntTuple{d});
  }
};

}  // namespace

TEST_CASE("composition law on randomized valid pairs") {
  PairGen gen;
  for (int trial = 0; trial < 500; ++trial) {
    Layout A = gen.random_A();
    Layout B = gen.random_B(A);
    Layout R = compose(A, B);
    for (int64_t i = 0; i < size(B); ++i)
      REQUIRE(layout_fn(R, i) == layout_fn(A, layout_fn(B, i)));
  }
}

namespace {

// Explicit tiling oracle: offset of target coordinate = atom offset plus
// size(atom) times the colex tile index.
int64_t tiling_oracle(const Layout& atom, const std::vector<int64_t>& atomExt,
                      const std::vector<int64_t>& repeat, int64_t i) {
  std::vector<int64_t> targetExt(atomExt.size());
  for (size_t k = 0; k < atomExt.size(); ++k)
    targetExt[k] = atomExt[k] * repeat[k];
  auto coord = colex_decompose(i, targetExt);
  int64_t atomIdx = 0, atomMul = 1, tileIdx = 0, tileMul = 1;
  for (size_t k = 0; k < atomExt.size(); ++k) {
    atomIdx += (coord[k] % atomExt[k]) * atomMul;
    atomMul *= atomExt[k];
    tileIdx += (coord[k] / atomExt[k]) * tileMul;
    tileMul *= repeat[k];
  }
  return layout_fn(atom, atomIdx) + size(atom) * tileIdx;
}

}  // namespace

TEST_CASE("tile_to_shape matches the explicit tiling oracle") {
  Layout atom = make_row_major(8, 8);
  Layout tiled = tile_to_shape(atom, IntTuple{16, 8});
  for (int64_t i = 0; i < 16 * 8; ++i)
    CHECK(layout_fn(tiled, i) == tiling_oracle(atom, {8, 8}, {2, 1}, i));

  Layout atom2(IntTuple{IntTuple{2, 2}, 4}, IntTuple{IntTuple{1, 8}, 2});
  Layout tiled2 = tile_to_shape(atom2, IntTuple{8, 12});
  for (int64_t i = 0; i < 8 * 12; ++i)
    CHECK(layout_fn(tiled2, i) == tiling_oracle(atom2, {4, 4}, {2, 3}, i));
}

TEST_CASE("tile_to_shape of the atom's own shape is the atom") {
  Layout atom = make_row_major(8, 64);
  Layout tiled = tile_to_shape(atom, IntTuple{8, 64});
  CHECK(tiled.shape == atom.shape);
  CHECK(tiled.stride == atom.stride);
}

TEST_CASE("tile_to_shape rejects non-divisible targets") {
  CHECK_THROWS_AS(tile_to_shape(make_row_major(8, 64), IntTuple{12, 64}),
                  std::invalid_argument);
}

TEST_CASE("swizzled 128-byte atom tiled to (128,128) stays a bijection") {
  ComposedLayout tiled =
      tile_to_shape(swizzle_atom_k_major_128B(), IntTuple{128, 128});
  std::set<int64_t> image;
  for (int64_t i = 0; i < 128 * 128; ++i) {
    int64_t v = layout_fn(tiled, i);
    CHECK(v >= 0);
    CHECK(v < 128 * 128);
    image.insert(v);
  }
  CHECK(image.size() == size_t(128 * 128));
}

TEST_CASE("swizzle is an involution and bits=0 is identity") {
  Swizzle s{3, 3, 3};
  for (int64_t i = 0; i < 1024; ++i) CHECK(s.apply(s.apply(i)) == i);
  Swizzle id{0, 5, 2};
  for (int64_t i = 0; i < 256; ++i) CHECK(id.apply(i) == i);
}

TEST_CASE("swizzle (3,3,3) permutes [0,1024)") {
  Swizzle s{3, 3, 3};
  std::set<int64_t> image;
  for (int64_t i = 0; i < 1024; ++i) {
    int64_t v = s.apply(i);
    CHECK(v >= 0);
    CHECK(v < 1024);
    image.insert(v);
  }
  CHECK(image.size() == 1024);
}

TEST_CASE("reshape_acc_to_operand golden cases") {
  Layout acc = parse_layout("((2,2,16),2,1):((1,2,4),64,0)");
  Layout op = parse_layout("((2,2,2),2,8):((1,2,4),8,16)");
  CHECK(to_string(reshape_acc_to_operand(acc, op)) ==
        "((2,2,2),2,8):((1,2,4),64,8)");

  Layout acc64 = parse_layout("((2,2,16),1,1):((1,2,4),0,0)");
  Layout op64 = parse_layout("((2,2,2),1,8):((1,2,4),0,8)");
  CHECK(to_string(reshape_acc_to_operand(acc64, op64)) ==
        "((2,2,2),1,8):((1,2,4),0,8)");

  Layout r = reshape_acc_to_operand(op, op);
  CHECK(r.shape == op.shape);
  CHECK(r.stride == op.stride);

  CHECK_THROWS_AS(reshape_acc_to_operand(acc, op64), std::invalid_argument);
}

TEST_CASE("reshape permutes register addresses, never drops or duplicates") {
  Layout acc = parse_layout("((2,2,16),2,1):((1,2,4),64,0)");
  Layout op = parse_layout("((2,2,2),2,8):((1,2,4),8,16)");
  Layout r = reshape_acc_to_operand(acc, op);
  std::multiset<int64_t> accAddrs, opAddrs;
  for (int64_t i = 0; i < size(acc); ++i) accAddrs.insert(layout_fn(acc, i));
  for (int64_t i = 0; i < size(r); ++i) opAddrs.insert(layout_fn(r, i));
  CHECK(accAddrs == opAddrs);
}

TEST_CASE("layout notation round-trips") {
  for (const char* s :
       {"((2,2,16),2,1):((1,2,4),64,0)", "((2,2,2),2,8):((1,2,4),64,8)",
        "(4,4):(1,4)", "(1):(0)", "((4,8,4),(2,2,8)):((128,1,16),(64,8,512))"}) {
    CHECK(to_string(parse_layout(s)) == s);
  }
  CHECK(to_string(parse_layout(" ( 4 , 4 ) : ( 1 , 4 ) ")) == "(4,4):(1,4)");
  CHECK_THROWS_AS(parse_layout("(4,4)"), std::invalid_argument);
  CHECK_THROWS_AS(parse_layout("(4,x):(1,4)"), std::invalid_argument);
}
