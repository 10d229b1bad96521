#include "fmhasim/layout.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

namespace fmhasim {

Layout::Layout(IntTuple s, IntTuple d) : shape(std::move(s)), stride(std::move(d)) {
  if (!congruent(shape, stride))
    throw std::invalid_argument("Layout: shape and stride not congruent: " +
                                to_string(shape) + " vs " + to_string(stride));
}

int64_t size(const Layout& L) { return size(L.shape); }

int64_t cosize(const Layout& L) {
  if (size(L) == 0) return 0;
  auto n = flatten(L.shape);
  auto d = flatten(L.stride);
  int64_t c = 1;
  for (size_t k = 0; k < n.size(); ++k) c += (n[k] - 1) * d[k];
  return c;
}

int64_t layout_fn(const Layout& L, int64_t i) {
  auto n = flatten(L.shape);
  auto d = flatten(L.stride);
  auto digits = colex_decompose(i, n);
  int64_t r = 0;
  for (size_t k = 0; k < n.size(); ++k) r += digits[k] * d[k];
  return r;
}

static int64_t md_eval(const IntTuple& coord, const IntTuple& shape,
                       const IntTuple& stride) {
  if (shape.is_leaf()) {
    if (!coord.is_leaf())
      throw std::invalid_argument("layout_fn_md: coord not congruent to shape");
    int64_t a = coord.value();
    if (a < 0 || a >= shape.value())
      throw std::out_of_range("layout_fn_md: coordinate out of range");
    return a * stride.value();
  }
  if (coord.is_leaf() || coord.rank() != shape.rank())
    throw std::invalid_argument("layout_fn_md: coord not congruent to shape");
  int64_t r = 0;
  for (size_t k = 0; k < shape.rank(); ++k)
    r += md_eval(coord[k], shape[k], stride[k]);
  return r;
}

int64_t layout_fn_md(const Layout& L, const IntTuple& coord) {
  return md_eval(coord, L.shape, L.stride);
}

Layout make_col_major(int64_t m, int64_t n) {
  return Layout(IntTuple{m, n}, IntTuple{1, m});
}

Layout make_row_major(int64_t m, int64_t n) {
  return Layout(IntTuple{m, n}, IntTuple{n, 1});
}

int64_t layout_fn(const ComposedLayout& L, int64_t i) {
  int64_t r = layout_fn(L.inner, i);
  return L.post ? L.post->apply(r) : r;
}

int64_t layout_fn_md(const ComposedLayout& L, const IntTuple& coord) {
  int64_t r = layout_fn_md(L.inner, coord);
  return L.post ? L.post->apply(r) : r;
}

namespace {

struct ModeList {
  std::vector<int64_t> shape;
  std::vector<int64_t> stride;
};

[[noreturn]] void composition_error(const Layout& A, int64_t n, int64_t d) {
  throw std::invalid_argument("compose: mode " + std::to_string(n) + ":" +
                              std::to_string(d) +
                              " does not factor through shape " +
                              to_string(A.shape));
}

// Compose the flattened modes of A with a single mode n:d of B.
// The last mode of A is treated as extended (canonical domain extension).
ModeList compose_mode(const Layout& A, const std::vector<int64_t>& s,
                      const std::vector<int64_t>& t, int64_t n, int64_t d) {
  if (n == 1) return {{1}, {0}};
  if (d == 0) return {{n}, {0}};
  ModeList out;
  int64_t rest = n;
  int64_t rd = d;
  for (size_t k = 0; k < s.size() && rest > 1; ++k) {
    bool last = (k + 1 == s.size());
    if (!last) {
      if (rd >= s[k]) {
        if (rd % s[k] != 0) composition_error(A, n, d);
        rd /= s[k];
        continue;
      }
      if (s[k] % rd != 0) composition_error(A, n, d);
      int64_t avail = s[k] / rd;
      int64_t take = std::min(avail, rest);
      if (rest % take != 0) composition_error(A, n, d);
      out.shape.push_back(take);
      out.stride.push_back(t[k] * rd);
      rest /= take;
      if (rest > 1 && take < avail) composition_error(A, n, d);
      rd = 1;
    } else {
      // extended mode: unbounded extent at stride t[k]*rd
      out.shape.push_back(rest);
      out.stride.push_back(t[k] * rd);
      rest = 1;
    }
  }
  if (rest > 1) composition_error(A, n, d);
  if (out.shape.empty()) return {{1}, {0}};
  return out;
}

void compose_tree(const Layout& A, const std::vector<int64_t>& s,
                  const std::vector<int64_t>& t, const IntTuple& bShape,
                  const IntTuple& bStride, IntTuple& outShape,
                  IntTuple& outStride) {
  if (bShape.is_leaf()) {
    ModeList m = compose_mode(A, s, t, bShape.value(), bStride.value());
    if (m.shape.size() == 1) {
      outShape = IntTuple(m.shape[0]);
      outStride = IntTuple(m.stride[0]);
    } else {
      std::vector<IntTuple> sh, st;
      for (size_t k = 0; k < m.shape.size(); ++k) {
        sh.emplace_back(m.shape[k]);
        st.emplace_back(m.stride[k]);
      }
      outShape = IntTuple(std::move(sh));
      outStride = IntTuple(std::move(st));
    }
    return;
  }
  std::vector<IntTuple> sh(bShape.rank()), st(bShape.rank());
  for (size_t k = 0; k < bShape.rank(); ++k)
    compose_tree(A, s, t, bShape[k], bStride[k], sh[k], st[k]);
  outShape = IntTuple(std::move(sh));
  outStride = IntTuple(std::move(st));
}

}  // namespace

Layout compose(const Layout& A, const Layout& B) {
  auto s = flatten(A.shape);
  auto t = flatten(A.stride);
  IntTuple shape, stride;
  compose_tree(A, s, t, B.shape, B.stride, shape, stride);
  Layout R(shape, stride);
#ifndef NDEBUG
  // The algebraic divisibility checks are not comprehensive; verify pointwise
  // on small domains.
  if (int64_t dom = size(B); dom <= (int64_t(1) << 16)) {
    for (int64_t i = 0; i < dom; ++i)
      assert(layout_fn(R, i) == layout_fn(A, layout_fn(B, i)));
  }
#endif
  return R;
}

ComposedLayout compose(const ComposedLayout& A, const Layout& B) {
  ComposedLayout R(compose(A.inner, B));
  R.post = A.post;
  return R;
}

Layout tile_to_shape(const Layout& atom, const IntTuple& target) {
  if (target.is_leaf() || target.rank() != atom.shape.rank())
    throw std::invalid_argument("tile_to_shape: target rank mismatch");
  size_t r = atom.shape.rank();
  std::vector<int64_t> repeat(r);
  for (size_t k = 0; k < r; ++k) {
    int64_t extent = target[k].value();
    int64_t a = size(atom.shape[k]);
    if (a <= 0 || extent <= 0 || extent % a != 0)
      throw std::invalid_argument(
          "tile_to_shape: target extent " + std::to_string(extent) +
          " is not a positive multiple of atom extent " + std::to_string(a));
    repeat[k] = extent / a;
  }
  int64_t atomSize = size(atom);
  std::vector<IntTuple> sh, st;
  int64_t tileStride = atomSize;
  for (size_t k = 0; k < r; ++k) {
    if (repeat[k] == 1) {
      sh.push_back(atom.shape[k]);
      st.push_back(atom.stride[k]);
    } else {
      sh.push_back(IntTuple{atom.shape[k], IntTuple(repeat[k])});
      st.push_back(IntTuple{atom.stride[k], IntTuple(tileStride)});
    }
    tileStride *= repeat[k];
  }
  if (r == 1) return Layout(sh[0], st[0]);
  return Layout(IntTuple(std::move(sh)), IntTuple(std::move(st)));
}

ComposedLayout tile_to_shape(const ComposedLayout& atom, const IntTuple& target) {
  ComposedLayout R(tile_to_shape(atom.inner, target));
  R.post = atom.post;
  return R;
}

Layout reshape_acc_to_operand(const Layout& acc, const Layout& op) {
  if (size(acc) != size(op))
    throw std::invalid_argument("reshape_acc_to_operand: size mismatch (" +
                                std::to_string(size(acc)) + " vs " +
                                std::to_string(size(op)) + ")");
  if (acc.shape == op.shape && acc.stride == op.stride) return op;
  if (acc.shape.is_leaf() || acc.shape.rank() != 3 || acc.shape[0].rank() != 3 ||
      op.shape.is_leaf() || op.shape.rank() != 3 || op.shape[0].rank() != 3)
    throw std::invalid_argument(
        "reshape_acc_to_operand: expected ((v0,v1,v2),restM,restK) layouts");
  auto accV = flatten(acc.stride[0]);
  int64_t accRestM = acc.stride[1].value();
  int64_t opV2Extent = op.shape[0][2].value();
  IntTuple stride{{IntTuple(accV[0]), IntTuple(accV[1]), IntTuple(accV[2])},
                  IntTuple(accRestM),
                  IntTuple(accV[2] * opV2Extent)};
  return Layout(op.shape, stride);
}

std::string to_string(const Layout& L) {
  return to_string(L.shape) + ":" + to_string(L.stride);
}

std::string to_string(const ComposedLayout& L) {
  if (!L.post) return to_string(L.inner);
  std::ostringstream os;
  os << "Sw<" << L.post->bits << "," << L.post->base << "," << L.post->shift
     << "> o " << to_string(L.inner);
  return os.str();
}

Layout parse_layout(const std::string& s) {
  // split at the top-level ':'; tuples never contain one
  auto pos = s.find(':');
  if (pos == std::string::npos)
    throw std::invalid_argument("parse_layout: missing ':' in \"" + s + "\"");
  return Layout(parse_int_tuple(s.substr(0, pos)),
                parse_int_tuple(s.substr(pos + 1)));
}

ComposedLayout swizzle_atom_k_major_128B() {
  return ComposedLayout(unswizzled_atom_k_major_128B(), Swizzle{3, 3, 3});
}

Layout unswizzled_atom_k_major_128B() { return make_row_major(8, 64); }

}  // namespace fmhasim
