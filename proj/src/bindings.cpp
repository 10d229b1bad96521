#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fmhasim/attention.hpp"
#include "fmhasim/layout.hpp"
#include "fmhasim/layout_demo.hpp"
#include "fmhasim/memsim.hpp"
#include "fmhasim/random.hpp"
#include "fmhasim/wgmma.hpp"

namespace py = pybind11;
using namespace fmhasim;

namespace {

Tensor4 tensor_from_array(py::array_t<float, py::array::c_style | py::array::forcecast> a) {
  if (a.ndim() != 4) throw std::invalid_argument("expected a (L,N,h,d) array");
  Tensor4 t(a.shape(0), a.shape(1), a.shape(2), a.shape(3));
  auto r = a.unchecked<4>();
  for (int64_t b = 0; b < t.L; ++b)
    for (int64_t n = 0; n < t.N; ++n)
      for (int64_t h = 0; h < t.h; ++h)
        for (int64_t k = 0; k < t.d; ++k) t.at(b, n, h, k) = r(b, n, h, k);
  return t;
}

py::array_t<float> array_from_tensor(const Tensor4& t) {
  py::array_t<float> a({t.L, t.N, t.h, t.d});
  auto w = a.mutable_unchecked<4>();
  for (int64_t b = 0; b < t.L; ++b)
    for (int64_t n = 0; n < t.N; ++n)
      for (int64_t h = 0; h < t.h; ++h)
        for (int64_t k = 0; k < t.d; ++k) w(b, n, h, k) = t.at(b, n, h, k);
  return a;
}

Precision precision_from_string(const std::string& s) {
  if (s == "f32") return Precision::ExactF32;
  if (s == "f16emu") return Precision::F16Emu;
  throw std::invalid_argument("precision must be 'f32' or 'f16emu'");
}

}  // namespace

PYBIND11_MODULE(_fmhasim, m) {
  m.doc() = "CPU model of the fused FlashAttention-2 forward pass";

  py::class_<Layout>(m, "Layout")
      .def(py::init([](const std::string& s) { return parse_layout(s); }))
      .def("__call__", [](const Layout& L, int64_t i) { return layout_fn(L, i); })
      .def("__str__", [](const Layout& L) { return to_string(L); })
      .def_property_readonly("size", [](const Layout& L) { return size(L); })
      .def_property_readonly("cosize", [](const Layout& L) { return cosize(L); });

  m.def("parse_layout", &parse_layout);
  m.def("compose",
        [](const Layout& a, const Layout& b) { return compose(a, b); });
  m.def("tile_to_shape", [](const Layout& atom, std::vector<int64_t> target) {
    std::vector<IntTuple> t(target.begin(), target.end());
    return tile_to_shape(atom, IntTuple(t));
  });
  m.def("reshape_acc_to_operand", &reshape_acc_to_operand);
  m.def("gemm2_operand_view_layout", &gemm2_operand_view_layout);

  m.def("tv_to_mn", [](int atomN, int thread, int value) {
    return tv_to_mn(ThreadValueLayout(atomN), thread, value);
  });

  m.def(
      "standard_attention",
      [](py::array_t<float> q, py::array_t<float> k, py::array_t<float> v,
         const std::string& precision) {
        AttentionProblem p(tensor_from_array(q), tensor_from_array(k),
                           tensor_from_array(v));
        return array_from_tensor(
            standard_attention(p, precision_from_string(precision)));
      },
      py::arg("q"), py::arg("k"), py::arg("v"), py::arg("precision") = "f32");

  m.def(
      "fmha_forward",
      [](py::array_t<float> q, py::array_t<float> k, py::array_t<float> v,
         int64_t bM, int64_t bN, const std::string& precision) {
        AttentionProblem p(tensor_from_array(q), tensor_from_array(k),
                           tensor_from_array(v));
        return array_from_tensor(
            fmha_forward(p, TileConfig{bM, bN}, precision_from_string(precision)));
      },
      py::arg("q"), py::arg("k"), py::arg("v"), py::arg("bM") = 64,
      py::arg("bN") = 64, py::arg("precision") = "f32");

  m.def("gaussian", [](int64_t L, int64_t N, int64_t h, int64_t d,
                       uint64_t seed) {
    return array_from_tensor(gaussian_tensor(L, N, h, d, seed));
  });

  m.def("attention_flops", &attention_flops);
  m.def("trace_overlap_text",
        [](int64_t nTilesOfK) { return trace_overlap(nTilesOfK).to_text(); });
  m.def("swizzle_conflict_comparison", []() {
    Layout plain = tile_to_shape(unswizzled_atom_k_major_128B(),
                                 IntTuple{int64_t(128), int64_t(64)});
    ComposedLayout swizzled = tile_to_shape(swizzle_atom_k_major_128B(),
                                            IntTuple{int64_t(128), int64_t(64)});
    return std::make_pair(bank_conflicts(plain, Sweep::ColumnSweep, 2),
                          bank_conflicts(swizzled, Sweep::ColumnSweep, 2));
  });
  m.def("layout_demo_text", []() { return layout_demo().text; });
}
