#pragma once

#include <string>

#include "fmhasim/layout.hpp"

namespace fmhasim {

// tOrP: accumulator-of-GEMM-I registers restrided for the GEMM-II operand
// traversal, for tile shape (bM, bN, bK).
Layout gemm2_operand_view_layout(int bM, int bN, int bK);

// The layout demonstration printed by the `layouts` CLI subcommand, with
// each derived line checked against the expected kernel printouts.
struct LayoutDemo {
  std::string text;
  bool ok;
};
LayoutDemo layout_demo();

}  // namespace fmhasim
