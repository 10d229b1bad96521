#include "fmhasim/layout_demo.hpp"

#include <sstream>

#include "fmhasim/wgmma.hpp"

namespace fmhasim {

Layout gemm2_operand_view_layout(int bM, int bN, int bK) {
  return reshape_acc_to_operand(acc_fragment_layout(bM, bN),
                                operand_fragment_layout(bM, bK));
}

LayoutDemo layout_demo() {
  std::ostringstream os;
  bool ok = true;
  auto line = [&](const std::string& label, const std::string& got,
                  const std::string& want) {
    bool match = got == want;
    ok = ok && match;
    os << label << ": " << got;
    if (!match) os << "   MISMATCH, expected " << want;
    os << '\n';
  };

  os << "column-major (4,4):(1,4) maps [0,16) to:";
  for (int i = 0; i < 16; ++i) os << ' ' << layout_fn(make_col_major(4, 4), i);
  os << '\n';

  {
    std::ostringstream seq;
    for (int i = 0; i < 16; ++i) {
      if (i) seq << ',';
      seq << layout_fn(make_row_major(4, 4), i);
    }
    line("row-major (4,4):(4,1) sequence", seq.str(),
         "0,4,8,12,1,5,9,13,2,6,10,14,3,7,11,15");
  }

  os << "\ntile (bM,bN,bK) = (128,128,128)\n";
  line("tSrS", to_string(acc_fragment_layout(128, 128)),
       "((2,2,16),2,1):((1,2,4),64,0)");
  line("tOrS", to_string(operand_fragment_layout(128, 128)),
       "((2,2,2),2,8):((1,2,4),8,16)");
  line("tOrPLayout", to_string(gemm2_operand_view_layout(128, 128, 128)),
       "((2,2,2),2,8):((1,2,4),64,8)");

  os << "\ntile (bM,bN,bK) = (64,128,128)\n";
  line("tSrS", to_string(acc_fragment_layout(64, 128)),
       "((2,2,16),1,1):((1,2,4),0,0)");
  line("tOrS", to_string(operand_fragment_layout(64, 128)),
       "((2,2,2),1,8):((1,2,4),0,8)");
  // with a single M atom the reshape is the identity
  line("tOrPLayout", to_string(gemm2_operand_view_layout(64, 128, 128)),
       to_string(operand_fragment_layout(64, 128)));

  return {os.str(), ok};
}

}  // namespace fmhasim
