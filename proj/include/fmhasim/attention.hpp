#pragma once

#include <vector>

#include "fmhasim/layout.hpp"
#include "fmhasim/tensor.hpp"

namespace fmhasim {

// f16-operand emulation rounds operands to binary16 before each GEMM;
// accumulation is always f32.
enum class Precision { ExactF32, F16Emu };

struct AttentionProblem {
  Tensor4 Q, K, V;
  float scale;  // 1/sqrt(d)

  AttentionProblem(Tensor4 q, Tensor4 k, Tensor4 v);
  int64_t L() const { return Q.L; }
  int64_t N() const { return Q.N; }
  int64_t heads() const { return Q.h; }
  int64_t d() const { return Q.d; }
};

struct TileConfig {
  int64_t bM;  // Q-tile rows (QBLK)
  int64_t bN;  // K/V-tile rows (KBLK); bK = d, un-tiled
};

void validate_tiling(const AttentionProblem& p, const TileConfig& t);

// Running softmax state for one bM x d output tile.
struct SoftmaxState {
  int64_t bM, d;
  std::vector<float> rowMaxOld, rowMaxNew;  // bM x 2 rowmax, init lowest
  std::vector<float> rowSum;                // init 0
  std::vector<float> O;                     // bM x d accumulator, init 0

  SoftmaxState(int64_t bM_, int64_t d_);
};

// One inner-loop softmax update. S must already carry the 1/sqrt(d) scale.
// Updates (m, Sigma), rescales O (skipped on the first tile, where O = 0),
// and returns the unnormalized P tile exp(S - m_new).
std::vector<float> online_softmax_step(SoftmaxState& state,
                                       const std::vector<float>& S_tile,
                                       int64_t bN, bool firstTile);

// Final O_i = (1/Sigma_i) O_i. A zero Sigma row (all -inf scores) yields NaN.
void rowwise_finalize(SoftmaxState& state);

// Alg. 1: S and P materialized per (batch, head); math route shared with the
// fused engine so a degenerate single-tile run matches bit for bit.
Tensor4 standard_attention(const AttentionProblem& p,
                           Precision prec = Precision::ExactF32);

// Alg. 2: tiled mainloop with online softmax; S and P never leave the tile.
Tensor4 fmha_forward(const AttentionProblem& p, const TileConfig& t,
                     Precision prec = Precision::ExactF32);

// Accumulator fragment values rounded to operand precision, paired with the
// reshaped operand layout. Rounding and reshaping are independent.
struct OperandFragment {
  std::vector<float> values;
  Layout layout;
  int64_t saturated = 0;  // values clamped at the f16 max
};
OperandFragment convert_operand(const std::vector<float>& accValues,
                                const Layout& accLayout, const Layout& opLayout,
                                Precision prec);

// C[i][j] += sum_k A[i][k] * B[j][k], all row-major. Rounds operands to f16
// in emulation mode. Shared by both attention routes.
void gemm_nt_accumulate(const float* A, const float* B, float* C, int64_t M,
                        int64_t Nc, int64_t Kc, Precision prec);

// FLOP convention: dominant matmul terms only, 4 * N^2 * d per head.
int64_t attention_flops(int64_t L, int64_t N, int64_t h, int64_t d);

}  // namespace fmhasim
