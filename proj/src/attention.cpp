#include "fmhasim/attention.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "fmhasim/half.hpp"

namespace fmhasim {

AttentionProblem::AttentionProblem(Tensor4 q, Tensor4 k, Tensor4 v)
    : Q(std::move(q)), K(std::move(k)), V(std::move(v)) {
  if (Q.L != K.L || Q.N != K.N || Q.h != K.h || Q.d != K.d ||
      Q.L != V.L || Q.N != V.N || Q.h != V.h || Q.d != V.d)
    throw std::invalid_argument("AttentionProblem: Q/K/V shape mismatch");
  if (Q.N < 1 || Q.d < 1)
    throw std::invalid_argument("AttentionProblem: need N >= 1 and d >= 1");
  scale = float(1.0 / std::sqrt(double(Q.d)));
}

void validate_tiling(const AttentionProblem& p, const TileConfig& t) {
  if (t.bM < 1 || t.bN < 1 || p.N() % t.bM != 0 || p.N() % t.bN != 0)
    throw std::invalid_argument(
        "TileConfig: N = " + std::to_string(p.N()) +
        " must be divisible by bM = " + std::to_string(t.bM) +
        " and bN = " + std::to_string(t.bN));
}

SoftmaxState::SoftmaxState(int64_t bM_, int64_t d_)
    : bM(bM_), d(d_),
      rowMaxOld(bM_, std::numeric_limits<float>::lowest()),
      rowMaxNew(bM_, std::numeric_limits<float>::lowest()),
      rowSum(bM_, 0.0f),
      O(size_t(bM_) * d_, 0.0f) {}

std::vector<float> online_softmax_step(SoftmaxState& state,
                                       const std::vector<float>& S_tile,
                                       int64_t bN, bool firstTile) {
  const int64_t bM = state.bM;
  if (static_cast<int64_t>(S_tile.size()) != bM * bN)
    throw std::invalid_argument("online_softmax_step: tile size mismatch");
  std::vector<float> P(S_tile.size());
  for (int64_t r = 0; r < bM; ++r) {
    float tileMax = std::numeric_limits<float>::lowest();
    for (int64_t c = 0; c < bN; ++c)
      tileMax = std::max(tileMax, S_tile[r * bN + c]);
    state.rowMaxOld[r] = state.rowMaxNew[r];
    state.rowMaxNew[r] = std::max(state.rowMaxOld[r], tileMax);

    float rowsum = 0.0f;
    for (int64_t c = 0; c < bN; ++c) {
      float e = std::exp(S_tile[r * bN + c] - state.rowMaxNew[r]);
      P[r * bN + c] = e;
      rowsum += e;
    }
    if (firstTile) {
      // O = 0 here, no rescale (and exp(lowest - m) would be 0 anyway)
      state.rowSum[r] = rowsum;
    } else {
      float factor = std::exp(state.rowMaxOld[r] - state.rowMaxNew[r]);
      state.rowSum[r] = factor * state.rowSum[r] + rowsum;
      for (int64_t k = 0; k < state.d; ++k) state.O[r * state.d + k] *= factor;
    }
  }
  return P;
}

void rowwise_finalize(SoftmaxState& state) {
  for (int64_t r = 0; r < state.bM; ++r) {
    float inv = 1.0f / state.rowSum[r];
    for (int64_t k = 0; k < state.d; ++k) state.O[r * state.d + k] *= inv;
  }
}

void gemm_nt_accumulate(const float* A, const float* B, float* C, int64_t M,
                        int64_t Nc, int64_t Kc, Precision prec) {
  if (prec == Precision::F16Emu) {
    for (int64_t i = 0; i < M; ++i)
      for (int64_t j = 0; j < Nc; ++j) {
        float acc = C[i * Nc + j];
        for (int64_t k = 0; k < Kc; ++k)
          acc += f16_round(A[i * Kc + k]) * f16_round(B[j * Kc + k]);
        C[i * Nc + j] = acc;
      }
  } else {
    for (int64_t i = 0; i < M; ++i)
      for (int64_t j = 0; j < Nc; ++j) {
        float acc = C[i * Nc + j];
        for (int64_t k = 0; k < Kc; ++k)
          acc += A[i * Kc + k] * B[j * Kc + k];
        C[i * Nc + j] = acc;
      }
  }
}

namespace {

// N x d head slice as a row-major buffer
std::vector<float> head_matrix(const Tensor4& t, int64_t b, int64_t head) {
  std::vector<float> m(size_t(t.N) * t.d);
  for (int64_t n = 0; n < t.N; ++n)
    for (int64_t k = 0; k < t.d; ++k) m[n * t.d + k] = t.at(b, n, head, k);
  return m;
}

// rows x cols row-major -> cols x rows row-major
std::vector<float> transpose(const std::vector<float>& m, int64_t rows,
                             int64_t cols) {
  std::vector<float> r(m.size());
  for (int64_t i = 0; i < rows; ++i)
    for (int64_t j = 0; j < cols; ++j) r[j * rows + i] = m[i * cols + j];
  return r;
}

// One Q-tile of the fused mainloop; also the whole computation for a head
// when bM = bN = N.
void fmha_tile(const float* Qtile, const std::vector<float>& Kh,
               const std::vector<float>& Vth, int64_t bM, int64_t bN, int64_t N,
               int64_t d, float scale, Precision prec, SoftmaxState& state) {
  std::vector<float> S(size_t(bM) * bN);
  for (int64_t j = 0; j * bN < N; ++j) {
    std::fill(S.begin(), S.end(), 0.0f);
    gemm_nt_accumulate(Qtile, Kh.data() + j * bN * d, S.data(), bM, bN, d, prec);
    for (auto& s : S) s *= scale;
    std::vector<float> P = online_softmax_step(state, S, bN, j == 0);
    // GEMM-II: O += P * V_j, with V_j accessed through its transposed view
    std::vector<float> Vt(size_t(d) * bN);
    for (int64_t k = 0; k < d; ++k)
      for (int64_t r = 0; r < bN; ++r) Vt[k * bN + r] = Vth[k * N + j * bN + r];
    gemm_nt_accumulate(P.data(), Vt.data(), state.O.data(), bM, d, bN, prec);
  }
  rowwise_finalize(state);
}

}  // namespace

Tensor4 standard_attention(const AttentionProblem& p, Precision prec) {
  Tensor4 O(p.L(), p.N(), p.heads(), p.d());
  const int64_t N = p.N(), d = p.d();
  for (int64_t b = 0; b < p.L(); ++b)
    for (int64_t head = 0; head < p.heads(); ++head) {
      auto Qh = head_matrix(p.Q, b, head);
      auto Kh = head_matrix(p.K, b, head);
      auto Vth = transpose(head_matrix(p.V, b, head), N, d);
      SoftmaxState state(N, d);
      fmha_tile(Qh.data(), Kh, Vth, N, N, N, d, p.scale, prec, state);
      for (int64_t n = 0; n < N; ++n)
        for (int64_t k = 0; k < d; ++k) O.at(b, n, head, k) = state.O[n * d + k];
    }
  return O;
}

Tensor4 fmha_forward(const AttentionProblem& p, const TileConfig& t,
                     Precision prec) {
  validate_tiling(p, t);
  Tensor4 O(p.L(), p.N(), p.heads(), p.d());
  const int64_t N = p.N(), d = p.d();
  for (int64_t b = 0; b < p.L(); ++b)
    for (int64_t head = 0; head < p.heads(); ++head) {
      auto Qh = head_matrix(p.Q, b, head);
      auto Kh = head_matrix(p.K, b, head);
      auto Vth = transpose(head_matrix(p.V, b, head), N, d);
      for (int64_t i = 0; i * t.bM < N; ++i) {
        SoftmaxState state(t.bM, d);
        fmha_tile(Qh.data() + i * t.bM * d, Kh, Vth, t.bM, t.bN, N, d, p.scale,
                  prec, state);
        for (int64_t r = 0; r < t.bM; ++r)
          for (int64_t k = 0; k < d; ++k)
            O.at(b, i * t.bM + r, head, k) = state.O[r * d + k];
      }
    }
  return O;
}

OperandFragment convert_operand(const std::vector<float>& accValues,
                                const Layout& accLayout, const Layout& opLayout,
                                Precision prec) {
  OperandFragment out;
  out.layout = reshape_acc_to_operand(accLayout, opLayout);
  out.values = accValues;
  if (prec == Precision::F16Emu) {
    constexpr float kF16Max = 65504.0f;
    for (auto& v : out.values) {
      if (std::isfinite(v) && std::abs(v) > kF16Max) ++out.saturated;
      v = f16_round(v);
    }
  }
  return out;
}

int64_t attention_flops(int64_t L, int64_t N, int64_t h, int64_t d) {
  return 4 * N * N * d * h * L;
}

}  // namespace fmhasim
