#include "fmhasim/wgmma.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fmhasim {

ThreadValueLayout::ThreadValueLayout(int n) : atomN(n) {
  if (n < 16 || n % 16 != 0)
    throw std::invalid_argument("ThreadValueLayout: atomN must be a positive multiple of 16");
  layout = Layout(IntTuple{{4, 8, 4}, {2, 2, int64_t(n) / 8}},
                  IntTuple{{128, 1, 16}, {64, 8, 512}});
}

std::pair<int64_t, int64_t> tv_to_mn(const ThreadValueLayout& tv, int thread,
                                     int value) {
  if (thread < 0 || thread >= kWarpgroupThreads)
    throw std::out_of_range("tv_to_mn: thread out of range");
  if (value < 0 || value >= tv.values_per_thread())
    throw std::out_of_range("tv_to_mn: value out of range");
  int64_t v2Extent = tv.atomN / 8;
  IntTuple coord{{thread % 4, (thread / 4) % 8, thread / 32},
                 {value % 2, (value / 2) % 2, value / 4 % v2Extent}};
  int64_t idx = layout_fn_md(tv.layout, coord);
  return {idx % kAtomM, idx / kAtomM};
}

std::pair<int64_t, int64_t> fragment_rows(const Fragment& frag) {
  auto [m0, n0] = tv_to_mn(frag.layout, frag.threadId, 0);
  auto [m1, n1] = tv_to_mn(frag.layout, frag.threadId, 2);
  (void)n0;
  (void)n1;
  return {m0, m1};
}

std::vector<float> shfl_reduce(int width, const std::vector<float>& perLane,
                               const std::function<float(float, float)>& op) {
  if (width < 4 || width > 32 || (width & (width - 1)) != 0)
    throw std::invalid_argument("shfl_reduce: width must be a power of two in [4,32]");
  if (static_cast<int>(perLane.size()) != width)
    throw std::invalid_argument("shfl_reduce: lane count mismatch");
  std::vector<float> x = perLane;
  for (int offset = width / 2; offset >= 1; offset /= 2) {
    std::vector<float> next(width);
    for (int lane = 0; lane < width; ++lane)
      next[lane] = op(x[lane], x[lane ^ offset]);
    x = std::move(next);
  }
  return x;
}

Layout acc_fragment_layout(int bM, int bN) {
  if (bM % kAtomM != 0 || bN % 16 != 0)
    throw std::invalid_argument("acc_fragment_layout: invalid tile shape");
  int64_t restM = bM / kAtomM;
  IntTuple shape{{2, 2, int64_t(bN) / 8}, restM, 1};
  IntTuple stride{{1, 2, 4}, restM == 1 ? 0 : int64_t(bN) / 2, 0};
  return Layout(shape, stride);
}

Layout operand_fragment_layout(int bM, int bK) {
  if (bM % kAtomM != 0 || bK % 16 != 0)
    throw std::invalid_argument("operand_fragment_layout: invalid tile shape");
  int64_t restM = bM / kAtomM;
  int64_t restK = bK / 16;
  IntTuple shape{{2, 2, 2}, restM, restK};
  IntTuple stride{{1, 2, 4}, restM == 1 ? 0 : 8, restK == 1 ? 0 : 8 * restM};
  return Layout(shape, stride);
}

std::pair<float, float> threadwise_rowmax(Fragment& frag, float scale) {
  float max0 = std::numeric_limits<float>::lowest();
  float max1 = std::numeric_limits<float>::lowest();
  // values are traversed 2 even-row, 2 odd-row, repeating
  for (size_t k = 0; k < frag.values.size(); k += 4) {
    for (int j = 0; j < 2; ++j) {
      frag.values[k + j] *= scale;
      max0 = std::max(max0, frag.values[k + j]);
    }
    for (int j = 2; j < 4; ++j) {
      frag.values[k + j] *= scale;
      max1 = std::max(max1, frag.values[k + j]);
    }
  }
  return {max0, max1};
}

std::vector<float> simulated_tile_rowmax(const std::vector<float>& tile, int bM,
                                         int bN, float scale) {
  if (static_cast<int64_t>(tile.size()) != int64_t(bM) * bN)
    throw std::invalid_argument("simulated_tile_rowmax: tile size mismatch");
  ThreadValueLayout tv(bN);
  std::vector<float> rowMax(bM, std::numeric_limits<float>::lowest());
  auto maxOp = [](float a, float b) { return std::max(a, b); };
  for (int mb = 0; mb < bM / kAtomM; ++mb) {
    std::vector<float> max0(kWarpgroupThreads), max1(kWarpgroupThreads);
    for (int t = 0; t < kWarpgroupThreads; ++t) {
      Fragment frag(t, tv);
      for (int v = 0; v < tv.values_per_thread(); ++v) {
        auto [m, n] = tv_to_mn(tv, t, v);
        frag.values[v] = tile[(mb * kAtomM + m) * bN + n];
      }
      std::tie(max0[t], max1[t]) = threadwise_rowmax(frag, scale);
    }
    // quads of consecutive lanes each own one row pair
    for (int q = 0; q < kWarpgroupThreads / 4; ++q) {
      std::vector<float> lanes0(max0.begin() + 4 * q, max0.begin() + 4 * q + 4);
      std::vector<float> lanes1(max1.begin() + 4 * q, max1.begin() + 4 * q + 4);
      float quad0 = shfl_reduce(4, lanes0, maxOp)[0];
      float quad1 = shfl_reduce(4, lanes1, maxOp)[0];
      Fragment probe(4 * q, tv);
      auto [rowEven, rowOdd] = fragment_rows(probe);
      rowMax[mb * kAtomM + rowEven] = quad0;
      rowMax[mb * kAtomM + rowOdd] = quad1;
    }
  }
  return rowMax;
}

}  // namespace fmhasim
