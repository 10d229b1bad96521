#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "fmhasim/layout.hpp"

namespace fmhasim {

inline constexpr int kWarpgroupThreads = 128;
inline constexpr int kAtomM = 64;

// (T,V) -> (M,N) map of the warpgroup MMA accumulator with a 64 x atomN tile.
// atomN = 64 gives CLayout_64x64, atomN = 16 the operand ALayout_64x16.
struct ThreadValueLayout {
  Layout layout;
  int atomN;

  explicit ThreadValueLayout(int atomN);
  int values_per_thread() const { return kAtomM * atomN / kWarpgroupThreads; }
};

// Atom-local coordinates; the map over all (thread, value) pairs is a
// bijection onto [0,64) x [0,atomN).
std::pair<int64_t, int64_t> tv_to_mn(const ThreadValueLayout& tv, int thread,
                                     int value);

// Per-simulated-thread slice of one accumulator atom.
struct Fragment {
  int threadId;
  ThreadValueLayout layout;
  std::vector<float> values;  // accumulator precision

  Fragment(int thread, ThreadValueLayout tv)
      : threadId(thread), layout(std::move(tv)),
        values(layout.values_per_thread(), 0.0f) {}
};

// The two distinct M-rows a thread's values touch within an atom.
std::pair<int64_t, int64_t> fragment_rows(const Fragment& frag);

// Butterfly XOR-shuffle reduction: every lane ends up with the op-fold of all
// lanes. Width must be a power of two in {4,...,32}.
std::vector<float> shfl_reduce(int width, const std::vector<float>& perLane,
                               const std::function<float(float, float)>& op);

// Per-thread register layouts printed by the kernel for a given tile shape.
// Fragment values sit contiguously in rmem, rest modes tiled column-major;
// extent-1 rest modes carry stride 0.
Layout acc_fragment_layout(int bM, int bN);      // tSrS
Layout operand_fragment_layout(int bM, int bK);  // tOrS

// Scales frag.values in place and returns the threadwise maxima of the
// thread's even/odd rows, traversed in the replicated-Z (2+2) order.
std::pair<float, float> threadwise_rowmax(Fragment& frag, float scale);

// Full 128-thread simulation of the tile rowmax of an bM x bN score tile
// (row-major input): threadwise maxima combined with quad shuffle reductions
// and across rest tiles. Exercises the same dataflow as the kernel.
std::vector<float> simulated_tile_rowmax(const std::vector<float>& tile, int bM,
                                         int bN, float scale);

}  // namespace fmhasim
