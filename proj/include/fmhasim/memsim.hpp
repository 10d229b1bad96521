#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fmhasim/attention.hpp"
#include "fmhasim/layout.hpp"

namespace fmhasim {

enum class Region { Gmem, Smem, Rmem };
enum class TensorClass { Q, K, V, S, P, O };

const char* to_cstr(Region r);
const char* to_cstr(TensorClass t);

struct RegionCounters {
  int64_t bytesRead = 0;
  int64_t bytesWritten = 0;
  int64_t transactions = 0;
};

struct CopyEvent {
  Region src, dst;
  TensorClass tensor;
  int64_t bytes;
  int tileId;
};

// Byte sizes per tensor class. Operands default to f16, S/P accumulator
// width to f32, matching the kernel's precision choice.
struct ElemBytes {
  int64_t qkv = 2;
  int64_t sp = 4;
  int64_t o = 2;

  static ElemBytes for_precision(Precision prec) {
    if (prec == Precision::ExactF32) return {4, 4, 4};
    return {2, 4, 2};
  }
  int64_t of(TensorClass t) const {
    switch (t) {
      case TensorClass::S:
      case TensorClass::P:
        return sp;
      case TensorClass::O:
        return o;
      default:
        return qkv;
    }
  }
};

// Simulated gmem/smem/rmem with byte-exact counters and an event log.
class MemSim {
public:
  explicit MemSim(std::optional<int64_t> smemCapacityBytes = std::nullopt)
      : smemCapacity_(smemCapacityBytes) {}

  // A copy reads from src and writes to dst.
  void copy(Region src, Region dst, TensorClass tensor, int64_t bytes,
            int tileId = 0);

  void smem_alloc(int64_t bytes, const std::string& name);
  void smem_free(int64_t bytes);
  int64_t smem_peak() const { return smemPeak_; }

  const RegionCounters& counters(Region r) const;
  int64_t gmem_bytes(TensorClass t) const;  // read + written
  int64_t gmem_total() const;
  const std::vector<CopyEvent>& events() const { return events_; }

private:
  std::array<RegionCounters, 3> counters_{};
  std::map<std::pair<Region, TensorClass>, int64_t> gmemByClass_;
  std::vector<CopyEvent> events_;
  std::optional<int64_t> smemCapacity_;
  int64_t smemInUse_ = 0;
  int64_t smemPeak_ = 0;
};

struct RunReport {
  std::string config;
  std::array<RegionCounters, 3> regions{};
  std::map<TensorClass, int64_t> gmemBytesByClass;  // read + written
  int64_t smemPeak = 0;
  int64_t flops = 0;
  double maxRelError = 0.0;  // filled by callers that verified
  int64_t conflictDegree = 0;
  std::vector<CopyEvent> events;

  int64_t gmem_total() const;
  static std::string csv_header();
  std::string to_csv_rows() const;  // one row per region
  std::string to_json() const;
};

// Alg. 1 traffic: Q/K/V read, O written, S and P each written and read back
// through gmem per (batch, head).
RunReport run_standard_traced(const AttentionProblem& p, const ElemBytes& e);

// Alg. 2 traffic: only Q/K/V reads and O writes touch gmem; K and V are
// re-read in full once per Q-tile. Returns the fused output untouched by
// tracing (identical to fmha_forward).
struct TracedRun {
  Tensor4 output;
  RunReport report;
};
TracedRun run_fmha_traced(const AttentionProblem& p, const TileConfig& t,
                          Precision prec,
                          std::optional<int64_t> smemCapacityBytes = std::nullopt);

// smem bytes a config stages: Q tile + K tile + V tile.
int64_t smem_footprint_bytes(const TileConfig& t, int64_t d, const ElemBytes& e);

enum class Sweep { ColumnSweep, RowSweep };

// Worst-case shared-memory bank conflict degree over all 32-thread phases of
// a sweep: bank = (byteAddress / 4) mod 32, degree = max distinct addresses
// on one bank in a phase. Same-address multicast counts once.
int64_t bank_conflicts(const ComposedLayout& layout, Sweep sweep,
                       int64_t elemBytes);
int64_t bank_conflicts(const Layout& layout, Sweep sweep, int64_t elemBytes);

// Copy/GEMM overlap tracer after the kernel's mainloop issue order.
enum class EventKind { CopyQ, CopyK, CopyV, GemmI, Softmax, GemmII, CopyO };
const char* to_cstr(EventKind k);

struct TraceEvent {
  EventKind kind;
  int iter;  // K-tile index, -1 for pre/post loop events
  int64_t issueStep;
  int64_t completeStep;
  std::vector<int> deps;  // indices into ScheduleTrace::events
};

struct ScheduleTrace {
  std::vector<TraceEvent> events;

  std::string to_text() const;  // Gantt-like listing
  bool dependencies_respected() const;
  // K_{j+1} copy issues before GEMM-II_j completes, for every j.
  bool prefetch_overlap_holds() const;
  int find(EventKind k, int iter) const;  // -1 if absent
};

ScheduleTrace trace_overlap(int64_t nTilesOfK);

}  // namespace fmhasim
