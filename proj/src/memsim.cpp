#include "fmhasim/memsim.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace fmhasim {

const char* to_cstr(Region r) {
  switch (r) {
    case Region::Gmem: return "gmem";
    case Region::Smem: return "smem";
    case Region::Rmem: return "rmem";
  }
  return "?";
}

const char* to_cstr(TensorClass t) {
  switch (t) {
    case TensorClass::Q: return "Q";
    case TensorClass::K: return "K";
    case TensorClass::V: return "V";
    case TensorClass::S: return "S";
    case TensorClass::P: return "P";
    case TensorClass::O: return "O";
  }
  return "?";
}

void MemSim::copy(Region src, Region dst, TensorClass tensor, int64_t bytes,
                  int tileId) {
  if (bytes <= 0) throw std::invalid_argument("MemSim::copy: bytes must be > 0");
  counters_[size_t(src)].bytesRead += bytes;
  counters_[size_t(src)].transactions += 1;
  counters_[size_t(dst)].bytesWritten += bytes;
  counters_[size_t(dst)].transactions += 1;
  if (src == Region::Gmem) gmemByClass_[{Region::Gmem, tensor}] += bytes;
  if (dst == Region::Gmem) gmemByClass_[{Region::Gmem, tensor}] += bytes;
  events_.push_back(CopyEvent{src, dst, tensor, bytes, tileId});
}

void MemSim::smem_alloc(int64_t bytes, const std::string& name) {
  smemInUse_ += bytes;
  if (smemCapacity_ && smemInUse_ > *smemCapacity_)
    throw std::runtime_error("smem capacity exceeded by allocation '" + name +
                             "': " + std::to_string(smemInUse_) + " > " +
                             std::to_string(*smemCapacity_) + " bytes");
  smemPeak_ = std::max(smemPeak_, smemInUse_);
}

void MemSim::smem_free(int64_t bytes) { smemInUse_ -= bytes; }

const RegionCounters& MemSim::counters(Region r) const {
  return counters_[size_t(r)];
}

int64_t MemSim::gmem_bytes(TensorClass t) const {
  auto it = gmemByClass_.find({Region::Gmem, t});
  return it == gmemByClass_.end() ? 0 : it->second;
}

int64_t MemSim::gmem_total() const {
  const auto& c = counters_[size_t(Region::Gmem)];
  return c.bytesRead + c.bytesWritten;
}

int64_t RunReport::gmem_total() const {
  const auto& c = regions[size_t(Region::Gmem)];
  return c.bytesRead + c.bytesWritten;
}

std::string RunReport::csv_header() {
  return "config,region,bytesRead,bytesWritten,transactions,conflictDegree,"
         "flops,maxRelError";
}

std::string RunReport::to_csv_rows() const {
  std::ostringstream os;
  for (size_t r = 0; r < 3; ++r) {
    char err[32];
    std::snprintf(err, sizeof(err), "%.9g", maxRelError);
    os << config << ',' << to_cstr(Region(r)) << ',' << regions[r].bytesRead
       << ',' << regions[r].bytesWritten << ',' << regions[r].transactions
       << ',' << conflictDegree << ',' << flops << ',' << err << '\n';
  }
  return os.str();
}

std::string RunReport::to_json() const {
  nlohmann::ordered_json j;
  j["config"] = config;
  for (size_t r = 0; r < 3; ++r) {
    nlohmann::ordered_json rj;
    rj["bytesRead"] = regions[r].bytesRead;
    rj["bytesWritten"] = regions[r].bytesWritten;
    rj["transactions"] = regions[r].transactions;
    j["regions"][to_cstr(Region(r))] = rj;
  }
  for (const auto& [t, bytes] : gmemBytesByClass)
    j["gmemBytesByClass"][to_cstr(t)] = bytes;
  j["smemPeak"] = smemPeak;
  j["flops"] = flops;
  j["maxRelError"] = maxRelError;
  j["conflictDegree"] = conflictDegree;
  return j.dump(2);
}

namespace {

RunReport finalize_report(const MemSim& sim, std::string config, int64_t flops) {
  RunReport rep;
  rep.config = std::move(config);
  for (size_t r = 0; r < 3; ++r) rep.regions[r] = sim.counters(Region(r));
  for (TensorClass t : {TensorClass::Q, TensorClass::K, TensorClass::V,
                        TensorClass::S, TensorClass::P, TensorClass::O})
    rep.gmemBytesByClass[t] = sim.gmem_bytes(t);
  rep.smemPeak = sim.smem_peak();
  rep.flops = flops;
  rep.events = sim.events();
  return rep;
}

}  // namespace

RunReport run_standard_traced(const AttentionProblem& p, const ElemBytes& e) {
  MemSim sim;
  const int64_t N = p.N(), d = p.d();
  for (int64_t b = 0; b < p.L(); ++b)
    for (int64_t head = 0; head < p.heads(); ++head) {
      (void)b;
      (void)head;
      sim.copy(Region::Gmem, Region::Smem, TensorClass::Q, N * d * e.qkv);
      sim.copy(Region::Gmem, Region::Smem, TensorClass::K, N * d * e.qkv);
      // GEMM-I result materialized, then read back for softmax
      sim.copy(Region::Rmem, Region::Gmem, TensorClass::S, N * N * e.sp);
      sim.copy(Region::Gmem, Region::Rmem, TensorClass::S, N * N * e.sp);
      // softmax output materialized, then reloaded with V for GEMM-II
      sim.copy(Region::Rmem, Region::Gmem, TensorClass::P, N * N * e.sp);
      sim.copy(Region::Gmem, Region::Rmem, TensorClass::P, N * N * e.sp);
      sim.copy(Region::Gmem, Region::Smem, TensorClass::V, N * d * e.qkv);
      sim.copy(Region::Rmem, Region::Gmem, TensorClass::O, N * d * e.o);
    }
  std::ostringstream cfg;
  cfg << "standard;N=" << N << ";d=" << d << ";h=" << p.heads()
      << ";L=" << p.L();
  return finalize_report(sim, cfg.str(),
                         attention_flops(p.L(), N, p.heads(), d));
}

int64_t smem_footprint_bytes(const TileConfig& t, int64_t d, const ElemBytes& e) {
  return t.bM * d * e.qkv + 2 * t.bN * d * e.qkv;
}

TracedRun run_fmha_traced(const AttentionProblem& p, const TileConfig& t,
                          Precision prec,
                          std::optional<int64_t> smemCapacityBytes) {
  validate_tiling(p, t);
  ElemBytes e = ElemBytes::for_precision(prec);
  MemSim sim(smemCapacityBytes);
  const int64_t N = p.N(), d = p.d();
  const int64_t qTileBytes = t.bM * d * e.qkv;
  const int64_t kvTileBytes = t.bN * d * e.qkv;

  sim.smem_alloc(qTileBytes, "Q tile");
  sim.smem_alloc(kvTileBytes, "K tile");
  sim.smem_alloc(kvTileBytes, "V tile");
  for (int64_t b = 0; b < p.L(); ++b)
    for (int64_t head = 0; head < p.heads(); ++head)
      for (int64_t i = 0; i * t.bM < N; ++i) {
        sim.copy(Region::Gmem, Region::Smem, TensorClass::Q, qTileBytes, int(i));
        for (int64_t j = 0; j * t.bN < N; ++j) {
          sim.copy(Region::Gmem, Region::Smem, TensorClass::K, kvTileBytes,
                   int(j));
          sim.copy(Region::Gmem, Region::Smem, TensorClass::V, kvTileBytes,
                   int(j));
        }
        // S, P, O stay in rmem; only the finished tile leaves
        sim.copy(Region::Rmem, Region::Gmem, TensorClass::O, t.bM * d * e.o,
                 int(i));
      }
  sim.smem_free(qTileBytes + 2 * kvTileBytes);

  std::ostringstream cfg;
  // semicolons keep the config usable as a single CSV field
  cfg << "fmha;N=" << N << ";d=" << d << ";h=" << p.heads() << ";L=" << p.L()
      << ";bM=" << t.bM << ";bN=" << t.bN;
  TracedRun run{fmha_forward(p, t, prec),
                finalize_report(sim, cfg.str(),
                                attention_flops(p.L(), N, p.heads(), d))};
  return run;
}

namespace {

int64_t conflicts_impl(const std::function<int64_t(int64_t)>& addr_of,
                       int64_t majorExtent, int64_t minorExtent,
                       const std::function<int64_t(int64_t, int64_t)>& linear) {
  int64_t worst = 1;
  for (int64_t c = 0; c < minorExtent; ++c) {
    for (int64_t base = 0; base < majorExtent; base += 32) {
      std::map<int64_t, std::set<int64_t>> perBank;
      for (int64_t t = base; t < std::min(base + 32, majorExtent); ++t) {
        int64_t byteAddr = addr_of(linear(t, c));
        perBank[(byteAddr / 4) % 32].insert(byteAddr);
      }
      for (const auto& [bank, addrs] : perBank)
        worst = std::max<int64_t>(worst, int64_t(addrs.size()));
    }
  }
  return worst;
}

}  // namespace

int64_t bank_conflicts(const ComposedLayout& layout, Sweep sweep,
                       int64_t elemBytes) {
  if (layout.inner.shape.is_leaf() || layout.inner.shape.rank() != 2)
    throw std::invalid_argument("bank_conflicts: expected a rank-2 tile layout");
  int64_t rows = size(layout.inner.shape[0]);
  int64_t cols = size(layout.inner.shape[1]);
  auto addr_of = [&](int64_t i) { return layout_fn(layout, i) * elemBytes; };
  auto colMajorIndex = [&](int64_t r, int64_t c) { return r + rows * c; };
  if (sweep == Sweep::ColumnSweep) {
    return conflicts_impl(addr_of, rows, cols, colMajorIndex);
  }
  return conflicts_impl(
      addr_of, cols, rows,
      [&](int64_t c, int64_t r) { return colMajorIndex(r, c); });
}

int64_t bank_conflicts(const Layout& layout, Sweep sweep, int64_t elemBytes) {
  return bank_conflicts(ComposedLayout(layout), sweep, elemBytes);
}

const char* to_cstr(EventKind k) {
  switch (k) {
    case EventKind::CopyQ: return "COPY-Q";
    case EventKind::CopyK: return "COPY-K";
    case EventKind::CopyV: return "COPY-V";
    case EventKind::GemmI: return "GEMM-I";
    case EventKind::Softmax: return "SOFTMAX";
    case EventKind::GemmII: return "GEMM-II";
    case EventKind::CopyO: return "COPY-O";
  }
  return "?";
}

ScheduleTrace trace_overlap(int64_t nTilesOfK) {
  if (nTilesOfK < 1)
    throw std::invalid_argument("trace_overlap: need at least one K tile");
  constexpr int64_t kCopyLatency = 2;
  constexpr int64_t kGemmLatency = 2;
  ScheduleTrace tr;
  int64_t step = 0;
  auto issue = [&](EventKind kind, int iter, std::vector<int> deps,
                   int64_t latency) {
    int64_t at = step;
    for (int dep : deps) at = std::max(at, tr.events[dep].completeStep);
    tr.events.push_back(TraceEvent{kind, iter, at, at + latency, std::move(deps)});
    step = at + 1;
    return int(tr.events.size() - 1);
  };

  int copyQ = issue(EventKind::CopyQ, -1, {}, kCopyLatency);
  int copyK = issue(EventKind::CopyK, 0, {}, kCopyLatency);
  int lastGemmII = -1;
  for (int j = 0; j < nTilesOfK; ++j) {
    int copyV = issue(EventKind::CopyV, j, {}, kCopyLatency);
    int gemmI = issue(EventKind::GemmI, j, {copyQ, copyK}, kGemmLatency);
    if (j + 1 < nTilesOfK)
      copyK = issue(EventKind::CopyK, j + 1, {}, kCopyLatency);
    int softmax = issue(EventKind::Softmax, j, {gemmI}, 1);
    lastGemmII = issue(EventKind::GemmII, j, {softmax, copyV}, kGemmLatency);
  }
  issue(EventKind::CopyO, -1, {lastGemmII}, kCopyLatency);
  return tr;
}

std::string ScheduleTrace::to_text() const {
  std::ostringstream os;
  os << "event      iter  issue  complete  deps\n";
  for (size_t i = 0; i < events.size(); ++i) {
    const auto& ev = events[i];
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-10s %4d  %5lld  %8lld  ", to_cstr(ev.kind),
                  ev.iter, (long long)ev.issueStep, (long long)ev.completeStep);
    os << buf;
    for (size_t k = 0; k < ev.deps.size(); ++k) {
      const auto& d = events[ev.deps[k]];
      if (k) os << ' ';
      os << to_cstr(d.kind) << '[' << d.iter << ']';
    }
    os << '\n';
  }
  return os.str();
}

bool ScheduleTrace::dependencies_respected() const {
  for (const auto& ev : events)
    for (int dep : ev.deps)
      if (ev.issueStep < events[dep].completeStep) return false;
  return true;
}

int ScheduleTrace::find(EventKind k, int iter) const {
  for (size_t i = 0; i < events.size(); ++i)
    if (events[i].kind == k && events[i].iter == iter) return int(i);
  return -1;
}

bool ScheduleTrace::prefetch_overlap_holds() const {
  int maxIter = -1;
  for (const auto& ev : events)
    if (ev.kind == EventKind::GemmII) maxIter = std::max(maxIter, ev.iter);
  for (int j = 0; j + 1 <= maxIter; ++j) {
    int copyK = find(EventKind::CopyK, j + 1);
    int gemmII = find(EventKind::GemmII, j);
    if (copyK < 0 || gemmII < 0) return false;
    if (events[copyK].issueStep >= events[gemmII].completeStep) return false;
  }
  return maxIter >= 0;
}

}  // namespace fmhasim
