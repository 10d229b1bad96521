#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "fmhasim/attention.hpp"
#include "fmhasim/layout_demo.hpp"
#include "fmhasim/memsim.hpp"
#include "fmhasim/random.hpp"
#include "fmhasim/wgmma.hpp"

using namespace fmhasim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitVerify = 3;
constexpr int kExitGolden = 4;

struct Options {
  int64_t N = 256;
  int64_t d = 64;
  int64_t h = 2;
  int64_t L = 1;
  int64_t bM = 64;
  int64_t bN = 64;
  std::string precision = "f32";
  uint64_t seed = 42;
  int iterations = 1;
  std::string format = "text";
  std::string out;
};

Precision parse_precision(const std::string& s) {
  if (s == "f32") return Precision::ExactF32;
  if (s == "f16emu") return Precision::F16Emu;
  throw CLI::ValidationError("--precision must be f32 or f16emu");
}

double tolerance_for(Precision prec) {
  return prec == Precision::ExactF32 ? 1e-5 : 5e-2;
}

void emit(const Options& opt, const std::string& text) {
  if (opt.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream os(opt.out);
  if (!os) throw std::runtime_error("cannot open output file " + opt.out);
  os << text;
}

struct ErrorLocation {
  double maxRel = 0.0;
  int64_t b = 0, head = 0, row = 0, col = 0;
};

// Elementwise |a-b| / max(|b|, 1): relative for large magnitudes, absolute
// near zero where a pure ratio is ill-conditioned.
ErrorLocation max_rel_error(const Tensor4& got, const Tensor4& want) {
  ErrorLocation loc;
  for (int64_t b = 0; b < want.L; ++b)
    for (int64_t n = 0; n < want.N; ++n)
      for (int64_t head = 0; head < want.h; ++head)
        for (int64_t k = 0; k < want.d; ++k) {
          double w = want.at(b, n, head, k);
          double rel = std::abs(got.at(b, n, head, k) - w) /
                       std::max(std::abs(w), 1.0);
          if (rel > loc.maxRel) loc = {rel, b, head, n, k};
        }
  return loc;
}

AttentionProblem make_problem(const Options& opt) {
  return AttentionProblem(
      gaussian_tensor(opt.L, opt.N, opt.h, opt.d, opt.seed),
      gaussian_tensor(opt.L, opt.N, opt.h, opt.d, opt.seed + 1),
      gaussian_tensor(opt.L, opt.N, opt.h, opt.d, opt.seed + 2));
}

struct CellResult {
  RunReport report;
  ErrorLocation err;
  bool pass;
};

CellResult run_cell(const AttentionProblem& p, const TileConfig& t,
                    Precision prec) {
  TracedRun run = run_fmha_traced(p, t, prec);
  Tensor4 ref = standard_attention(p, Precision::ExactF32);
  CellResult cell{std::move(run.report), max_rel_error(run.output, ref), false};
  cell.report.maxRelError = cell.err.maxRel;
  ComposedLayout staged =
      tile_to_shape(swizzle_atom_k_major_128B(), IntTuple{t.bN, p.d()});
  cell.report.conflictDegree = bank_conflicts(staged, Sweep::ColumnSweep, 2);
  cell.pass = cell.err.maxRel <= tolerance_for(prec);
  return cell;
}

int cmd_verify(const Options& opt) {
  Precision prec = parse_precision(opt.precision);
  AttentionProblem p = make_problem(opt);
  TileConfig t{opt.bM, opt.bN};
  validate_tiling(p, t);

  auto t0 = std::chrono::steady_clock::now();
  CellResult cell = run_cell(p, t, prec);
  for (int it = 1; it < opt.iterations; ++it) fmha_forward(p, t, prec);
  auto t1 = std::chrono::steady_clock::now();

  std::ostringstream os;
  if (opt.format == "csv") {
    os << RunReport::csv_header() << '\n' << cell.report.to_csv_rows();
  } else if (opt.format == "json") {
    os << cell.report.to_json() << '\n';
  } else {
    os << "config: " << cell.report.config << '\n';
    char buf[128];
    std::snprintf(buf, sizeof(buf), "max relative error: %.9g (tolerance %g)\n",
                  cell.err.maxRel, tolerance_for(prec));
    os << buf;
    os << "gmem bytes: " << cell.report.gmem_total()
       << "  smem peak: " << cell.report.smemPeak
       << "  flops: " << cell.report.flops << '\n';
    if (opt.iterations > 1)
      os << "timing (informational): "
         << std::chrono::duration<double>(t1 - t0).count() << " s over "
         << opt.iterations << " iterations\n";
    os << (cell.pass ? "PASS" : "FAIL") << '\n';
  }
  emit(opt, os.str());
  if (!cell.pass) {
    std::cerr << "verification failed at (b=" << cell.err.b
              << ",h=" << cell.err.head << ",row=" << cell.err.row
              << ",col=" << cell.err.col << "): rel error " << cell.err.maxRel
              << '\n';
    return kExitVerify;
  }
  return kExitOk;
}

int cmd_sweep(const Options& opt) {
  Precision prec = parse_precision(opt.precision);
  AttentionProblem p = make_problem(opt);
  Tensor4 ref = standard_attention(p, Precision::ExactF32);
  bool allPass = true;
  std::vector<RunReport> reports;
  for (int64_t bM : {64, 128})
    for (int64_t bN : {64, 128}) {
      TileConfig t{bM, bN};
      validate_tiling(p, t);
      TracedRun run = run_fmha_traced(p, t, prec);
      ErrorLocation err = max_rel_error(run.output, ref);
      run.report.maxRelError = err.maxRel;
      ComposedLayout staged =
          tile_to_shape(swizzle_atom_k_major_128B(), IntTuple{bN, p.d()});
      run.report.conflictDegree = bank_conflicts(staged, Sweep::ColumnSweep, 2);
      allPass = allPass && err.maxRel <= tolerance_for(prec);
      reports.push_back(std::move(run.report));
    }

  std::ostringstream os;
  if (opt.format == "json") {
    os << "[\n";
    for (size_t i = 0; i < reports.size(); ++i)
      os << reports[i].to_json() << (i + 1 < reports.size() ? ",\n" : "\n");
    os << "]\n";
  } else {
    os << RunReport::csv_header() << '\n';
    for (const auto& rep : reports) {
      const auto& g = rep.regions[size_t(Region::Gmem)];
      char errbuf[32];
      std::snprintf(errbuf, sizeof(errbuf), "%.9g", rep.maxRelError);
      os << rep.config << ",gmem," << g.bytesRead << ',' << g.bytesWritten
         << ',' << g.transactions << ',' << rep.conflictDegree << ','
         << rep.flops << ',' << errbuf << '\n';
    }
  }
  emit(opt, os.str());
  return allPass ? kExitOk : kExitVerify;
}

int cmd_trace(const Options& opt) {
  Options o = opt;
  AttentionProblem p = make_problem(o);
  TileConfig t{opt.bM, opt.bN};
  validate_tiling(p, t);
  ScheduleTrace tr = trace_overlap(opt.N / opt.bN);
  std::ostringstream os;
  os << tr.to_text();
  bool ok = tr.dependencies_respected() &&
            (opt.N / opt.bN < 2 || tr.prefetch_overlap_holds());
  os << "prefetch overlap: " << (ok ? "PASS" : "FAIL") << '\n';
  emit(opt, os.str());
  return kExitOk;
}

int cmd_layouts(const Options& opt, int tvAtomN) {
  std::ostringstream os;
  LayoutDemo demo = layout_demo();
  os << demo.text;
  if (tvAtomN > 0) {
    ThreadValueLayout tv(tvAtomN);
    os << "\nthread,value,m,n\n";
    for (int t = 0; t < kWarpgroupThreads; ++t)
      for (int v = 0; v < tv.values_per_thread(); ++v) {
        auto [m, n] = tv_to_mn(tv, t, v);
        os << t << ',' << v << ',' << m << ',' << n << '\n';
      }
  }
  emit(opt, os.str());
  return demo.ok ? kExitOk : kExitGolden;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "fmha-sim: CPU model of the fused FlashAttention-2 forward pass\n"
      "Exit codes: 0 success, 2 configuration error, 3 verification failure,\n"
      "4 golden-layout mismatch."};
  app.require_subcommand(0, 1);

  Options opt;
  app.add_option("--seqlen", opt.N, "sequence length N");
  app.add_option("--headdim", opt.d, "head dimension d");
  app.add_option("--heads", opt.h, "head count");
  app.add_option("--batch", opt.L, "batch size");
  app.add_option("--tile-q", opt.bM, "Q tile rows (bM)");
  app.add_option("--tile-k", opt.bN, "K/V tile rows (bN)");
  app.add_option("--precision", opt.precision, "f32 or f16emu");
  app.add_option("--seed", opt.seed, "PRNG seed (mt19937_64 + Box-Muller)");
  app.add_option("--iterations", opt.iterations,
                 "repeat count, affects timing lines only");
  app.add_option("--format", opt.format, "csv, json, or text");
  app.add_option("--out", opt.out, "write output to PATH instead of stdout");
  bool printLayouts = false;
  app.add_flag("--print-layouts", printLayouts,
               "print the layout demonstration and exit");

  auto* verify = app.add_subcommand("verify", "fused engine vs dense oracle");
  auto* sweep = app.add_subcommand("sweep", "all four (bM,bN) tile shapes, CSV");
  auto* trace = app.add_subcommand("trace", "copy/GEMM overlap schedule");
  auto* layouts = app.add_subcommand("layouts", "layout demonstration dump");
  // shared flags stay on the parent; let them appear after the subcommand too
  for (auto* sub : {verify, sweep, trace, layouts}) sub->fallthrough();
  int tvAtomN = 0;
  layouts->add_option("--tv-atom-n", tvAtomN,
                      "also dump the (thread,value)->(m,n) map for a 64xN atom "
                      "as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (printLayouts) return cmd_layouts(opt, 0);
    if (verify->parsed()) return cmd_verify(opt);
    if (sweep->parsed()) return cmd_sweep(opt);
    if (trace->parsed()) return cmd_trace(opt);
    if (layouts->parsed()) return cmd_layouts(opt, tvAtomN);
    std::cerr << app.help();
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}
