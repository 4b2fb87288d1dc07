#pragma once

#include <rangepta/error.hpp>
#include <rangepta/hierarchy.hpp>
#include <rangepta/pag.hpp>
#include <rangepta/ptsets.hpp>
#include <rangepta/solver.hpp>
#include <rangepta/synthetic.hpp>

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace rangepta {

// ---------------------------------------------------------------------------
// Corpus loading

struct Corpus {
  std::string id;
  Program program;
  NumberingResult numbering;
};

inline Corpus corpusFromText(std::string id, std::string_view text) {
  Program program = parseProgram(text);
  NumberingResult nr = numberAllocations(program.hierarchy, program.pag.allocs);
  return Corpus{std::move(id), std::move(program), std::move(nr)};
}

inline std::string readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void writeFile(const std::string& path, std::string_view content, bool force) {
  if (!force && std::filesystem::exists(path)) {
    throw Error(ErrorCode::IoError, "'" + path + "' exists; pass --force to overwrite");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out << content;
}

inline Corpus loadCorpus(const std::string& path) {
  return corpusFromText(std::filesystem::path(path).filename().string(), readFile(path));
}

/// Chunk width from RANGE_PTA_CHUNK, or 64.
inline unsigned defaultChunkBits() {
  if (const char* env = std::getenv("RANGE_PTA_CHUNK"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end == nullptr || *end != '\0') {
      throw Error(ErrorCode::InvalidParams, "RANGE_PTA_CHUNK must be an integer");
    }
    return ChunkConfig::of(static_cast<unsigned>(v)).chunkBits;
  }
  return 64;
}

// ---------------------------------------------------------------------------
// Reports

struct SavingsReport {
  std::uint64_t totalBytes = 0;
  std::uint64_t savedBytes = 0;
};

inline std::string formatMegabytes(std::uint64_t bytes) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << static_cast<double>(bytes) / 1e6;
  return os.str();
}

/// `total/saved` in MB with one decimal.
inline std::string savingsCell(const SavingsReport& s) {
  return formatMegabytes(s.totalBytes) + "/" + formatMegabytes(s.savedBytes);
}

inline SavingsReport computeSavings(const Solution& sol) {
  SavingsReport r;
  r.totalBytes = sol.footprintBytes();
  sol.forEachSet([&](const PointsToSet& s) { r.savedBytes += sparseSavings(s); });
  return r;
}

struct RunReport {
  std::string corpus;
  SolverConfig cfg;
  PropagationStats stats;
  std::size_t varNodes = 0;
  std::size_t fieldNodes = 0;
  std::uint64_t varSetBytes = 0;
  std::uint64_t fieldSetBytes = 0;
  std::uint64_t sharedBaseBytes = 0;
  std::optional<PrecisionHistogram> histogram;
  std::optional<SavingsReport> savings;

  /// Ordered (column, value) pairs shared by every output format.
  std::vector<std::pair<std::string, std::string>> columns() const {
    auto num = [](auto v) { return std::to_string(v); };
    auto fixed = [](double v, int digits) {
      std::ostringstream os;
      os << std::fixed << std::setprecision(digits) << v;
      return os.str();
    };
    std::vector<std::pair<std::string, std::string>> c{
        {"corpus", corpus},
        {"set", std::string(toString(cfg.setKind))},
        {"filter", std::string(toString(cfg.filterMode))},
        {"chunk_bits", num(cfg.chunk.chunkBits)},
        {"iterations", num(stats.iterations)},
        {"union_ops", num(stats.unionOps)},
        {"successful_unions", num(stats.successfulUnions)},
        {"nodes_processed", num(stats.nodesProcessed)},
        {"wall_ms", fixed(static_cast<double>(stats.wallTime.count()) / 1e6, 3)},
        {"var_nodes", num(varNodes)},
        {"field_nodes", num(fieldNodes)},
        {"var_set_bytes", num(varSetBytes)},
        {"field_set_bytes", num(fieldSetBytes)},
        {"shared_base_bytes", num(sharedBaseBytes)},
        {"modeled_bytes", num(stats.totalFootprintBytes)},
        {"modeled_mb", formatMegabytes(stats.totalFootprintBytes)},
    };
    if (histogram) {
      c.emplace_back("deref_vars", num(histogram->population));
      for (std::size_t b = 0; b < kHistogramBuckets.size(); ++b) {
        c.emplace_back("pct_" + std::string(kHistogramBuckets[b]), fixed(histogram->percent[b], 2));
      }
    }
    if (savings) {
      c.emplace_back("sparse_saved_bytes", num(savings->savedBytes));
      c.emplace_back("total_saved_mb", savingsCell(*savings));
    }
    return c;
  }
};

inline std::string toCsv(const RunReport& r) {
  std::string header, row;
  for (const auto& [k, v] : r.columns()) {
    header += (header.empty() ? "" : ",") + k;
    row += (row.empty() ? "" : ",") + v;
  }
  return header + "\n" + row + "\n";
}

inline std::string toMarkdown(const RunReport& r) {
  std::string out = "| metric | value |\n|---|---|\n";
  for (const auto& [k, v] : r.columns()) out += "| " + k + " | " + v + " |\n";
  return out;
}

inline std::string toText(const RunReport& r) {
  std::string out = "# points-to propagation report (space figures are modeled bytes)\n";
  for (const auto& [k, v] : r.columns()) out += k + ": " + v + "\n";
  return out;
}

enum class ReportFormat { Text, Csv, Markdown };

inline ReportFormat parseReportFormat(std::string_view s) {
  if (s == "text") return ReportFormat::Text;
  if (s == "csv") return ReportFormat::Csv;
  if (s == "markdown" || s == "md") return ReportFormat::Markdown;
  throw Error(ErrorCode::InvalidParams, "unknown report format '" + std::string(s) + "'");
}

inline std::string render(const RunReport& r, ReportFormat f) {
  switch (f) {
    case ReportFormat::Csv: return toCsv(r);
    case ReportFormat::Markdown: return toMarkdown(r);
    case ReportFormat::Text: break;
  }
  return toText(r);
}

inline RunReport makeReport(const Corpus& corpus, const Solution& sol, bool withHistogram, bool withSavings) {
  RunReport r;
  r.corpus = corpus.id;
  r.cfg = sol.config();
  r.stats = sol.stats();
  r.varNodes = sol.varCount();
  r.fieldNodes = sol.fieldNodeCount();
  for (std::uint32_t v = 0; v < sol.varCount(); ++v) r.varSetBytes += sol.ptOfVar(v).footprintBytes();
  for (const auto& [key, node] : sol.fieldNodes()) r.fieldSetBytes += sol.fieldSet(node).footprintBytes();
  r.sharedBaseBytes = sol.sharedBaseBytes();
  if (withHistogram) r.histogram = precisionHistogram(sol, corpus.program.pag);
  if (withSavings) r.savings = computeSavings(sol);
  return r;
}

inline Solution solveCorpus(const Corpus& corpus, const SolverConfig& cfg) {
  return propagate(corpus.program.pag, corpus.numbering, corpus.program.hierarchy, cfg);
}

// ---------------------------------------------------------------------------
// Commands

struct GenOptions {
  SyntheticParams params;
  std::uint64_t seed = 1;
  std::string out;
  bool force = false;
};

/// Overrides fields of `base` with keys present in a JSON object.
inline SyntheticParams paramsFromJson(const std::string& text, SyntheticParams base = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidParams, std::string("params file: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::InvalidParams, "params file must hold a JSON object");
  auto take = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  try {
    take("classes", base.classes);
    take("maxDepth", base.maxDepth);
    take("interfaces", base.interfaces);
    take("allocsMin", base.allocsMin);
    take("allocsMax", base.allocsMax);
    take("vars", base.vars);
    take("fields", base.fields);
    take("statements", base.statements);
    take("storeLoadRatio", base.storeLoadRatio);
    take("violationRate", base.violationRate);
    take("arrayRate", base.arrayRate);
    take("padToChunk", base.padToChunk);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidParams, std::string("params file: ") + e.what());
  }
  return base;
}

inline void cmdGen(const GenOptions& opt, std::ostream& out) {
  const std::string text = generateSynthetic(opt.params, opt.seed);
  if (opt.out.empty() || opt.out == "-") {
    out << text;
    return;
  }
  writeFile(opt.out, text, opt.force);
  out << "wrote " << opt.out << " (" << text.size() << " bytes)\n";
}

struct SolveOptions {
  std::string corpus;
  SolverConfig cfg;
  std::string emitSolution;
  bool forceEmit = true;
  bool histogram = false;
  bool savings = false;
  ReportFormat format = ReportFormat::Text;
};

inline RunReport cmdSolve(const SolveOptions& opt, std::ostream& out) {
  validate(opt.cfg);
  const Corpus corpus = loadCorpus(opt.corpus);
  const Solution sol = solveCorpus(corpus, opt.cfg);
  RunReport report = makeReport(corpus, sol, opt.histogram, opt.savings);
  if (!opt.emitSolution.empty()) writeFile(opt.emitSolution, emitSolution(sol, corpus.program.pag), opt.forceEmit);
  out << render(report, opt.format);
  return report;
}

struct CompareOptions {
  std::string corpus;
  SolverConfig a;
  SolverConfig b;
};

/// One row per size bucket with "A / B" percentages.
inline std::string histogramTable(const PrecisionHistogram& a, const PrecisionHistogram& b, std::string_view labelA,
                                  std::string_view labelB) {
  std::ostringstream os;
  os << "| elements | " << labelA << " / " << labelB << " |\n|---|---|\n";
  os << std::fixed << std::setprecision(2);
  for (std::size_t i = 0; i < kHistogramBuckets.size(); ++i) {
    os << "| " << kHistogramBuckets[i] << " | " << a.percent[i] << "/" << b.percent[i] << " |\n";
  }
  return os.str();
}

inline double maxBucketDelta(const PrecisionHistogram& a, const PrecisionHistogram& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.percent.size(); ++i) d = std::max(d, std::abs(a.percent[i] - b.percent[i]));
  return d;
}

inline Comparison cmdCompare(const CompareOptions& opt, std::ostream& out) {
  validate(opt.a);
  validate(opt.b);
  const Corpus corpus = loadCorpus(opt.corpus);
  const Solution sa = solveCorpus(corpus, opt.a);
  const Solution sb = solveCorpus(corpus, opt.b);
  Comparison cmp = compareSolutions(sa, sb, corpus.program.pag);
  const auto label = [](const SolverConfig& c) {
    return std::string(toString(c.setKind)) + "-" + std::string(toString(c.filterMode));
  };
  const PrecisionHistogram ha = precisionHistogram(sa, corpus.program.pag);
  const PrecisionHistogram hb = precisionHistogram(sb, corpus.program.pag);
  out << "A: " << label(opt.a) << "\nB: " << label(opt.b) << "\n";
  out << "relation: " << toString(cmp.relation) << "\n";
  out << "nodes differing: " << cmp.diffs.size() << "\n";
  out << "extra members in A: " << cmp.extraInA << " (in slack: " << cmp.extraInASlack << ")\n";
  out << "extra members in B: " << cmp.extraInB << " (in slack: " << cmp.extraInBSlack << ")\n";
  out << "dereferenced variables: " << ha.population << "\n";
  out << histogramTable(ha, hb, label(opt.a), label(opt.b));
  out << "max bucket delta (points): " << std::fixed << std::setprecision(2) << maxBucketDelta(ha, hb) << "\n";
  return cmp;
}

struct SavingsOptions {
  std::string corpus;
  SolverConfig cfg;
};

inline SavingsReport cmdSavings(const SavingsOptions& opt, std::ostream& out) {
  validate(opt.cfg);
  if (opt.cfg.setKind != SetKind::Pure && opt.cfg.setKind != SetKind::Hybrid && !isRangedKind(opt.cfg.setKind)) {
    throw Error(ErrorCode::UnsupportedKind, "savings need a bit-vector set kind (pure, hybrid, ranged, ranged-hybrid)");
  }
  const Corpus corpus = loadCorpus(opt.corpus);
  const Solution sol = solveCorpus(corpus, opt.cfg);
  const SavingsReport r = computeSavings(sol);
  out << "# total set size / space saved with sparse elements (modeled MB)\n";
  out << "| program | " << toString(opt.cfg.setKind) << " |\n|---|---|\n";
  out << "| " << corpus.id << " | " << savingsCell(r) << " |\n";
  out << "total_bytes: " << r.totalBytes << "\nsaved_bytes: " << r.savedBytes << "\n";
  return r;
}

struct BenchOptions {
  std::string corpus;
  SolverConfig cfg;
  unsigned runs = 5;
};

inline std::chrono::nanoseconds cmdBench(const BenchOptions& opt, std::ostream& out) {
  validate(opt.cfg);
  if (opt.runs == 0) throw Error(ErrorCode::InvalidParams, "--runs must be positive");
  const Corpus corpus = loadCorpus(opt.corpus);
  std::vector<std::chrono::nanoseconds> times;
  std::uint64_t bytes = 0;
  for (unsigned i = 0; i < opt.runs; ++i) {
    const Solution sol = solveCorpus(corpus, opt.cfg);
    times.push_back(sol.stats().wallTime);
    bytes = sol.stats().totalFootprintBytes;
  }
  std::sort(times.begin(), times.end());
  const std::chrono::nanoseconds median = times[times.size() / 2];
  out << "corpus: " << corpus.id << "\nset: " << toString(opt.cfg.setKind)
      << "\nfilter: " << toString(opt.cfg.filterMode) << "\nruns: " << opt.runs << "\nmedian_wall_ms: " << std::fixed
      << std::setprecision(3) << static_cast<double>(median.count()) / 1e6 << "\nmodeled_bytes: " << bytes << "\n";
  return median;
}

}  // namespace rangepta
