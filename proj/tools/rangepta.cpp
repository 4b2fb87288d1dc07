#include <rangepta/rangepta.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <utility>
#include <vector>

namespace {

struct ConfigFlags {
  std::string set = "ranged-hybrid";
  std::string filter;  // empty: intrinsic for ranged kinds, mask otherwise
  unsigned chunk = 0;

  rangepta::SolverConfig resolve() const {
    rangepta::SolverConfig cfg;
    cfg.setKind = rangepta::parseSetKind(set);
    if (filter.empty()) {
      cfg.filterMode = rangepta::isRangedKind(cfg.setKind) ? rangepta::FilterMode::Intrinsic : rangepta::FilterMode::Mask;
    } else {
      cfg.filterMode = rangepta::parseFilterMode(filter);
    }
    cfg.chunk = rangepta::ChunkConfig::of(chunk == 0 ? rangepta::defaultChunkBits() : chunk);
    return cfg;
  }
};

void addConfigFlags(CLI::App* cmd, ConfigFlags& f, const std::string& suffix = "") {
  cmd->add_option("--set" + suffix, f.set, "naive|pure|hybrid|shared|sparse|ranged|ranged-hybrid")
      ->capture_default_str();
  cmd->add_option("--filter" + suffix, f.filter, "mask|intrinsic|none; default intrinsic for ranged sets, mask otherwise");
  cmd->add_option("--chunk" + suffix, f.chunk, "chunk width in bits (8, 16, 32, 64); default $RANGE_PTA_CHUNK or 64");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rangepta: points-to propagation with interval-numbered allocation sites"};
  app.require_subcommand(1);

  rangepta::GenOptions gen;
  std::string paramsFile;
  auto* genCmd = app.add_subcommand("gen", "generate a synthetic corpus");
  genCmd->add_option("--params", paramsFile, "JSON file with generator parameters");
  using rangepta::SyntheticParams;
  using ParamCopy = void (*)(SyntheticParams&, const SyntheticParams&);
  std::vector<std::pair<CLI::Option*, ParamCopy>> genFlags;
#define RANGEPTA_GEN_FLAG(flag, member, help)                     \
  genFlags.emplace_back(genCmd->add_option(flag, gen.params.member, help), \
                        [](SyntheticParams& dst, const SyntheticParams& src) { dst.member = src.member; });
  RANGEPTA_GEN_FLAG("--classes", classes, "number of classes including the root")
  RANGEPTA_GEN_FLAG("--max-depth", maxDepth, "depth of the class tree")
  RANGEPTA_GEN_FLAG("--interfaces", interfaces, "number of interfaces")
  RANGEPTA_GEN_FLAG("--allocs-min", allocsMin, "fewest allocation sites per type")
  RANGEPTA_GEN_FLAG("--allocs-max", allocsMax, "most allocation sites per type")
  RANGEPTA_GEN_FLAG("--vars", vars, "number of variables")
  RANGEPTA_GEN_FLAG("--fields", fields, "number of fields")
  RANGEPTA_GEN_FLAG("--statements", statements, "number of statements")
  RANGEPTA_GEN_FLAG("--store-load-ratio", storeLoadRatio, "share of field statements")
  RANGEPTA_GEN_FLAG("--violation-rate", violationRate, "share of type-ignoring statements")
  RANGEPTA_GEN_FLAG("--array-rate", arrayRate, "share of classes with an array type")
  RANGEPTA_GEN_FLAG("--pad-to-chunk", padToChunk, "align every class interval to this chunk width")
#undef RANGEPTA_GEN_FLAG
  genCmd->add_option("--seed", gen.seed)->capture_default_str();
  genCmd->add_option("-o,--out", gen.out, "output path, stdout when omitted");
  genCmd->add_flag("--force", gen.force, "overwrite an existing output file");

  rangepta::SolveOptions solve;
  ConfigFlags solveFlags;
  std::string format = "text";
  auto* solveCmd = app.add_subcommand("solve", "propagate points-to sets and print a report");
  solveCmd->add_option("corpus", solve.corpus)->required();
  addConfigFlags(solveCmd, solveFlags);
  solveCmd->add_option("--emit-solution", solve.emitSolution, "write canonical per-node memberships");
  solveCmd->add_flag("--histogram", solve.histogram, "include the precision histogram");
  solveCmd->add_flag("--savings", solve.savings, "include sparse-element savings");
  solveCmd->add_option("--format", format, "text|csv|markdown")->capture_default_str();

  rangepta::CompareOptions compare;
  ConfigFlags flagsA{"ranged-hybrid", "", 0};
  ConfigFlags flagsB{"hybrid", "", 0};
  auto* compareCmd = app.add_subcommand("compare", "compare two configurations on one corpus");
  compareCmd->add_option("corpus", compare.corpus)->required();
  addConfigFlags(compareCmd, flagsA, "-a");
  addConfigFlags(compareCmd, flagsB, "-b");

  rangepta::SavingsOptions savings;
  ConfigFlags savingsFlags;
  auto* savingsCmd = app.add_subcommand("savings", "space that sparse elements would save");
  savingsCmd->add_option("corpus", savings.corpus)->required();
  addConfigFlags(savingsCmd, savingsFlags);

  rangepta::BenchOptions bench;
  ConfigFlags benchFlags;
  auto* benchCmd = app.add_subcommand("bench", "repeat a solve and report the median wall time");
  benchCmd->add_option("corpus", bench.corpus)->required();
  addConfigFlags(benchCmd, benchFlags);
  benchCmd->add_option("--runs", bench.runs)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, std::cout, std::cerr);
  }

  try {
    if (genCmd->parsed()) {
      if (!paramsFile.empty()) {
        rangepta::SyntheticParams merged = rangepta::paramsFromJson(rangepta::readFile(paramsFile));
        for (const auto& [opt, copy] : genFlags) {
          if (opt->count() > 0) copy(merged, gen.params);
        }
        gen.params = merged;
      }
      rangepta::cmdGen(gen, std::cout);
    } else if (solveCmd->parsed()) {
      solve.cfg = solveFlags.resolve();
      solve.format = rangepta::parseReportFormat(format);
      rangepta::cmdSolve(solve, std::cout);
    } else if (compareCmd->parsed()) {
      compare.a = flagsA.resolve();
      compare.b = flagsB.resolve();
      rangepta::cmdCompare(compare, std::cout);
    } else if (savingsCmd->parsed()) {
      savings.cfg = savingsFlags.resolve();
      rangepta::cmdSavings(savings, std::cout);
    } else if (benchCmd->parsed()) {
      bench.cfg = benchFlags.resolve();
      rangepta::cmdBench(bench, std::cout);
    }
  } catch (const rangepta::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
