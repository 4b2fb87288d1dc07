#include "oracles.hpp"

#include <rangepta/rangepta.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

using namespace rangepta;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double secondsSince(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 2) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

// The default suite: 50 corpora of 200 to 2000 statements.
SyntheticParams suiteParams(unsigned i) {
  SyntheticParams p;
  p.classes = 20 + (i * 37) % 81;
  p.statements = 200 + (i * 353) % 1801;
  p.vars = std::max<std::uint32_t>(40, p.statements / 5);
  p.fields = 4 + i % 9;
  return p;
}

constexpr unsigned kSuiteSize = 50;

const std::vector<Corpus>& suite() {
  static const std::vector<Corpus> corpora = [] {
    std::vector<Corpus> out;
    for (unsigned i = 1; i <= kSuiteSize; ++i) {
      out.push_back(corpusFromText("suite-" + std::to_string(i), generateSynthetic(suiteParams(i), i)));
    }
    return out;
  }();
  return corpora;
}

SolverConfig config(SetKind kind, FilterMode mode, unsigned chunkBits = 64) {
  SolverConfig c;
  c.setKind = kind;
  c.filterMode = mode;
  c.chunk = ChunkConfig::of(chunkBits);
  return c;
}

// ---------------------------------------------------------------------------

Outcome numberingCorrectness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240611);
  auto below = [&](std::uint64_t n) { return rng() % n; };
  std::size_t classesChecked = 0;
  for (int round = 0; round < 200; ++round) {
    const unsigned nClasses = 1 + static_cast<unsigned>(below(100));
    const unsigned nIfaces = static_cast<unsigned>(below(6));
    std::ostringstream text;
    text << "class K0\n";
    for (unsigned c = 1; c < nClasses; ++c) {
      text << "class K" << c << " extends K" << below(c);
      if (nIfaces > 0 && below(4) == 0) text << " implements J" << below(nIfaces);
      text << '\n';
    }
    for (unsigned i = 0; i < nIfaces; ++i) {
      text << "interface J" << i;
      if (i > 0 && below(3) == 0) text << " extends J" << below(i);
      text << '\n';
    }
    const unsigned budget = 1 + static_cast<unsigned>(below(500));
    for (unsigned a = 0; a < budget; ++a) {
      const unsigned c = static_cast<unsigned>(below(nClasses));
      const bool array = below(10) == 0;
      text << "alloc a" << a << " : K" << c << (array ? "[]" : "") << '\n';
    }
    const Corpus corpus = corpusFromText("h", text.str());
    const Program& p = corpus.program;
    const ClassHierarchy& h = p.hierarchy;
    oracle::NameSubtypes sub(p);
    std::vector<Interval> family;
    for (TypeId t : h.allTypes()) {
      const std::vector<std::uint32_t> expect = oracle::compatibleIndices(p, corpus.numbering, sub, h.nameOf(t));
      std::vector<std::uint32_t> got;
      for (const Interval& iv : intervalsOf(corpus.numbering, h, t)) {
        for (std::uint32_t i = iv.lower; i <= iv.upper; ++i) got.push_back(i);
      }
      std::sort(got.begin(), got.end());
      if (got != expect) {
        return {false, "round " + std::to_string(round) + ": compatible set of " + h.nameOf(t) +
                           " differs from its interval(s)"};
      }
      if (!h.isInterface(t)) {
        family.push_back(corpus.numbering.intervalOf(t));
        ++classesChecked;
      }
    }
    if (!oracle::laminar(family)) return {false, "round " + std::to_string(round) + ": interval family not laminar"};
  }
  const double secs = secondsSince(t0);
  return {secs < 10.0, std::to_string(classesChecked) + " class intervals exact and laminar in " + fmt(secs) + " s"};
}

Outcome workedNumberingTrace() {
  const std::string text =
      "class Object\nclass A extends Object\nclass B extends A\nclass C extends A\nclass D extends Object\n"
      "alloc o1 : Object\nalloc o2 : Object\n"
      "alloc a1 : A\nalloc a2 : A\nalloc a3 : A\n"
      "alloc b1 : B\n"
      "alloc c1 : C\nalloc c2 : C\n"
      "alloc d1 : D\nalloc d2 : D\nalloc d3 : D\nalloc d4 : D\n";
  const Corpus c = corpusFromText("fig2", text);
  const ClassHierarchy& h = c.program.hierarchy;
  std::ostringstream got;
  for (TypeId t : c.numbering.creationOrder()) got << h.nameOf(t) << "=" << c.numbering.intervalOf(t) << ' ';
  const std::string expect = "B=[6,6] C=[7,8] A=[3,8] D=[9,12] Object=[1,12] ";
  return {got.str() == expect, got.str()};
}

Outcome rangedOrOracle() {
  std::mt19937_64 rng(7);
  auto below = [&](std::uint64_t n) { return rng() % n; };
  std::size_t cases = 0;
  std::size_t mismatches = 0;
  for (unsigned chunkBits : {8u, 64u}) {
    const ChunkConfig cfg = ChunkConfig::of(chunkBits);
    for (int k = 0; k < 6000; ++k) {
      auto randomInterval = [&]() {
        const std::uint32_t lo = 1 + static_cast<std::uint32_t>(below(400));
        return Interval{lo, lo + static_cast<std::uint32_t>(below(k % 3 == 0 ? 8 : 200))};
      };
      Interval xi = randomInterval();
      Interval yi = randomInterval();
      const auto shape = below(3);
      if (shape == 0) {  // y inside x
        const std::uint32_t lo = xi.lower + static_cast<std::uint32_t>(below(xi.size()));
        yi = Interval{lo, lo + static_cast<std::uint32_t>(below(xi.upper - lo + 1))};
      } else if (shape == 1) {  // x inside y
        const std::uint32_t lo = yi.lower + static_cast<std::uint32_t>(below(yi.size()));
        xi = Interval{lo, lo + static_cast<std::uint32_t>(below(yi.upper - lo + 1))};
      }
      auto fill = [&](Interval iv, std::set<std::uint64_t>& bits) {
        const ChunkRange r = chunkRangeOf(iv, cfg);
        std::vector<std::uint64_t> chunks(r.count());
        const unsigned density = 1 + static_cast<unsigned>(below(4));
        for (std::uint64_t c = 0; c < chunks.size(); ++c) {
          for (unsigned b = 0; b < chunkBits; ++b) {
            const std::uint64_t abs = (r.first + c) * chunkBits + b;
            if (abs != 0 && below(8) < density) {
              chunks[c] |= std::uint64_t{1} << b;
              bits.insert(abs);
            }
          }
        }
        return chunks;
      };
      std::set<std::uint64_t> xb, yb;
      std::vector<std::uint64_t> xc = fill(xi, xb);
      const std::vector<std::uint64_t> yc = fill(yi, yb);
      const std::set<std::uint64_t> expect = oracle::alignedUnion(xi, xb, yi, yb, chunkBits);
      const bool changed = rangedOr(RangedSpan{xi, chunkBits, chunkRangeOf(xi, cfg).first, xc},
                                    ConstRangedSpan{yi, chunkBits, chunkRangeOf(yi, cfg).first, yc});
      std::set<std::uint64_t> got;
      forEachInChunks(chunkRangeOf(xi, cfg).first, chunkBits, xc, [&](std::uint32_t i) { got.insert(i); });
      ++cases;
      if (got != expect || changed != (expect != xb)) ++mismatches;
    }
  }
  // [10,20] with 8-bit chunks spans chunks 1 and 2.
  const RangedBitVector v = rbvNew(Interval{10, 20}, ChunkConfig::of(8));
  const bool spanCase = v.chunkCount() == 2 && v.alignedLower() == 8;
  return {mismatches == 0 && spanCase && cases >= 10000,
          std::to_string(cases) + " cases, " + std::to_string(mismatches) + " mismatches; [10,20]/8 -> " +
              std::to_string(v.chunkCount()) + " chunks, aligned lower " + std::to_string(v.alignedLower())};
}

Outcome representationEquivalence() {
  const auto t0 = Clock::now();
  std::size_t diffs = 0;
  std::size_t maxStatements = 0;
  for (const Corpus& c : suite()) {
    maxStatements = std::max(maxStatements, c.program.pag.statementCount());
    std::string reference;
    for (SetKind k : {SetKind::Naive, SetKind::Pure, SetKind::Hybrid, SetKind::Shared, SetKind::Sparse}) {
      const std::string emitted = emitSolution(solveCorpus(c, config(k, FilterMode::Mask)), c.program.pag);
      if (reference.empty()) reference = emitted;
      else if (emitted != reference) ++diffs;
    }
  }
  const double secs = secondsSince(t0);
  return {diffs == 0 && secs < 60.0, std::to_string(suite().size()) + " corpora (max " +
                                         std::to_string(maxStatements) + " statements), " + std::to_string(diffs) +
                                         " diffs, " + fmt(secs) + " s"};
}

struct SlackTally {
  std::size_t extra = 0;
  std::size_t confined = 0;
  std::size_t missing = 0;
};

// Members of `a` absent from `b`, checked against the boundaries of the
// owning node's declared-type intervals.
SlackTally tallyExtras(const Corpus& c, const Solution& a, const Solution& b, unsigned chunkBits) {
  const ClassHierarchy& h = c.program.hierarchy;
  SlackTally t;
  auto check = [&](const PointsToSet& sa, const PointsToSet* sb, TypeId owner) {
    const std::vector<Interval> ivs = intervalsOf(c.numbering, h, owner);
    sa.forEach([&](std::uint32_t m) {
      if (sb != nullptr && sb->contains(m)) return;
      ++t.extra;
      for (const Interval& iv : ivs) {
        const bool below = m < iv.lower && iv.lower - m <= chunkBits - 1;
        const bool above = m > iv.upper && m - iv.upper <= chunkBits - 1;
        if (below || above) {
          ++t.confined;
          return;
        }
      }
    });
    if (sb != nullptr) sb->forEach([&](std::uint32_t m) { t.missing += !sa.contains(m); });
  };
  for (std::uint32_t v = 0; v < a.varCount(); ++v) check(a.ptOfVar(v), &b.ptOfVar(v), c.program.pag.vars[v].type);
  for (const auto& [key, node] : a.fieldNodes()) {
    check(a.fieldSet(node), b.ptOfField(key), c.program.pag.fields[key.field].type);
  }
  for (const auto& [key, node] : b.fieldNodes()) {
    if (a.ptOfField(key) == nullptr) t.missing += b.fieldSet(node).size();
  }
  return t;
}

Outcome filterOrdering() {
  SlackTally total;
  std::size_t slackAtSource = 0;
  for (const Corpus& c : suite()) {
    const Solution a = solveCorpus(c, config(SetKind::RangedHybrid, FilterMode::Intrinsic));
    const Solution b = solveCorpus(c, config(SetKind::Hybrid, FilterMode::Mask));
    const SlackTally t = tallyExtras(c, a, b, 64);
    total.extra += t.extra;
    total.confined += t.confined;
    total.missing += t.missing;
    slackAtSource += compareSolutions(a, b, c.program.pag).extraInASlack;
  }
  std::size_t paddedDiffs = 0;
  std::size_t paddedRuns = 0;
  for (unsigned chunkBits : {8u, 64u}) {
    for (unsigned i = 1; i <= 10; ++i) {
      SyntheticParams p = suiteParams(i);
      p.padToChunk = chunkBits;
      const Corpus c = corpusFromText("padded", generateSynthetic(p, 1000 + i));
      const Solution a = solveCorpus(c, config(SetKind::RangedHybrid, FilterMode::Intrinsic, chunkBits));
      const Solution b = solveCorpus(c, config(SetKind::Hybrid, FilterMode::Mask, chunkBits));
      paddedDiffs += compareSolutions(a, b, c.program.pag).relation != Relation::Equal;
      ++paddedRuns;
    }
  }
  const bool pass = total.missing == 0 && total.confined == total.extra && paddedDiffs == 0;
  return {pass, "superset violations " + std::to_string(total.missing) + "; extra members " +
                    std::to_string(total.extra) + ", within chunk of a boundary " + std::to_string(total.confined) +
                    " (" + fmt(total.extra == 0 ? 100.0 : 100.0 * total.confined / total.extra) +
                    "%), slack of their own set " + std::to_string(slackAtSource) + "; padded corpora equal " +
                    std::to_string(paddedRuns - paddedDiffs) + "/" + std::to_string(paddedRuns)};
}

Outcome precisionDeltas() {
  double worst = 0.0;
  std::string worstCorpus;
  PrecisionHistogram sumA, sumB;
  for (const Corpus& c : suite()) {
    const Solution a = solveCorpus(c, config(SetKind::RangedHybrid, FilterMode::Intrinsic));
    const Solution b = solveCorpus(c, config(SetKind::Hybrid, FilterMode::Mask));
    const PrecisionHistogram ha = precisionHistogram(a, c.program.pag);
    const PrecisionHistogram hb = precisionHistogram(b, c.program.pag);
    const double d = maxBucketDelta(ha, hb);
    if (d > worst) {
      worst = d;
      worstCorpus = c.id;
    }
    for (std::size_t k = 0; k < ha.counts.size(); ++k) {
      sumA.counts[k] += ha.counts[k];
      sumB.counts[k] += hb.counts[k];
    }
    sumA.population += ha.population;
    sumB.population += hb.population;
  }
  for (std::size_t k = 0; k < sumA.counts.size(); ++k) {
    sumA.percent[k] = 100.0 * sumA.counts[k] / std::max<std::size_t>(1, sumA.population);
    sumB.percent[k] = 100.0 * sumB.counts[k] / std::max<std::size_t>(1, sumB.population);
  }
  std::cout << histogramTable(sumA, sumB, "intrinsic", "type masking");
  return {worst <= 1.0, "largest per-corpus bucket delta " + fmt(worst) + " points" +
                            (worstCorpus.empty() ? "" : " (" + worstCorpus + ")")};
}

// Deep hierarchies at roughly the allocation-site scale of mid-sized Java
// programs (about 20k sites).
SyntheticParams deepParams() {
  SyntheticParams p;
  p.classes = 1000;
  p.maxDepth = 8;
  p.interfaces = 20;
  p.allocsMin = 10;
  p.allocsMax = 30;
  p.vars = 5000;
  p.statements = 40000;
  return p;
}

Outcome memoryRatio() {
  std::uint64_t sumRanged = 0, sumHybrid = 0;
  std::string perCorpus;
  for (unsigned i = 1; i <= 5; ++i) {
    const Corpus c = corpusFromText("deep-" + std::to_string(i), generateSynthetic(deepParams(), 500 + i));
    const std::uint64_t ranged =
        solveCorpus(c, config(SetKind::RangedHybrid, FilterMode::Intrinsic)).stats().totalFootprintBytes;
    const std::uint64_t hybrid = solveCorpus(c, config(SetKind::Hybrid, FilterMode::Mask)).stats().totalFootprintBytes;
    sumRanged += ranged;
    sumHybrid += hybrid;
    perCorpus += (perCorpus.empty() ? "" : " ") + fmt(static_cast<double>(ranged) / static_cast<double>(hybrid), 3);
  }
  const double ratio = static_cast<double>(sumRanged) / static_cast<double>(sumHybrid);
  return {ratio <= 0.7, "ranged-hybrid / hybrid modeled bytes " + fmt(ratio, 3) + " over 5 corpora (" +
                            formatMegabytes(sumRanged) + " MB vs " + formatMegabytes(sumHybrid) +
                            " MB; per corpus " + perCorpus + ")"};
}

Outcome savingsOracle() {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "rangepta-acceptance";
  std::filesystem::create_directories(dir);
  const std::regex cell(R"(\| \S+ \| \d+\.\d/\d+\.\d \|)");
  std::size_t solutions = 0;
  std::size_t mismatches = 0;
  std::size_t badFormat = 0;
  const SetKind kinds[] = {SetKind::Pure, SetKind::Hybrid, SetKind::Ranged, SetKind::RangedHybrid};
  for (unsigned i = 0; i < 100; ++i) {
    SyntheticParams p = suiteParams(i + 1);
    p.statements = 200 + (i * 97) % 900;
    const std::string path = (dir / ("savings-" + std::to_string(i) + ".facts")).string();
    writeFile(path, generateSynthetic(p, 9000 + i), true);
    SavingsOptions opt;
    opt.corpus = path;
    const SetKind kind = kinds[i % 4];
    opt.cfg = config(kind, isRangedKind(kind) ? FilterMode::Intrinsic : FilterMode::Mask, i % 8 < 4 ? 64 : 8);
    std::ostringstream out;
    const SavingsReport r = cmdSavings(opt, out);

    const Corpus c = loadCorpus(path);
    const Solution sol = solveCorpus(c, opt.cfg);
    std::uint64_t expect = 0;
    sol.forEachSet([&](const PointsToSet& s) { expect += oracle::windowSavings(s); });
    ++solutions;
    const std::string text = out.str();
    mismatches += r.savedBytes != expect || text.find("saved_bytes: " + std::to_string(expect) + "\n") == std::string::npos;
    std::smatch m;
    badFormat += !std::regex_search(text, m, cell);
  }
  std::filesystem::remove_all(dir);
  return {mismatches == 0 && badFormat == 0, std::to_string(solutions) + " solutions, " +
                                                  std::to_string(mismatches) + " mismatches, " +
                                                  std::to_string(badFormat) + " malformed cells"};
}

std::string counters(const Solution& s) {
  const PropagationStats& st = s.stats();
  return std::to_string(st.iterations) + "/" + std::to_string(st.unionOps) + "/" +
         std::to_string(st.successfulUnions) + "/" + std::to_string(st.nodesProcessed) + "/" +
         std::to_string(st.totalFootprintBytes);
}

Outcome determinism() {
  std::size_t checks = 0;
  std::size_t diffs = 0;
  for (unsigned i = 1; i <= 10; ++i) {
    const std::string t1 = generateSynthetic(suiteParams(i), i);
    const std::string t2 = generateSynthetic(suiteParams(i), i);
    ++checks;
    diffs += t1 != t2;
    const Corpus c1 = corpusFromText("a", t1);
    const Corpus c2 = corpusFromText("a", t2);
    for (SetKind k : kAllSetKinds) {
      const SolverConfig cfg = config(k, isRangedKind(k) ? FilterMode::Intrinsic : FilterMode::Mask);
      const Solution s1 = solveCorpus(c1, cfg);
      const Solution s2 = solveCorpus(c2, cfg);
      ++checks;
      diffs += emitSolution(s1, c1.program.pag) != emitSolution(s2, c2.program.pag) || counters(s1) != counters(s2);
    }
  }
  return {diffs == 0, std::to_string(checks) + " repeated gen/solve pairs, " + std::to_string(diffs) + " differences"};
}

Outcome fixpointIdempotence() {
  std::uint64_t changed = 0;
  std::size_t runs = 0;
  for (const Corpus& c : suite()) {
    for (SetKind k : kAllSetKinds) {
      for (FilterMode m : {FilterMode::Mask, FilterMode::Intrinsic, FilterMode::None}) {
        if ((m == FilterMode::Mask && isRangedKind(k)) || (m == FilterMode::Intrinsic && !isRangedKind(k))) continue;
        const SolverConfig cfg = config(k, m);
        Propagator prop(c.program.pag, c.numbering, c.program.hierarchy, cfg);
        Solution sol = prop.run();
        changed += prop.recheck(sol);
        ++runs;
      }
    }
  }
  return {changed == 0, std::to_string(runs) + " solutions, " + std::to_string(changed) + " successful unions in the extra pass"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"numbering correctness", numberingCorrectness},
      {"worked numbering trace", workedNumberingTrace},
      {"ranged OR oracle", rangedOrOracle},
      {"representation equivalence", representationEquivalence},
      {"filter ordering and slack confinement", filterOrdering},
      {"precision delta", precisionDeltas},
      {"memory ratio", memoryRatio},
      {"sparse savings oracle", savingsOracle},
      {"determinism", determinism},
      {"fixpoint idempotence", fixpointIdempotence},
  };
  int failures = 0;
  std::set<std::size_t> only;
  for (int a = 1; a < argc; ++a) only.insert(static_cast<std::size_t>(std::stoul(argv[a])));
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!only.empty() && only.count(i + 1) == 0) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << "criterion " << (i + 1) << " [" << criteria[i].first << "]: " << (o.pass ? "PASS" : "FAIL") << " ("
              << o.detail << ")" << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << "\n";
  return failures == 0 ? 0 : 1;
}
