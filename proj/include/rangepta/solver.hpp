#pragma once

#include <rangepta/error.hpp>
#include <rangepta/hierarchy.hpp>
#include <rangepta/pag.hpp>
#include <rangepta/ptsets.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <deque>
#include <iterator>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace rangepta {

enum class FilterMode { Mask, Intrinsic, None };

inline std::string_view toString(FilterMode m) {
  switch (m) {
    case FilterMode::Mask: return "mask";
    case FilterMode::Intrinsic: return "intrinsic";
    case FilterMode::None: return "none";
  }
  return "?";
}

inline FilterMode parseFilterMode(std::string_view s) {
  if (s == "mask") return FilterMode::Mask;
  if (s == "intrinsic") return FilterMode::Intrinsic;
  if (s == "none") return FilterMode::None;
  throw Error(ErrorCode::InvalidParams, "unknown filter mode '" + std::string(s) + "'");
}

enum class WorklistPolicy { Fifo };

struct SolverConfig {
  SetKind setKind = SetKind::RangedHybrid;
  FilterMode filterMode = FilterMode::Intrinsic;
  ChunkConfig chunk;
  WorklistPolicy policy = WorklistPolicy::Fifo;
};

inline void validate(const SolverConfig& cfg) {
  if (cfg.filterMode == FilterMode::Intrinsic && !isRangedKind(cfg.setKind)) {
    throw Error(ErrorCode::ConfigConflict,
                "intrinsic filtering requires a ranged set kind, not '" + std::string(toString(cfg.setKind)) + "'");
  }
  if (cfg.filterMode == FilterMode::Mask && isRangedKind(cfg.setKind)) {
    throw Error(ErrorCode::ConfigConflict,
                "mask filtering requires a non-ranged set kind, not '" + std::string(toString(cfg.setKind)) + "'");
  }
  ChunkConfig::of(cfg.chunk.chunkBits);
}

struct PropagationStats {
  std::uint64_t iterations = 0;
  std::uint64_t unionOps = 0;
  std::uint64_t successfulUnions = 0;
  std::uint64_t nodesProcessed = 0;
  std::chrono::nanoseconds wallTime{0};
  std::uint64_t totalFootprintBytes = 0;
};

/// Points-to sets of every variable and concrete field node at the fixpoint.
class Solution {
 public:
  Solution(std::shared_ptr<SetContext> ctx, SolverConfig cfg) : ctx_(std::move(ctx)), cfg_(cfg) {}

  const SolverConfig& config() const noexcept { return cfg_; }
  SetContext& context() const noexcept { return *ctx_; }
  const PropagationStats& stats() const noexcept { return stats_; }
  PropagationStats& stats() noexcept { return stats_; }

  std::size_t varCount() const noexcept { return vars_.size(); }
  const PointsToSet& ptOfVar(std::uint32_t v) const { return vars_.at(v); }
  PointsToSet& ptOfVar(std::uint32_t v) { return vars_.at(v); }

  std::size_t fieldNodeCount() const noexcept { return fieldSets_.size(); }
  const PointsToSet* ptOfField(ConcreteFieldKey key) const {
    auto it = fieldIndex_.find(key);
    return it == fieldIndex_.end() ? nullptr : &fieldSets_[it->second];
  }
  /// Concrete field nodes in key order.
  const std::map<ConcreteFieldKey, std::uint32_t>& fieldNodes() const noexcept { return fieldIndex_; }
  const PointsToSet& fieldSet(std::uint32_t node) const { return fieldSets_.at(node); }
  PointsToSet& fieldSet(std::uint32_t node) { return fieldSets_.at(node); }
  ConcreteFieldKey fieldKey(std::uint32_t node) const { return fieldKeys_.at(node); }

  /// Modeled bytes of all sets, counting each shared base once.
  std::uint64_t footprintBytes() const {
    std::uint64_t bytes = 0;
    std::unordered_set<const PlainBitVector*> bases;
    auto visit = [&](const PointsToSet& s) {
      bytes += s.footprintBytes();
      if (const PlainBitVector* b = s.sharedBase(); b && bases.insert(b).second) {
        bytes += SharedBitVectorSet::baseBytes(*b, ctx_->chunk());
      }
    };
    for (const PointsToSet& s : vars_) visit(s);
    for (const PointsToSet& s : fieldSets_) visit(s);
    return bytes;
  }

  std::uint64_t sharedBaseBytes() const {
    std::uint64_t bytes = 0;
    std::unordered_set<const PlainBitVector*> bases;
    auto visit = [&](const PointsToSet& s) {
      if (const PlainBitVector* b = s.sharedBase(); b && bases.insert(b).second) {
        bytes += SharedBitVectorSet::baseBytes(*b, ctx_->chunk());
      }
    };
    for (const PointsToSet& s : vars_) visit(s);
    for (const PointsToSet& s : fieldSets_) visit(s);
    return bytes;
  }

  template <class Fn>
  void forEachSet(Fn&& fn) const {
    for (const PointsToSet& s : vars_) fn(s);
    for (const PointsToSet& s : fieldSets_) fn(s);
  }

 private:
  friend class Propagator;

  std::shared_ptr<SetContext> ctx_;
  SolverConfig cfg_;
  std::vector<PointsToSet> vars_;
  std::deque<PointsToSet> fieldSets_;  // stable addresses while growing
  std::vector<ConcreteFieldKey> fieldKeys_;
  std::map<ConcreteFieldKey, std::uint32_t> fieldIndex_;
  PropagationStats stats_;
};

/// Andersen-style inclusion propagation over a PAG with a FIFO worklist.
/// Variables are nodes [0, |vars|); concrete field nodes follow.
class Propagator {
 public:
  Propagator(const Pag& pag, const NumberingResult& nr, const ClassHierarchy& h, SolverConfig cfg)
      : pag_(&pag), nr_(&nr), h_(&h), cfg_(cfg) {
    validate(cfg_);
    if (nr.totalAllocs() != pag.allocs.size()) {
      throw Error(ErrorCode::UniverseMismatch, "numbering does not cover the graph's allocation sites");
    }
    const std::size_t nv = pag.vars.size();
    assignOut_.resize(nv);
    storesBySrc_.resize(nv);
    storesByBase_.resize(nv);
    loadsByBase_.resize(nv);
    loadsByField_.resize(pag.fields.size());
    for (const AssignEdge& e : pag.assignEdges) assignOut_[e.src].push_back(e.dst);
    for (std::uint32_t i = 0; i < pag.storeEdges.size(); ++i) {
      storesBySrc_[pag.storeEdges[i].src].push_back(i);
      storesByBase_[pag.storeEdges[i].base].push_back(i);
    }
    for (std::uint32_t i = 0; i < pag.loadEdges.size(); ++i) {
      loadsByBase_[pag.loadEdges[i].base].push_back(i);
      loadsByField_[pag.loadEdges[i].field].push_back(i);
    }
  }

  Solution run() {
    Solution sol(std::make_shared<SetContext>(*h_, *nr_, cfg_.chunk), cfg_);
    sol.vars_.reserve(pag_->vars.size());
    for (const VarNode& v : pag_->vars) sol.vars_.push_back(makeSet(cfg_.setKind, filterType(v.type), sol.context()));

    const auto start = std::chrono::steady_clock::now();
    Pass pass{sol, true};
    for (const AllocEdge& e : pag_->allocEdges) {
      ++sol.stats_.unionOps;
      if (sol.vars_[e.var].add(nr_->indexOf(e.alloc))) {
        ++sol.stats_.successfulUnions;
        pass.enqueue(e.var);
      }
    }
    while (!pass.queue.empty()) {
      const std::uint32_t node = pass.queue.front();
      pass.queue.pop_front();
      pass.queued[node] = false;
      ++sol.stats_.iterations;
      process(pass, node);
    }
    sol.stats_.wallTime = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start);
    sol.stats_.nodesProcessed = sol.stats_.iterations;
    sol.stats_.totalFootprintBytes = sol.footprintBytes();
    return sol;
  }

  /// Applies every constraint once more without a worklist and returns the
  /// number of unions that changed a set (zero at a fixpoint).
  std::uint64_t recheck(Solution& sol) const {
    const std::uint64_t before = sol.stats_.successfulUnions;
    Pass pass{sol, false};
    for (const AllocEdge& e : pag_->allocEdges) {
      if (sol.vars_[e.var].add(nr_->indexOf(e.alloc))) ++sol.stats_.successfulUnions;
    }
    for (std::uint32_t v = 0; v < pag_->vars.size(); ++v) process(pass, v);
    for (std::uint32_t n = 0; n < sol.fieldSets_.size(); ++n) {
      process(pass, static_cast<std::uint32_t>(pag_->vars.size() + n));
    }
    const std::uint64_t changed = sol.stats_.successfulUnions - before;
    sol.stats_.successfulUnions = before;
    return changed;
  }

 private:
  struct Pass {
    Solution& sol;
    bool useQueue;
    std::deque<std::uint32_t> queue{};
    std::vector<bool> queued{};

    void enqueue(std::uint32_t node) {
      if (!useQueue) return;
      if (node >= queued.size()) queued.resize(std::max<std::size_t>(node + 1, queued.size() * 2), false);
      if (!queued[node]) {
        queued[node] = true;
        queue.push_back(node);
      }
    }
  };

  TypeId filterType(TypeId declared) const { return cfg_.filterMode == FilterMode::None ? h_->root() : declared; }

  std::uint32_t varCount() const noexcept { return static_cast<std::uint32_t>(pag_->vars.size()); }

  PointsToSet& nodeSet(Solution& sol, std::uint32_t node) const {
    return node < varCount() ? sol.vars_[node] : sol.fieldSets_[node - varCount()];
  }

  std::uint32_t fieldNode(Solution& sol, std::uint32_t allocIndex, std::uint32_t field) const {
    const ConcreteFieldKey key{allocIndex, field};
    auto it = sol.fieldIndex_.find(key);
    if (it != sol.fieldIndex_.end()) return varCount() + it->second;
    const auto id = static_cast<std::uint32_t>(sol.fieldSets_.size());
    sol.fieldSets_.push_back(makeSet(cfg_.setKind, filterType(pag_->fields[field].type), sol.context()));
    sol.fieldKeys_.push_back(key);
    sol.fieldIndex_.emplace(key, id);
    return varCount() + id;
  }

  void unite(Pass& pass, std::uint32_t dstNode, const PointsToSet& src) const {
    ++pass.sol.stats_.unionOps;
    if (nodeSet(pass.sol, dstNode).addAll(src)) {
      ++pass.sol.stats_.successfulUnions;
      pass.enqueue(dstNode);
    }
  }

  void process(Pass& pass, std::uint32_t node) const {
    Solution& sol = pass.sol;
    if (node >= varCount()) {
      const ConcreteFieldKey key = sol.fieldKeys_[node - varCount()];
      for (std::uint32_t li : loadsByField_[key.field]) {
        const LoadEdge& e = pag_->loadEdges[li];
        if (sol.vars_[e.base].contains(key.allocIndex)) unite(pass, e.dst, sol.fieldSets_[node - varCount()]);
      }
      return;
    }
    for (std::uint32_t dst : assignOut_[node]) unite(pass, dst, sol.vars_[node]);

    // Field constraints iterate a snapshot: the base set may itself be a target.
    for (std::uint32_t si : storesBySrc_[node]) {
      const StoreEdge& e = pag_->storeEdges[si];
      for (std::uint32_t o : sol.vars_[e.base].members()) unite(pass, fieldNode(sol, o, e.field), sol.vars_[node]);
    }
    if (!storesByBase_[node].empty() || !loadsByBase_[node].empty()) {
      const std::vector<std::uint32_t> objects = sol.vars_[node].members();
      for (std::uint32_t si : storesByBase_[node]) {
        const StoreEdge& e = pag_->storeEdges[si];
        for (std::uint32_t o : objects) unite(pass, fieldNode(sol, o, e.field), sol.vars_[e.src]);
      }
      for (std::uint32_t li : loadsByBase_[node]) {
        const LoadEdge& e = pag_->loadEdges[li];
        for (std::uint32_t o : objects) {
          const std::uint32_t fn = fieldNode(sol, o, e.field);
          unite(pass, e.dst, sol.fieldSets_[fn - varCount()]);
        }
      }
    }
  }

  const Pag* pag_;
  const NumberingResult* nr_;
  const ClassHierarchy* h_;
  SolverConfig cfg_;
  std::vector<std::vector<std::uint32_t>> assignOut_;
  std::vector<std::vector<std::uint32_t>> storesBySrc_;
  std::vector<std::vector<std::uint32_t>> storesByBase_;
  std::vector<std::vector<std::uint32_t>> loadsByBase_;
  std::vector<std::vector<std::uint32_t>> loadsByField_;
};

inline Solution propagate(const Pag& pag, const NumberingResult& nr, const ClassHierarchy& h, SolverConfig cfg) {
  return Propagator(pag, nr, h, cfg).run();
}

// ---------------------------------------------------------------------------
// Metrics

inline constexpr std::array<std::string_view, 7> kHistogramBuckets{"0",     "1",        "2",    "3-10",
                                                                   "11-100", "101-1000", "1000+"};

struct PrecisionHistogram {
  std::size_t population = 0;
  std::array<std::size_t, 7> counts{};
  std::array<double, 7> percent{};
};

inline std::size_t histogramBucket(std::size_t n) {
  if (n <= 2) return n;
  if (n <= 10) return 3;
  if (n <= 100) return 4;
  if (n <= 1000) return 5;
  return 6;
}

/// Distribution of set sizes over dereferenced variables, each variable
/// weighted equally.
inline PrecisionHistogram precisionHistogram(const Solution& sol, const Pag& pag) {
  PrecisionHistogram hist;
  for (std::uint32_t v : pag.dereferencedVars()) {
    ++hist.counts[histogramBucket(sol.ptOfVar(v).size())];
    ++hist.population;
  }
  if (hist.population != 0) {
    for (std::size_t b = 0; b < hist.counts.size(); ++b) {
      hist.percent[b] = 100.0 * static_cast<double>(hist.counts[b]) / static_cast<double>(hist.population);
    }
  }
  return hist;
}

enum class Relation { Equal, ASupersetOfB, BSupersetOfA, Incomparable };

inline std::string_view toString(Relation r) {
  switch (r) {
    case Relation::Equal: return "equal";
    case Relation::ASupersetOfB: return "a-superset-of-b";
    case Relation::BSupersetOfA: return "b-superset-of-a";
    case Relation::Incomparable: return "incomparable";
  }
  return "?";
}

struct NodeDiff {
  std::string node;
  std::vector<std::uint32_t> onlyInA;
  std::vector<bool> onlyInASlack;  // parallel to onlyInA
  std::vector<std::uint32_t> onlyInB;
  std::vector<bool> onlyInBSlack;
};

struct Comparison {
  Relation relation = Relation::Equal;
  std::vector<NodeDiff> diffs;
  std::size_t extraInA = 0;
  std::size_t extraInASlack = 0;
  std::size_t extraInB = 0;
  std::size_t extraInBSlack = 0;
};

inline std::string fieldNodeName(const Pag& pag, const NumberingResult& nr, ConcreteFieldKey key) {
  return pag.allocs[nr.allocAt(key.allocIndex)].id + "." + pag.fields[key.field].name;
}

/// Per-node membership comparison. Field nodes missing from one solution
/// count as empty there.
inline Comparison compareSolutions(const Solution& a, const Solution& b, const Pag& pag) {
  if (a.varCount() != b.varCount() || a.varCount() != pag.vars.size() ||
      a.context().universe() != b.context().universe()) {
    throw Error(ErrorCode::UniverseMismatch, "solutions were computed over different programs or numberings");
  }
  const NumberingResult& nr = a.context().numbering();
  Comparison cmp;
  auto diffSets = [&](const std::string& name, const PointsToSet* sa, const PointsToSet* sb) {
    const std::vector<std::uint32_t> ma = sa ? sa->members() : std::vector<std::uint32_t>{};
    const std::vector<std::uint32_t> mb = sb ? sb->members() : std::vector<std::uint32_t>{};
    if (ma == mb) return;
    NodeDiff d{name, {}, {}, {}, {}};
    std::set_difference(ma.begin(), ma.end(), mb.begin(), mb.end(), std::back_inserter(d.onlyInA));
    std::set_difference(mb.begin(), mb.end(), ma.begin(), ma.end(), std::back_inserter(d.onlyInB));
    for (std::uint32_t i : d.onlyInA) {
      const bool slack = sa->isSlack(i);
      d.onlyInASlack.push_back(slack);
      cmp.extraInASlack += slack;
    }
    for (std::uint32_t i : d.onlyInB) {
      const bool slack = sb->isSlack(i);
      d.onlyInBSlack.push_back(slack);
      cmp.extraInBSlack += slack;
    }
    cmp.extraInA += d.onlyInA.size();
    cmp.extraInB += d.onlyInB.size();
    cmp.diffs.push_back(std::move(d));
  };
  for (std::uint32_t v = 0; v < a.varCount(); ++v) diffSets(pag.vars[v].name, &a.ptOfVar(v), &b.ptOfVar(v));
  std::set<ConcreteFieldKey> keys;
  for (const auto& [k, _] : a.fieldNodes()) keys.insert(k);
  for (const auto& [k, _] : b.fieldNodes()) keys.insert(k);
  for (const ConcreteFieldKey& k : keys) diffSets(fieldNodeName(pag, nr, k), a.ptOfField(k), b.ptOfField(k));

  if (cmp.extraInA == 0 && cmp.extraInB == 0) {
    cmp.relation = Relation::Equal;
  } else if (cmp.extraInB == 0) {
    cmp.relation = Relation::ASupersetOfB;
  } else if (cmp.extraInA == 0) {
    cmp.relation = Relation::BSupersetOfA;
  } else {
    cmp.relation = Relation::Incomparable;
  }
  return cmp;
}

/// Canonical text of a solution: one line per variable (declaration order)
/// then per concrete field node (key order); members as allocation ids in
/// index order. Independent of the set representation.
inline std::string emitSolution(const Solution& sol, const Pag& pag) {
  const NumberingResult& nr = sol.context().numbering();
  std::ostringstream os;
  auto line = [&](std::string_view kind, const std::string& name, const PointsToSet& s) {
    os << kind << ' ' << name << ':';
    s.forEach([&](std::uint32_t i) { os << ' ' << pag.allocs[nr.allocAt(i)].id; });
    os << '\n';
  };
  for (std::uint32_t v = 0; v < sol.varCount(); ++v) line("var", pag.vars[v].name, sol.ptOfVar(v));
  for (const auto& [key, node] : sol.fieldNodes()) line("field", fieldNodeName(pag, nr, key), sol.fieldSet(node));
  return os.str();
}

}  // namespace rangepta
