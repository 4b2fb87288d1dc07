#pragma once

// Brute-force reference implementations used by the unit and acceptance
// tests. Nothing here calls into the numbering or the bit-vector code paths
// that the tests are checking.

#include <rangepta/rangepta.hpp>

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace oracle {

/// Reflexive-transitive subtype relation computed from the declarations by
/// name, with array types derived from their element's class chain.
class NameSubtypes {
 public:
  explicit NameSubtypes(const rangepta::Program& p) {
    for (const rangepta::ClassDecl& c : p.classDecls) {
      kind_[c.name] = 'c';
      auto& ups = direct_[c.name];
      ups.insert(ups.end(), c.parents.begin(), c.parents.end());
      ups.insert(ups.end(), c.interfaces.begin(), c.interfaces.end());
      if (c.parents.empty()) root_ = c.name;
      else parentOf_[c.name] = c.parents.front();
    }
    for (const rangepta::InterfaceDecl& i : p.interfaceDecls) {
      kind_[i.name] = 'i';
      direct_[i.name] = i.extends;
    }
    for (const rangepta::InterfaceDecl& i : p.interfaceDecls) direct_[i.name].push_back(root_);
  }

  bool operator()(const std::string& sub, const std::string& super) { return supers(sub).count(super) != 0; }

  const std::set<std::string>& supers(const std::string& t) {
    if (auto it = memo_.find(t); it != memo_.end()) return it->second;
    std::set<std::string> out{t};
    for (const std::string& up : directSupers(t)) {
      const std::set<std::string>& s = supers(up);
      out.insert(s.begin(), s.end());
    }
    return memo_.emplace(t, std::move(out)).first->second;
  }

  const std::string& root() const { return root_; }

 private:
  std::vector<std::string> directSupers(const std::string& t) {
    if (t.size() > 2 && t.ends_with("[]")) {
      const std::string elem = t.substr(0, t.size() - 2);
      const std::string parent = classParent(elem);
      return {parent.empty() ? root_ : parent + "[]"};
    }
    auto it = direct_.find(t);
    return it == direct_.end() ? std::vector<std::string>{} : it->second;
  }

  std::string classParent(const std::string& t) {
    if (t.size() > 2 && t.ends_with("[]")) {
      const std::string p = classParent(t.substr(0, t.size() - 2));
      return p.empty() ? root_ : p + "[]";
    }
    auto it = parentOf_.find(t);
    return it == parentOf_.end() ? std::string{} : it->second;
  }

  std::unordered_map<std::string, char> kind_;
  std::unordered_map<std::string, std::vector<std::string>> direct_;
  std::unordered_map<std::string, std::string> parentOf_;
  std::map<std::string, std::set<std::string>> memo_;
  std::string root_;
};

/// Indices of the allocation sites whose type is a subtype of `t`.
inline std::vector<std::uint32_t> compatibleIndices(const rangepta::Program& p, const rangepta::NumberingResult& nr,
                                                    NameSubtypes& sub, const std::string& t) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t ord = 0; ord < p.pag.allocs.size(); ++ord) {
    const std::string& at = p.hierarchy.nameOf(p.pag.allocs[ord].type);
    if (sub(at, t)) out.push_back(nr.indexOf(ord));
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Result bits of OR-ing `y` into `x` one bit at a time: a bit of `y` is
/// taken when its chunk lies in the chunk span of the inner of the two
/// nested intervals. Patterns are given as sets of absolute indices.
inline std::set<std::uint64_t> alignedUnion(rangepta::Interval xi, const std::set<std::uint64_t>& x,
                                            rangepta::Interval yi, const std::set<std::uint64_t>& y,
                                            unsigned chunkBits) {
  std::set<std::uint64_t> out = x;
  const bool yInX = xi.lower <= yi.lower && yi.upper <= xi.upper;
  const bool xInY = yi.lower <= xi.lower && xi.upper <= yi.upper;
  if (!yInX && !xInY) return out;
  const rangepta::Interval inner = yInX ? yi : xi;
  const std::uint64_t lo = inner.lower / chunkBits * chunkBits;
  const std::uint64_t hi = (inner.upper / chunkBits + 1) * chunkBits;
  for (std::uint64_t b : y) {
    if (b >= lo && b < hi) out.insert(b);
  }
  return out;
}

/// Fixpoint of the inclusion constraints over allocation ordinals, applying
/// declared-type filtering with `sub` (or none when `filter` is false), by
/// repeated full sweeps. Rendered in the same text form as emitSolution.
inline std::string naiveSolution(const rangepta::Program& p, const rangepta::NumberingResult& nr, bool filter) {
  const rangepta::Pag& g = p.pag;
  const rangepta::ClassHierarchy& h = p.hierarchy;
  NameSubtypes sub(p);
  auto ok = [&](std::uint32_t ord, rangepta::TypeId declared) {
    return !filter || sub(h.nameOf(g.allocs[ord].type), h.nameOf(declared));
  };
  std::vector<std::set<std::uint32_t>> pt(g.vars.size());
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::set<std::uint32_t>> fld;
  auto flow = [&](std::set<std::uint32_t>& dst, const std::set<std::uint32_t>& src, rangepta::TypeId t) {
    bool changed = false;
    for (std::uint32_t o : src) {
      if (ok(o, t)) changed |= dst.insert(o).second;
    }
    return changed;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (const rangepta::AllocEdge& e : g.allocEdges) {
      if (ok(e.alloc, g.vars[e.var].type)) changed |= pt[e.var].insert(e.alloc).second;
    }
    for (const rangepta::AssignEdge& e : g.assignEdges) {
      changed |= flow(pt[e.dst], std::set<std::uint32_t>(pt[e.src]), g.vars[e.dst].type);
    }
    for (const rangepta::StoreEdge& e : g.storeEdges) {
      for (std::uint32_t o : std::set<std::uint32_t>(pt[e.base])) {
        changed |= flow(fld[{o, e.field}], pt[e.src], g.fields[e.field].type);
      }
    }
    for (const rangepta::LoadEdge& e : g.loadEdges) {
      for (std::uint32_t o : std::set<std::uint32_t>(pt[e.base])) {
        changed |= flow(pt[e.dst], std::set<std::uint32_t>(fld[{o, e.field}]), g.vars[e.dst].type);
      }
    }
  }

  auto byIndex = [&](const std::set<std::uint32_t>& s) {
    std::vector<std::uint32_t> idx;
    for (std::uint32_t o : s) idx.push_back(nr.indexOf(o));
    std::sort(idx.begin(), idx.end());
    return idx;
  };
  std::ostringstream os;
  for (std::uint32_t v = 0; v < g.vars.size(); ++v) {
    os << "var " << g.vars[v].name << ':';
    for (std::uint32_t i : byIndex(pt[v])) os << ' ' << g.allocs[nr.allocAt(i)].id;
    os << '\n';
  }
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> nodes;  // (index, field) -> ordinal
  for (const auto& [key, s] : fld) nodes.emplace(std::make_pair(nr.indexOf(key.first), key.second), key.first);
  for (const auto& [key, ord] : nodes) {
    os << "field " << g.allocs[ord].id << '.' << g.fields[key.second].name << ':';
    for (std::uint32_t i : byIndex(fld[{ord, key.second}])) os << ' ' << g.allocs[nr.allocAt(i)].id;
    os << '\n';
  }
  return os.str();
}

/// Sparse-element savings recomputed from set membership: for every storage
/// run of chunks, each window of 8 chunks with no member in its index range
/// contributes its chunk bytes.
inline std::uint64_t windowSavings(const rangepta::PointsToSet& s) {
  using rangepta::SetKind;
  const rangepta::ChunkConfig cfg = s.context().chunk();
  std::vector<std::pair<std::uint64_t, std::uint64_t>> runs;  // absolute [firstChunk, lastChunk]
  if (s.kind() == SetKind::Pure || (s.kind() == SetKind::Hybrid && s.size() > 16)) {
    runs.emplace_back(0, s.context().universe() / cfg.chunkBits);
  } else if (s.kind() == SetKind::Ranged || (s.kind() == SetKind::RangedHybrid && s.size() > 16)) {
    for (const rangepta::ChunkRange& r : s.rangedLayout()->segments) runs.emplace_back(r.first, r.last);
  }
  const std::vector<std::uint32_t> members = s.members();
  std::uint64_t saved = 0;
  for (const auto& [first, last] : runs) {
    for (std::uint64_t w = first; w <= last; w += 8) {
      const std::uint64_t end = std::min(last, w + 7);
      const std::uint64_t lo = w * cfg.chunkBits;
      const std::uint64_t hi = (end + 1) * cfg.chunkBits;
      const bool empty = std::none_of(members.begin(), members.end(), [&](std::uint32_t m) { return m >= lo && m < hi; });
      if (empty) saved += (end - w + 1) * (cfg.chunkBits / 8);
    }
  }
  return saved;
}

/// True iff every two intervals are nested or disjoint.
inline bool laminar(const std::vector<rangepta::Interval>& ivs) {
  for (std::size_t a = 0; a < ivs.size(); ++a) {
    for (std::size_t b = a + 1; b < ivs.size(); ++b) {
      const rangepta::Interval& x = ivs[a];
      const rangepta::Interval& y = ivs[b];
      if (x.empty() || y.empty()) continue;
      const bool disjoint = x.upper < y.lower || y.upper < x.lower;
      const bool nested = (x.lower <= y.lower && y.upper <= x.upper) || (y.lower <= x.lower && x.upper <= y.upper);
      if (!disjoint && !nested) return false;
    }
  }
  return true;
}

}  // namespace oracle
