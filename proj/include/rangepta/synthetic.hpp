#pragma once

#include <rangepta/error.hpp>
#include <rangepta/hierarchy.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace rangepta {

/// Shape of a generated corpus. `classes` counts the root class.
struct SyntheticParams {
  std::uint32_t classes = 60;
  std::uint32_t maxDepth = 6;
  std::uint32_t interfaces = 6;
  std::uint32_t allocsMin = 1;
  std::uint32_t allocsMax = 6;
  std::uint32_t vars = 200;
  std::uint32_t fields = 10;
  std::uint32_t statements = 1000;
  // Fraction of statements that are field stores or loads.
  double storeLoadRatio = 0.25;
  // Fraction of statements whose endpoints ignore declared types.
  double violationRate = 0.05;
  // Fraction of classes that also get an allocated array type.
  double arrayRate = 0.05;
  // When nonzero, per-type allocation counts are padded so that every class
  // interval starts on a chunk boundary of this width.
  std::uint32_t padToChunk = 0;
};

inline void validate(const SyntheticParams& p) {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidParams, m); };
  if (p.classes == 0) fail("classes must be at least 1");
  if (p.classes > 1 && p.maxDepth == 0) fail("maxDepth must be at least 1 when there are subclasses");
  if (p.allocsMin > p.allocsMax) fail("allocsMin exceeds allocsMax");
  if (p.vars == 0) fail("vars must be at least 1");
  for (double r : {p.storeLoadRatio, p.violationRate, p.arrayRate}) {
    if (!(r >= 0.0 && r <= 1.0)) fail("ratios must lie in [0, 1]");
  }
  if (p.padToChunk != 0 && p.padToChunk != 8 && p.padToChunk != 16 && p.padToChunk != 32 && p.padToChunk != 64) {
    fail("padToChunk must be 0, 8, 16, 32 or 64");
  }
}

namespace detail {

class CorpusRng {
 public:
  explicit CorpusRng(std::uint64_t seed) : engine_(seed) {}

  // Draws in [0, n).
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }
  std::uint64_t between(std::uint64_t lo, std::uint64_t hi) { return lo + below(hi - lo + 1); }
  bool chance(double p) { return static_cast<double>(engine_() >> 11) * 0x1.0p-53 < p; }
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(below(v.size()))];
  }
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace detail

/// Deterministic synthetic program in the fact format. Assignments are
/// type-directed (source type is a subtype of the destination type) except
/// for a `violationRate` fraction.
inline std::string generateSynthetic(const SyntheticParams& p, std::uint64_t seed) {
  validate(p);
  detail::CorpusRng rng(seed);

  // Classes: a spine reaching maxDepth first, then random parents.
  std::vector<ClassDecl> classes;
  std::vector<std::uint32_t> depth;
  classes.push_back(ClassDecl{"Object", {}, {}, 0});
  depth.push_back(0);
  for (std::uint32_t i = 1; i < p.classes; ++i) {
    std::uint32_t parent;
    if (i <= p.maxDepth) {
      parent = i - 1;
    } else {
      do {
        parent = static_cast<std::uint32_t>(rng.below(i));
      } while (depth[parent] >= p.maxDepth);
    }
    classes.push_back(ClassDecl{"C" + std::to_string(i), {classes[parent].name}, {}, 0});
    depth.push_back(depth[parent] + 1);
  }

  std::vector<InterfaceDecl> interfaces;
  for (std::uint32_t i = 0; i < p.interfaces; ++i) {
    InterfaceDecl d{"I" + std::to_string(i + 1), {}, 0};
    if (i > 0 && rng.chance(0.3)) d.extends.push_back(interfaces[rng.below(i)].name);
    interfaces.push_back(std::move(d));
  }
  if (!interfaces.empty()) {
    for (std::size_t c = 1; c < classes.size(); ++c) {
      if (rng.chance(0.2)) {
        const std::string& iface = rng.pick(interfaces).name;
        classes[c].interfaces.push_back(iface);
      }
    }
  }

  std::vector<std::string> arrayTypes;
  if (p.arrayRate > 0.0 && p.classes > 0) {
    const auto count = static_cast<std::uint32_t>(std::lround(p.arrayRate * p.classes));
    for (std::uint32_t i = 0; i < count; ++i) {
      std::string name = rng.pick(classes).name + "[]";
      if (std::find(arrayTypes.begin(), arrayTypes.end(), name) == arrayTypes.end()) arrayTypes.push_back(name);
    }
  }
  const ClassHierarchy h = buildHierarchy(classes, interfaces, arrayTypes);

  // Allocation sites per allocatable type.
  std::vector<TypeId> allocatable;
  for (const ClassDecl& c : classes) allocatable.push_back(h.require(c.name));
  for (const std::string& a : arrayTypes) allocatable.push_back(h.require(a));
  std::vector<TypeId> allocType;
  for (TypeId t : allocatable) {
    std::uint64_t n = rng.between(p.allocsMin, p.allocsMax);
    if (p.padToChunk != 0) {
      const std::uint64_t c = p.padToChunk;
      // The root's run starts at index 1, so it is padded to one short of a
      // chunk multiple; every later run then begins on a chunk boundary.
      n = t == h.root() ? ((n + 1 + c - 1) / c) * c - 1 : ((n + c - 1) / c) * c;
    }
    for (std::uint64_t k = 0; k < n; ++k) allocType.push_back(t);
  }
  // Array ancestors materialized by the hierarchy (e.g. Object[]) get no sites
  // of their own, which keeps padded counts intact.
  std::vector<std::uint32_t> allocOrder(allocType.size());
  for (std::uint32_t i = 0; i < allocOrder.size(); ++i) allocOrder[i] = i;
  rng.shuffle(allocOrder);

  // Variables and fields.
  std::vector<TypeId> classTypes;
  for (const ClassDecl& c : classes) classTypes.push_back(h.require(c.name));
  std::vector<TypeId> ifaceTypes;
  for (const InterfaceDecl& i : interfaces) ifaceTypes.push_back(h.require(i.name));
  std::vector<TypeId> arrTypes;
  for (const std::string& a : arrayTypes) arrTypes.push_back(h.require(a));
  auto randomDeclaredType = [&]() {
    if (!arrTypes.empty() && rng.chance(0.05)) return rng.pick(arrTypes);
    if (!ifaceTypes.empty() && rng.chance(0.15)) return rng.pick(ifaceTypes);
    return rng.pick(classTypes);
  };
  std::vector<TypeId> varType(p.vars);
  for (auto& t : varType) t = randomDeclaredType();
  std::vector<TypeId> fieldType(p.fields);
  for (auto& t : fieldType) t = randomDeclaredType();

  // accepting[t]: vars whose declared type is a supertype of t.
  // subtypeVars[t]: vars whose declared type is a subtype of t.
  std::vector<std::vector<std::uint32_t>> accepting(h.typeCount()), subtypeVars(h.typeCount());
  for (TypeId t : h.allTypes()) {
    for (std::uint32_t v = 0; v < p.vars; ++v) {
      if (h.isSubtype(t, varType[v])) accepting[t.value].push_back(v);
      if (h.isSubtype(varType[v], t)) subtypeVars[t.value].push_back(v);
    }
  }
  auto anyVar = [&]() { return static_cast<std::uint32_t>(rng.below(p.vars)); };
  auto varFrom = [&](const std::vector<std::uint32_t>& pool) {
    if (pool.empty() || rng.chance(p.violationRate)) return anyVar();
    return rng.pick(pool);
  };

  const std::uint32_t fieldStatements =
      p.fields == 0 ? 0 : static_cast<std::uint32_t>(std::lround(p.statements * p.storeLoadRatio));
  const std::uint32_t rest = p.statements - fieldStatements;
  std::uint32_t newStatements = 0;
  if (!allocType.empty() && rest > 0) {
    newStatements = std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::lround(rest * 0.3)));
  }
  const std::uint32_t assignStatements = rest - newStatements;

  auto varName = [](std::uint32_t v) { return "v" + std::to_string(v + 1); };
  auto fieldName = [](std::uint32_t f) { return "f" + std::to_string(f + 1); };
  auto allocName = [](std::uint32_t a) { return "o" + std::to_string(a + 1); };

  std::vector<std::string> stmts;
  stmts.reserve(p.statements);
  for (std::uint32_t i = 0; i < newStatements; ++i) {
    const std::uint32_t a =
        i < allocType.size() ? allocOrder[i] : static_cast<std::uint32_t>(rng.below(allocType.size()));
    stmts.push_back("new " + varName(varFrom(accepting[allocType[a].value])) + " " + allocName(a));
  }
  for (std::uint32_t i = 0; i < assignStatements; ++i) {
    const std::uint32_t src = anyVar();
    stmts.push_back("assign " + varName(varFrom(accepting[varType[src].value])) + " " + varName(src));
  }
  for (std::uint32_t i = 0; i < fieldStatements; ++i) {
    const std::uint32_t f = static_cast<std::uint32_t>(rng.below(p.fields));
    const std::uint32_t base = anyVar();
    if (i % 2 == 0) {
      stmts.push_back("store " + varName(base) + " " + fieldName(f) + " " +
                      varName(varFrom(subtypeVars[fieldType[f].value])));
    } else {
      stmts.push_back("load " + varName(varFrom(accepting[fieldType[f].value])) + " " + varName(base) + " " +
                      fieldName(f));
    }
  }
  rng.shuffle(stmts);

  std::ostringstream os;
  os << "# synthetic corpus seed=" << seed << " classes=" << p.classes << " depth=" << p.maxDepth
     << " interfaces=" << p.interfaces << " statements=" << p.statements << '\n';
  for (const ClassDecl& c : classes) {
    os << "class " << c.name;
    if (!c.parents.empty()) os << " extends " << c.parents.front();
    for (std::size_t i = 0; i < c.interfaces.size(); ++i) os << (i ? "," : " implements ") << c.interfaces[i];
    os << '\n';
  }
  for (const InterfaceDecl& d : interfaces) {
    os << "interface " << d.name;
    for (std::size_t i = 0; i < d.extends.size(); ++i) os << (i ? "," : " extends ") << d.extends[i];
    os << '\n';
  }
  for (std::uint32_t f = 0; f < p.fields; ++f) os << "field " << fieldName(f) << " : " << h.nameOf(fieldType[f]) << '\n';
  for (std::uint32_t v = 0; v < p.vars; ++v) os << "var " << varName(v) << " : " << h.nameOf(varType[v]) << '\n';
  for (std::uint32_t a : allocOrder) os << "alloc " << allocName(a) << " : " << h.nameOf(allocType[a]) << '\n';
  for (const std::string& s : stmts) os << s << '\n';
  return os.str();
}

}  // namespace rangepta
