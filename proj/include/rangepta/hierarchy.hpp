#pragma once

#include <rangepta/bitsets.hpp>
#include <rangepta/error.hpp>
#include <rangepta/interval.hpp>

#include <algorithm>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rangepta {

struct TypeId {
  std::uint32_t value = 0;
  friend constexpr auto operator<=>(const TypeId&, const TypeId&) = default;
};

enum class TypeKind { Class, Interface, Array };

struct TypeInfo {
  std::string name;
  TypeKind kind = TypeKind::Class;
  std::optional<TypeId> parent;
  std::vector<TypeId> children;
  // `implements` for classes, `extends` for interfaces.
  std::vector<TypeId> directInterfaces;
  // Transitive closure, including interfaces inherited from ancestors. Sorted.
  std::vector<TypeId> allInterfaces;
  std::optional<TypeId> element;
  std::uint32_t depth = 0;
};

struct ClassDecl {
  std::string name;
  std::vector<std::string> parents;
  std::vector<std::string> interfaces;
  std::uint32_t line = 0;
};

struct InterfaceDecl {
  std::string name;
  std::vector<std::string> extends;
  std::uint32_t line = 0;
};

/// True iff `name` spells an array type (`Elem[]`, possibly nested).
inline bool isArrayName(std::string_view name) {
  return name.size() > 2 && name.ends_with("[]");
}

class ClassHierarchy;
ClassHierarchy buildHierarchy(std::span<const ClassDecl> classes, std::span<const InterfaceDecl> interfaces,
                              std::span<const std::string> arrayTypes = {});

/// Single-inheritance class tree plus the interface relation. Array types
/// are synthetic classes whose parent mirrors the element's parent
/// (`B[]` extends `A[]` when `B` extends `A`; `Object[]` extends `Object`).
/// Immutable once built.
class ClassHierarchy {
 public:
  TypeId root() const noexcept { return root_; }
  std::size_t typeCount() const noexcept { return types_.size(); }

  const TypeInfo& info(TypeId t) const {
    checkId(t);
    return types_[t.value];
  }
  const std::string& nameOf(TypeId t) const { return info(t).name; }

  std::optional<TypeId> find(std::string_view name) const {
    auto it = byName_.find(std::string(name));
    if (it == byName_.end()) return std::nullopt;
    return it->second;
  }

  TypeId require(std::string_view name) const {
    if (auto t = find(name)) return *t;
    throw Error(ErrorCode::UnknownType, "type '" + std::string(name) + "' is not declared");
  }

  bool isInterface(TypeId t) const { return info(t).kind == TypeKind::Interface; }
  bool isClassLike(TypeId t) const { return info(t).kind != TypeKind::Interface; }

  bool isSubtype(TypeId s, TypeId t) const {
    checkId(s);
    checkId(t);
    if (s == t) return true;
    const TypeInfo& target = types_[t.value];
    const TypeInfo& source = types_[s.value];
    if (target.kind == TypeKind::Interface) {
      return std::binary_search(source.allInterfaces.begin(), source.allInterfaces.end(), t);
    }
    if (source.kind == TypeKind::Interface) return t == root_;
    for (std::optional<TypeId> p = source.parent; p; p = types_[p->value].parent) {
      if (*p == t) return true;
    }
    return false;
  }

  /// All types in declaration order (classes, interfaces, then arrays).
  std::vector<TypeId> allTypes() const {
    std::vector<TypeId> out(types_.size());
    for (std::uint32_t i = 0; i < out.size(); ++i) out[i] = TypeId{i};
    return out;
  }

  std::uint32_t maxDepth() const noexcept {
    std::uint32_t d = 0;
    for (const TypeInfo& t : types_) d = std::max(d, t.depth);
    return d;
  }

 private:
  friend ClassHierarchy buildHierarchy(std::span<const ClassDecl>, std::span<const InterfaceDecl>,
                                       std::span<const std::string>);

  void checkId(TypeId t) const {
    if (t.value >= types_.size()) {
      throw Error(ErrorCode::UnknownType, "type id " + std::to_string(t.value) + " is not declared");
    }
  }

  std::vector<TypeInfo> types_;
  std::unordered_map<std::string, TypeId> byName_;
  TypeId root_;
};

inline bool isSubtype(const ClassHierarchy& h, TypeId s, TypeId t) { return h.isSubtype(s, t); }

inline ClassHierarchy buildHierarchy(std::span<const ClassDecl> classes, std::span<const InterfaceDecl> interfaces,
                                     std::span<const std::string> arrayTypes) {
  ClassHierarchy h;
  auto& types = h.types_;
  auto& byName = h.byName_;

  auto declare = [&](const std::string& name, TypeKind kind, std::uint32_t line) {
    if (byName.contains(name)) {
      throw Error(ErrorCode::DuplicateType, "type '" + name + "' declared twice", line, 1);
    }
    const TypeId id{static_cast<std::uint32_t>(types.size())};
    TypeInfo info;
    info.name = name;
    info.kind = kind;
    types.push_back(std::move(info));
    byName.emplace(name, id);
    return id;
  };
  for (const ClassDecl& c : classes) declare(c.name, TypeKind::Class, c.line);
  for (const InterfaceDecl& i : interfaces) declare(i.name, TypeKind::Interface, i.line);

  auto resolve = [&](const std::string& name, TypeKind want, std::uint32_t line) {
    auto it = byName.find(name);
    if (it == byName.end()) {
      throw Error(ErrorCode::UnknownType, "type '" + name + "' is not declared", line, 1);
    }
    if (types[it->second.value].kind != want) {
      throw Error(ErrorCode::UnknownType,
                  "'" + name + "' is not " + (want == TypeKind::Class ? "a class" : "an interface"), line, 1);
    }
    return it->second;
  };

  std::vector<TypeId> roots;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const ClassDecl& c = classes[i];
    TypeInfo& info = types[i];
    if (c.parents.size() > 1) {
      throw Error(ErrorCode::MultipleParents, "class '" + c.name + "' extends more than one class", c.line, 1);
    }
    if (c.parents.empty()) {
      roots.push_back(TypeId{static_cast<std::uint32_t>(i)});
    } else {
      info.parent = resolve(c.parents.front(), TypeKind::Class, c.line);
    }
    for (const std::string& iface : c.interfaces) {
      info.directInterfaces.push_back(resolve(iface, TypeKind::Interface, c.line));
    }
  }
  for (std::size_t i = 0; i < interfaces.size(); ++i) {
    const InterfaceDecl& d = interfaces[i];
    TypeInfo& info = types[classes.size() + i];
    for (const std::string& sup : d.extends) {
      info.directInterfaces.push_back(resolve(sup, TypeKind::Interface, d.line));
    }
  }

  // Class cycles: every parent chain must terminate within |classes| steps.
  for (std::size_t i = 0; i < classes.size(); ++i) {
    std::size_t steps = 0;
    for (std::optional<TypeId> p = types[i].parent; p; p = types[p->value].parent) {
      if (++steps > classes.size()) {
        throw Error(ErrorCode::InheritanceCycle, "class '" + classes[i].name + "' is its own ancestor",
                    classes[i].line, 1);
      }
    }
  }
  if (roots.size() != 1) {
    throw Error(ErrorCode::InvalidRoot, "expected exactly one root class without 'extends', found " +
                                            std::to_string(roots.size()));
  }
  h.root_ = roots.front();

  // Interface extension must be acyclic.
  {
    enum class Mark : std::uint8_t { White, Grey, Black };
    std::vector<Mark> mark(types.size(), Mark::White);
    std::function<void(TypeId)> visit = [&](TypeId t) {
      mark[t.value] = Mark::Grey;
      for (TypeId sup : types[t.value].directInterfaces) {
        if (mark[sup.value] == Mark::Grey) {
          throw Error(ErrorCode::InheritanceCycle,
                      "interface '" + types[sup.value].name + "' extends itself transitively");
        }
        if (mark[sup.value] == Mark::White) visit(sup);
      }
      mark[t.value] = Mark::Black;
    };
    for (std::size_t i = classes.size(); i < types.size(); ++i) {
      if (mark[i] == Mark::White) visit(TypeId{static_cast<std::uint32_t>(i)});
    }
  }

  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (types[i].parent) types[types[i].parent->value].children.push_back(TypeId{static_cast<std::uint32_t>(i)});
  }

  // Array types, materialized on demand together with their ancestors.
  std::unordered_map<std::uint32_t, TypeId> arrayOf;
  std::function<TypeId(TypeId)> ensureArray = [&](TypeId elem) -> TypeId {
    if (auto it = arrayOf.find(elem.value); it != arrayOf.end()) return it->second;
    if (types[elem.value].kind == TypeKind::Interface) {
      throw Error(ErrorCode::UnknownType,
                  "arrays of interface type '" + types[elem.value].name + "' are not supported");
    }
    const std::optional<TypeId> elemParent = types[elem.value].parent;
    const TypeId parent = elemParent ? ensureArray(*elemParent) : h.root_;
    const TypeId id{static_cast<std::uint32_t>(types.size())};
    std::string name = types[elem.value].name + "[]";
    TypeInfo info;
    info.name = name;
    info.kind = TypeKind::Array;
    info.parent = parent;
    info.element = elem;
    types.push_back(std::move(info));
    byName.emplace(std::move(name), id);
    types[parent.value].children.push_back(id);
    arrayOf.emplace(elem.value, id);
    return id;
  };
  std::function<TypeId(std::string_view)> ensureNamed = [&](std::string_view name) -> TypeId {
    if (isArrayName(name)) return ensureArray(ensureNamed(name.substr(0, name.size() - 2)));
    auto it = byName.find(std::string(name));
    if (it == byName.end()) {
      throw Error(ErrorCode::UnknownType, "type '" + std::string(name) + "' is not declared");
    }
    return it->second;
  };
  for (const std::string& a : arrayTypes) ensureNamed(a);

  // Interface closures.
  std::vector<bool> ifaceDone(types.size(), false);
  std::function<const std::vector<TypeId>&(TypeId)> ifaceClosure = [&](TypeId t) -> const std::vector<TypeId>& {
    TypeInfo& info = types[t.value];
    if (!ifaceDone[t.value]) {
      std::vector<TypeId> all;
      for (TypeId sup : info.directInterfaces) {
        all.push_back(sup);
        const auto& more = ifaceClosure(sup);
        all.insert(all.end(), more.begin(), more.end());
      }
      std::sort(all.begin(), all.end());
      all.erase(std::unique(all.begin(), all.end()), all.end());
      types[t.value].allInterfaces = std::move(all);
      ifaceDone[t.value] = true;
    }
    return types[t.value].allInterfaces;
  };
  for (std::size_t i = classes.size(); i < classes.size() + interfaces.size(); ++i) {
    ifaceClosure(TypeId{static_cast<std::uint32_t>(i)});
  }
  // Classes top-down so that ancestors are complete first.
  std::vector<TypeId> stack{h.root_};
  while (!stack.empty()) {
    const TypeId t = stack.back();
    stack.pop_back();
    TypeInfo& info = types[t.value];
    std::vector<TypeId> all;
    if (info.parent) {
      const TypeInfo& p = types[info.parent->value];
      all = p.allInterfaces;
      info.depth = p.depth + 1;
    }
    for (TypeId iface : info.directInterfaces) {
      all.push_back(iface);
      const auto& more = types[iface.value].allInterfaces;
      all.insert(all.end(), more.begin(), more.end());
    }
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    info.allInterfaces = std::move(all);
    for (TypeId c : info.children) stack.push_back(c);
  }
  return h;
}

// ---------------------------------------------------------------------------
// Numbering

struct AllocSite {
  std::string id;
  TypeId type;
};

/// Result of renumbering allocation sites so that every class's compatible
/// allocations form one contiguous interval.
class NumberingResult {
 public:
  std::uint32_t totalAllocs() const noexcept { return static_cast<std::uint32_t>(globalArray_.size()); }

  /// globalArray()[i - 1] is the ordinal (position in the input list) of the
  /// allocation numbered i.
  std::span<const std::uint32_t> globalArray() const noexcept { return globalArray_; }

  std::uint32_t indexOf(std::size_t allocOrdinal) const { return indexOfAlloc_.at(allocOrdinal); }
  std::uint32_t allocAt(std::uint32_t index) const { return globalArray_.at(index - 1); }
  TypeId typeAt(std::uint32_t index) const { return typeOfIndex_.at(index - 1); }

  const Interval& intervalOf(TypeId cls) const {
    if (cls.value >= intervals_.size() || !hasInterval_[cls.value]) {
      throw Error(ErrorCode::UnknownType, "no interval for type id " + std::to_string(cls.value));
    }
    return intervals_[cls.value];
  }

  /// Intervals of the topmost implementors of an interface, sorted by lower bound.
  const std::vector<Interval>& interfaceIntervals(TypeId iface) const {
    auto it = ifaceIntervals_.find(iface.value);
    if (it == ifaceIntervals_.end()) {
      throw Error(ErrorCode::UnknownType, "no intervals for type id " + std::to_string(iface.value));
    }
    return it->second;
  }

  /// Types in the order their intervals were closed (postorder of the DFS).
  std::span<const TypeId> creationOrder() const noexcept { return creationOrder_; }

 private:
  friend NumberingResult numberAllocations(const ClassHierarchy&, std::span<const AllocSite>);

  std::vector<std::uint32_t> globalArray_;
  std::vector<std::uint32_t> indexOfAlloc_;
  std::vector<TypeId> typeOfIndex_;
  std::vector<Interval> intervals_;
  std::vector<bool> hasInterval_;
  std::unordered_map<std::uint32_t, std::vector<Interval>> ifaceIntervals_;
  std::vector<TypeId> creationOrder_;
};

inline NumberingResult numberAllocations(const ClassHierarchy& h, std::span<const AllocSite> allocs) {
  NumberingResult nr;
  std::vector<std::vector<std::uint32_t>> class2allocs(h.typeCount());
  for (std::size_t i = 0; i < allocs.size(); ++i) {
    const AllocSite& a = allocs[i];
    if (a.type.value >= h.typeCount()) {
      throw Error(ErrorCode::UnknownType, "allocation '" + a.id + "' has an undeclared type");
    }
    if (h.isInterface(a.type)) {
      throw Error(ErrorCode::UnknownType,
                  "allocation '" + a.id + "' instantiates interface '" + h.nameOf(a.type) + "'");
    }
    class2allocs[a.type.value].push_back(static_cast<std::uint32_t>(i));
  }

  nr.globalArray_.reserve(allocs.size());
  nr.indexOfAlloc_.assign(allocs.size(), 0);
  nr.typeOfIndex_.reserve(allocs.size());
  nr.intervals_.assign(h.typeCount(), Interval{});
  nr.hasInterval_.assign(h.typeCount(), false);

  std::uint32_t counter = 0;
  std::function<void(TypeId)> dfsVisit = [&](TypeId cls) {
    const std::uint32_t lower = counter + 1;
    for (std::uint32_t ordinal : class2allocs[cls.value]) {
      ++counter;
      nr.globalArray_.push_back(ordinal);
      nr.indexOfAlloc_[ordinal] = counter;
      nr.typeOfIndex_.push_back(cls);
    }
    for (TypeId child : h.info(cls).children) dfsVisit(child);
    nr.intervals_[cls.value] = Interval{lower, counter};
    nr.hasInterval_[cls.value] = true;
    nr.creationOrder_.push_back(cls);
  };
  dfsVisit(h.root());

  for (TypeId t : h.allTypes()) {
    if (!h.isInterface(t)) continue;
    std::vector<Interval> out;
    for (TypeId c : nr.creationOrder_) {
      const TypeInfo& info = h.info(c);
      if (!h.isSubtype(c, t)) continue;
      if (info.parent && h.isSubtype(*info.parent, t)) continue;
      if (!nr.intervals_[c.value].empty()) out.push_back(nr.intervals_[c.value]);
    }
    std::sort(out.begin(), out.end(), [](const Interval& a, const Interval& b) { return a.lower < b.lower; });
    nr.ifaceIntervals_.emplace(t.value, std::move(out));
  }
  return nr;
}

/// Intervals covering the allocations compatible with `t`: the class's own
/// interval, or one interval per topmost implementor of an interface.
inline std::vector<Interval> intervalsOf(const NumberingResult& nr, const ClassHierarchy& h, TypeId t) {
  if (h.isInterface(t)) return nr.interfaceIntervals(t);
  return {nr.intervalOf(t)};
}

struct TypeMask {
  TypeId forType;
  PlainBitVector bits;
};

inline TypeMask buildTypeMask(const NumberingResult& nr, const ClassHierarchy& h, TypeId t) {
  TypeMask mask{t, PlainBitVector(nr.totalAllocs())};
  h.info(t);
  for (std::uint32_t i = 1; i <= nr.totalAllocs(); ++i) {
    if (h.isSubtype(nr.typeAt(i), t)) mask.bits.set(i);
  }
  return mask;
}

}  // namespace rangepta
