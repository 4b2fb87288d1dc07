#pragma once

#include <rangepta/error.hpp>
#include <rangepta/hierarchy.hpp>

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstdint>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace rangepta {

struct VarNode {
  std::string name;
  TypeId type;
};

struct FieldSig {
  std::string name;
  TypeId type;
};

struct AllocEdge {
  std::uint32_t alloc;  // ordinal into Pag::allocs
  std::uint32_t var;
};

struct AssignEdge {
  std::uint32_t dst;
  std::uint32_t src;
};

// base.field = src
struct StoreEdge {
  std::uint32_t base;
  std::uint32_t field;
  std::uint32_t src;
};

// dst = base.field
struct LoadEdge {
  std::uint32_t dst;
  std::uint32_t base;
  std::uint32_t field;
};

/// Key of a concrete field node: an abstract object (by allocation index)
/// paired with a field signature.
struct ConcreteFieldKey {
  std::uint32_t allocIndex = 0;
  std::uint32_t field = 0;
  friend constexpr auto operator<=>(const ConcreteFieldKey&, const ConcreteFieldKey&) = default;
};

/// Pointer assignment graph. Variables, fields, and allocation sites are
/// referenced by their position in the respective vectors.
struct Pag {
  std::vector<VarNode> vars;
  std::vector<FieldSig> fields;
  std::vector<AllocSite> allocs;
  std::vector<AllocEdge> allocEdges;
  std::vector<AssignEdge> assignEdges;
  std::vector<StoreEdge> storeEdges;
  std::vector<LoadEdge> loadEdges;

  std::size_t statementCount() const noexcept {
    return allocEdges.size() + assignEdges.size() + storeEdges.size() + loadEdges.size();
  }

  /// Variables used as the base of a store or load, ascending and unique.
  std::vector<std::uint32_t> dereferencedVars() const {
    std::vector<std::uint32_t> out;
    for (const StoreEdge& e : storeEdges) out.push_back(e.base);
    for (const LoadEdge& e : loadEdges) out.push_back(e.base);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
};

struct Program {
  std::vector<ClassDecl> classDecls;
  std::vector<InterfaceDecl> interfaceDecls;
  ClassHierarchy hierarchy;
  Pag pag;
};

namespace detail {

struct Token {
  std::string_view text;
  std::uint32_t column;
};

inline std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= line.size()) break;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    out.push_back(Token{line.substr(start, i - start), static_cast<std::uint32_t>(start + 1)});
  }
  return out;
}

inline bool isIdentifier(std::string_view s) {
  if (s.empty()) return false;
  const auto first = static_cast<unsigned char>(s.front());
  if (!(std::isalpha(first) || first == '_')) return false;
  return std::all_of(s.begin() + 1, s.end(), [](char c) {
    const auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || u == '_' || u == '$' || u == '.';
  });
}

inline std::string_view elementName(std::string_view type) {
  while (isArrayName(type)) type.remove_suffix(2);
  return type;
}

inline bool isTypeName(std::string_view s) { return isIdentifier(elementName(s)); }

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Program run() {
    std::size_t lineNo = 0;
    std::size_t pos = 0;
    while (pos <= text_.size()) {
      const std::size_t eol = text_.find('\n', pos);
      std::string_view line = text_.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
      ++lineNo;
      if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      parseLine(tokenize(line), static_cast<std::uint32_t>(lineNo));
      if (eol == std::string_view::npos) break;
      pos = eol + 1;
    }
    return finish();
  }

 private:
  struct TypedDecl {
    std::string name;
    std::string type;
    std::uint32_t line;
    std::uint32_t typeColumn;
  };
  struct Stmt {
    std::string_view kind;
    std::vector<Token> args;
    std::uint32_t line;
  };

  [[noreturn]] static void syntax(const std::string& msg, std::uint32_t line, std::uint32_t col) {
    throw Error(ErrorCode::SyntaxError, msg, line, col);
  }

  static void expectArity(const std::vector<Token>& toks, std::size_t n, std::uint32_t line) {
    if (toks.size() != n) {
      const std::uint32_t col = toks.size() > n ? toks[n].column : toks.back().column;
      syntax("'" + std::string(toks[0].text) + "' expects " + std::to_string(n - 1) + " operands", line, col);
    }
  }

  static std::string identifier(const Token& t, std::uint32_t line) {
    if (!isIdentifier(t.text)) syntax("invalid identifier '" + std::string(t.text) + "'", line, t.column);
    return std::string(t.text);
  }

  /// Comma-separated names following a keyword; tokens may be split around commas.
  static std::vector<std::string> nameList(const std::vector<Token>& toks, std::size_t from, std::uint32_t line) {
    if (from >= toks.size()) syntax("expected a name list", line, toks.back().column);
    std::string joined;
    for (std::size_t i = from; i < toks.size(); ++i) joined += toks[i].text;
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = joined.find(',', start);
      std::string item = joined.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!isIdentifier(item)) syntax("invalid name '" + item + "' in list", line, toks[from].column);
      out.push_back(std::move(item));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return out;
  }

  void parseLine(const std::vector<Token>& toks, std::uint32_t line) {
    if (toks.empty()) return;
    const std::string_view kw = toks[0].text;
    if (kw == "class") {
      parseClass(toks, line);
    } else if (kw == "interface") {
      parseInterface(toks, line);
    } else if (kw == "field" || kw == "var" || kw == "alloc") {
      expectArity(toks, 4, line);
      TypedDecl d{identifier(toks[1], line), std::string(toks[3].text), line, toks[3].column};
      if (toks[2].text != ":") syntax("expected ':'", line, toks[2].column);
      if (!isTypeName(d.type)) syntax("invalid type name '" + d.type + "'", line, toks[3].column);
      auto& names = kw == "field" ? fieldNames_ : kw == "var" ? varNames_ : allocNames_;
      if (!names.insert(d.name).second) {
        throw Error(ErrorCode::DuplicateName, std::string(kw) + " '" + d.name + "' declared twice", line,
                    toks[1].column);
      }
      (kw == "field" ? fieldDecls_ : kw == "var" ? varDecls_ : allocDecls_).push_back(std::move(d));
    } else if (kw == "new" || kw == "assign") {
      expectArity(toks, 3, line);
      statement(toks, line);
    } else if (kw == "store" || kw == "load") {
      expectArity(toks, 4, line);
      statement(toks, line);
    } else {
      syntax("unknown directive '" + std::string(kw) + "'", line, toks[0].column);
    }
  }

  void statement(const std::vector<Token>& toks, std::uint32_t line) {
    for (std::size_t i = 1; i < toks.size(); ++i) identifier(toks[i], line);
    stmts_.push_back(Stmt{toks[0].text, {toks.begin() + 1, toks.end()}, line});
  }

  void parseClass(const std::vector<Token>& toks, std::uint32_t line) {
    if (toks.size() < 2) syntax("class name expected", line, toks[0].column);
    ClassDecl decl{identifier(toks[1], line), {}, {}, line};
    std::size_t i = 2;
    if (i < toks.size() && toks[i].text == "extends") {
      std::size_t end = i + 1;
      while (end < toks.size() && toks[end].text != "implements") ++end;
      decl.parents = nameList({toks.begin(), toks.begin() + static_cast<std::ptrdiff_t>(end)}, i + 1, line);
      i = end;
    }
    if (i < toks.size()) {
      if (toks[i].text != "implements") syntax("expected 'extends' or 'implements'", line, toks[i].column);
      decl.interfaces = nameList(toks, i + 1, line);
    }
    classDecls_.push_back(std::move(decl));
  }

  void parseInterface(const std::vector<Token>& toks, std::uint32_t line) {
    if (toks.size() < 2) syntax("interface name expected", line, toks[0].column);
    InterfaceDecl decl{identifier(toks[1], line), {}, line};
    if (toks.size() > 2) {
      if (toks[2].text != "extends") syntax("expected 'extends'", line, toks[2].column);
      decl.extends = nameList(toks, 3, line);
    }
    interfaceDecls_.push_back(std::move(decl));
  }

  Program finish() {
    std::unordered_set<std::string> declared;
    for (const auto& c : classDecls_) declared.insert(c.name);
    for (const auto& i : interfaceDecls_) declared.insert(i.name);
    std::vector<std::string> arrayTypes;
    for (const auto* list : {&fieldDecls_, &varDecls_, &allocDecls_}) {
      for (const TypedDecl& d : *list) {
        if (!declared.contains(std::string(elementName(d.type)))) {
          throw Error(ErrorCode::UnknownType, "type '" + d.type + "' is not declared", d.line, d.typeColumn);
        }
        if (isArrayName(d.type)) arrayTypes.push_back(d.type);
      }
    }

    Program p{classDecls_, interfaceDecls_, buildHierarchy(classDecls_, interfaceDecls_, arrayTypes), {}};
    const ClassHierarchy& h = p.hierarchy;
    Pag& g = p.pag;

    auto typeOf = [&](const TypedDecl& d) {
      try {
        return h.require(d.type);
      } catch (const Error& e) {
        throw Error(e.code(), e.message(), d.line, d.typeColumn);
      }
    };
    std::unordered_map<std::string, std::uint32_t> fieldIdx, varIdx, allocIdx;
    for (const TypedDecl& d : fieldDecls_) {
      fieldIdx.emplace(d.name, static_cast<std::uint32_t>(g.fields.size()));
      g.fields.push_back(FieldSig{d.name, typeOf(d)});
    }
    for (const TypedDecl& d : varDecls_) {
      varIdx.emplace(d.name, static_cast<std::uint32_t>(g.vars.size()));
      g.vars.push_back(VarNode{d.name, typeOf(d)});
    }
    for (const TypedDecl& d : allocDecls_) {
      const TypeId t = typeOf(d);
      if (h.isInterface(t)) {
        throw Error(ErrorCode::UnknownType, "cannot allocate interface '" + d.type + "'", d.line, d.typeColumn);
      }
      allocIdx.emplace(d.name, static_cast<std::uint32_t>(g.allocs.size()));
      g.allocs.push_back(AllocSite{d.name, t});
    }

    auto lookup = [](const std::unordered_map<std::string, std::uint32_t>& m, const Token& t, std::uint32_t line,
                     std::string_view what) {
      auto it = m.find(std::string(t.text));
      if (it == m.end()) {
        throw Error(ErrorCode::UndeclaredVariable, std::string(what) + " '" + std::string(t.text) + "' is not declared",
                    line, t.column);
      }
      return it->second;
    };
    for (const Stmt& s : stmts_) {
      const auto& a = s.args;
      if (s.kind == "new") {
        const std::uint32_t v = lookup(varIdx, a[0], s.line, "variable");
        g.allocEdges.push_back(AllocEdge{lookup(allocIdx, a[1], s.line, "allocation"), v});
      } else if (s.kind == "assign") {
        const std::uint32_t dst = lookup(varIdx, a[0], s.line, "variable");
        g.assignEdges.push_back(AssignEdge{dst, lookup(varIdx, a[1], s.line, "variable")});
      } else if (s.kind == "store") {
        const std::uint32_t base = lookup(varIdx, a[0], s.line, "variable");
        const std::uint32_t field = lookup(fieldIdx, a[1], s.line, "field");
        g.storeEdges.push_back(StoreEdge{base, field, lookup(varIdx, a[2], s.line, "variable")});
      } else {
        const std::uint32_t dst = lookup(varIdx, a[0], s.line, "variable");
        const std::uint32_t base = lookup(varIdx, a[1], s.line, "variable");
        g.loadEdges.push_back(LoadEdge{dst, base, lookup(fieldIdx, a[2], s.line, "field")});
      }
    }
    return p;
  }

  std::string_view text_;
  std::vector<ClassDecl> classDecls_;
  std::vector<InterfaceDecl> interfaceDecls_;
  std::vector<TypedDecl> fieldDecls_, varDecls_, allocDecls_;
  std::unordered_set<std::string> fieldNames_, varNames_, allocNames_;
  std::vector<Stmt> stmts_;
};

inline void joinNames(std::ostream& os, const std::vector<std::string>& names) {
  for (std::size_t i = 0; i < names.size(); ++i) os << (i ? "," : "") << names[i];
}

}  // namespace detail

/// Parses the line-oriented fact format. Declarations may appear in any
/// order; references are resolved after the whole text is read.
inline Program parseProgram(std::string_view text) { return detail::Parser(text).run(); }

/// Canonical text: declarations first, then edges grouped by kind.
inline std::string printProgram(const Program& p) {
  std::ostringstream os;
  const ClassHierarchy& h = p.hierarchy;
  for (const ClassDecl& c : p.classDecls) {
    os << "class " << c.name;
    if (!c.parents.empty()) {
      os << " extends ";
      detail::joinNames(os, c.parents);
    }
    if (!c.interfaces.empty()) {
      os << " implements ";
      detail::joinNames(os, c.interfaces);
    }
    os << '\n';
  }
  for (const InterfaceDecl& i : p.interfaceDecls) {
    os << "interface " << i.name;
    if (!i.extends.empty()) {
      os << " extends ";
      detail::joinNames(os, i.extends);
    }
    os << '\n';
  }
  const Pag& g = p.pag;
  for (const FieldSig& f : g.fields) os << "field " << f.name << " : " << h.nameOf(f.type) << '\n';
  for (const VarNode& v : g.vars) os << "var " << v.name << " : " << h.nameOf(v.type) << '\n';
  for (const AllocSite& a : g.allocs) os << "alloc " << a.id << " : " << h.nameOf(a.type) << '\n';
  for (const AllocEdge& e : g.allocEdges) os << "new " << g.vars[e.var].name << ' ' << g.allocs[e.alloc].id << '\n';
  for (const AssignEdge& e : g.assignEdges) os << "assign " << g.vars[e.dst].name << ' ' << g.vars[e.src].name << '\n';
  for (const StoreEdge& e : g.storeEdges) {
    os << "store " << g.vars[e.base].name << ' ' << g.fields[e.field].name << ' ' << g.vars[e.src].name << '\n';
  }
  for (const LoadEdge& e : g.loadEdges) {
    os << "load " << g.vars[e.dst].name << ' ' << g.vars[e.base].name << ' ' << g.fields[e.field].name << '\n';
  }
  return os.str();
}

}  // namespace rangepta
