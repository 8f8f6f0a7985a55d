#pragma once

// Reader and canonical writer for the `.dartwin` text format.
//
//   model    := "dartwin" STRING ["extends" STRING] "{" goal* relation* system "}"
//   goal     := "goal" ID "{" ["title" STRING] poi* ["constraint" STRING] "}"
//   poi      := "poi" ID ":" ID
//   relation := "relation" ID ("generalizes"|"supports"|"conflicts") ID ["label" STRING] ["combinator" ("union"|"strictest")]
//   system   := ("system"|"at") STRING "{" ["title" STRING] port* (dt|system)* flow* "}"
//   dt       := "dt" ID "{" ["title" STRING] port* ["behavior" STRING] ("satisfies" ID)* "}"
//   port     := ("in"|"out") ID ":" ID "[" role "]"
//   flow     := "flow" pathref "->" pathref
//   pathref  := (ID | "boundary") "." ID
//
// The system STRING doubles as the system identifier and must be identifier-shaped.
// A fragment file carries the new elements of a transformation:
//
//   fragment := "fragment" "{" (goal | relation | dt | port | flow | "extend" ID "{" port* "}"
//                              | "root" ID | "title" STRING | "name" STRING)* "}"

#include <cctype>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "constraint.hpp"
#include "diagnostics.hpp"
#include "invariants.hpp"
#include "model.hpp"

namespace dartwin {

inline constexpr std::string_view kBoundary = "boundary";

inline bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  }
  return true;
}

inline bool is_reserved_word(std::string_view s) {
  static constexpr std::string_view words[] = {
      "at",         "behavior", "boundary", "combinator", "conflicts", "constraint", "dartwin", "dt",
      "extend",     "extends",  "flow",     "fragment",   "generalizes", "goal",     "in",      "label",
      "out",        "poi",      "relation", "root",       "satisfies", "strictest", "supports", "system",
      "title",      "union",    "name"};
  for (auto w : words) {
    if (s == w) return true;
  }
  return false;
}

// New elements supplied to a transformation. Flow endpoints owned by "boundary" refer to
// the boundary of the system the transformation targets.
struct Fragment {
  std::optional<std::string> name;
  std::optional<std::string> root_id;
  std::optional<std::string> root_title;
  std::vector<Goal> goals;
  std::vector<GoalEdge> relations;
  std::vector<Dt> dts;
  std::vector<DtGoalLink> links;
  std::vector<Port> boundary_ports;  // ids are filled in when the owner is known
  std::vector<Flow> flows;
  std::map<std::string, std::vector<Port>> extensions;  // existing Dt id -> ports to add
};

template <class T>
struct ParseResult {
  std::optional<T> value;
  std::vector<ParseDiagnostic> diagnostics;

  bool ok() const { return value.has_value(); }
};

namespace detail {

struct Token {
  enum class Kind { ident, string, punct, end } kind = Kind::end;
  std::string text;
  int line = 1;
  int column = 1;
  int length = 1;
  std::size_t offset = 0;
};

struct SyntaxError {
  std::string message;
  SourceSpan span;
};

inline int utf8_length(std::string_view s) {
  int n = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

class Lexer {
 public:
  Lexer(std::string_view text, std::string file) : text_(text), file_(std::move(file)) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      Token t;
      t.line = line_;
      t.column = column_;
      t.offset = pos_;
      if (pos_ >= text_.size()) {
        t.kind = Token::Kind::end;
        out.push_back(t);
        return out;
      }
      char c = text_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) advance();
        t.kind = Token::Kind::ident;
        t.text = std::string(text_.substr(start, pos_ - start));
        t.length = static_cast<int>(t.text.size());
      } else if (c == '"') {
        std::size_t start = pos_;
        advance();
        std::string value;
        bool closed = false;
        while (pos_ < text_.size()) {
          char ch = text_[pos_];
          if (ch == '\n') break;
          if (ch == '"') {
            advance();
            closed = true;
            break;
          }
          if (ch == '\\' && pos_ + 1 < text_.size() && (text_[pos_ + 1] == '"' || text_[pos_ + 1] == '\\')) {
            advance();
            ch = text_[pos_];
          }
          value += ch;
          advance();
        }
        if (!closed) {
          throw SyntaxError{"unterminated string", {file_, t.line, t.column, utf8_length(text_.substr(start, pos_ - start))}};
        }
        t.kind = Token::Kind::string;
        t.text = std::move(value);
        t.length = utf8_length(text_.substr(start, pos_ - start));
      } else if (c == '-' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') {
        advance();
        advance();
        t.kind = Token::Kind::punct;
        t.text = "->";
        t.length = 2;
      } else if (std::string_view("{}[]:.").find(c) != std::string_view::npos) {
        advance();
        t.kind = Token::Kind::punct;
        t.text = std::string(1, c);
      } else {
        throw SyntaxError{std::string("unexpected character '") + c + "'", {file_, line_, column_, 1}};
      }
      out.push_back(std::move(t));
    }
  }

 private:
  void advance() {
    unsigned char c = static_cast<unsigned char>(text_[pos_]);
    ++pos_;
    if (c == '\n') {
      ++line_;
      column_ = 1;
    } else if ((c & 0xC0) != 0x80) {
      ++column_;  // counts characters, not bytes
    }
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '/') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else {
        return;
      }
    }
  }

  std::string_view text_;
  std::string file_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
};

class Parser {
 public:
  Parser(std::string_view text, std::string file) : text_(text), file_(std::move(file)) {
    tokens_ = Lexer(text_, file_).run();
  }

  // Element id -> spans of each declaration, in source order.
  std::map<std::string, std::vector<SourceSpan>> spans;
  std::vector<ParseDiagnostic> constraint_errors;

  Model parse_model() {
    Model m;
    expect_word("dartwin");
    m.name = expect_string();
    if (accept_word("extends")) m.extends_name = expect_string();
    expect_punct("{");
    while (peek_word("goal")) m.goals.push_back(parse_goal());
    while (peek_word("relation")) m.goal_edges.push_back(parse_relation());
    if (peek_word("system") || peek_word("at")) {
      m.root_system = parse_system(m.dt_goal_links);
    } else {
      fail(peek(), peek_word("goal") ? "goals must precede relations" : "expected 'system' block");
    }
    expect_punct("}");
    if (peek().kind != Token::Kind::end) fail(peek(), "unexpected content after model");
    return m;
  }

  Fragment parse_fragment() {
    Fragment f;
    expect_word("fragment");
    expect_punct("{");
    while (!peek_punct("}")) {
      if (peek_word("goal")) {
        f.goals.push_back(parse_goal());
      } else if (peek_word("relation")) {
        f.relations.push_back(parse_relation());
      } else if (peek_word("dt")) {
        f.dts.push_back(parse_dt(f.links));
      } else if (peek_word("in") || peek_word("out")) {
        f.boundary_ports.push_back(parse_port(""));
      } else if (peek_word("flow")) {
        f.flows.push_back(parse_flow(std::string(kBoundary)));
      } else if (accept_word("extend")) {
        std::string dt = expect_id();
        expect_punct("{");
        auto& ports = f.extensions[dt];
        while (peek_word("in") || peek_word("out")) ports.push_back(parse_port(dt));
        expect_punct("}");
      } else if (accept_word("root")) {
        f.root_id = expect_id();
      } else if (accept_word("title")) {
        f.root_title = expect_string();
      } else if (accept_word("name")) {
        f.name = expect_string();
      } else {
        fail(peek(), "unexpected '" + peek().text + "' in fragment");
      }
    }
    expect_punct("}");
    if (peek().kind != Token::Kind::end) fail(peek(), "unexpected content after fragment");
    return f;
  }

 private:
  const Token& peek() const { return tokens_[std::min(pos_, tokens_.size() - 1)]; }

  SourceSpan span_of(const Token& t) const { return {file_, t.line, t.column, t.length}; }

  [[noreturn]] void fail(const Token& t, const std::string& message) const {
    SourceSpan s = span_of(t);
    if (t.kind == Token::Kind::end) {
      s.length = 1;
      throw SyntaxError{message + " (at end of input)", s};
    }
    throw SyntaxError{message, s};
  }

  bool peek_word(std::string_view w) const { return peek().kind == Token::Kind::ident && peek().text == w; }
  bool peek_punct(std::string_view p) const { return peek().kind == Token::Kind::punct && peek().text == p; }

  bool accept_word(std::string_view w) {
    if (!peek_word(w)) return false;
    ++pos_;
    return true;
  }

  void expect_word(std::string_view w) {
    if (!accept_word(w)) fail(peek(), "expected '" + std::string(w) + "'");
  }

  void expect_punct(std::string_view p) {
    if (!peek_punct(p)) fail(peek(), "expected '" + std::string(p) + "'");
    ++pos_;
  }

  std::string expect_string() {
    if (peek().kind != Token::Kind::string) fail(peek(), "expected string");
    return tokens_[pos_++].text;
  }

  const Token& expect_id_token() {
    const Token& t = peek();
    if (t.kind != Token::Kind::ident) fail(t, "expected identifier");
    if (is_reserved_word(t.text)) fail(t, "keyword '" + t.text + "' cannot be used as an identifier");
    ++pos_;
    return t;
  }

  std::string expect_id() { return expect_id_token().text; }

  void record(const std::string& id, const Token& t) { spans[id].push_back(span_of(t)); }

  Goal parse_goal() {
    expect_word("goal");
    const Token& id_tok = expect_id_token();
    Goal g;
    g.id = id_tok.text;
    g.title = g.id;
    record(g.id, id_tok);
    expect_punct("{");
    if (accept_word("title")) g.title = expect_string();
    while (accept_word("poi")) {
      const Token& name_tok = expect_id_token();
      expect_punct(":");
      Poi p;
      p.name = name_tok.text;
      p.unit = expect_id();
      p.id = port_id(g.id, p.name);
      record(p.id, name_tok);
      g.pois.push_back(std::move(p));
    }
    if (peek_word("constraint")) {
      ++pos_;
      const Token& str = peek();
      std::string text = expect_string();
      try {
        g.constraint = parse_constraint(text);
      } catch (const ConstraintError& e) {
        SourceSpan s = span_of(str);
        // Point into the literal: skip the opening quote, clamp to the closing one.
        int inner = std::max(1, s.length - 2);
        int off = static_cast<int>(std::min<std::size_t>(e.offset(), static_cast<std::size_t>(inner - 1)));
        s.column += 1 + off;
        s.length = std::max(1, std::min(static_cast<int>(e.length()), inner - off));
        constraint_errors.push_back({Severity::error, "goal '" + g.id + "': " + e.what(), s});
      }
    }
    expect_punct("}");
    return g;
  }

  GoalEdge parse_relation() {
    const Token& kw = peek();
    expect_word("relation");
    GoalEdge e;
    e.source = expect_id();
    const Token& kind_tok = peek();
    auto kind = kind_tok.kind == Token::Kind::ident ? parse_edge_kind(kind_tok.text) : std::nullopt;
    if (!kind) fail(kind_tok, "expected 'generalizes', 'supports' or 'conflicts'");
    ++pos_;
    e.kind = *kind;
    e.target = expect_id();
    if (accept_word("label")) e.label = expect_string();
    if (accept_word("combinator")) {
      if (accept_word("union")) {
        e.combinator = Combinator::union_of;
      } else if (accept_word("strictest")) {
        e.combinator = Combinator::strictest;
      } else {
        fail(peek(), "expected 'union' or 'strictest'");
      }
    }
    record(e.id(), kw);
    return e;
  }

  Port parse_port(const std::string& owner) {
    const Token& dir_tok = peek();
    Port p;
    if (accept_word("in")) {
      p.direction = Direction::input;
    } else if (accept_word("out")) {
      p.direction = Direction::output;
    } else {
      fail(dir_tok, "expected 'in' or 'out'");
    }
    const Token& name_tok = expect_id_token();
    p.name = name_tok.text;
    expect_punct(":");
    p.signal_unit = expect_id();
    expect_punct("[");
    const Token& role_tok = peek();
    auto role = role_tok.kind == Token::Kind::ident ? parse_role(role_tok.text) : std::nullopt;
    if (!role) fail(role_tok, "expected port role 'monitoring', 'control', 'user' or 'inter_dt'");
    ++pos_;
    p.role = *role;
    expect_punct("]");
    if (!owner.empty()) {
      p.id = port_id(owner, p.name);
      record(p.id, name_tok);
    }
    return p;
  }

  Dt parse_dt(std::vector<DtGoalLink>& links) {
    expect_word("dt");
    const Token& id_tok = expect_id_token();
    Dt d;
    d.id = id_tok.text;
    d.name = d.id;
    record(d.id, id_tok);
    expect_punct("{");
    if (accept_word("title")) d.name = expect_string();
    while (peek_word("in") || peek_word("out")) d.ports.push_back(parse_port(d.id));
    if (accept_word("behavior")) d.behavior_key = expect_string();
    while (accept_word("satisfies")) {
      const Token& g = expect_id_token();
      DtGoalLink l{d.id, g.text};
      record(l.id(), g);
      links.push_back(std::move(l));
    }
    expect_punct("}");
    return d;
  }

  PortRef parse_pathref(const std::string& scope_id) {
    const Token& owner = peek();
    PortRef r;
    if (owner.kind == Token::Kind::ident && owner.text == kBoundary) {
      ++pos_;
      r.owner = scope_id;
    } else {
      r.owner = expect_id();
    }
    expect_punct(".");
    r.port = expect_id();
    return r;
  }

  Flow parse_flow(const std::string& scope_id) {
    expect_word("flow");
    const Token& start = peek();
    Flow f;
    f.from = parse_pathref(scope_id);
    expect_punct("->");
    f.to = parse_pathref(scope_id);
    spans[f.id()].push_back(span_of(start));
    return f;
  }

  TwinSystem parse_system(std::vector<DtGoalLink>& links) {
    TwinSystem s;
    if (accept_word("at")) {
      s.kind = SystemKind::actual_twin;
    } else {
      expect_word("system");
    }
    const Token& id_tok = peek();
    s.id = expect_string();
    if (!is_identifier(s.id) || is_reserved_word(s.id)) fail(id_tok, "system name must be an identifier");
    s.name = s.id;
    record(s.id, id_tok);
    expect_punct("{");
    if (accept_word("title")) s.name = expect_string();
    while (peek_word("in") || peek_word("out")) s.ports.push_back(parse_port(s.id));
    while (true) {
      if (peek_word("dt")) {
        s.dts.push_back(parse_dt(links));
      } else if (peek_word("system") || peek_word("at")) {
        s.subsystems.push_back(parse_system(links));
      } else {
        break;
      }
    }
    while (peek_word("flow")) s.flows.push_back(parse_flow(s.id));
    if (peek_word("in") || peek_word("out")) fail(peek(), "ports must precede dts, systems and flows");
    if (peek_word("dt") || peek_word("system") || peek_word("at")) fail(peek(), "flows must come last in a system");
    expect_punct("}");
    return s;
  }

  std::string_view text_;
  std::string file_;
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

inline SourceSpan span_for(const std::map<std::string, std::vector<SourceSpan>>& spans, const Diagnostic& d,
                           const std::string& file) {
  for (const auto& id : d.elements) {
    auto it = spans.find(id);
    if (it == spans.end() || it->second.empty()) continue;
    // Duplicates point at the redeclaration.
    return d.code == "DUP-ID" && it->second.size() > 1 ? it->second[1] : it->second.front();
  }
  return {file, 1, 1, 1};
}

}  // namespace detail

// Parses model text. On any error no model is returned.
inline ParseResult<Model> parse_model(std::string_view text, const std::string& file = "<input>") {
  ParseResult<Model> result;
  try {
    detail::Parser p(text, file);
    Model m = p.parse_model();
    result.diagnostics = p.constraint_errors;
    for (const auto& d : structural_errors(m)) {
      result.diagnostics.push_back({Severity::error, d.code + ": " + d.message, detail::span_for(p.spans, d, file)});
    }
    if (result.diagnostics.empty()) result.value = std::move(m);
  } catch (const detail::SyntaxError& e) {
    result.diagnostics.push_back({Severity::error, e.message, e.span});
  }
  return result;
}

inline ParseResult<Fragment> parse_fragment(std::string_view text, const std::string& file = "<input>") {
  ParseResult<Fragment> result;
  try {
    detail::Parser p(text, file);
    Fragment f = p.parse_fragment();
    result.diagnostics = p.constraint_errors;
    if (result.diagnostics.empty()) result.value = std::move(f);
  } catch (const detail::SyntaxError& e) {
    result.diagnostics.push_back({Severity::error, e.message, e.span});
  }
  return result;
}

inline std::string format_diagnostic(const ParseDiagnostic& d) {
  std::ostringstream os;
  os << d.span.file << ':' << d.span.line << ':' << d.span.column << ": " << to_string(d.severity) << ": " << d.message;
  return os.str();
}

// ---- writer -------------------------------------------------------------------------

namespace detail {

inline std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

inline void write_port(std::ostringstream& os, const Port& p, const std::string& indent) {
  os << indent << to_string(p.direction) << ' ' << p.name << ": " << p.signal_unit << " [" << to_string(p.role) << "]\n";
}

inline std::string pathref_text(const PortRef& r, const std::string& scope_id) {
  return (r.owner == scope_id ? std::string(kBoundary) : r.owner) + "." + r.port;
}

inline void write_system(std::ostringstream& os, const TwinSystem& s, const std::vector<DtGoalLink>& links,
                         const std::string& indent) {
  const std::string inner = indent + "  ";
  os << indent << (s.kind == SystemKind::actual_twin ? "at " : "system ") << quote(s.id) << " {\n";
  if (s.name != s.id) os << inner << "title " << quote(s.name) << '\n';
  for (const auto& p : s.ports) write_port(os, p, inner);
  for (const auto& d : s.dts) {
    os << inner << "dt " << d.id << " {\n";
    if (d.name != d.id) os << inner << "  title " << quote(d.name) << '\n';
    for (const auto& p : d.ports) write_port(os, p, inner + "  ");
    if (d.behavior_key) os << inner << "  behavior " << quote(*d.behavior_key) << '\n';
    for (const auto& l : links) {
      if (l.dt == d.id) os << inner << "  satisfies " << l.goal << '\n';
    }
    os << inner << "}\n";
  }
  for (const auto& sub : s.subsystems) write_system(os, sub, links, inner);
  for (const auto& f : s.flows) {
    os << inner << "flow " << pathref_text(f.from, s.id) << " -> " << pathref_text(f.to, s.id) << '\n';
  }
  os << indent << "}\n";
}

}  // namespace detail

// Canonical text: goals, relations and the system tree in sorted order, LF line ends.
inline std::string serialize_model(const Model& model) {
  Model m = canonicalize(model);
  std::ostringstream os;
  os << "dartwin " << detail::quote(m.name);
  if (m.extends_name) os << " extends " << detail::quote(*m.extends_name);
  os << " {\n";
  for (const auto& g : m.goals) {
    os << "  goal " << g.id << " {\n";
    if (g.title != g.id) os << "    title " << detail::quote(g.title) << '\n';
    for (const auto& p : g.pois) os << "    poi " << p.name << ": " << p.unit << '\n';
    if (g.constraint) os << "    constraint " << detail::quote(to_string(*g.constraint)) << '\n';
    os << "  }\n";
  }
  if (!m.goals.empty()) os << '\n';
  for (const auto& e : m.goal_edges) {
    os << "  relation " << e.source << ' ' << to_string(e.kind) << ' ' << e.target;
    if (e.label) os << " label " << detail::quote(*e.label);
    if (e.combinator) os << " combinator " << to_string(*e.combinator);
    os << '\n';
  }
  if (!m.goal_edges.empty()) os << '\n';
  detail::write_system(os, m.root_system, m.dt_goal_links, "  ");
  os << "}\n";
  return os.str();
}

}  // namespace dartwin
