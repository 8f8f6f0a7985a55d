#pragma once

// Goal constraint language.
//
//   constraint := ("always" | "at_end") "(" bexpr ")"
//   bexpr      := ["when"] conj ["implies" bexpr] | conj
//   conj       := cmp ("and" cmp)*
//   cmp        := "(" bexpr ")" | aexpr relop aexpr
//   aexpr      := term (("+" | "-") term)*
//   term       := POI | NUMBER | "-" NUMBER | ("min" | "max") "(" aexpr "," aexpr ")" | "(" aexpr ")"
//
// Numeric literals are unitless; PoI operands carry the unit declared on the goal.

#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace dartwin {

enum class TemporalOp { always, at_end };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind { poi, number, add, sub, min, max, lt, le, eq, ge, gt, conj, implies };

  Kind kind = Kind::number;
  std::string poi;
  double number = 0.0;
  ExprPtr lhs;
  ExprPtr rhs;

  bool is_boolean() const {
    switch (kind) {
      case Kind::lt: case Kind::le: case Kind::eq: case Kind::ge: case Kind::gt:
      case Kind::conj: case Kind::implies:
        return true;
      default:
        return false;
    }
  }
};

inline ExprPtr make_poi(std::string name) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::poi;
  e->poi = std::move(name);
  return e;
}

inline ExprPtr make_number(double v) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::number;
  e->number = v;
  return e;
}

inline ExprPtr make_binary(Expr::Kind kind, ExprPtr lhs, ExprPtr rhs) {
  auto e = std::make_shared<Expr>();
  e->kind = kind;
  e->lhs = std::move(lhs);
  e->rhs = std::move(rhs);
  return e;
}

inline bool expr_equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Expr::Kind::poi: return a.poi == b.poi;
    case Expr::Kind::number: return a.number == b.number;
    default: return expr_equal(*a.lhs, *b.lhs) && expr_equal(*a.rhs, *b.rhs);
  }
}

struct Constraint {
  TemporalOp op = TemporalOp::always;
  ExprPtr body;

  friend bool operator==(const Constraint& a, const Constraint& b) {
    if (a.op != b.op) return false;
    if (!a.body || !b.body) return a.body == b.body;
    return expr_equal(*a.body, *b.body);
  }
};

// Offset/length are byte positions inside the constraint source text.
class ConstraintError : public std::runtime_error {
 public:
  ConstraintError(std::string message, std::size_t offset, std::size_t length)
      : std::runtime_error(std::move(message)), offset_(offset), length_(length == 0 ? 1 : length) {}

  std::size_t offset() const { return offset_; }
  std::size_t length() const { return length_; }

 private:
  std::size_t offset_;
  std::size_t length_;
};

namespace detail {

inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

class ConstraintParser {
 public:
  explicit ConstraintParser(std::string_view text) : text_(text) { tokenize(); }

  Constraint parse() {
    Constraint c;
    const Token& head = peek();
    if (head.is_word("always")) {
      c.op = TemporalOp::always;
    } else if (head.is_word("at_end")) {
      c.op = TemporalOp::at_end;
    } else {
      fail(head, "constraint must start with 'always' or 'at_end'");
    }
    ++pos_;
    expect_symbol("(");
    c.body = parse_bexpr();
    expect_symbol(")");
    if (peek().kind != Token::Kind::end) fail(peek(), "unexpected trailing input in constraint");
    return c;
  }

 private:
  struct Token {
    enum class Kind { word, number, symbol, end };
    Kind kind = Kind::end;
    std::string text;
    double value = 0.0;
    std::size_t offset = 0;

    bool is_word(std::string_view w) const { return kind == Kind::word && text == w; }
    bool is_symbol(std::string_view s) const { return kind == Kind::symbol && text == s; }
  };

  std::string_view text_;
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const Token& tok, const std::string& message) const {
    std::size_t len = tok.kind == Token::Kind::end ? 1 : tok.text.size();
    throw ConstraintError(message, tok.offset, len);
  }

  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = pos_ + ahead;
    return i < tokens_.size() ? tokens_[i] : tokens_.back();
  }

  void expect_symbol(std::string_view s) {
    if (!peek().is_symbol(s)) fail(peek(), "expected '" + std::string(s) + "'");
    ++pos_;
  }

  void tokenize() {
    std::size_t i = 0;
    while (i < text_.size()) {
      char ch = text_[i];
      if (std::isspace(static_cast<unsigned char>(ch))) {
        ++i;
        continue;
      }
      Token tok;
      tok.offset = i;
      if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
        std::size_t j = i;
        while (j < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[j])) || text_[j] == '_')) ++j;
        tok.kind = Token::Kind::word;
        tok.text = std::string(text_.substr(i, j - i));
        i = j;
      } else if (std::isdigit(static_cast<unsigned char>(ch)) ||
                 (ch == '.' && i + 1 < text_.size() && std::isdigit(static_cast<unsigned char>(text_[i + 1])))) {
        std::size_t j = i;
        while (j < text_.size() && std::isdigit(static_cast<unsigned char>(text_[j]))) ++j;
        if (j < text_.size() && text_[j] == '.') {
          ++j;
          while (j < text_.size() && std::isdigit(static_cast<unsigned char>(text_[j]))) ++j;
        }
        if (j < text_.size() && (text_[j] == 'e' || text_[j] == 'E')) {
          std::size_t k = j + 1;
          if (k < text_.size() && (text_[k] == '+' || text_[k] == '-')) ++k;
          if (k < text_.size() && std::isdigit(static_cast<unsigned char>(text_[k]))) {
            while (k < text_.size() && std::isdigit(static_cast<unsigned char>(text_[k]))) ++k;
            j = k;
          }
        }
        tok.kind = Token::Kind::number;
        tok.text = std::string(text_.substr(i, j - i));
        auto res = std::from_chars(text_.data() + i, text_.data() + j, tok.value);
        if (res.ec != std::errc() || res.ptr != text_.data() + j || !std::isfinite(tok.value)) {
          throw ConstraintError("malformed number '" + tok.text + "'", i, j - i);
        }
        i = j;
      } else {
        static constexpr std::string_view two[] = {"<=", ">=", "=="};
        tok.kind = Token::Kind::symbol;
        bool matched = false;
        for (auto s : two) {
          if (text_.substr(i, 2) == s) {
            tok.text = std::string(s);
            i += 2;
            matched = true;
            break;
          }
        }
        if (!matched) {
          if (std::string_view("()<>+-,").find(ch) == std::string_view::npos) {
            throw ConstraintError(std::string("unexpected character '") + ch + "'", i, 1);
          }
          tok.text = std::string(1, ch);
          ++i;
        }
      }
      tokens_.push_back(std::move(tok));
    }
    Token end;
    end.kind = Token::Kind::end;
    end.offset = text_.size();
    tokens_.push_back(end);
  }

  ExprPtr parse_bexpr() {
    bool guarded = false;
    if (peek().is_word("when")) {
      ++pos_;
      guarded = true;
    }
    ExprPtr lhs = parse_conj();
    if (peek().is_word("implies")) {
      ++pos_;
      ExprPtr rhs = parse_bexpr();
      return make_binary(Expr::Kind::implies, std::move(lhs), std::move(rhs));
    }
    if (guarded) fail(peek(), "'when' guard requires 'implies'");
    return lhs;
  }

  ExprPtr parse_conj() {
    ExprPtr lhs = parse_cmp();
    while (peek().is_word("and")) {
      ++pos_;
      lhs = make_binary(Expr::Kind::conj, std::move(lhs), parse_cmp());
    }
    return lhs;
  }

  ExprPtr parse_cmp() {
    if (peek().is_symbol("(")) {
      // Either a parenthesized boolean or an arithmetic operand in parens.
      std::size_t saved = pos_;
      try {
        ++pos_;
        ExprPtr inner = parse_bexpr();
        expect_symbol(")");
        if (!is_relop(peek())) return inner;
      } catch (const ConstraintError&) {
      }
      pos_ = saved;
    }
    ExprPtr lhs = parse_aexpr();
    const Token& op = peek();
    if (!is_relop(op)) fail(op, "expected comparison operator");
    ++pos_;
    ExprPtr rhs = parse_aexpr();
    return make_binary(relop_kind(op.text), std::move(lhs), std::move(rhs));
  }

  static bool is_relop(const Token& t) {
    return t.is_symbol("<") || t.is_symbol("<=") || t.is_symbol("==") || t.is_symbol(">=") ||
           t.is_symbol(">");
  }

  static Expr::Kind relop_kind(const std::string& s) {
    if (s == "<") return Expr::Kind::lt;
    if (s == "<=") return Expr::Kind::le;
    if (s == "==") return Expr::Kind::eq;
    if (s == ">=") return Expr::Kind::ge;
    return Expr::Kind::gt;
  }

  ExprPtr parse_aexpr() {
    ExprPtr lhs = parse_term();
    while (peek().is_symbol("+") || peek().is_symbol("-")) {
      Expr::Kind k = peek().is_symbol("+") ? Expr::Kind::add : Expr::Kind::sub;
      ++pos_;
      lhs = make_binary(k, std::move(lhs), parse_term());
    }
    return lhs;
  }

  ExprPtr parse_term() {
    const Token& tok = peek();
    if (tok.kind == Token::Kind::number) {
      ++pos_;
      return make_number(tok.value);
    }
    if (tok.is_symbol("-") && peek(1).kind == Token::Kind::number) {
      double v = -peek(1).value;
      pos_ += 2;
      return make_number(v);
    }
    if (tok.is_symbol("(")) {
      ++pos_;
      ExprPtr inner = parse_aexpr();
      expect_symbol(")");
      return inner;
    }
    if (tok.is_word("min") || tok.is_word("max")) {
      Expr::Kind k = tok.is_word("min") ? Expr::Kind::min : Expr::Kind::max;
      ++pos_;
      expect_symbol("(");
      ExprPtr a = parse_aexpr();
      expect_symbol(",");
      ExprPtr b = parse_aexpr();
      expect_symbol(")");
      return make_binary(k, std::move(a), std::move(b));
    }
    if (tok.kind == Token::Kind::word) {
      static constexpr std::string_view reserved[] = {"always", "at_end", "and", "implies", "when"};
      for (auto r : reserved) {
        if (tok.text == r) fail(tok, "keyword '" + tok.text + "' cannot be used as an operand");
      }
      ++pos_;
      return make_poi(tok.text);
    }
    fail(tok, "expected operand");
  }
};

inline int precedence(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::implies: return 1;
    case Expr::Kind::conj: return 2;
    case Expr::Kind::lt: case Expr::Kind::le: case Expr::Kind::eq: case Expr::Kind::ge: case Expr::Kind::gt:
      return 3;
    case Expr::Kind::add: case Expr::Kind::sub: return 4;
    default: return 5;
  }
}

inline void print_expr(const Expr& e, std::string& out);

inline void print_child(const Expr& child, int min_prec, std::string& out) {
  bool parens = precedence(child) < min_prec;
  if (parens) out += '(';
  print_expr(child, out);
  if (parens) out += ')';
}

inline void print_expr(const Expr& e, std::string& out) {
  using K = Expr::Kind;
  switch (e.kind) {
    case K::poi: out += e.poi; return;
    case K::number: out += format_number(e.number); return;
    case K::min:
    case K::max:
      out += e.kind == K::min ? "min(" : "max(";
      print_expr(*e.lhs, out);
      out += ", ";
      print_expr(*e.rhs, out);
      out += ')';
      return;
    case K::implies:
      print_child(*e.lhs, 2, out);
      out += " implies ";
      print_child(*e.rhs, 1, out);
      return;
    case K::conj:
      print_child(*e.lhs, 2, out);
      out += " and ";
      print_child(*e.rhs, 3, out);
      return;
    case K::add:
    case K::sub:
      print_child(*e.lhs, 4, out);
      out += e.kind == K::add ? " + " : " - ";
      print_child(*e.rhs, 5, out);
      return;
    default: {
      const char* op = e.kind == K::lt ? " < " : e.kind == K::le ? " <= " : e.kind == K::eq ? " == "
                     : e.kind == K::ge ? " >= " : " > ";
      print_child(*e.lhs, 4, out);
      out += op;
      print_child(*e.rhs, 4, out);
      return;
    }
  }
}

}  // namespace detail

inline Constraint parse_constraint(std::string_view text) {
  return detail::ConstraintParser(text).parse();
}

inline std::string to_string(const Constraint& c) {
  std::string out = c.op == TemporalOp::always ? "always(" : "at_end(";
  if (c.body) detail::print_expr(*c.body, out);
  out += ')';
  return out;
}

inline void collect_pois(const Expr& e, std::vector<std::string>& out) {
  if (e.kind == Expr::Kind::poi) {
    out.push_back(e.poi);
  } else if (e.lhs) {
    collect_pois(*e.lhs, out);
    collect_pois(*e.rhs, out);
  }
}

// Returns type errors. `poi_units` maps every PoI visible to the goal to its unit.
inline std::vector<std::string> typecheck(const Constraint& c,
                                          const std::map<std::string, std::string, std::less<>>& poi_units) {
  std::vector<std::string> errors;
  // Unit of an arithmetic expression; empty means a unitless literal.
  std::function<std::optional<std::string>(const Expr&)> unit_of = [&](const Expr& e) -> std::optional<std::string> {
    using K = Expr::Kind;
    switch (e.kind) {
      case K::poi: {
        auto it = poi_units.find(e.poi);
        if (it == poi_units.end()) {
          errors.push_back("unknown poi '" + e.poi + "'");
          return std::nullopt;
        }
        return it->second;
      }
      case K::number: return std::string();
      case K::add: case K::sub: case K::min: case K::max: {
        auto a = unit_of(*e.lhs);
        auto b = unit_of(*e.rhs);
        if (!a || !b) return std::nullopt;
        if (!a->empty() && !b->empty() && *a != *b) {
          errors.push_back("unit mismatch: " + *a + " vs " + *b);
          return std::nullopt;
        }
        return a->empty() ? b : a;
      }
      default:
        errors.push_back("boolean expression used as a value");
        return std::nullopt;
    }
  };
  std::function<void(const Expr&)> check_bool = [&](const Expr& e) {
    using K = Expr::Kind;
    switch (e.kind) {
      case K::conj: case K::implies:
        check_bool(*e.lhs);
        check_bool(*e.rhs);
        return;
      case K::lt: case K::le: case K::eq: case K::ge: case K::gt: {
        auto a = unit_of(*e.lhs);
        auto b = unit_of(*e.rhs);
        if (a && b && !a->empty() && !b->empty() && *a != *b) {
          errors.push_back("comparison between " + *a + " and " + *b);
        }
        return;
      }
      default:
        errors.push_back("constraint body must be a boolean expression");
    }
  };
  if (!c.body) {
    errors.push_back("empty constraint");
  } else {
    check_bool(*c.body);
  }
  return errors;
}

using PoiLookup = std::function<double(const std::string&)>;

inline double eval_arith(const Expr& e, const PoiLookup& lookup) {
  using K = Expr::Kind;
  switch (e.kind) {
    case K::poi: return lookup(e.poi);
    case K::number: return e.number;
    case K::add: return eval_arith(*e.lhs, lookup) + eval_arith(*e.rhs, lookup);
    case K::sub: return eval_arith(*e.lhs, lookup) - eval_arith(*e.rhs, lookup);
    case K::min: return std::min(eval_arith(*e.lhs, lookup), eval_arith(*e.rhs, lookup));
    case K::max: return std::max(eval_arith(*e.lhs, lookup), eval_arith(*e.rhs, lookup));
    default: throw std::logic_error("boolean node in arithmetic position");
  }
}

// `eq_tolerance` only widens `==`; ordering comparisons are exact.
inline bool eval_bool(const Expr& e, const PoiLookup& lookup, double eq_tolerance = 0.0) {
  using K = Expr::Kind;
  switch (e.kind) {
    case K::conj: return eval_bool(*e.lhs, lookup, eq_tolerance) && eval_bool(*e.rhs, lookup, eq_tolerance);
    case K::implies: return !eval_bool(*e.lhs, lookup, eq_tolerance) || eval_bool(*e.rhs, lookup, eq_tolerance);
    case K::lt: return eval_arith(*e.lhs, lookup) < eval_arith(*e.rhs, lookup);
    case K::le: return eval_arith(*e.lhs, lookup) <= eval_arith(*e.rhs, lookup);
    case K::ge: return eval_arith(*e.lhs, lookup) >= eval_arith(*e.rhs, lookup);
    case K::gt: return eval_arith(*e.lhs, lookup) > eval_arith(*e.rhs, lookup);
    case K::eq: return std::abs(eval_arith(*e.lhs, lookup) - eval_arith(*e.rhs, lookup)) <= eq_tolerance;
    default: throw std::logic_error("arithmetic node in boolean position");
  }
}

}  // namespace dartwin
