#include <gtest/gtest.h>

#include <random>

#include "dartwin/constraint.hpp"

using namespace dartwin;

namespace {

double eval_with(const std::string& text, std::map<std::string, double> values) {
  auto c = parse_constraint(text);
  return eval_bool(*c.body, [&](const std::string& n) { return values.at(n); }, 1e-9) ? 1.0 : 0.0;
}

// Random ASTs over a small vocabulary; depth-limited.
class ExprGen {
 public:
  explicit ExprGen(unsigned seed) : rng_(seed) {}

  ExprPtr arith(int depth) {
    int pick = depth <= 0 ? pick_int(0, 1) : pick_int(0, 5);
    switch (pick) {
      case 0: return make_poi(names_[pick_int(0, 3)]);
      case 1: return make_number(numbers_[pick_int(0, 6)]);
      case 2: return make_binary(Expr::Kind::add, arith(depth - 1), arith(depth - 1));
      case 3: return make_binary(Expr::Kind::sub, arith(depth - 1), arith(depth - 1));
      case 4: return make_binary(Expr::Kind::min, arith(depth - 1), arith(depth - 1));
      default: return make_binary(Expr::Kind::max, arith(depth - 1), arith(depth - 1));
    }
  }

  ExprPtr boolean(int depth) {
    static const Expr::Kind rel[] = {Expr::Kind::lt, Expr::Kind::le, Expr::Kind::eq, Expr::Kind::ge, Expr::Kind::gt};
    int pick = depth <= 0 ? 0 : pick_int(0, 2);
    switch (pick) {
      case 0: return make_binary(rel[pick_int(0, 4)], arith(2), arith(2));
      case 1: return make_binary(Expr::Kind::conj, boolean(depth - 1), boolean(depth - 1));
      default: return make_binary(Expr::Kind::implies, boolean(depth - 1), boolean(depth - 1));
    }
  }

  Constraint constraint() { return {pick_int(0, 1) ? TemporalOp::always : TemporalOp::at_end, boolean(3)}; }

  int pick_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

 private:
  std::mt19937 rng_;
  const char* names_[4] = {"room_temp", "comfort", "x", "limit_2"};
  double numbers_[7] = {0, 8, -5, 0.5, 21.25, 1e-3, 1234567.0};
};

}  // namespace

TEST(Constraint, ParsesCorpusForms) {
  auto c = parse_constraint("always(room_temp >= 16 and room_temp <= 26)");
  EXPECT_EQ(c.op, TemporalOp::always);
  EXPECT_EQ(c.body->kind, Expr::Kind::conj);
  auto g = parse_constraint("always(when presence == 0 implies comfort_temp <= user_comfort_temp)");
  EXPECT_EQ(g.body->kind, Expr::Kind::implies);
  auto e = parse_constraint("at_end(swing_angle == 0 and angular_velocity == 0)");
  EXPECT_EQ(e.op, TemporalOp::at_end);
}

TEST(Constraint, PrintsCanonicalText) {
  EXPECT_EQ(to_string(parse_constraint("always( (a>=1) and b<2 )")), "always(a >= 1 and b < 2)");
  EXPECT_EQ(to_string(parse_constraint("always(when p == 1 implies c == u)")), "always(p == 1 implies c == u)");
  EXPECT_EQ(to_string(parse_constraint("always(a - (b - c) > 0)")), "always(a - (b - c) > 0)");
  EXPECT_EQ(to_string(parse_constraint("always((a - b) - c > 0)")), "always(a - b - c > 0)");
  EXPECT_EQ(to_string(parse_constraint("always(min(a, b + 1) <= -3)")), "always(min(a, b + 1) <= -3)");
}

TEST(Constraint, ImpliesIsRightAssociative) {
  auto c = parse_constraint("always(a > 0 implies b > 0 implies c > 0)");
  ASSERT_EQ(c.body->kind, Expr::Kind::implies);
  EXPECT_EQ(c.body->rhs->kind, Expr::Kind::implies);
  EXPECT_EQ(eval_with("always(a > 0 implies b > 0 implies c > 0)", {{"a", 1}, {"b", 1}, {"c", -1}}), 0.0);
  EXPECT_EQ(eval_with("always(a > 0 implies b > 0 implies c > 0)", {{"a", -1}, {"b", 1}, {"c", -1}}), 1.0);
}

TEST(Constraint, RejectsMalformedText) {
  for (const char* bad : {"room_temp > 8", "always(room_temp >)", "always(room_temp > 8", "sometimes(x > 1)",
                          "always(x > 1) extra", "always(when x > 1)", "always(x # 1)", "always(x)", "always(and > 1)",
                          "always(x + 1)"}) {
    EXPECT_THROW(parse_constraint(bad), ConstraintError) << bad;
  }
}

TEST(Constraint, ErrorOffsetPointsAtOffendingToken) {
  try {
    parse_constraint("always(x # 1)");
    FAIL();
  } catch (const ConstraintError& e) {
    EXPECT_EQ(e.offset(), 9u);
    EXPECT_EQ(e.length(), 1u);
  }
}

TEST(Constraint, EvaluatesArithmetic) {
  EXPECT_EQ(eval_with("always(room_temp > 8)", {{"room_temp", 8.5}}), 1.0);
  EXPECT_EQ(eval_with("always(room_temp > 8)", {{"room_temp", 8}}), 0.0);
  EXPECT_EQ(eval_with("always(min(a, b) + 1 == 3)", {{"a", 2}, {"b", 5}}), 1.0);
  EXPECT_EQ(eval_with("always(max(a, b) - -1 == 6)", {{"a", 2}, {"b", 5}}), 1.0);
  EXPECT_EQ(eval_with("always(x == 1)", {{"x", 1 + 1e-12}}), 1.0);
}

TEST(Constraint, TypecheckFindsUnknownPoisAndUnitMismatch) {
  std::map<std::string, std::string, std::less<>> units = {{"t", "celsius"}, {"e", "joules"}};
  EXPECT_TRUE(typecheck(parse_constraint("always(t > 8)"), units).empty());
  EXPECT_FALSE(typecheck(parse_constraint("always(q > 8)"), units).empty());
  EXPECT_FALSE(typecheck(parse_constraint("always(t > e)"), units).empty());
  EXPECT_FALSE(typecheck(parse_constraint("always(t + e > 0)"), units).empty());
}

TEST(ConstraintProperty, PrintParseRoundTrip) {
  ExprGen gen(20240611);
  for (int i = 0; i < 300; ++i) {
    Constraint c = gen.constraint();
    std::string text = to_string(c);
    Constraint back = parse_constraint(text);
    ASSERT_TRUE(back == c) << text;
    ASSERT_EQ(to_string(back), text);
  }
}

TEST(ConstraintProperty, CollectPoisFindsEveryOperand) {
  ExprGen gen(7);
  for (int i = 0; i < 150; ++i) {
    Constraint c = gen.constraint();
    std::vector<std::string> names;
    collect_pois(*c.body, names);
    std::string text = to_string(c);
    for (const auto& n : names) EXPECT_NE(text.find(n), std::string::npos);
  }
}
