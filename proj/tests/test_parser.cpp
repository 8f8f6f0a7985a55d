#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "support.hpp"

using namespace dartwin;
using namespace dartwin::testing;

namespace {

ParseDiagnostic only_error(const std::string& text) {
  auto r = parse_model(text, "m.dartwin");
  EXPECT_FALSE(r.ok());
  EXPECT_EQ(r.diagnostics.size(), 1u);
  return r.diagnostics.empty() ? ParseDiagnostic{} : r.diagnostics.front();
}

template <class V>
void shuffle_all(V& v, std::mt19937& rng) {
  std::shuffle(v.begin(), v.end(), rng);
}

void shuffle_system(TwinSystem& s, std::mt19937& rng) {
  shuffle_all(s.ports, rng);
  shuffle_all(s.dts, rng);
  for (auto& d : s.dts) shuffle_all(d.ports, rng);
  shuffle_all(s.subsystems, rng);
  for (auto& sub : s.subsystems) shuffle_system(sub, rng);
  shuffle_all(s.flows, rng);
}

const char* kMinimal = R"(dartwin "M" {
  goal G {
    poi t: celsius
  }
  system "S" {
    in t: celsius [monitoring]
    dt D {
      in t: celsius [monitoring]
      satisfies G
    }
    flow boundary.t -> D.t
  }
}
)";

}  // namespace

TEST(Parser, ParsesEveryCorpusModel) {
  for (const auto& name : corpus_names()) {
    auto path = source_path("corpus/" + name + ".dartwin");
    auto r = parse_model(slurp(path), path);
    ASSERT_TRUE(r.ok()) << name << ": " << (r.diagnostics.empty() ? "" : format_diagnostic(r.diagnostics[0]));
    EXPECT_TRUE(r.diagnostics.empty()) << name;
  }
}

TEST(Parser, ThermalComfortContents) {
  Model m = corpus("thermal_comfort");
  EXPECT_EQ(m.name, "Thermal Comfort");
  ASSERT_EQ(m.goals.size(), 1u);
  EXPECT_EQ(m.goals[0].title, "Warm Comfort");
  ASSERT_EQ(m.goals[0].pois.size(), 1u);
  EXPECT_EQ(m.goals[0].pois[0].id, "WarmComfort.room_temp");
  EXPECT_EQ(m.root_system.id, "Thermostat");
  ASSERT_EQ(m.root_system.dts.size(), 1u);
  EXPECT_EQ(m.root_system.dts[0].behavior_key, "thermostat");
  EXPECT_EQ(m.root_system.ports.size(), 3u);
  EXPECT_EQ(m.root_system.flows.size(), 3u);
  ASSERT_EQ(m.dt_goal_links.size(), 1u);
  EXPECT_EQ(m.dt_goal_links[0].id(), "ThermostatLogic=>WarmComfort");
  EXPECT_EQ(m.root_system.flows[0].from.owner, "Thermostat");
}

TEST(Parser, CorpusRoundTripIsStructurallyEqual) {
  for (const auto& name : corpus_names()) {
    Model m = corpus(name);
    std::string text = serialize_model(m);
    Model back = parse_or_throw(text, name);
    EXPECT_TRUE(structurally_equal(m, back)) << name;
    EXPECT_EQ(serialize_model(back), text) << name;
  }
}

TEST(Parser, SerializerQuotesAndEscapes) {
  Model m = parse_or_throw(kMinimal);
  m.goals[0].title = "say \"hi\" \\ bye";
  Model back = parse_or_throw(serialize_model(m));
  EXPECT_EQ(back.goals[0].title, m.goals[0].title);
}

TEST(Parser, AcceptsCommentsAndCrlf) {
  std::string text = kMinimal;
  std::string crlf;
  for (char c : text) {
    if (c == '\n') crlf += "  // trailing\r\n";
    else crlf += c;
  }
  Model a = parse_or_throw(text);
  Model b = parse_or_throw(crlf);
  EXPECT_EQ(a, b);
}

TEST(ParserProperty, SerializationIgnoresDeclarationOrder) {
  std::mt19937 rng(99);
  int cases = 0;
  for (const auto& name : corpus_names()) {
    const Model m = corpus(name);
    const std::string expected = serialize_model(m);
    for (int i = 0; i < 10; ++i, ++cases) {
      Model s = m;
      shuffle_all(s.goals, rng);
      for (auto& g : s.goals) shuffle_all(g.pois, rng);
      shuffle_all(s.goal_edges, rng);
      shuffle_all(s.dt_goal_links, rng);
      shuffle_system(s.root_system, rng);
      ASSERT_EQ(serialize_model(s), expected) << name;
      ASSERT_TRUE(structurally_equal(s, m));
    }
  }
  EXPECT_GE(cases, 100);
}

TEST(ParserDiagnostics, UnexpectedCharacterHasLineAndColumn) {
  auto d = only_error("dartwin \"M\" {\n  goal G {\n    $\n");
  EXPECT_EQ(d.span.file, "m.dartwin");
  EXPECT_EQ(d.span.line, 3);
  EXPECT_EQ(d.span.column, 5);
  EXPECT_EQ(format_diagnostic(d), "m.dartwin:3:5: error: unexpected character '$'");
}

TEST(ParserDiagnostics, ColumnsCountCharactersNotBytes) {
  auto d = only_error("dartwin \"\xC3\x9C\" ?");
  EXPECT_EQ(d.span.line, 1);
  EXPECT_EQ(d.span.column, 13);
}

TEST(ParserDiagnostics, UnterminatedString) {
  auto d = only_error("dartwin \"M {\n");
  EXPECT_EQ(d.message, "unterminated string");
  EXPECT_EQ(d.span.column, 9);
  EXPECT_EQ(d.span.length, 4);
}

TEST(ParserDiagnostics, KeywordIsNotAnIdentifier) {
  std::string text = kMinimal;
  text.replace(text.find("goal G"), 6, "goal flow");
  auto d = only_error(text);
  EXPECT_NE(d.message.find("keyword 'flow'"), std::string::npos);
  EXPECT_EQ(d.span.line, 2);
  EXPECT_EQ(d.span.column, 8);
}

TEST(ParserDiagnostics, EndOfInputIsReported) {
  auto d = only_error("dartwin \"M\" {");
  EXPECT_NE(d.message.find("end of input"), std::string::npos);
}

TEST(ParserDiagnostics, DuplicatePointsAtRedeclaration) {
  std::string text = kMinimal;
  text.replace(text.find("  system"), 0, "  goal G {\n    poi u: celsius\n  }\n");
  auto r = parse_model(text, "m.dartwin");
  ASSERT_FALSE(r.ok());
  bool found = false;
  for (const auto& d : r.diagnostics) {
    if (d.message.rfind("DUP-ID", 0) == 0) {
      found = true;
      EXPECT_EQ(d.span.line, 5);
      EXPECT_EQ(d.span.column, 8);
    }
  }
  EXPECT_TRUE(found);
}

TEST(ParserDiagnostics, ConstraintErrorPointsIntoLiteral) {
  std::string text = kMinimal;
  text.replace(text.find("    poi t: celsius\n"), 19, "    poi t: celsius\n    constraint \"always(t # 1)\"\n");
  auto d = only_error(text);
  EXPECT_EQ(d.span.line, 4);
  // `    constraint "` is 16 characters; '#' sits at offset 9 inside the literal.
  EXPECT_EQ(d.span.column, 17 + 9);
  EXPECT_NE(d.message.find("goal 'G'"), std::string::npos);
}

TEST(ParserDiagnostics, StructuralErrorsFromFixtures) {
  for (const auto& [name, code] : std::vector<std::pair<std::string, std::string>>{
           {"broken_dangling_flow", "DANGLING-REF"}, {"broken_empty_goal", "POI-NONE"}}) {
    auto path = source_path("tests/fixtures/" + name + ".dartwin");
    auto r = parse_model(slurp(path), path);
    EXPECT_FALSE(r.ok());
    ASSERT_EQ(r.diagnostics.size(), 1u) << name;
    EXPECT_EQ(r.diagnostics[0].message.rfind(code + ":", 0), 0u) << r.diagnostics[0].message;
    EXPECT_GT(r.diagnostics[0].span.line, 1);
  }
}

TEST(ParserDiagnostics, OrderingRulesInsideSystems) {
  std::string text = kMinimal;
  text.replace(text.find("    flow"), 0, "    flow boundary.t -> D.t\n    in late: celsius [monitoring]\n");
  auto d = only_error(text);
  EXPECT_NE(d.message.find("ports must precede"), std::string::npos);
}

TEST(Fragment, ParsesThermalBasic) {
  Fragment f = fragment("thermal_basic");
  EXPECT_EQ(f.name, "Thermal Comfort");
  EXPECT_EQ(f.root_id, "Thermostat");
  EXPECT_EQ(f.goals.size(), 1u);
  EXPECT_EQ(f.dts.size(), 1u);
  EXPECT_EQ(f.boundary_ports.size(), 3u);
  EXPECT_TRUE(f.boundary_ports[0].id.empty());
  EXPECT_EQ(f.flows.size(), 3u);
  EXPECT_EQ(f.flows[0].from.owner, "boundary");
  ASSERT_EQ(f.links.size(), 1u);
}

TEST(Fragment, ParsesExtensionsAndRelations) {
  Fragment f = fragment("keep_out_zones");
  ASSERT_EQ(f.extensions.count("Trajectory"), 1u);
  EXPECT_EQ(f.extensions["Trajectory"][0].id, "Trajectory.constraints");
  ASSERT_EQ(f.relations.size(), 1u);
  EXPECT_EQ(f.relations[0].combinator, Combinator::union_of);
  EXPECT_EQ(f.relations[0].label, "geometric constraints (union)");
}

TEST(Fragment, RejectsUnknownEntries) {
  auto r = parse_fragment("fragment {\n  system \"X\" {}\n}");
  EXPECT_FALSE(r.ok());
  ASSERT_EQ(r.diagnostics.size(), 1u);
  EXPECT_EQ(r.diagnostics[0].span.line, 2);
}
