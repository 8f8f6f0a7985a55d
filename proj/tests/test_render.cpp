#include <gtest/gtest.h>

#include <map>
#include <random>
#include <regex>
#include <set>

#include "support.hpp"

using namespace dartwin;
using namespace dartwin::testing;

namespace {

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

// Every `id="..."` and `ID="..."` in the output, with multiplicity.
std::map<std::string, int> rendered_ids(const std::string& dot) {
  static const std::regex re(R"re((?:id|ID)="((?:[^"\\]|\\.)*)")re");
  std::map<std::string, int> out;
  for (std::sregex_iterator it(dot.begin(), dot.end(), re), end; it != end; ++it) ++out[(*it)[1].str()];
  return out;
}

// Ids whose attribute list carries the highlight colour.
std::set<std::string> highlighted_ids(const std::string& dot) {
  static const std::regex re(R"re((?:id="([^"]*)"[,;] color|ID="([^"]*)" BGCOLOR)="#E69F00")re");
  std::set<std::string> out;
  for (std::sregex_iterator it(dot.begin(), dot.end(), re), end; it != end; ++it) {
    out.insert((*it)[1].matched ? (*it)[1].str() : (*it)[2].str());
  }
  return out;
}

std::set<std::string> marked(const ChangeSet& cs) {
  std::set<std::string> out(cs.added.begin(), cs.added.end());
  out.insert(cs.modified.begin(), cs.modified.end());
  return out;
}

const char* kWithActualTwin = R"(dartwin "Home" {
  goal G {
    poi t: celsius
  }
  system "Home" {
    dt D {
      in t: celsius [monitoring]
      satisfies G
    }
    at "Room" {
      out temp: celsius [monitoring]
    }
    flow Room.temp -> D.t
  }
}
)";

}  // namespace

TEST(Render, ThermalComfortCensus) {
  std::string dot = render_dot(corpus("thermal_comfort"));
  EXPECT_EQ(dot.rfind("digraph \"Thermal Comfort\" {", 0), 0u);
  EXPECT_EQ(count(dot, "shape=trapezium"), 1u);
  EXPECT_EQ(count(dot, "style=rounded"), 1u);
  EXPECT_EQ(count(dot, "shape=box, width=0.2"), 3u);
  EXPECT_EQ(count(dot, "subgraph \"cluster_"), 2u);
  EXPECT_EQ(count(dot, "style=dashed, dir=back"), 1u);
  EXPECT_NE(dot.find("\"Thermostat.comfort_temp\" -> \"ThermostatLogic\":\"comfort_temp\""), std::string::npos);
  EXPECT_EQ(count(dot, "#E69F00"), 0u);
}

TEST(Render, GoalEdgeStyles) {
  std::string dot = render_dot(corpus("compromise_saving"));
  EXPECT_NE(dot.find("arrowhead=onormal"), std::string::npos);
  std::string green = render_dot(corpus("green_comfort"));
  EXPECT_NE(green.find("label=\"Lower e <=> Lower t\""), std::string::npos);
  std::string gantry = render_dot(corpus("gantry_evolution1"));
  EXPECT_NE(gantry.find("[union]"), std::string::npos);
}

TEST(Render, EveryElementAppearsExactlyOnce) {
  for (const auto& name : corpus_names()) {
    Model m = corpus(name);
    auto ids = rendered_ids(render_dot(m));
    auto expected = element_ids(m);
    EXPECT_EQ(ids.size(), expected.size()) << name;
    for (const auto& id : expected) EXPECT_EQ(ids[id], 1) << name << ": " << id;
  }
}

TEST(Render, IsDeterministicAcrossDeclarationOrder) {
  std::mt19937 rng(8);
  for (const auto& name : corpus_names()) {
    Model m = corpus(name);
    std::string a = render_dot(m);
    EXPECT_EQ(render_dot(m), a);
    std::shuffle(m.goals.begin(), m.goals.end(), rng);
    std::shuffle(m.root_system.dts.begin(), m.root_system.dts.end(), rng);
    std::shuffle(m.root_system.flows.begin(), m.root_system.flows.end(), rng);
    std::shuffle(m.dt_goal_links.begin(), m.dt_goal_links.end(), rng);
    EXPECT_EQ(render_dot(m), a) << name;
  }
}

TEST(Render, HighlightMatchesChangeSet) {
  Model before = corpus("thermal_comfort");
  Model after = corpus("flat_green_comfort");
  ChangeSet cs = diff(before, after);
  std::string dot = render_dot(after, {cs, true, false});
  EXPECT_EQ(highlighted_ids(dot), marked(cs));
  EXPECT_EQ(count(dot, "#E69F00"), marked(cs).size());
}

TEST(Render, HighlightFollowsEveryReproduction) {
  struct Step {
    const char* before;
    const char* after;
  };
  for (auto [b, a] : {Step{"thermal_comfort", "green_comfort"}, Step{"green_comfort", "flat_green_comfort"},
                      Step{"flat_green_comfort", "orthogonal_freeze"}, Step{"orthogonal_freeze", "chained_freeze"},
                      Step{"orthogonal_freeze", "additional_heater"}, Step{"gantry_initial", "gantry_evolution1"}}) {
    ChangeSet cs = diff(corpus(b), corpus(a));
    EXPECT_EQ(highlighted_ids(render_dot(corpus(a), {cs, true, false})), marked(cs)) << b << " -> " << a;
  }
}

TEST(Render, EmptyHighlightChangesNothing) {
  Model m = corpus("green_comfort");
  EXPECT_EQ(render_dot(m, {ChangeSet{}, true, false}), render_dot(m));
  // Removed ids are not in the model, so they cannot be coloured.
  ChangeSet removed_only{{}, {"Ghost"}, {}};
  EXPECT_EQ(render_dot(m, {removed_only, true, false}), render_dot(m));
}

TEST(Render, GoalLayerCanBeHidden) {
  std::string dot = render_dot(corpus("green_comfort"), {std::nullopt, false, false});
  EXPECT_EQ(count(dot, "shape=trapezium"), 0u);
  EXPECT_EQ(count(dot, "dir=back"), 0u);
  EXPECT_EQ(count(dot, "cluster_goals"), 0u);
  EXPECT_EQ(count(dot, "style=rounded"), 2u);
}

TEST(Render, ActualTwinsCanBeCollapsed) {
  Model m = parse_or_throw(kWithActualTwin);
  std::string full = render_dot(m);
  EXPECT_NE(full.find("label=\"AT Room\""), std::string::npos);
  EXPECT_NE(full.find("\"Room.temp\" -> \"D\":\"t\""), std::string::npos);
  std::string collapsed = render_dot(m, {std::nullopt, true, true});
  EXPECT_EQ(count(collapsed, "cluster_Room"), 0u);
  EXPECT_EQ(count(collapsed, "shape=box3d"), 1u);
  EXPECT_NE(collapsed.find("\"Room\":\"temp\" -> \"D\":\"t\""), std::string::npos);
  for (const auto& [id, n] : rendered_ids(collapsed)) EXPECT_EQ(n, 1) << id;
}

TEST(Render, EscapesLabels) {
  Model m = corpus("thermal_comfort");
  m.name = "a \"quoted\" name";
  m.goals[0].title = "<warm> & \"cosy\"";
  std::string dot = render_dot(m);
  EXPECT_EQ(dot.rfind("digraph \"a \\\"quoted\\\" name\" {", 0), 0u);
  EXPECT_NE(dot.find("<B>&lt;warm&gt; &amp; &quot;cosy&quot;</B>"), std::string::npos);
  EXPECT_NE(dot.find("room_temp &gt;= 16"), std::string::npos);
}
