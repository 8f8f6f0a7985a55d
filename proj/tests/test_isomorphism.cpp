#include <gtest/gtest.h>

#include <random>
#include <set>

#include "support.hpp"

using namespace dartwin;
using namespace dartwin::testing;

namespace {

// Consistently renames every goal, system, Dt and port, then shuffles declaration order.
class Renamer {
 public:
  explicit Renamer(unsigned seed) : rng_(seed) {}

  Model operator()(const Model& source) {
    ids_.clear();
    ports_.clear();
    std::vector<std::string> olds;
    for (const auto& g : source.goals) olds.push_back(g.id);
    collect(source.root_system, olds);
    std::vector<int> perm(olds.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
    std::shuffle(perm.begin(), perm.end(), rng_);
    for (std::size_t i = 0; i < olds.size(); ++i) ids_[olds[i]] = "E" + std::to_string(perm[i]);

    Model m = source;
    for (auto& g : m.goals) {
      g.id = id(g.id);
      for (auto& p : g.pois) p.id = port_id(g.id, p.name);
      std::shuffle(g.pois.begin(), g.pois.end(), rng_);
    }
    for (auto& e : m.goal_edges) {
      e.source = id(e.source);
      e.target = id(e.target);
    }
    for (auto& l : m.dt_goal_links) {
      l.dt = id(l.dt);
      l.goal = id(l.goal);
    }
    rename_system(m.root_system);
    std::shuffle(m.goals.begin(), m.goals.end(), rng_);
    std::shuffle(m.goal_edges.begin(), m.goal_edges.end(), rng_);
    std::shuffle(m.dt_goal_links.begin(), m.dt_goal_links.end(), rng_);
    return m;
  }

  std::string id(const std::string& old) const { return ids_.at(old); }

 private:
  void collect(const TwinSystem& s, std::vector<std::string>& out) {
    out.push_back(s.id);
    for (const auto& p : s.ports) ports_[p.id] = "q" + std::to_string(ports_.size());
    for (const auto& d : s.dts) {
      out.push_back(d.id);
      for (const auto& p : d.ports) ports_[p.id] = "q" + std::to_string(ports_.size());
    }
    for (const auto& sub : s.subsystems) collect(sub, out);
  }

  void rename_ports(std::vector<Port>& ports, const std::string& owner) {
    for (auto& p : ports) {
      p.name = ports_.at(p.id);
      p.id = port_id(owner, p.name);
    }
    std::shuffle(ports.begin(), ports.end(), rng_);
  }

  PortRef ref(const PortRef& r) const { return {id(r.owner), ports_.at(r.id())}; }

  void rename_system(TwinSystem& s) {
    for (auto& f : s.flows) f = {ref(f.from), ref(f.to)};
    s.id = id(s.id);
    rename_ports(s.ports, s.id);
    for (auto& d : s.dts) {
      d.id = id(d.id);
      rename_ports(d.ports, d.id);
    }
    for (auto& sub : s.subsystems) rename_system(sub);
    std::shuffle(s.dts.begin(), s.dts.end(), rng_);
    std::shuffle(s.flows.begin(), s.flows.end(), rng_);
    std::shuffle(s.subsystems.begin(), s.subsystems.end(), rng_);
  }

  std::mt19937 rng_;
  std::map<std::string, std::string> ids_;
  std::map<std::string, std::string> ports_;
};

// One small semantic change; returns false when the model offers no site for it.
bool mutate(Model& m, int what, std::mt19937& rng) {
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  auto& sys = m.root_system;
  switch (what) {
    case 0:
      if (sys.flows.empty()) return false;
      sys.flows.erase(sys.flows.begin() + static_cast<long>(pick(sys.flows.size())));
      return true;
    case 1:
      if (m.dt_goal_links.empty()) return false;
      m.dt_goal_links.erase(m.dt_goal_links.begin() + static_cast<long>(pick(m.dt_goal_links.size())));
      return true;
    case 2: {
      if (sys.dts.empty()) return false;
      auto& d = sys.dts[pick(sys.dts.size())];
      if (d.ports.empty()) return false;
      auto& p = d.ports[pick(d.ports.size())];
      p.role = p.role == PortRole::inter_dt ? PortRole::monitoring : PortRole::inter_dt;
      return true;
    }
    case 3: {
      auto& g = m.goals[pick(m.goals.size())];
      auto& p = g.pois[pick(g.pois.size())];
      p.unit = p.unit == "ratio" ? "seconds" : "ratio";
      return true;
    }
    default: {
      if (m.goal_edges.empty()) return false;
      auto& e = m.goal_edges[pick(m.goal_edges.size())];
      e.kind = e.kind == GoalEdgeKind::conflict ? GoalEdgeKind::positive_relation : GoalEdgeKind::conflict;
      return true;
    }
  }
}

}  // namespace

TEST(Isomorphism, ModelIsIsomorphicToItself) {
  for (const auto& name : corpus_names()) {
    Model m = corpus(name);
    auto r = is_isomorphic(m, m);
    ASSERT_TRUE(r.isomorphic) << name;
    EXPECT_EQ(r.mapping.size(), element_ids(m).size());
  }
}

TEST(Isomorphism, MappingFollowsRenaming) {
  Renamer rename(3);
  Model m = corpus("thermal_comfort");
  Model r = rename(m);
  auto iso = is_isomorphic(m, r);
  ASSERT_TRUE(iso.isomorphic);
  EXPECT_EQ(iso.mapping.at("ThermostatLogic"), rename.id("ThermostatLogic"));
  EXPECT_EQ(iso.mapping.at("WarmComfort"), rename.id("WarmComfort"));
}

TEST(Isomorphism, DistinctCorpusModelsAreNotIsomorphic) {
  const auto& names = corpus_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    for (std::size_t j = i + 1; j < names.size(); ++j) {
      EXPECT_FALSE(is_isomorphic(corpus(names[i]), corpus(names[j]))) << names[i] << " vs " << names[j];
    }
  }
}

TEST(IsomorphismProperty, RandomRenamingPreservesIsomorphism) {
  Renamer rename(2024);
  int cases = 0;
  for (int i = 0; i < 110; ++i, ++cases) {
    const auto& name = corpus_names()[static_cast<std::size_t>(i) % corpus_names().size()];
    Model m = corpus(name);
    Model r = rename(m);
    ASSERT_FALSE(has_errors(validate(r))) << name;
    auto iso = is_isomorphic(m, r);
    ASSERT_TRUE(iso.isomorphic) << name;
    std::set<std::string> image;
    for (const auto& [a, b] : iso.mapping) image.insert(b);
    ASSERT_EQ(image.size(), element_ids(r).size()) << name;
    ASSERT_TRUE(is_isomorphic(r, m).isomorphic);
  }
  EXPECT_GE(cases, 100);
}

TEST(IsomorphismProperty, SingleMutationBreaksIsomorphism) {
  std::mt19937 rng(77);
  Renamer rename(78);
  int cases = 0;
  for (int i = 0; cases < 100; ++i) {
    const auto& name = corpus_names()[static_cast<std::size_t>(i) % corpus_names().size()];
    Model m = corpus(name);
    Model changed = m;
    if (!mutate(changed, i % 5, rng)) continue;
    ++cases;
    ASSERT_FALSE(is_isomorphic(m, rename(changed)).isomorphic) << name << " mutation " << i % 5;
  }
}
