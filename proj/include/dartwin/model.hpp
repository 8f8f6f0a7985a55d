#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "constraint.hpp"

namespace dartwin {

enum class Direction { input, output };
enum class PortRole { monitoring, control, user, inter_dt };
enum class SystemKind { twin_system, actual_twin };
enum class GoalEdgeKind { generalization, positive_relation, conflict };
enum class Combinator { union_of, strictest };

inline std::string_view to_string(Direction d) { return d == Direction::input ? "in" : "out"; }

inline std::string_view to_string(PortRole r) {
  switch (r) {
    case PortRole::monitoring: return "monitoring";
    case PortRole::control: return "control";
    case PortRole::user: return "user";
    case PortRole::inter_dt: return "inter_dt";
  }
  return "";
}

inline std::optional<PortRole> parse_role(std::string_view s) {
  if (s == "monitoring") return PortRole::monitoring;
  if (s == "control") return PortRole::control;
  if (s == "user") return PortRole::user;
  if (s == "inter_dt") return PortRole::inter_dt;
  return std::nullopt;
}

inline std::string_view to_string(GoalEdgeKind k) {
  switch (k) {
    case GoalEdgeKind::generalization: return "generalizes";
    case GoalEdgeKind::positive_relation: return "supports";
    case GoalEdgeKind::conflict: return "conflicts";
  }
  return "";
}

inline std::optional<GoalEdgeKind> parse_edge_kind(std::string_view s) {
  if (s == "generalizes") return GoalEdgeKind::generalization;
  if (s == "supports") return GoalEdgeKind::positive_relation;
  if (s == "conflicts") return GoalEdgeKind::conflict;
  return std::nullopt;
}

inline std::string_view to_string(Combinator c) { return c == Combinator::union_of ? "union" : "strictest"; }

// Signal and PoI units known to the toolchain. No conversions exist between them.
inline const std::set<std::string, std::less<>>& registered_units() {
  static const std::set<std::string, std::less<>> units = {
      "boolean",  "celsius",      "currency_per_kwh", "image",          "joules",
      "kinetic_limits", "m_per_s",  "m_per_s2",         "meters",         "metrics",
      "motor_state", "on_off",    "position_constraints", "rad",        "rad_per_s",
      "ratio",    "seconds",      "trajectory",
  };
  return units;
}

inline bool is_registered_unit(std::string_view unit) { return registered_units().count(unit) > 0; }

struct Poi {
  std::string id;  // "<goal>.<name>"
  std::string name;
  std::string unit;

  friend bool operator==(const Poi&, const Poi&) = default;
};

struct Goal {
  std::string id;
  std::string title;
  std::vector<Poi> pois;
  std::optional<Constraint> constraint;

  const Poi* find_poi(std::string_view name) const {
    for (const auto& p : pois) {
      if (p.name == name) return &p;
    }
    return nullptr;
  }

  friend bool operator==(const Goal&, const Goal&) = default;
};

struct GoalEdge {
  GoalEdgeKind kind = GoalEdgeKind::positive_relation;
  std::string source;
  std::string target;
  std::optional<std::string> label;
  std::optional<Combinator> combinator;

  std::string id() const { return source + "-" + std::string(to_string(kind)) + "->" + target; }

  friend bool operator==(const GoalEdge&, const GoalEdge&) = default;
};

struct Port {
  std::string id;  // "<owner>.<name>"
  std::string name;
  Direction direction = Direction::input;
  PortRole role = PortRole::monitoring;
  std::string signal_unit;

  friend bool operator==(const Port&, const Port&) = default;
};

inline std::string port_id(std::string_view owner, std::string_view name) {
  std::string id(owner);
  id += '.';
  id += name;
  return id;
}

struct Dt {
  std::string id;
  std::string name;
  std::vector<Port> ports;
  std::optional<std::string> behavior_key;

  const Port* find_port(std::string_view port_name) const {
    for (const auto& p : ports) {
      if (p.name == port_name) return &p;
    }
    return nullptr;
  }

  friend bool operator==(const Dt&, const Dt&) = default;
};

struct PortRef {
  std::string owner;  // Dt id or system id
  std::string port;   // port name

  std::string id() const { return port_id(owner, port); }

  friend bool operator==(const PortRef&, const PortRef&) = default;
  friend auto operator<=>(const PortRef&, const PortRef&) = default;
};

struct Flow {
  PortRef from;
  PortRef to;

  std::string id() const { return from.id() + "->" + to.id(); }

  friend bool operator==(const Flow&, const Flow&) = default;
};

struct TwinSystem {
  std::string id;
  std::string name;
  SystemKind kind = SystemKind::twin_system;
  std::vector<Port> ports;
  std::vector<Dt> dts;
  std::vector<TwinSystem> subsystems;
  std::vector<Flow> flows;

  const Port* find_port(std::string_view port_name) const {
    for (const auto& p : ports) {
      if (p.name == port_name) return &p;
    }
    return nullptr;
  }

  friend bool operator==(const TwinSystem&, const TwinSystem&) = default;
};

struct DtGoalLink {
  std::string dt;
  std::string goal;

  std::string id() const { return dt + "=>" + goal; }

  friend bool operator==(const DtGoalLink&, const DtGoalLink&) = default;
};

struct Model {
  std::string name;
  std::optional<std::string> extends_name;
  std::vector<Goal> goals;
  std::vector<GoalEdge> goal_edges;
  TwinSystem root_system;
  std::vector<DtGoalLink> dt_goal_links;

  friend bool operator==(const Model&, const Model&) = default;
};

// ---- element enumeration ------------------------------------------------------------

enum class ElementKind { goal, poi, goal_edge, system, dt, port, flow, link };

inline std::string_view to_string(ElementKind k) {
  switch (k) {
    case ElementKind::goal: return "goal";
    case ElementKind::poi: return "poi";
    case ElementKind::goal_edge: return "goal_edge";
    case ElementKind::system: return "system";
    case ElementKind::dt: return "dt";
    case ElementKind::port: return "port";
    case ElementKind::flow: return "flow";
    case ElementKind::link: return "link";
  }
  return "";
}

using ElementPtr = std::variant<const Goal*, const Poi*, const GoalEdge*, const TwinSystem*, const Dt*,
                                const Port*, const Flow*, const DtGoalLink*>;

struct ElementRef {
  std::string id;
  ElementKind kind;
  ElementPtr ptr;
};

namespace detail {

inline void collect_system(const TwinSystem& sys, std::vector<ElementRef>& out) {
  out.push_back({sys.id, ElementKind::system, &sys});
  for (const auto& p : sys.ports) out.push_back({p.id, ElementKind::port, &p});
  for (const auto& dt : sys.dts) {
    out.push_back({dt.id, ElementKind::dt, &dt});
    for (const auto& p : dt.ports) out.push_back({p.id, ElementKind::port, &p});
  }
  for (const auto& sub : sys.subsystems) collect_system(sub, out);
  for (const auto& f : sys.flows) out.push_back({f.id(), ElementKind::flow, &f});
}

}  // namespace detail

// Every element of the model in declaration order. References are invalidated by any
// change to the model.
inline std::vector<ElementRef> enumerate_elements(const Model& m) {
  std::vector<ElementRef> out;
  for (const auto& g : m.goals) {
    out.push_back({g.id, ElementKind::goal, &g});
    for (const auto& p : g.pois) out.push_back({p.id, ElementKind::poi, &p});
  }
  for (const auto& e : m.goal_edges) out.push_back({e.id(), ElementKind::goal_edge, &e});
  // A default-constructed Model (the source of a basic transformation) has no root system yet.
  if (!m.root_system.id.empty()) detail::collect_system(m.root_system, out);
  for (const auto& l : m.dt_goal_links) out.push_back({l.id(), ElementKind::link, &l});
  return out;
}

inline std::vector<std::string> element_ids(const Model& m) {
  std::vector<std::string> ids;
  for (const auto& e : enumerate_elements(m)) ids.push_back(e.id);
  return ids;
}

inline std::optional<ElementRef> find_element(const Model& m, std::string_view id) {
  for (auto& e : enumerate_elements(m)) {
    if (e.id == id) return e;
  }
  return std::nullopt;
}

// ---- index --------------------------------------------------------------------------

// Lookup tables over one model. Holds pointers into the model, so the model must outlive
// the index and must not be modified while the index is in use.
class ModelIndex {
 public:
  struct PortInfo {
    const Port* port = nullptr;
    const Dt* dt = nullptr;               // owning Dt, or null for a system boundary port
    const TwinSystem* system = nullptr;   // owning system (boundary) or system containing the Dt
  };

  explicit ModelIndex(const Model& m) : model_(&m) {
    for (const auto& g : m.goals) goals_[g.id] = &g;
    index_system(m.root_system, nullptr);
  }

  const Model& model() const { return *model_; }

  const Goal* goal(std::string_view id) const { return lookup(goals_, id); }
  const Dt* dt(std::string_view id) const { return lookup(dts_, id); }
  const TwinSystem* system(std::string_view id) const { return lookup(systems_, id); }

  const PortInfo* port(std::string_view id) const {
    auto it = ports_.find(id);
    return it == ports_.end() ? nullptr : &it->second;
  }
  const PortInfo* port(const PortRef& ref) const { return port(ref.id()); }

  // Parent system of a system (null for the root), and the system that contains a Dt.
  const TwinSystem* parent_of(std::string_view system_id) const { return lookup(parents_, system_id); }
  const TwinSystem* dt_owner(std::string_view dt_id) const { return lookup(dt_owner_, dt_id); }

  // System in whose flow list a flow appears.
  const TwinSystem* flow_scope(std::string_view flow_id) const { return lookup(flow_scope_, flow_id); }

  struct ScopedFlow {
    const Flow* flow;
    const TwinSystem* scope;
  };
  const std::vector<ScopedFlow>& flows() const { return flows_; }

  std::vector<ScopedFlow> flows_from(std::string_view pid) const {
    std::vector<ScopedFlow> out;
    for (const auto& f : flows_) {
      if (f.flow->from.id() == pid) out.push_back(f);
    }
    return out;
  }

  std::vector<ScopedFlow> flows_into(std::string_view pid) const {
    std::vector<ScopedFlow> out;
    for (const auto& f : flows_) {
      if (f.flow->to.id() == pid) out.push_back(f);
    }
    return out;
  }

  std::vector<std::string> incident_flow_ids(std::string_view pid) const {
    std::vector<std::string> out;
    for (const auto& f : flows_) {
      if (f.flow->from.id() == pid || f.flow->to.id() == pid) out.push_back(f.flow->id());
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  const std::vector<const Dt*>& all_dts() const { return dt_list_; }
  const std::vector<const TwinSystem*>& all_systems() const { return system_list_; }

 private:
  template <class Map>
  static auto lookup(const Map& map, std::string_view id) -> typename Map::mapped_type {
    auto it = map.find(id);
    return it == map.end() ? nullptr : it->second;
  }

  void index_system(const TwinSystem& sys, const TwinSystem* parent) {
    systems_[sys.id] = &sys;
    parents_[sys.id] = parent;
    system_list_.push_back(&sys);
    for (const auto& p : sys.ports) ports_[p.id] = PortInfo{&p, nullptr, &sys};
    for (const auto& d : sys.dts) {
      dts_[d.id] = &d;
      dt_owner_[d.id] = &sys;
      dt_list_.push_back(&d);
      for (const auto& p : d.ports) ports_[p.id] = PortInfo{&p, &d, &sys};
    }
    for (const auto& sub : sys.subsystems) index_system(sub, &sys);
    for (const auto& f : sys.flows) {
      flow_scope_[f.id()] = &sys;
      flows_.push_back({&f, &sys});
    }
  }

  const Model* model_;
  std::map<std::string, const Goal*, std::less<>> goals_;
  std::map<std::string, const Dt*, std::less<>> dts_;
  std::map<std::string, const TwinSystem*, std::less<>> systems_;
  std::map<std::string, const TwinSystem*, std::less<>> parents_;
  std::map<std::string, const TwinSystem*, std::less<>> dt_owner_;
  std::map<std::string, const TwinSystem*, std::less<>> flow_scope_;
  std::map<std::string, PortInfo, std::less<>> ports_;
  std::vector<ScopedFlow> flows_;
  std::vector<const Dt*> dt_list_;
  std::vector<const TwinSystem*> system_list_;
};

// ---- canonical order ----------------------------------------------------------------

namespace detail {

inline void canonicalize_system(TwinSystem& sys) {
  auto by_name = [](const Port& a, const Port& b) { return a.name < b.name; };
  std::sort(sys.ports.begin(), sys.ports.end(), by_name);
  for (auto& d : sys.dts) std::sort(d.ports.begin(), d.ports.end(), by_name);
  std::sort(sys.dts.begin(), sys.dts.end(), [](const Dt& a, const Dt& b) { return a.id < b.id; });
  for (auto& sub : sys.subsystems) canonicalize_system(sub);
  std::sort(sys.subsystems.begin(), sys.subsystems.end(),
            [](const TwinSystem& a, const TwinSystem& b) { return a.id < b.id; });
  std::sort(sys.flows.begin(), sys.flows.end(), [](const Flow& a, const Flow& b) { return a.id() < b.id(); });
}

}  // namespace detail

// Sorts every collection into the canonical order used by serialization and comparison.
inline Model canonicalize(Model m) {
  for (auto& g : m.goals) {
    std::sort(g.pois.begin(), g.pois.end(), [](const Poi& a, const Poi& b) { return a.name < b.name; });
  }
  std::sort(m.goals.begin(), m.goals.end(), [](const Goal& a, const Goal& b) { return a.id < b.id; });
  std::sort(m.goal_edges.begin(), m.goal_edges.end(),
            [](const GoalEdge& a, const GoalEdge& b) { return a.id() < b.id(); });
  std::sort(m.dt_goal_links.begin(), m.dt_goal_links.end(),
            [](const DtGoalLink& a, const DtGoalLink& b) { return a.id() < b.id(); });
  detail::canonicalize_system(m.root_system);
  return m;
}

// Equality up to declaration order.
inline bool structurally_equal(const Model& a, const Model& b) { return canonicalize(a) == canonicalize(b); }

// ---- mutable lookup helpers used by rewrites -----------------------------------------

inline TwinSystem* find_system(TwinSystem& sys, std::string_view id) {
  if (sys.id == id) return &sys;
  for (auto& sub : sys.subsystems) {
    if (auto* hit = find_system(sub, id)) return hit;
  }
  return nullptr;
}

inline Dt* find_dt(TwinSystem& sys, std::string_view id) {
  for (auto& d : sys.dts) {
    if (d.id == id) return &d;
  }
  for (auto& sub : sys.subsystems) {
    if (auto* hit = find_dt(sub, id)) return hit;
  }
  return nullptr;
}

// System whose flow list (or Dt list) holds the given Dt.
inline TwinSystem* find_dt_owner(TwinSystem& sys, std::string_view dt_id) {
  for (auto& d : sys.dts) {
    if (d.id == dt_id) return &sys;
  }
  for (auto& sub : sys.subsystems) {
    if (auto* hit = find_dt_owner(sub, dt_id)) return hit;
  }
  return nullptr;
}

}  // namespace dartwin
