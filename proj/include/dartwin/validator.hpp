#pragma once

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "diagnostics.hpp"
#include "invariants.hpp"
#include "model.hpp"

namespace dartwin {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

// Dts that feed `pid` directly: walks flows backwards through boundary ports and stops
// at the first Dt output on each path.
inline std::vector<std::string> direct_writers(const ModelIndex& idx, const std::string& pid) {
  std::set<std::string> writers;
  std::set<std::string> seen{pid};
  std::vector<std::string> frontier{pid};
  while (!frontier.empty()) {
    std::string cur = frontier.back();
    frontier.pop_back();
    for (const auto& sf : idx.flows_into(cur)) {
      const auto* src = idx.port(sf.flow->from);
      if (!src) continue;
      if (src->dt) {
        writers.insert(src->dt->id);
      } else if (seen.insert(src->port->id).second) {
        frontier.push_back(src->port->id);
      }
    }
  }
  return {writers.begin(), writers.end()};
}

// The output port through which `dt_id` reaches `pid`, following forwarding boundary ports.
inline const Port* writer_port(const ModelIndex& idx, const std::string& dt_id, const std::string& pid) {
  std::set<std::string> seen{pid};
  std::vector<std::string> frontier{pid};
  while (!frontier.empty()) {
    std::string cur = frontier.back();
    frontier.pop_back();
    for (const auto& sf : idx.flows_into(cur)) {
      const auto* src = idx.port(sf.flow->from);
      if (!src) continue;
      if (src->dt) {
        if (src->dt->id == dt_id) return src->port;
      } else if (seen.insert(src->port->id).second) {
        frontier.push_back(src->port->id);
      }
    }
  }
  return nullptr;
}

}  // namespace detail

// Dts whose outputs reach a control output on a system boundary.
inline std::vector<std::string> actuator_writers(const Model& m, const PortRef& actuator) {
  ModelIndex idx(m);
  const auto* info = idx.port(actuator);
  if (!info) throw ModelError("unknown port '" + actuator.id() + "'");
  if (info->dt || info->port->direction != Direction::output || info->port->role != PortRole::control) {
    throw ModelError("port '" + actuator.id() + "' is not a control output on a system boundary");
  }
  return detail::direct_writers(idx, info->port->id);
}

struct ActuationConflict {
  PortRef actuator;
  std::vector<std::string> writers;  // sorted, at least two

  friend bool operator==(const ActuationConflict&, const ActuationConflict&) = default;
};

// Ports where competing writes can meet: control outputs on any system boundary, plus
// user-role inputs of Dts and of nested systems.
inline std::vector<const Port*> contested_ports(const ModelIndex& idx) {
  std::vector<const Port*> out;
  const TwinSystem* root = &idx.model().root_system;
  for (const auto* sys : idx.all_systems()) {
    for (const auto& p : sys->ports) {
      bool control_out = p.direction == Direction::output && p.role == PortRole::control;
      bool nested_user_in = sys != root && p.direction == Direction::input && p.role == PortRole::user;
      if (control_out || nested_user_in) out.push_back(&p);
    }
  }
  for (const auto* d : idx.all_dts()) {
    for (const auto& p : d->ports) {
      if (p.direction == Direction::input && p.role == PortRole::user) out.push_back(&p);
    }
  }
  return out;
}

inline std::vector<ActuationConflict> detect_actuation_conflicts(const Model& m) {
  ModelIndex idx(m);
  std::vector<ActuationConflict> out;
  for (const auto* p : contested_ports(idx)) {
    auto writers = detail::direct_writers(idx, p->id);
    if (writers.size() < 2) continue;
    const auto* info = idx.port(p->id);
    std::string owner = info->dt ? info->dt->id : info->system->id;
    out.push_back({PortRef{owner, p->name}, std::move(writers)});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.actuator.id() < b.actuator.id(); });
  return out;
}

enum class TransformKind { basic, hierarchical, augmented, orthogonal, new_output, chaining, arbitration, flatten };

inline std::string_view to_string(TransformKind k) {
  switch (k) {
    case TransformKind::basic: return "basic";
    case TransformKind::hierarchical: return "hierarchical";
    case TransformKind::augmented: return "augmented";
    case TransformKind::orthogonal: return "orthogonal";
    case TransformKind::new_output: return "new_output";
    case TransformKind::chaining: return "chaining";
    case TransformKind::arbitration: return "arbitration";
    case TransformKind::flatten: return "flatten";
  }
  return "";
}

inline std::optional<TransformKind> parse_transform_kind(std::string_view s) {
  for (auto k : {TransformKind::basic, TransformKind::hierarchical, TransformKind::augmented, TransformKind::orthogonal,
                 TransformKind::new_output, TransformKind::chaining, TransformKind::arbitration, TransformKind::flatten}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

struct Advice {
  TransformKind transformation;
  std::string summary;

  friend bool operator==(const Advice&, const Advice&) = default;
};

// Resolutions applicable to a conflict found on this model. Throws ModelError when the
// conflict no longer matches the model.
inline std::vector<Advice> advise(const Model& m, const ActuationConflict& conflict) {
  ModelIndex idx(m);
  const auto* info = idx.port(conflict.actuator);
  if (!info) throw ModelError("stale conflict: port '" + conflict.actuator.id() + "' no longer exists");
  auto writers = detail::direct_writers(idx, info->port->id);
  auto expected = conflict.writers;
  std::sort(expected.begin(), expected.end());
  if (writers != expected) throw ModelError("stale conflict: writers of '" + conflict.actuator.id() + "' have changed");

  const std::string target = conflict.actuator.id();
  std::vector<Advice> out;
  out.push_back({TransformKind::new_output,
                 "give " + writers.back() + " its own output instead of " + target});

  // Chaining needs two writers side by side in one system so one can feed the other.
  for (std::size_t i = 0; i < writers.size(); ++i) {
    for (std::size_t j = 0; j < writers.size(); ++j) {
      if (i == j) continue;
      if (idx.dt_owner(writers[i]) == idx.dt_owner(writers[j])) {
        out.push_back({TransformKind::chaining,
                       "route " + writers[i] + " through " + writers[j] + " so " + writers[j] + " alone writes " + target});
        i = writers.size();
        break;
      }
    }
  }

  std::set<std::string> units;
  for (const auto& w : writers) {
    if (const auto* p = detail::writer_port(idx, w, info->port->id)) units.insert(p->signal_unit);
  }
  if (units.size() == 1) {
    out.push_back({TransformKind::arbitration, "combine " + writers[0] + " and " + writers[1] + " in an arbiter feeding " + target});
  }
  return out;
}

inline bool diagnostic_less(const Diagnostic& a, const Diagnostic& b) {
  return std::tie(a.severity, a.code, a.elements, a.message) < std::tie(b.severity, b.code, b.elements, b.message);
}

// Well-formedness errors, notation warnings and conflict infos, sorted so the result
// does not depend on declaration order.
inline std::vector<Diagnostic> validate(const Model& model) {
  Model m = canonicalize(model);
  std::vector<Diagnostic> out = structural_errors(m);
  ModelIndex idx(m);

  std::set<std::string> linked_dts, linked_goals, parents;
  for (const auto& l : m.dt_goal_links) {
    linked_dts.insert(l.dt);
    linked_goals.insert(l.goal);
  }
  for (const auto& e : m.goal_edges) {
    if (e.kind == GoalEdgeKind::generalization) parents.insert(e.source);
  }
  for (const auto* d : idx.all_dts()) {
    if (!linked_dts.count(d->id)) {
      out.push_back({Severity::warning, "DT-NO-GOAL", "dt '" + d->id + "' satisfies no goal", {d->id}});
    }
  }
  for (const auto& g : m.goals) {
    if (!linked_goals.count(g.id) && !parents.count(g.id)) {
      out.push_back({Severity::warning, "GOAL-UNSATISFIED", "goal '" + g.id + "' is not satisfied by any dt", {g.id}});
    }
  }
  for (const auto* sys : idx.all_systems()) {
    for (const auto& p : sys->ports) {
      if (idx.incident_flow_ids(p.id).empty()) {
        out.push_back({Severity::warning, "PORT-DANGLING", "boundary port '" + p.id + "' has no flow", {p.id}});
      }
    }
  }
  if (!has_errors(out)) {
    for (const auto& c : detect_actuation_conflicts(m)) {
      std::vector<std::string> ids{c.actuator.id()};
      ids.insert(ids.end(), c.writers.begin(), c.writers.end());
      std::string who;
      for (const auto& w : c.writers) who += (who.empty() ? "" : ", ") + w;
      out.push_back({Severity::info, "ACT-CONFLICT", "'" + c.actuator.id() + "' is written by " + who, ids});
    }
  }
  std::sort(out.begin(), out.end(), diagnostic_less);
  return out;
}

}  // namespace dartwin
