#pragma once

// Error-level well-formedness checks shared by the parser and the validator.

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "diagnostics.hpp"
#include "model.hpp"

namespace dartwin {

// Goals that generalize `goal_id`, transitively, excluding the goal itself.
inline std::vector<std::string> goal_ancestors(const Model& m, const std::string& goal_id) {
  std::vector<std::string> out;
  std::set<std::string> seen{goal_id};
  std::vector<std::string> stack{goal_id};
  while (!stack.empty()) {
    std::string cur = stack.back();
    stack.pop_back();
    for (const auto& e : m.goal_edges) {
      if (e.kind == GoalEdgeKind::generalization && e.target == cur && seen.insert(e.source).second) {
        out.push_back(e.source);
        stack.push_back(e.source);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// PoI name -> unit for every PoI a goal's constraint may reference. Own PoIs shadow
// inherited ones.
inline std::map<std::string, std::string, std::less<>> visible_pois(const Model& m, const Goal& g) {
  std::map<std::string, std::string, std::less<>> out;
  for (const auto& p : g.pois) out[p.name] = p.unit;
  for (const auto& anc : goal_ancestors(m, g.id)) {
    for (const auto& other : m.goals) {
      if (other.id != anc) continue;
      for (const auto& p : other.pois) out.emplace(p.name, p.unit);
    }
  }
  return out;
}

enum class EndpointSide { source, sink };

// How a flow endpoint relates to the system that declares the flow.
struct ResolvedEndpoint {
  enum class Owner { boundary, dt, subsystem, missing_owner, out_of_scope } owner = Owner::missing_owner;
  const Port* port = nullptr;
};

inline ResolvedEndpoint resolve_endpoint(const ModelIndex& idx, const TwinSystem& scope, const PortRef& ref) {
  ResolvedEndpoint r;
  if (ref.owner == scope.id) {
    r.owner = ResolvedEndpoint::Owner::boundary;
    r.port = scope.find_port(ref.port);
    return r;
  }
  for (const auto& d : scope.dts) {
    if (d.id == ref.owner) {
      r.owner = ResolvedEndpoint::Owner::dt;
      r.port = d.find_port(ref.port);
      return r;
    }
  }
  for (const auto& s : scope.subsystems) {
    if (s.id == ref.owner) {
      r.owner = ResolvedEndpoint::Owner::subsystem;
      r.port = s.find_port(ref.port);
      return r;
    }
  }
  if (idx.dt(ref.owner) || idx.system(ref.owner)) {
    r.owner = ResolvedEndpoint::Owner::out_of_scope;
    if (const auto* info = idx.port(ref)) r.port = info->port;
  }
  return r;
}

// A boundary input feeds elements inside; Dt and subsystem outputs feed their siblings.
inline bool endpoint_direction_ok(const ResolvedEndpoint& ep, EndpointSide side) {
  if (!ep.port) return false;
  bool boundary = ep.owner == ResolvedEndpoint::Owner::boundary;
  Direction emits = boundary ? Direction::input : Direction::output;
  Direction wanted = side == EndpointSide::source ? emits : (emits == Direction::input ? Direction::output : Direction::input);
  return ep.port->direction == wanted;
}

namespace detail {

inline void check_system_structure(const ModelIndex& idx, const TwinSystem& sys, std::vector<Diagnostic>& out) {
  if (sys.kind == SystemKind::actual_twin && (!sys.dts.empty() || !sys.subsystems.empty())) {
    out.push_back({Severity::error, "AT-CONTENTS", "actual twin '" + sys.id + "' must not contain dts or systems",
                   {sys.id}});
  }
  auto check_unit = [&](const Port& p) {
    if (!is_registered_unit(p.signal_unit)) {
      out.push_back({Severity::error, "PORT-UNIT", "port '" + p.id + "' uses unknown unit '" + p.signal_unit + "'",
                     {p.id}});
    }
  };
  for (const auto& p : sys.ports) check_unit(p);
  for (const auto& d : sys.dts) {
    for (const auto& p : d.ports) check_unit(p);
  }
  for (const auto& f : sys.flows) {
    const std::string fid = f.id();
    ResolvedEndpoint ends[2] = {resolve_endpoint(idx, sys, f.from), resolve_endpoint(idx, sys, f.to)};
    const PortRef* refs[2] = {&f.from, &f.to};
    bool ok = true;
    for (int i = 0; i < 2; ++i) {
      const auto& ep = ends[i];
      if (ep.owner == ResolvedEndpoint::Owner::missing_owner) {
        out.push_back({Severity::error, "DANGLING-REF",
                       "flow '" + fid + "' names unknown element '" + refs[i]->owner + "'", {fid}});
        ok = false;
      } else if (ep.owner == ResolvedEndpoint::Owner::out_of_scope) {
        out.push_back({Severity::error, "FLOW-ENDPOINT",
                       "flow '" + fid + "' reaches '" + refs[i]->owner + "' outside system '" + sys.id + "'",
                       {fid}});
        ok = false;
      } else if (!ep.port) {
        out.push_back({Severity::error, "DANGLING-REF",
                       "flow '" + fid + "' names unknown port '" + refs[i]->id() + "'", {fid}});
        ok = false;
      }
    }
    if (!ok) continue;
    if (!endpoint_direction_ok(ends[0], EndpointSide::source)) {
      out.push_back({Severity::error, "FLOW-DIRECTION",
                     "flow '" + fid + "' starts at '" + f.from.id() + "' which cannot emit here", {fid}});
    }
    if (!endpoint_direction_ok(ends[1], EndpointSide::sink)) {
      out.push_back({Severity::error, "FLOW-DIRECTION",
                     "flow '" + fid + "' ends at '" + f.to.id() + "' which cannot receive here", {fid}});
    }
    if (ends[0].port->signal_unit != ends[1].port->signal_unit) {
      out.push_back({Severity::error, "FLOW-UNIT",
                     "flow '" + fid + "' connects " + ends[0].port->signal_unit + " to " + ends[1].port->signal_unit,
                     {fid}});
    }
  }
  for (const auto& sub : sys.subsystems) check_system_structure(idx, sub, out);
}

}  // namespace detail

// Every error-level violation of the model invariants.
inline std::vector<Diagnostic> structural_errors(const Model& m) {
  std::vector<Diagnostic> out;
  ModelIndex idx(m);

  std::map<std::string, int> counts;
  for (const auto& id : element_ids(m)) ++counts[id];
  for (const auto& [id, n] : counts) {
    if (n > 1) out.push_back({Severity::error, "DUP-ID", "identifier '" + id + "' is declared " + std::to_string(n) + " times", {id}});
  }

  for (const auto& g : m.goals) {
    if (g.pois.empty()) {
      out.push_back({Severity::error, "POI-NONE", "goal must declare at least one poi", {g.id}});
    }
    for (const auto& p : g.pois) {
      if (!is_registered_unit(p.unit)) {
        out.push_back({Severity::error, "POI-UNIT", "poi '" + p.id + "' uses unknown unit '" + p.unit + "'", {p.id}});
      }
    }
  }

  for (const auto& e : m.goal_edges) {
    const std::string eid = e.id();
    bool ok = true;
    for (const auto* end : {&e.source, &e.target}) {
      if (!idx.goal(*end)) {
        out.push_back({Severity::error, "DANGLING-REF", "relation '" + eid + "' names unknown goal '" + *end + "'", {eid}});
        ok = false;
      }
    }
    if (ok && e.source == e.target) {
      out.push_back({Severity::error, "SELF-EDGE", "relation '" + eid + "' relates a goal to itself", {eid}});
    }
  }

  // Generalization cycles: colour-marking DFS, one diagnostic per back edge.
  {
    std::map<std::string, std::vector<const GoalEdge*>> children;
    for (const auto& e : m.goal_edges) {
      if (e.kind == GoalEdgeKind::generalization && e.source != e.target) children[e.source].push_back(&e);
    }
    std::map<std::string, int> colour;
    std::function<void(const std::string&)> visit = [&](const std::string& g) {
      colour[g] = 1;
      for (const auto* e : children[g]) {
        int c = colour[e->target];
        if (c == 1) {
          out.push_back({Severity::error, "GEN-CYCLE", "generalization cycle through '" + e->id() + "'", {e->id()}});
        } else if (c == 0) {
          visit(e->target);
        }
      }
      colour[g] = 2;
    };
    std::vector<std::string> roots;
    for (const auto& [g, _] : children) roots.push_back(g);
    for (const auto& g : roots) {
      if (colour[g] == 0) visit(g);
    }
  }

  for (const auto& l : m.dt_goal_links) {
    if (!idx.dt(l.dt)) out.push_back({Severity::error, "DANGLING-REF", "link '" + l.id() + "' names unknown dt '" + l.dt + "'", {l.id()}});
    if (!idx.goal(l.goal)) out.push_back({Severity::error, "DANGLING-REF", "link '" + l.id() + "' names unknown goal '" + l.goal + "'", {l.id()}});
  }

  for (const auto& g : m.goals) {
    if (!g.constraint) continue;
    for (const auto& msg : typecheck(*g.constraint, visible_pois(m, g))) {
      out.push_back({Severity::error, "CONSTRAINT-TYPE", "goal '" + g.id + "': " + msg, {g.id}});
    }
  }

  detail::check_system_structure(idx, m.root_system, out);
  return out;
}

}  // namespace dartwin
