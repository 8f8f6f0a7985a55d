#pragma once

// The architectural rewrites: each takes a model and returns a new model together with
// the change set recorded while the rewrite ran.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "changeset.hpp"
#include "invariants.hpp"
#include "model.hpp"
#include "parser.hpp"
#include "validator.hpp"

namespace dartwin {

class TransformError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TransformResult {
  Model model;
  ChangeSet changes;
  std::vector<Diagnostic> warnings;
};

// Arbitration rules the simulator knows how to execute.
inline const std::set<std::string, std::less<>>& arbitration_rules() {
  static const std::set<std::string, std::less<>> rules = {"min", "strictest"};
  return rules;
}

// Smallest `<base>_<n>` (n >= 1) not rejected by `taken`.
template <class Taken>
std::string fresh_name(const std::string& base, Taken&& taken) {
  for (int n = 1;; ++n) {
    std::string candidate = base + "_" + std::to_string(n);
    if (!taken(candidate)) return candidate;
  }
}

inline std::string fresh_id(const Model& m, const std::string& base) {
  auto ids = element_ids(m);
  std::set<std::string> used(ids.begin(), ids.end());
  return fresh_name(base, [&](const std::string& c) { return used.count(c) > 0; });
}

namespace detail {

// Applies edits to a model while logging them.
class Editor {
 public:
  explicit Editor(Model& m) : m_(m) {}

  ChangeRecorder& log() { return log_; }

  void add_goal(const Goal& g) {
    m_.goals.push_back(g);
    log_.added(g.id);
    for (const auto& p : g.pois) log_.added(p.id);
  }

  void add_relation(const GoalEdge& e) {
    m_.goal_edges.push_back(e);
    log_.added(e.id());
  }

  void add_link(const DtGoalLink& l) {
    m_.dt_goal_links.push_back(l);
    log_.added(l.id());
  }

  void add_dt(TwinSystem& sys, Dt d) {
    for (auto& p : d.ports) {
      p.id = port_id(d.id, p.name);
      log_.added(p.id);
    }
    log_.added(d.id);
    sys.dts.push_back(std::move(d));
  }

  void add_port(std::vector<Port>& ports, const std::string& owner, Port p) {
    p.id = port_id(owner, p.name);
    log_.added(p.id);
    ports.push_back(std::move(p));
  }

  void add_flow(TwinSystem& sys, const Flow& f) {
    sys.flows.push_back(f);
    log_.added(f.id());
    log_.touched(f.from.id());
    log_.touched(f.to.id());
  }

  void remove_flow(TwinSystem& sys, const std::string& flow_id) {
    auto it = std::find_if(sys.flows.begin(), sys.flows.end(), [&](const Flow& f) { return f.id() == flow_id; });
    if (it == sys.flows.end()) throw std::logic_error("no flow " + flow_id + " in " + sys.id);
    log_.removed(flow_id);
    log_.touched(it->from.id());
    log_.touched(it->to.id());
    sys.flows.erase(it);
  }

 private:
  Model& m_;
  ChangeRecorder log_;
};

inline PortRef resolve_boundary(PortRef r, const std::string& system_id) {
  if (r.owner == kBoundary) r.owner = system_id;
  return r;
}

inline Flow resolve_boundary(const Flow& f, const std::string& system_id) {
  return {resolve_boundary(f.from, system_id), resolve_boundary(f.to, system_id)};
}

inline void require_valid(const Model& m, const char* what) {
  auto errors = structural_errors(m);
  if (errors.empty()) return;
  std::string msg = std::string(what) + " would produce an invalid model:";
  for (const auto& e : errors) msg += "\n  " + e.code + ": " + e.message;
  throw TransformError(msg);
}

inline void add_goal_layer(Editor& ed, const Fragment& f) {
  for (const auto& g : f.goals) {
    Goal copy = g;
    for (auto& p : copy.pois) p.id = port_id(copy.id, p.name);
    ed.add_goal(copy);
  }
  for (const auto& e : f.relations) ed.add_relation(e);
  for (const auto& l : f.links) ed.add_link(l);
}

inline std::set<std::string> fragment_dt_ids(const Fragment& f) {
  std::set<std::string> out;
  for (const auto& d : f.dts) out.insert(d.id);
  return out;
}

// Conflicts in `after` that did not exist in `before` and involve one of `dts`.
inline std::vector<ActuationConflict> induced_conflicts(const Model& before, const Model& after,
                                                        const std::set<std::string>& dts) {
  auto old = detect_actuation_conflicts(before);
  std::vector<ActuationConflict> out;
  for (const auto& c : detect_actuation_conflicts(after)) {
    bool involves = std::any_of(c.writers.begin(), c.writers.end(), [&](const auto& w) { return dts.count(w) > 0; });
    if (involves && std::find(old.begin(), old.end(), c) == old.end()) out.push_back(c);
  }
  return out;
}

inline std::string join(const std::vector<std::string>& v, const char* sep = ", ") {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : sep) + s;
  return out;
}

inline TransformResult finish(Model m, Editor& ed, const char* what) {
  require_valid(m, what);
  return {std::move(m), ed.log().finish(), {}};
}

}  // namespace detail

// Builds a fresh model: one twin system holding the given Dts, boundary ports and flows.
// A fragment without `satisfies` links every Dt to every goal.
inline Model apply_basic(const Fragment& f) {
  if (!f.root_id) throw TransformError("basic: the system id ('root') is required");
  if (f.goals.empty()) throw TransformError("basic: at least one goal is required");
  if (f.dts.empty()) throw TransformError("basic: at least one dt is required");
  if (!f.extensions.empty()) throw TransformError("basic: nothing to extend in a new model");
  Model m;
  m.name = f.name.value_or(*f.root_id);
  m.root_system.id = *f.root_id;
  m.root_system.name = f.root_title.value_or(*f.root_id);
  detail::Editor ed(m);
  detail::add_goal_layer(ed, f);
  if (f.links.empty()) {
    for (const auto& d : f.dts) {
      for (const auto& g : f.goals) ed.add_link({d.id, g.id});
    }
  }
  for (const auto& p : f.boundary_ports) ed.add_port(m.root_system.ports, m.root_system.id, p);
  for (const auto& d : f.dts) ed.add_dt(m.root_system, d);
  for (const auto& fl : f.flows) ed.add_flow(m.root_system, detail::resolve_boundary(fl, m.root_system.id));
  detail::require_valid(m, "basic");
  return m;
}

// Wraps the current root as the actual twin of a new outer system. Fragment flows that
// end on the old root's boundary are the parameter bindings and must target user inputs.
inline TransformResult apply_hierarchical(const Model& source, const Fragment& f) {
  if (!f.root_id) throw TransformError("hierarchical: the new outer system id ('root') is required");
  if (!f.extensions.empty()) throw TransformError("hierarchical: the old system is a black box and cannot be extended");
  const TwinSystem& old_root = source.root_system;
  ModelIndex idx(source);
  if (idx.system(*f.root_id) || idx.dt(*f.root_id) || idx.goal(*f.root_id)) {
    throw TransformError("hierarchical: id '" + *f.root_id + "' is already used");
  }

  Model m = source;
  if (f.name) {
    m.extends_name = source.name;
    m.name = *f.name;
  }
  detail::Editor ed(m);
  TwinSystem outer;
  outer.id = *f.root_id;
  outer.name = f.root_title.value_or(outer.id);
  ed.log().added(outer.id);
  ed.log().touched(old_root.id);  // now nested

  for (const auto& fl : f.flows) {
    Flow r = detail::resolve_boundary(fl, outer.id);
    for (const PortRef* end : {&r.from, &r.to}) {
      if (end->owner == outer.id || end->owner == old_root.id) continue;
      bool new_dt = std::any_of(f.dts.begin(), f.dts.end(), [&](const Dt& d) { return d.id == end->owner; });
      if (!new_dt && (idx.dt(end->owner) || idx.system(end->owner))) {
        throw TransformError("hierarchical: binding '" + r.id() + "' targets a port inside the old root");
      }
    }
    if (r.to.owner == old_root.id) {
      const Port* p = old_root.find_port(r.to.port);
      if (!p) throw TransformError("hierarchical: old root has no port '" + r.to.port + "'");
      if (p->direction != Direction::input || p->role != PortRole::user) {
        throw TransformError("hierarchical: binding '" + r.id() + "' targets '" + p->id + "', which is not a user input");
      }
    }
    if (r.from.owner == old_root.id) {
      const Port* p = old_root.find_port(r.from.port);
      if (!p) throw TransformError("hierarchical: old root has no port '" + r.from.port + "'");
      if (p->direction != Direction::output || p->role != PortRole::user) {
        throw TransformError("hierarchical: flow '" + r.id() + "' reads '" + p->id + "', which is not a user output");
      }
    }
  }

  for (const auto& p : f.boundary_ports) ed.add_port(outer.ports, outer.id, p);
  for (const auto& d : f.dts) ed.add_dt(outer, d);
  outer.subsystems.push_back(std::move(m.root_system));
  for (const auto& fl : f.flows) ed.add_flow(outer, detail::resolve_boundary(fl, outer.id));
  m.root_system = std::move(outer);
  detail::add_goal_layer(ed, f);
  return detail::finish(std::move(m), ed, "hierarchical");
}

// Dissolves a nested twin system into the root. Boundary ports that only forwarded a
// signal disappear and their flows are joined end to end; ports the nested system used
// to reach the plant move to the root boundary.
inline TransformResult flatten(const Model& source, const std::string& inner_id) {
  auto& subs = source.root_system.subsystems;
  auto it = std::find_if(subs.begin(), subs.end(), [&](const TwinSystem& s) { return s.id == inner_id; });
  if (it == subs.end()) throw TransformError("flatten: '" + inner_id + "' is not a system directly inside the root");
  if (it->kind == SystemKind::actual_twin) throw TransformError("flatten: '" + inner_id + "' is an actual twin, nothing to flatten");
  if (it->dts.empty() && it->subsystems.empty()) throw TransformError("flatten: '" + inner_id + "' contains no dts");

  Model m = source;
  detail::Editor ed(m);
  TwinSystem& root = m.root_system;
  auto pos = std::find_if(root.subsystems.begin(), root.subsystems.end(), [&](const TwinSystem& s) { return s.id == inner_id; });
  TwinSystem inner = std::move(*pos);
  root.subsystems.erase(pos);
  ed.log().removed(inner.id);

  auto take_flows = [&](TwinSystem& sys, auto pred) {
    std::vector<Flow> out;
    for (const auto& fl : sys.flows) {
      if (pred(fl)) out.push_back(fl);
    }
    for (const auto& fl : out) ed.remove_flow(sys, fl.id());
    return out;
  };

  std::set<std::string> new_flow_ids;
  for (const auto& fl : root.flows) new_flow_ids.insert(fl.id());
  std::vector<Flow> pending;
  auto queue_flow = [&](const Flow& fl) {
    if (new_flow_ids.insert(fl.id()).second) pending.push_back(fl);
  };

  for (const auto& p : inner.ports) {
    const PortRef here{inner.id, p.name};
    auto outer_flows = take_flows(root, [&](const Flow& fl) { return fl.from == here || fl.to == here; });
    auto inner_flows = take_flows(inner, [&](const Flow& fl) { return fl.from == here || fl.to == here; });
    ed.log().removed(p.id);
    bool is_input = p.direction == Direction::input;
    // For an input the outer side feeds the port; for an output the inner side does.
    std::vector<PortRef> sources, sinks;
    for (const auto& fl : is_input ? outer_flows : inner_flows) {
      if (fl.to == here) sources.push_back(fl.from);
    }
    for (const auto& fl : is_input ? inner_flows : outer_flows) {
      if (fl.from == here) sinks.push_back(fl.to);
    }
    const bool inner_side = !(is_input ? sinks : sources).empty();
    const bool outer_side = !(is_input ? sources : sinks).empty();
    if (inner_side && outer_side) {
      for (const auto& s : sources) {
        for (const auto& t : sinks) queue_flow({s, t});
      }
    } else if (inner_side) {
      Port moved = p;
      moved.name = root.find_port(p.name) ? fresh_name(p.name, [&](const std::string& c) { return root.find_port(c) != nullptr; }) : p.name;
      ed.add_port(root.ports, root.id, moved);
      const PortRef there{root.id, moved.name};
      if (is_input) {
        for (const auto& t : sinks) queue_flow({there, t});
      } else {
        for (const auto& s : sources) queue_flow({s, there});
      }
    }
  }

  for (auto& d : inner.dts) {
    ed.log().touched(d.id);
    root.dts.push_back(std::move(d));
  }
  for (auto& s : inner.subsystems) {
    ed.log().touched(s.id);
    root.subsystems.push_back(std::move(s));
  }
  for (auto& fl : inner.flows) {
    ed.log().touched(fl.id());
    new_flow_ids.insert(fl.id());
    root.flows.push_back(std::move(fl));
  }
  for (const auto& fl : pending) ed.add_flow(root, fl);
  return detail::finish(std::move(m), ed, "flatten");
}

namespace detail {

// Adds fragment Dts, boundary ports, Dt extensions and flows to the root system.
inline void add_to_root(Editor& ed, Model& m, const Fragment& f) {
  TwinSystem& root = m.root_system;
  for (const auto& p : f.boundary_ports) {
    if (root.find_port(p.name)) throw TransformError("root already has a port named '" + p.name + "'");
    ed.add_port(root.ports, root.id, p);
  }
  for (const auto& [dt_id, ports] : f.extensions) {
    Dt* d = nullptr;
    for (auto& cand : root.dts) {
      if (cand.id == dt_id) d = &cand;
    }
    if (!d) throw TransformError("cannot extend '" + dt_id + "': not a dt of the root system");
    for (const auto& p : ports) {
      if (d->find_port(p.name)) throw TransformError("dt '" + dt_id + "' already has a port named '" + p.name + "'");
      ed.add_port(d->ports, d->id, p);
    }
  }
  for (const auto& d : f.dts) ed.add_dt(root, d);
  for (const auto& fl : f.flows) ed.add_flow(root, resolve_boundary(fl, root.id));
  add_goal_layer(ed, f);
}

}  // namespace detail

// Adds a Dt beside the existing ones, wired to them or to new boundary ports. Refuses to
// let the new Dt compete for an actuator or setpoint another Dt already writes.
inline TransformResult apply_augmented(const Model& source, const Fragment& f) {
  if (f.dts.empty()) throw TransformError("augmented: a new dt is required");
  Model m = source;
  detail::Editor ed(m);
  detail::add_to_root(ed, m, f);
  detail::require_valid(m, "augmented");
  auto induced = detail::induced_conflicts(source, m, detail::fragment_dt_ids(f));
  if (!induced.empty()) {
    const auto& c = induced.front();
    throw TransformError("augmented: would create an actuation conflict on '" + c.actuator.id() + "' between " +
                         detail::join(c.writers) + "; use orthogonal, new_output or chaining instead");
  }
  return {std::move(m), ed.log().finish(), {}};
}

// Adds an independent Dt that shares only boundary sensors and actuators. Succeeds with a
// warning when this creates competing writers.
inline TransformResult apply_orthogonal(const Model& source, const Fragment& f) {
  if (f.dts.empty()) throw TransformError("orthogonal: a new dt is required");
  if (!f.extensions.empty()) throw TransformError("orthogonal: existing dts cannot be changed");
  const auto new_dts = detail::fragment_dt_ids(f);
  for (const auto& fl : f.flows) {
    Flow r = detail::resolve_boundary(fl, source.root_system.id);
    int on_new = 0;
    for (const PortRef* end : {&r.from, &r.to}) {
      if (new_dts.count(end->owner)) {
        ++on_new;
      } else if (end->owner != source.root_system.id) {
        throw TransformError("orthogonal: binding '" + r.id() + "' reaches '" + end->owner +
                             "'; wiring to another dt is an augmented transformation");
      }
    }
    if (on_new != 1) throw TransformError("orthogonal: binding '" + r.id() + "' must join the new dt to the boundary");
  }
  Model m = source;
  detail::Editor ed(m);
  detail::add_to_root(ed, m, f);
  detail::require_valid(m, "orthogonal");
  TransformResult res{std::move(m), ed.log().finish(), {}};
  for (const auto& c : detail::induced_conflicts(source, res.model, new_dts)) {
    std::vector<std::string> ids{c.actuator.id()};
    ids.insert(ids.end(), c.writers.begin(), c.writers.end());
    res.warnings.push_back({Severity::warning, "ACT-CONFLICT",
                            "'" + c.actuator.id() + "' is now written by " + detail::join(c.writers), ids});
  }
  return res;
}

// Gives a Dt its own boundary output. An empty signal_unit on `new_port` takes the unit
// of the rerouted output.
inline TransformResult apply_new_output(const Model& source, const std::string& dt_id, Port new_port) {
  ModelIndex idx(source);
  const Dt* dt = idx.dt(dt_id);
  if (!dt) throw TransformError("new_output: unknown dt '" + dt_id + "'");
  const TwinSystem* scope = idx.dt_owner(dt_id);
  if (new_port.direction != Direction::output) throw TransformError("new_output: the new port must be an output");
  if (scope->find_port(new_port.name)) {
    throw TransformError("new_output: system '" + scope->id + "' already has a port named '" + new_port.name + "'");
  }
  bool has_flows = false;
  for (const auto& p : dt->ports) has_flows = has_flows || !idx.incident_flow_ids(p.id).empty();
  if (!has_flows) throw TransformError("new_output: dt '" + dt_id + "' has no flow to reroute");

  // Preference: an output shared with another writer, then a dangling output, then any
  // output that reaches the boundary.
  const Port* chosen = nullptr;
  std::optional<std::string> reroute;
  int best = 99;
  for (const auto& p : dt->ports) {
    if (p.direction != Direction::output) continue;
    if (!new_port.signal_unit.empty() && p.signal_unit != new_port.signal_unit) continue;
    auto outgoing = idx.flows_from(p.id);
    if (outgoing.empty() && best > 1) {
      chosen = &p;
      reroute.reset();
      best = 1;
    }
    for (const auto& sf : outgoing) {
      if (sf.flow->to.owner != scope->id) continue;
      const Port* sink = scope->find_port(sf.flow->to.port);
      if (!sink) continue;
      int rank = detail::direct_writers(idx, sink->id).size() >= 2 ? 0 : 2;
      if (rank < best) {
        chosen = &p;
        reroute = sf.flow->id();
        best = rank;
      }
    }
  }
  if (!chosen) throw TransformError("new_output: dt '" + dt_id + "' has no output to give its own port");
  if (new_port.signal_unit.empty()) new_port.signal_unit = chosen->signal_unit;

  Model m = source;
  detail::Editor ed(m);
  TwinSystem* sys = find_system(m.root_system, scope->id);
  if (reroute) ed.remove_flow(*sys, *reroute);
  std::string name = new_port.name;
  ed.add_port(sys->ports, sys->id, new_port);
  ed.add_flow(*sys, Flow{PortRef{dt_id, chosen->name}, PortRef{sys->id, name}});
  return detail::finish(std::move(m), ed, "new_output");
}

// Routes upstream's actuator command into a new input on downstream, which then writes
// the actuator alone.
inline TransformResult apply_chaining(const Model& source, const std::string& upstream, const std::string& downstream,
                                      const std::string& signal_unit) {
  if (upstream == downstream) throw TransformError("chaining: upstream and downstream must differ");
  ModelIndex idx(source);
  const Dt* up = idx.dt(upstream);
  const Dt* down = idx.dt(downstream);
  if (!up) throw TransformError("chaining: unknown dt '" + upstream + "'");
  if (!down) throw TransformError("chaining: unknown dt '" + downstream + "'");
  const TwinSystem* scope = idx.dt_owner(upstream);
  if (idx.dt_owner(downstream) != scope) {
    throw TransformError("chaining: '" + downstream + "' is not reachable in the scope of '" + upstream + "'");
  }

  const Flow* actuation = nullptr;
  const Port* up_port = nullptr;
  for (const auto& p : up->ports) {
    if (p.direction != Direction::output || p.signal_unit != signal_unit) continue;
    for (const auto& sf : idx.flows_from(p.id)) {
      if (sf.flow->to.owner != scope->id) continue;
      const Port* sink = scope->find_port(sf.flow->to.port);
      if (sink && sink->role == PortRole::control) {
        actuation = sf.flow;
        up_port = &p;
        break;
      }
    }
    if (actuation) break;
  }
  if (!actuation) {
    throw TransformError("chaining: '" + upstream + "' writes no control port of unit " + signal_unit);
  }
  const PortRef actuator = actuation->to;

  const Port* down_out = nullptr;
  bool down_writes = false;
  for (const auto& p : down->ports) {
    if (p.direction != Direction::output || p.signal_unit != signal_unit) continue;
    for (const auto& sf : idx.flows_from(p.id)) {
      if (sf.flow->to == actuator) {
        down_out = &p;
        down_writes = true;
      }
    }
    if (!down_out) down_out = &p;
  }
  if (!down_out) throw TransformError("chaining: '" + downstream + "' has no output of unit " + signal_unit);

  Model m = source;
  detail::Editor ed(m);
  TwinSystem* sys = find_system(m.root_system, scope->id);
  Dt* d = find_dt(m.root_system, downstream);
  Port in;
  in.name = fresh_name(up_port->name, [&](const std::string& c) { return d->find_port(c) != nullptr; });
  in.direction = Direction::input;
  in.role = up_port->role;
  in.signal_unit = signal_unit;
  ed.add_port(d->ports, d->id, in);
  ed.remove_flow(*sys, actuation->id());
  ed.add_flow(*sys, Flow{PortRef{upstream, up_port->name}, PortRef{downstream, in.name}});
  if (!down_writes) ed.add_flow(*sys, Flow{PortRef{downstream, down_out->name}, actuator});

  TransformResult res = detail::finish(std::move(m), ed, "chaining");
  ModelIndex after(res.model);
  auto writers = detail::direct_writers(after, actuator.id());
  if (writers != std::vector<std::string>{downstream}) {
    throw TransformError("chaining: '" + actuator.id() + "' would still be written by " + detail::join(writers));
  }
  return res;
}

// Inserts an arbiter Dt combining the two writers' suggestions for `target`. The arbiter
// satisfies the goals of writer_b, whose suggestion it reconciles with writer_a's.
inline TransformResult apply_arbitration(const Model& source, const std::string& writer_a, const std::string& writer_b,
                                         const PortRef& target, const std::string& rule_key,
                                         const std::optional<std::string>& arbiter_id = std::nullopt) {
  if (!arbitration_rules().count(rule_key)) throw TransformError("arbitration: unknown rule '" + rule_key + "'");
  if (writer_a == writer_b) throw TransformError("arbitration: the two writers must differ");
  ModelIndex idx(source);
  const auto* tinfo = idx.port(target);
  if (!tinfo) throw TransformError("arbitration: unknown target port '" + target.id() + "'");
  const Port* tport = tinfo->port;
  const bool boundary_target = tinfo->dt == nullptr;
  if (boundary_target ? tport->direction != Direction::output : tport->direction != Direction::input) {
    throw TransformError("arbitration: '" + target.id() + "' cannot receive a suggestion");
  }
  const TwinSystem* scope = tinfo->system;

  struct Writer {
    const Dt* dt;
    const Port* port;
    std::optional<std::string> flow;
  };
  auto writer = [&](const std::string& id) {
    const Dt* d = idx.dt(id);
    if (!d) throw TransformError("arbitration: unknown dt '" + id + "'");
    if (idx.dt_owner(id) != scope) throw TransformError("arbitration: '" + id + "' is not in system '" + scope->id + "'");
    for (const auto& p : d->ports) {
      for (const auto& sf : idx.flows_from(p.id)) {
        if (sf.flow->to == target) return Writer{d, &p, sf.flow->id()};
      }
    }
    // A writer may intend to write the target through an output not yet connected.
    const Port* open = nullptr;
    for (const auto& p : d->ports) {
      if (p.direction == Direction::output && idx.flows_from(p.id).empty()) {
        if (open && open->signal_unit == tport->signal_unit) continue;
        open = &p;
      }
    }
    if (!open) throw TransformError("arbitration: '" + id + "' emits nothing toward '" + target.id() + "'");
    return Writer{d, open, std::nullopt};
  };
  Writer a = writer(writer_a);
  Writer b = writer(writer_b);
  if (a.port->signal_unit != b.port->signal_unit) {
    throw TransformError("arbitration: unit mismatch between writers (" + a.port->signal_unit + " vs " + b.port->signal_unit + ")");
  }
  if (a.port->signal_unit != tport->signal_unit) {
    throw TransformError("arbitration: writers emit " + a.port->signal_unit + " but '" + target.id() + "' takes " + tport->signal_unit);
  }

  Model m = source;
  detail::Editor ed(m);
  TwinSystem* sys = find_system(m.root_system, scope->id);
  Dt arb;
  arb.id = arbiter_id.value_or(fresh_id(source, "Arbiter"));
  if (idx.dt(arb.id) || idx.system(arb.id) || idx.goal(arb.id)) throw TransformError("arbitration: id '" + arb.id + "' is already used");
  arb.name = "Arbiter";
  arb.behavior_key = rule_key;
  for (const char* n : {"in_1", "in_2", "out_1"}) {
    Port p;
    p.name = n;
    p.direction = n[0] == 'i' ? Direction::input : Direction::output;
    p.role = tport->role;
    p.signal_unit = tport->signal_unit;
    arb.ports.push_back(p);
  }
  const std::string arb_id = arb.id;
  ed.add_dt(*sys, std::move(arb));
  for (const Writer* w : {&a, &b}) {
    if (w->flow) ed.remove_flow(*sys, *w->flow);
  }
  ed.add_flow(*sys, Flow{PortRef{writer_a, a.port->name}, PortRef{arb_id, "in_1"}});
  ed.add_flow(*sys, Flow{PortRef{writer_b, b.port->name}, PortRef{arb_id, "in_2"}});
  ed.add_flow(*sys, Flow{PortRef{arb_id, "out_1"}, target});
  std::vector<std::string> goals;
  for (const auto& l : source.dt_goal_links) {
    if (l.dt == writer_b) goals.push_back(l.goal);
  }
  std::sort(goals.begin(), goals.end());
  for (const auto& g : goals) ed.add_link({arb_id, g});
  return detail::finish(std::move(m), ed, "arbitration");
}

// ---- generic request ------------------------------------------------------------------

// Parameters per kind:
//   basic, hierarchical, augmented, orthogonal: fragment
//   flatten:     system
//   new_output:  dt, port, [unit], [role]  (role defaults to control)
//   chaining:    upstream, downstream, signal
//   arbitration: writer_a, writer_b, target (Owner.port), rule, [arbiter]
struct TransformRequest {
  TransformKind kind = TransformKind::basic;
  std::map<std::string, std::string> parameters;
  std::optional<Fragment> fragment;
};

inline std::vector<std::string> required_parameters(TransformKind kind) {
  switch (kind) {
    case TransformKind::flatten: return {"system"};
    case TransformKind::new_output: return {"dt", "port"};
    case TransformKind::chaining: return {"upstream", "downstream", "signal"};
    case TransformKind::arbitration: return {"writer_a", "writer_b", "target", "rule"};
    default: return {};
  }
}

inline bool needs_fragment(TransformKind kind) {
  return kind == TransformKind::basic || kind == TransformKind::hierarchical || kind == TransformKind::augmented ||
         kind == TransformKind::orthogonal;
}

// Runs a request. `source` is ignored for basic. Missing parameters raise TransformError.
inline TransformResult apply(const Model& source, const TransformRequest& req) {
  for (const auto& p : required_parameters(req.kind)) {
    auto it = req.parameters.find(p);
    if (it == req.parameters.end() || it->second.empty()) {
      throw TransformError(std::string(to_string(req.kind)) + ": missing parameter '" + p + "'");
    }
  }
  if (needs_fragment(req.kind) && !req.fragment) {
    throw TransformError(std::string(to_string(req.kind)) + ": a fragment is required");
  }
  auto param = [&](const char* k) { return req.parameters.at(k); };
  auto opt = [&](const char* k) -> std::optional<std::string> {
    auto it = req.parameters.find(k);
    return it == req.parameters.end() || it->second.empty() ? std::nullopt : std::optional<std::string>(it->second);
  };
  switch (req.kind) {
    case TransformKind::basic: {
      Model m = apply_basic(*req.fragment);
      ChangeSet cs;
      for (const auto& id : element_ids(m)) cs.added.push_back(id);
      std::sort(cs.added.begin(), cs.added.end());
      return {std::move(m), std::move(cs), {}};
    }
    case TransformKind::hierarchical: return apply_hierarchical(source, *req.fragment);
    case TransformKind::augmented: return apply_augmented(source, *req.fragment);
    case TransformKind::orthogonal: return apply_orthogonal(source, *req.fragment);
    case TransformKind::flatten: return flatten(source, param("system"));
    case TransformKind::new_output: {
      Port p;
      p.name = param("port");
      p.direction = Direction::output;
      p.signal_unit = opt("unit").value_or("");
      auto role = parse_role(opt("role").value_or("control"));
      if (!role) throw TransformError("new_output: unknown role '" + param("role") + "'");
      p.role = *role;
      return apply_new_output(source, param("dt"), p);
    }
    case TransformKind::chaining: return apply_chaining(source, param("upstream"), param("downstream"), param("signal"));
    case TransformKind::arbitration: {
      const std::string t = param("target");
      auto dot = t.rfind('.');
      if (dot == std::string::npos || dot == 0 || dot + 1 == t.size()) {
        throw TransformError("arbitration: target must be written Owner.port");
      }
      return apply_arbitration(source, param("writer_a"), param("writer_b"), PortRef{t.substr(0, dot), t.substr(dot + 1)},
                               param("rule"), opt("arbiter"));
    }
  }
  throw TransformError("unknown transformation");
}

}  // namespace dartwin
