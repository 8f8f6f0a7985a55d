#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../model.hpp"
#include "../validator.hpp"
#include "behaviors.hpp"
#include "scenario.hpp"
#include "value.hpp"

namespace dartwin::sim {

struct ExecutablePlan {
  Model model;
  std::vector<std::string> order;  // Dt ids in evaluation order
  Registry registry;
};

// Orders the Dts so every Dt runs after the Dts feeding it; ties go to the smaller id.
inline ExecutablePlan bind_behaviors(const Model& model, const Registry& registry) {
  ExecutablePlan plan{model, {}, registry};
  ModelIndex idx(plan.model);
  std::map<std::string, std::set<std::string>> feeds;  // upstream -> downstream
  std::map<std::string, int> indegree;
  for (const auto* d : idx.all_dts()) {
    if (!d->behavior_key) throw BindError("dt '" + d->id + "' has no behavior");
    auto it = plan.registry.find(*d->behavior_key);
    if (it == plan.registry.end()) throw BindError("dt '" + d->id + "': unknown behavior '" + *d->behavior_key + "'");
    auto probe = it->second.make(*d, {});
    for (const auto& name : probe->required_inputs()) {
      if (idx.flows_into(port_id(d->id, name)).empty()) {
        throw BindError("dt '" + d->id + "': input '" + name + "' is not fed by any flow");
      }
    }
    indegree.emplace(d->id, 0);
  }
  for (const auto* d : idx.all_dts()) {
    for (const auto& p : d->ports) {
      if (p.direction != Direction::input) continue;
      for (const auto& w : dartwin::detail::direct_writers(idx, p.id)) {
        if (w != d->id && feeds[w].insert(d->id).second) ++indegree[d->id];
        if (w == d->id) throw BindError("dt '" + d->id + "' feeds itself");
      }
    }
  }
  std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
  for (const auto& [id, n] : indegree) {
    if (n == 0) ready.push(id);
  }
  while (!ready.empty()) {
    std::string id = ready.top();
    ready.pop();
    plan.order.push_back(id);
    for (const auto& next : feeds[id]) {
      if (--indegree[next] == 0) ready.push(next);
    }
  }
  if (plan.order.size() != indegree.size()) {
    std::string stuck;
    for (const auto& [id, n] : indegree) {
      if (n > 0) stuck += (stuck.empty() ? "" : ", ") + id;
    }
    throw BindError("cyclic flows between dts: " + stuck);
  }
  return plan;
}

struct Trace {
  double step = 0;
  std::vector<double> time;
  std::map<std::string, std::vector<Value>> channels;

  std::size_t size() const { return time.size(); }

  const std::vector<Value>& channel(const std::string& name) const {
    auto it = channels.find(name);
    if (it == channels.end()) throw std::out_of_range("no trace channel '" + name + "'");
    return it->second;
  }

  std::vector<double> numbers(const std::string& name) const {
    std::vector<double> out;
    for (const auto& v : channel(name)) out.push_back(as_number(v));
    return out;
  }
};

// One explicit Euler step of the lumped room model. `heaters_on` counts heaters running.
inline double plant_step(double temp, double outdoor, int heaters_on, double dt, const PlantParams& p) {
  return temp + dt * (p.heater_power * heaters_on - p.loss_coefficient * (temp - outdoor)) / p.thermal_mass;
}

// Largest drop of the room temperature in one step while it sits at `threshold`.
inline double one_step_overshoot(double threshold, double min_outdoor, double dt, const PlantParams& p) {
  return dt * p.loss_coefficient * (threshold - min_outdoor) / p.thermal_mass;
}

namespace detail {

inline Value coerce(const Value& v, const Port& p) {
  if (is_boolean_unit(p.signal_unit)) return as_bool(v);
  if (p.signal_unit == "kinetic_limits") {
    if (!std::holds_alternative<KineticLimits>(v)) throw ScenarioError("port '" + p.id + "' takes kinetic limits");
    return v;
  }
  return as_number(v);
}

inline bool default_is_day(double t) {
  double hour = std::fmod(t, 86400.0) / 3600.0;
  return hour >= 7 && hour < 19;
}

}  // namespace detail

// Runs the plan. Each sample evaluates every Dt on the current room state; the resulting
// actuator commands drive the plant into the next sample.
inline Trace run(const ExecutablePlan& plan, const Scenario& scenario) {
  check_scenario(scenario);
  ModelIndex idx(plan.model);

  std::map<std::string, std::unique_ptr<Behavior>> live;
  for (const auto& id : plan.order) {
    const std::string& key = *idx.dt(id)->behavior_key;
    const BehaviorSpec* spec = &plan.registry.find(key)->second;
    BehaviorParams params;
    if (auto it = scenario.params.find(key); it != scenario.params.end()) params = it->second;
    for (const auto& [name, _] : params) {
      if (!spec->parameters.count(name)) throw BindError("unknown parameter '" + key + "." + name + "'");
    }
    live[id] = spec->make(*idx.dt(id), params);
  }
  for (const auto& [key, params] : scenario.params) {
    if (!plan.registry.count(key)) throw BindError("parameters given for unknown behavior '" + key + "'");
  }

  // Boundary inputs nobody feeds come from the scenario or, for a room temperature
  // sensor, from the plant.
  struct External {
    const Port* port;
    const Timeline<Value>* timeline;  // null: plant room temperature
  };
  std::vector<External> externals;
  std::vector<const Port*> actuators;
  for (const auto* sys : idx.all_systems()) {
    for (const auto& p : sys->ports) {
      if (p.direction == Direction::input && idx.flows_into(p.id).empty()) {
        const Timeline<Value>* tl = nullptr;
        if (auto it = scenario.inputs.find(p.id); it != scenario.inputs.end()) {
          tl = &it->second;
        } else if (auto it2 = scenario.inputs.find(p.name); it2 != scenario.inputs.end()) {
          tl = &it2->second;
        } else if (!(p.signal_unit == "celsius" && p.role == PortRole::monitoring)) {
          throw ScenarioError("no scenario input for port '" + p.id + "'");
        }
        externals.push_back({&p, tl});
      }
      if (p.direction == Direction::output && p.role == PortRole::control && p.signal_unit == "on_off" &&
          idx.flows_from(p.id).empty()) {
        actuators.push_back(&p);
      }
    }
  }
  const Timeline<Value>* is_day_input = nullptr;
  if (auto it = scenario.inputs.find("is_day"); it != scenario.inputs.end()) is_day_input = &it->second;

  std::map<std::string, Value> signal;  // port id -> value this sample
  // Pushes a value along every flow leaving `pid`, through forwarding boundary ports.
  std::function<void(const std::string&, const Value&)> emit = [&](const std::string& pid, const Value& v) {
    signal[pid] = v;
    for (const auto& sf : idx.flows_from(pid)) {
      const auto* sink = idx.port(sf.flow->to);
      if (!sink) continue;
      if (sink->dt) {
        signal[sink->port->id] = v;
      } else {
        emit(sink->port->id, v);
      }
    }
  };

  Trace trace;
  trace.step = scenario.step;
  const auto samples = static_cast<std::size_t>(std::floor(scenario.duration / scenario.step + 1e-9)) + 1;
  double temp = scenario.plant.initial_temp;
  double energy = 0, on_time = 0;
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = static_cast<double>(k) * scenario.step;
    const double outdoor = scenario.plant.outdoor_temp.at(t);
    StepContext ctx{t, scenario.step, is_day_input ? as_bool(is_day_input->at(t)) : detail::default_is_day(t)};
    signal.clear();
    for (const auto& e : externals) {
      Value v = e.timeline ? detail::coerce(e.timeline->at(t), *e.port) : Value(temp);
      emit(e.port->id, v);
    }
    for (const auto& id : plan.order) {
      const Dt* d = idx.dt(id);
      PortValues in;
      for (const auto& p : d->ports) {
        if (p.direction != Direction::input) continue;
        if (auto it = signal.find(p.id); it != signal.end()) in[p.name] = it->second;
      }
      PortValues out;
      try {
        out = live.at(id)->step(in, ctx);
      } catch (const std::runtime_error& e) {
        throw std::runtime_error("dt '" + id + "' at t=" + dartwin::detail::format_number(t) + ": " + e.what());
      }
      for (const auto& [name, v] : out) {
        const Port* p = d->find_port(name);
        emit(p->id, detail::coerce(v, *p));
      }
    }
    int heaters_on = 0;
    for (const auto* a : actuators) {
      auto it = signal.find(a->id);
      if (it != signal.end() && as_bool(it->second)) ++heaters_on;
    }

    trace.time.push_back(t);
    auto record = [&](const std::string& name, Value v) { trace.channels[name].push_back(std::move(v)); };
    record("room_temp", temp);
    record("outdoor_temp", outdoor);
    record("heater_on", heaters_on > 0);
    record("energy_used", energy);
    record("heater_on_time", on_time);
    record("is_day", ctx.is_day);
    for (const auto& [pid, v] : signal) record(pid, v);

    if (k + 1 < samples) {
      temp = plant_step(temp, outdoor, heaters_on, scenario.step, scenario.plant);
      energy += scenario.plant.heater_power * heaters_on * scenario.step;
      if (heaters_on > 0) on_time += scenario.step;
    }
  }
  return trace;
}

inline std::string trace_csv(const Trace& trace) {
  std::ostringstream os;
  os << "time";
  for (const auto& [name, _] : trace.channels) os << ',' << name;
  os << '\n';
  for (std::size_t k = 0; k < trace.size(); ++k) {
    os << dartwin::detail::format_number(trace.time[k]);
    for (const auto& [_, values] : trace.channels) os << ',' << (k < values.size() ? format_value(values[k]) : "");
    os << '\n';
  }
  return os.str();
}

}  // namespace dartwin::sim
