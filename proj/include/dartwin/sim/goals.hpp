#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "../constraint.hpp"
#include "../invariants.hpp"
#include "../model.hpp"
#include "engine.hpp"

namespace dartwin::sim {

inline constexpr double kEqualityTolerance = 1e-9;

class UnboundPoiError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Interval {
  double start = 0;
  double end = 0;

  friend bool operator==(const Interval&, const Interval&) = default;
};

struct ChannelSummary {
  double min = 0;
  double max = 0;
  double final = 0;
};

struct GoalVerdict {
  std::string goal;
  bool satisfied = true;
  std::vector<Interval> violations;
  std::map<std::string, std::string> bindings;  // poi name -> channel
  std::map<std::string, ChannelSummary> summary;  // per bound poi
};

struct GoalReport {
  std::vector<GoalVerdict> goals;

  bool all_satisfied() const {
    return std::all_of(goals.begin(), goals.end(), [](const auto& g) { return g.satisfied; });
  }

  const GoalVerdict* find(const std::string& id) const {
    for (const auto& g : goals) {
      if (g.goal == id) return &g;
    }
    return nullptr;
  }
};

// Channel for a PoI when no explicit binding names one: a trace channel of the same name,
// then a same-named port on a Dt that satisfies the goal (outputs first), then the only
// port anywhere with that name.
inline std::optional<std::string> default_binding(const Model& m, const Goal& g, const std::string& poi, const Trace& trace) {
  if (trace.channels.count(poi)) return poi;
  ModelIndex idx(m);
  std::vector<std::string> outs, ins;
  for (const auto& l : m.dt_goal_links) {
    if (l.goal != g.id) continue;
    const Dt* d = idx.dt(l.dt);
    if (!d) continue;
    if (const Port* p = d->find_port(poi)) (p->direction == Direction::output ? outs : ins).push_back(p->id);
  }
  std::sort(outs.begin(), outs.end());
  std::sort(ins.begin(), ins.end());
  for (const auto* list : {&outs, &ins}) {
    for (const auto& id : *list) {
      if (trace.channels.count(id)) return id;
    }
  }
  std::vector<std::string> any;
  for (const auto& [name, _] : trace.channels) {
    auto dot = name.rfind('.');
    if (dot != std::string::npos && name.substr(dot + 1) == poi) any.push_back(name);
  }
  if (any.size() == 1) return any.front();
  return std::nullopt;
}

// `bindings` maps a PoI name, or `Goal.poi` for one goal only, to a trace channel.
inline GoalReport evaluate_goals(const Model& m, const Trace& trace, const std::map<std::string, std::string>& bindings = {},
                                 const std::set<std::string>& only = {}) {
  GoalReport report;
  for (const auto& g : canonicalize(m).goals) {
    if (!only.empty() && !only.count(g.id)) continue;
    GoalVerdict v;
    v.goal = g.id;
    if (!g.constraint || trace.size() == 0) {
      report.goals.push_back(std::move(v));
      continue;
    }
    std::vector<std::string> names;
    collect_pois(*g.constraint->body, names);
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    std::map<std::string, std::vector<double>> series;
    for (const auto& n : names) {
      std::optional<std::string> ch;
      if (auto it = bindings.find(g.id + "." + n); it != bindings.end()) {
        ch = it->second;
      } else if (auto it2 = bindings.find(n); it2 != bindings.end()) {
        ch = it2->second;
      } else {
        ch = default_binding(m, g, n, trace);
      }
      if (!ch) throw UnboundPoiError("goal '" + g.id + "': poi '" + n + "' is not bound to a trace channel");
      if (!trace.channels.count(*ch)) throw UnboundPoiError("goal '" + g.id + "': no trace channel '" + *ch + "'");
      v.bindings[n] = *ch;
      series[n] = trace.numbers(*ch);
      const auto& s = series[n];
      v.summary[n] = {*std::min_element(s.begin(), s.end()), *std::max_element(s.begin(), s.end()), s.back()};
    }
    auto holds = [&](std::size_t k) {
      return eval_bool(*g.constraint->body, [&](const std::string& n) { return series.at(n)[k]; }, kEqualityTolerance);
    };
    if (g.constraint->op == TemporalOp::at_end) {
      std::size_t last = trace.size() - 1;
      if (!holds(last)) v.violations.push_back({trace.time[last], trace.time[last]});
    } else {
      std::optional<std::size_t> open;
      for (std::size_t k = 0; k < trace.size(); ++k) {
        bool ok = holds(k);
        if (!ok && !open) open = k;
        if (ok && open) {
          v.violations.push_back({trace.time[*open], trace.time[k - 1]});
          open.reset();
        }
      }
      if (open) v.violations.push_back({trace.time[*open], trace.time.back()});
    }
    v.satisfied = v.violations.empty();
    report.goals.push_back(std::move(v));
  }
  return report;
}

}  // namespace dartwin::sim
