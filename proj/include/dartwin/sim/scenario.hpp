#pragma once

// Scenario files, one directive per line:
//
//   duration 86400
//   step 60
//   input comfort_temp: 0=21
//   input presence: 0=true, 28800=false, 72000=true
//   plant outdoor_temp: 0=-10
//   plant heater_power 2500
//   param freeze_protection.threshold 8.5
//   bind room_temp room_temp
//
// Timelines are piecewise constant and must start at t=0.

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "behaviors.hpp"
#include "value.hpp"

namespace dartwin::sim {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class T>
struct Timeline {
  std::vector<std::pair<double, T>> points;  // strictly increasing times

  static Timeline constant(T v) { return Timeline{{{0.0, std::move(v)}}}; }

  const T& at(double t) const {
    if (points.empty()) throw ScenarioError("empty timeline");
    auto it = std::upper_bound(points.begin(), points.end(), t, [](double x, const auto& p) { return x < p.first; });
    return it == points.begin() ? points.front().second : std::prev(it)->second;
  }

  T min_value() const {
    T out = points.front().second;
    for (const auto& [_, v] : points) out = std::min(out, v);
    return out;
  }
};

struct PlantParams {
  Timeline<double> outdoor_temp = Timeline<double>::constant(10.0);
  double thermal_mass = 1.5e6;     // J/K
  double loss_coefficient = 100;   // W/K
  double heater_power = 2500;      // W per heater that is on
  double initial_temp = 20;        // celsius
};

struct Scenario {
  double duration = 0;
  double step = 60;
  std::map<std::string, Timeline<Value>> inputs;  // port name or port id -> values
  PlantParams plant;
  std::map<std::string, BehaviorParams> params;   // behavior key -> name -> value
  std::map<std::string, std::string> bindings;    // poi name -> trace channel
};

template <class T>
void check_timeline(const Timeline<T>& tl, const std::string& what) {
  if (tl.points.empty() || tl.points.front().first != 0) throw ScenarioError(what + ": timeline must start at t=0");
  for (std::size_t i = 1; i < tl.points.size(); ++i) {
    if (!(tl.points[i].first > tl.points[i - 1].first)) throw ScenarioError(what + ": timeline times must increase");
  }
}

inline void check_scenario(const Scenario& s) {
  if (!(s.step > 0)) throw ScenarioError("step must be positive");
  if (!(s.duration >= 0)) throw ScenarioError("duration must not be negative");
  for (const auto& [name, tl] : s.inputs) check_timeline(tl, "input " + name);
  check_timeline(s.plant.outdoor_temp, "outdoor_temp");
  if (!(s.plant.thermal_mass > 0)) throw ScenarioError("thermal_mass must be positive");
  if (!(s.plant.loss_coefficient >= 0)) throw ScenarioError("loss_coefficient must not be negative");
  if (!(s.plant.heater_power >= 0)) throw ScenarioError("heater_power must not be negative");
}

namespace detail {

inline std::string trim(std::string s) {
  s.erase(0, s.find_first_not_of(" \t"));
  s.erase(s.find_last_not_of(" \t") + 1);
  return s;
}

inline Value parse_signal(const std::string& text, const std::string& what) {
  if (text == "true" || text == "on") return true;
  if (text == "false" || text == "off") return false;
  try {
    return parse_double(text, what);
  } catch (const BindError& e) {
    throw ScenarioError(e.what());
  }
}

template <class T, class Conv>
Timeline<T> parse_timeline(const std::string& text, const std::string& what, Conv conv) {
  Timeline<T> tl;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    auto eq = item.find('=');
    if (eq == std::string::npos) throw ScenarioError(what + ": expected time=value, got '" + item + "'");
    double t = 0;
    try {
      t = parse_double(trim(item.substr(0, eq)), what);
    } catch (const BindError& e) {
      throw ScenarioError(e.what());
    }
    tl.points.emplace_back(t, conv(trim(item.substr(eq + 1))));
  }
  return tl;
}

inline double parse_number(const std::string& text, const std::string& what) {
  try {
    return parse_double(text, what);
  } catch (const BindError& e) {
    throw ScenarioError(e.what());
  }
}

}  // namespace detail

inline Scenario parse_scenario(const std::string& text) {
  Scenario s;
  bool have_duration = false;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    if (auto c = raw.find("//"); c != std::string::npos) raw.erase(c);
    std::string line = detail::trim(raw);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno);
    auto sp = line.find_first_of(" \t");
    std::string key = line.substr(0, sp);
    std::string rest = sp == std::string::npos ? "" : detail::trim(line.substr(sp));
    auto split_colon = [&](std::string& name, std::string& body) {
      auto colon = rest.find(':');
      if (colon == std::string::npos) throw ScenarioError(where + ": expected 'NAME: timeline'");
      name = detail::trim(rest.substr(0, colon));
      body = detail::trim(rest.substr(colon + 1));
    };
    auto split_word = [&](std::string& first, std::string& second) {
      auto p = rest.find_first_of(" \t");
      if (p == std::string::npos) throw ScenarioError(where + ": expected two fields after '" + key + "'");
      first = rest.substr(0, p);
      second = detail::trim(rest.substr(p));
    };
    if (key == "duration") {
      s.duration = detail::parse_number(rest, where);
      have_duration = true;
    } else if (key == "step") {
      s.step = detail::parse_number(rest, where);
    } else if (key == "input") {
      std::string name, body;
      split_colon(name, body);
      s.inputs[name] = detail::parse_timeline<Value>(body, where, [&](const std::string& v) { return detail::parse_signal(v, where); });
    } else if (key == "plant") {
      if (rest.rfind("outdoor_temp", 0) == 0 && rest.find(':') != std::string::npos) {
        std::string name, body;
        split_colon(name, body);
        s.plant.outdoor_temp = detail::parse_timeline<double>(body, where, [&](const std::string& v) { return detail::parse_number(v, where); });
      } else {
        std::string name, value;
        split_word(name, value);
        double v = detail::parse_number(value, where);
        if (name == "thermal_mass") {
          s.plant.thermal_mass = v;
        } else if (name == "loss_coefficient") {
          s.plant.loss_coefficient = v;
        } else if (name == "heater_power") {
          s.plant.heater_power = v;
        } else if (name == "initial_temp") {
          s.plant.initial_temp = v;
        } else if (name == "outdoor_temp") {
          s.plant.outdoor_temp = Timeline<double>::constant(v);
        } else {
          throw ScenarioError(where + ": unknown plant parameter '" + name + "'");
        }
      }
    } else if (key == "param") {
      std::string name, value;
      split_word(name, value);
      auto dot = name.find('.');
      if (dot == std::string::npos) throw ScenarioError(where + ": parameter must be written behavior.name");
      s.params[name.substr(0, dot)][name.substr(dot + 1)] = value;
    } else if (key == "bind") {
      std::string poi, channel;
      split_word(poi, channel);
      s.bindings[poi] = channel;
    } else {
      throw ScenarioError(where + ": unknown directive '" + key + "'");
    }
  }
  if (!have_duration) throw ScenarioError("missing 'duration'");
  check_scenario(s);
  return s;
}

}  // namespace dartwin::sim
