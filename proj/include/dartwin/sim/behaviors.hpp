#pragma once

// Built-in Dt behaviors. Each has a pure rule function (used directly by tests) and a
// Behavior wrapper that maps a Dt's ports onto the rule by direction, unit and role.

#include <algorithm>
#include <charconv>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "../model.hpp"
#include "value.hpp"

namespace dartwin::sim {

class BindError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- rules ----------------------------------------------------------------------------

// Hysteresis: on below comfort - d, off above comfort + d, otherwise hold.
inline bool thermostat_command(double room, double comfort, double d, bool previous) {
  if (room < comfort - d) return true;
  if (room > comfort + d) return false;
  return previous;
}

inline double energy_saving_setpoint(double user, bool present, bool is_day, double absent_day_delta,
                                     double absent_night_delta) {
  if (present) return user;
  return user + (is_day ? absent_day_delta : absent_night_delta);
}

inline bool freeze_command(double room, bool upstream, double threshold) { return room <= threshold || upstream; }

// Heater duty limiter: forwards the upstream command but never lets an on-run exceed
// max_on seconds, and holds the heater off for cooloff seconds after a cut.
class FireTimer {
 public:
  FireTimer(double max_on, double cooloff) : max_on_(max_on), cooloff_(cooloff) {
    if (!(max_on > 0) || !(cooloff > 0)) throw BindError("fire_protection: max_on and cooloff must be positive");
  }

  bool step(bool upstream, double dt) {
    if (cool_left_ > 1e-9) {
      cool_left_ -= dt;
      on_time_ = 0;
      return false;
    }
    if (!upstream) {
      on_time_ = 0;
      return false;
    }
    if (on_time_ + dt > max_on_ + 1e-9) {
      cool_left_ = cooloff_ - dt;
      on_time_ = 0;
      return false;
    }
    on_time_ += dt;
    return true;
  }

  double on_time() const { return on_time_; }

 private:
  double max_on_, cooloff_;
  double on_time_ = 0;
  double cool_left_ = 0;
};

struct CostTable {
  std::vector<std::pair<double, double>> rows;  // (price threshold, delta), thresholds increasing

  // Delta of the highest threshold <= price; 0 below the first one.
  double delta(double price) const {
    double d = 0;
    for (const auto& [threshold, delta] : rows) {
      if (threshold <= price) d = delta;
    }
    return d;
  }
};

inline CostTable make_cost_table(std::vector<std::pair<double, double>> rows) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].second > 0) throw BindError("cost_saving: table deltas must be <= 0");
    if (i > 0 && !(rows[i].first > rows[i - 1].first)) throw BindError("cost_saving: table thresholds must increase");
    if (i > 0 && rows[i].second > rows[i - 1].second) throw BindError("cost_saving: table deltas must not increase");
  }
  return CostTable{std::move(rows)};
}

inline double cost_saving_setpoint(double user, double price, const CostTable& table) { return user + table.delta(price); }

inline double arbiter_min(double a, double b) { return std::min(a, b); }

inline KineticLimits arbiter_strictest(const KineticLimits& a, const KineticLimits& b) {
  return {std::min(a.max_velocity, b.max_velocity), std::min(a.max_acceleration, b.max_acceleration)};
}

// ---- behavior objects -----------------------------------------------------------------

struct StepContext {
  double time = 0;
  double step = 0;
  bool is_day = true;
};

using PortValues = std::map<std::string, Value>;  // local port name -> value
using BehaviorParams = std::map<std::string, std::string>;

class Behavior {
 public:
  virtual ~Behavior() = default;
  // Input ports that must be fed by a flow.
  virtual std::vector<std::string> required_inputs() const = 0;
  virtual PortValues step(const PortValues& inputs, const StepContext& ctx) = 0;
};

struct BehaviorSpec {
  std::set<std::string> parameters;
  std::function<std::unique_ptr<Behavior>(const Dt&, const BehaviorParams&)> make;
};

using Registry = std::map<std::string, BehaviorSpec, std::less<>>;

namespace detail {

inline double parse_double(const std::string& text, const std::string& what) {
  double v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw BindError(what + ": '" + text + "' is not a number");
  }
  return v;
}

inline bool parse_flag(const std::string& text, const std::string& what) {
  if (text == "on" || text == "true" || text == "1") return true;
  if (text == "off" || text == "false" || text == "0") return false;
  throw BindError(what + ": '" + text + "' is not on/off");
}

inline double number_param(const BehaviorParams& p, const std::string& key, const std::string& name, double fallback) {
  auto it = p.find(name);
  return it == p.end() ? fallback : parse_double(it->second, key + "." + name);
}

// "1.0:-1, 2.0:-3"
inline CostTable parse_cost_table(const std::string& text) {
  std::vector<std::pair<double, double>> rows;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto comma = text.find(',', pos);
    std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    item.erase(0, item.find_first_not_of(' '));
    item.erase(item.find_last_not_of(' ') + 1);
    auto colon = item.find(':');
    if (colon == std::string::npos) throw BindError("cost_saving.table: expected price:delta, got '" + item + "'");
    rows.emplace_back(parse_double(item.substr(0, colon), "cost_saving.table"),
                      parse_double(item.substr(colon + 1), "cost_saving.table"));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return make_cost_table(std::move(rows));
}

// Local names of the Dt's ports matching a predicate, in name order.
template <class Pred>
std::vector<std::string> ports_where(const Dt& d, Pred pred) {
  std::vector<std::string> out;
  for (const auto& p : d.ports) {
    if (pred(p)) out.push_back(p.name);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::string one_port(const Dt& d, const std::string& key, std::vector<std::string> found, const std::string& what) {
  if (found.empty()) throw BindError("dt '" + d.id + "' (" + key + ") needs " + what);
  return found.front();
}

inline bool is_in(const Port& p) { return p.direction == Direction::input; }
inline bool is_out(const Port& p) { return p.direction == Direction::output; }

inline std::vector<std::string> outputs_of(const Dt& d, const std::string& key, const std::string& unit) {
  auto outs = ports_where(d, [&](const Port& p) { return is_out(p) && p.signal_unit == unit; });
  if (outs.empty()) throw BindError("dt '" + d.id + "' (" + key + ") needs an output of unit " + unit);
  return outs;
}

inline PortValues broadcast(const std::vector<std::string>& outs, const Value& v) {
  PortValues out;
  for (const auto& o : outs) out[o] = v;
  return out;
}

inline const Value& need(const PortValues& in, const std::string& port) {
  auto it = in.find(port);
  if (it == in.end()) throw std::runtime_error("input '" + port + "' has no value");
  return it->second;
}

class Thermostat : public Behavior {
 public:
  Thermostat(const Dt& d, const BehaviorParams& p) {
    room_ = one_port(d, "thermostat", ports_where(d, [](const Port& q) {
      return is_in(q) && q.signal_unit == "celsius" && q.role == PortRole::monitoring;
    }), "a monitoring celsius input");
    comfort_ = one_port(d, "thermostat", ports_where(d, [](const Port& q) {
      return is_in(q) && q.signal_unit == "celsius" && q.role == PortRole::user;
    }), "a user celsius input");
    outs_ = outputs_of(d, "thermostat", "on_off");
    deviation_ = number_param(p, "thermostat", "deviation", 0.5);
    if (!(deviation_ > 0)) throw BindError("thermostat.deviation must be positive");
    if (auto it = p.find("initial"); it != p.end()) command_ = parse_flag(it->second, "thermostat.initial");
  }
  std::vector<std::string> required_inputs() const override { return {comfort_, room_}; }
  PortValues step(const PortValues& in, const StepContext&) override {
    command_ = thermostat_command(as_number(need(in, room_)), as_number(need(in, comfort_)), deviation_, command_);
    return broadcast(outs_, command_);
  }

 private:
  std::string room_, comfort_;
  std::vector<std::string> outs_;
  double deviation_;
  bool command_ = false;
};

class EnergySaving : public Behavior {
 public:
  EnergySaving(const Dt& d, const BehaviorParams& p) {
    presence_ = one_port(d, "energy_saving", ports_where(d, [](const Port& q) { return is_in(q) && q.signal_unit == "boolean"; }),
                         "a boolean presence input");
    user_ = one_port(d, "energy_saving", ports_where(d, [](const Port& q) { return is_in(q) && q.signal_unit == "celsius"; }),
                     "a celsius input");
    outs_ = outputs_of(d, "energy_saving", "celsius");
    day_ = number_param(p, "energy_saving", "absent_day_delta", -2);
    night_ = number_param(p, "energy_saving", "absent_night_delta", -4);
    if (!(night_ <= day_ && day_ <= 0)) throw BindError("energy_saving: need absent_night_delta <= absent_day_delta <= 0");
  }
  std::vector<std::string> required_inputs() const override { return {presence_, user_}; }
  PortValues step(const PortValues& in, const StepContext& ctx) override {
    double v = energy_saving_setpoint(as_number(need(in, user_)), as_bool(need(in, presence_)), ctx.is_day, day_, night_);
    return broadcast(outs_, v);
  }

 private:
  std::string presence_, user_;
  std::vector<std::string> outs_;
  double day_, night_;
};

class FreezeProtection : public Behavior {
 public:
  FreezeProtection(const Dt& d, const BehaviorParams& p) {
    room_ = one_port(d, "freeze_protection", ports_where(d, [](const Port& q) { return is_in(q) && q.signal_unit == "celsius"; }),
                     "a celsius input");
    auto up = ports_where(d, [](const Port& q) { return is_in(q) && q.signal_unit == "on_off"; });
    if (!up.empty()) upstream_ = up.front();
    outs_ = outputs_of(d, "freeze_protection", "on_off");
    threshold_ = number_param(p, "freeze_protection", "threshold", 8);
  }
  std::vector<std::string> required_inputs() const override { return {room_}; }
  PortValues step(const PortValues& in, const StepContext&) override {
    bool upstream = false;
    if (auto it = in.find(upstream_); !upstream_.empty() && it != in.end()) upstream = as_bool(it->second);
    return broadcast(outs_, freeze_command(as_number(need(in, room_)), upstream, threshold_));
  }

 private:
  std::string room_, upstream_;
  std::vector<std::string> outs_;
  double threshold_;
};

class FireProtection : public Behavior {
 public:
  FireProtection(const Dt& d, const BehaviorParams& p)
      : timer_(number_param(p, "fire_protection", "max_on", 3600), number_param(p, "fire_protection", "cooloff", 600)) {
    upstream_ = one_port(d, "fire_protection", ports_where(d, [](const Port& q) { return is_in(q) && q.signal_unit == "on_off"; }),
                         "an on_off input");
    outs_ = outputs_of(d, "fire_protection", "on_off");
  }
  std::vector<std::string> required_inputs() const override { return {upstream_}; }
  PortValues step(const PortValues& in, const StepContext& ctx) override {
    return broadcast(outs_, timer_.step(as_bool(need(in, upstream_)), ctx.step));
  }

 private:
  FireTimer timer_;
  std::string upstream_;
  std::vector<std::string> outs_;
};

class CostSaving : public Behavior {
 public:
  CostSaving(const Dt& d, const BehaviorParams& p) {
    price_ = one_port(d, "cost_saving", ports_where(d, [](const Port& q) { return is_in(q) && q.signal_unit == "currency_per_kwh"; }),
                      "a currency_per_kwh input");
    user_ = one_port(d, "cost_saving", ports_where(d, [](const Port& q) { return is_in(q) && q.signal_unit == "celsius"; }),
                     "a celsius input");
    outs_ = outputs_of(d, "cost_saving", "celsius");
    auto it = p.find("table");
    table_ = it == p.end() ? make_cost_table({{1.0, -1.0}, {2.0, -3.0}}) : parse_cost_table(it->second);
  }
  std::vector<std::string> required_inputs() const override { return {price_, user_}; }
  PortValues step(const PortValues& in, const StepContext&) override {
    return broadcast(outs_, cost_saving_setpoint(as_number(need(in, user_)), as_number(need(in, price_)), table_));
  }

 private:
  std::string price_, user_;
  std::vector<std::string> outs_;
  CostTable table_;
};

// Folds every fed input with `combine`; inputs and outputs share one unit.
template <class T, class Combine>
class Fold : public Behavior {
 public:
  Fold(const Dt& d, const std::string& key, Combine combine) : combine_(combine) {
    ins_ = ports_where(d, is_in);
    if (ins_.empty()) throw BindError("dt '" + d.id + "' (" + key + ") needs inputs");
    std::set<std::string> units;
    for (const auto& p : d.ports) units.insert(p.signal_unit);
    if (units.size() != 1) throw BindError("dt '" + d.id + "' (" + key + ") needs one unit on all ports");
    if constexpr (std::is_same_v<T, KineticLimits>) {
      if (*units.begin() != "kinetic_limits") throw BindError("dt '" + d.id + "' (" + key + ") combines kinetic_limits only");
    } else if (*units.begin() == "kinetic_limits" || is_boolean_unit(*units.begin())) {
      throw BindError("dt '" + d.id + "' (" + key + ") combines numeric signals only");
    }
    outs_ = ports_where(d, is_out);
  }
  std::vector<std::string> required_inputs() const override { return ins_; }
  PortValues step(const PortValues& in, const StepContext&) override {
    std::optional<T> acc;
    for (const auto& name : ins_) {
      T v = std::get<T>(need(in, name));
      acc = acc ? combine_(*acc, v) : v;
    }
    return broadcast(outs_, *acc);
  }

 private:
  Combine combine_;
  std::vector<std::string> ins_, outs_;
};

template <class T, class Combine>
std::unique_ptr<Behavior> make_fold(const Dt& d, const std::string& key, Combine c) {
  return std::make_unique<Fold<T, Combine>>(d, key, c);
}

}  // namespace detail

inline Registry builtin_registry() {
  using namespace detail;
  Registry r;
  r["thermostat"] = {{"deviation", "initial"}, [](const Dt& d, const BehaviorParams& p) { return std::make_unique<Thermostat>(d, p); }};
  r["energy_saving"] = {{"absent_day_delta", "absent_night_delta"},
                        [](const Dt& d, const BehaviorParams& p) { return std::make_unique<EnergySaving>(d, p); }};
  r["freeze_protection"] = {{"threshold"}, [](const Dt& d, const BehaviorParams& p) { return std::make_unique<FreezeProtection>(d, p); }};
  r["fire_protection"] = {{"max_on", "cooloff"},
                          [](const Dt& d, const BehaviorParams& p) { return std::make_unique<FireProtection>(d, p); }};
  r["cost_saving"] = {{"table"}, [](const Dt& d, const BehaviorParams& p) { return std::make_unique<CostSaving>(d, p); }};
  r["min"] = {{}, [](const Dt& d, const BehaviorParams&) {
                return make_fold<double>(d, "min", [](double a, double b) { return arbiter_min(a, b); });
              }};
  r["strictest"] = {{}, [](const Dt& d, const BehaviorParams&) {
                      return make_fold<KineticLimits>(d, "strictest", [](const KineticLimits& a, const KineticLimits& b) {
                        return arbiter_strictest(a, b);
                      });
                    }};
  return r;
}

}  // namespace dartwin::sim
