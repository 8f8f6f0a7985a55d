#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>

#include "../constraint.hpp"

namespace dartwin::sim {

struct KineticLimits {
  double max_velocity = 0;
  double max_acceleration = 0;

  friend bool operator==(const KineticLimits&, const KineticLimits&) = default;
};

// on_off and boolean signals are bools; every other scalar unit is a double.
using Value = std::variant<bool, double, KineticLimits>;

inline double as_number(const Value& v) {
  if (const bool* b = std::get_if<bool>(&v)) return *b ? 1.0 : 0.0;
  if (const double* d = std::get_if<double>(&v)) return *d;
  throw std::runtime_error("kinetic limit record used as a number");
}

inline bool as_bool(const Value& v) {
  if (const bool* b = std::get_if<bool>(&v)) return *b;
  if (const double* d = std::get_if<double>(&v)) return *d != 0.0;
  throw std::runtime_error("kinetic limit record used as a boolean");
}

inline bool is_boolean_unit(std::string_view unit) { return unit == "on_off" || unit == "boolean"; }

inline std::string format_value(const Value& v) {
  if (const bool* b = std::get_if<bool>(&v)) return *b ? "1" : "0";
  if (const double* d = std::get_if<double>(&v)) return detail::format_number(*d);
  const auto& k = std::get<KineticLimits>(v);
  return detail::format_number(k.max_velocity) + "/" + detail::format_number(k.max_acceleration);
}

}  // namespace dartwin::sim
