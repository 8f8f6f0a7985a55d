#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dartwin/dartwin.hpp"

namespace dartwin::testing {

inline std::string source_path(const std::string& rel) { return std::string(DARTWIN_SOURCE_DIR) + "/" + rel; }

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Model parse_or_throw(const std::string& text, const std::string& name = "<test>") {
  auto r = parse_model(text, name);
  if (!r.ok()) {
    std::string msg;
    for (const auto& d : r.diagnostics) msg += format_diagnostic(d) + "\n";
    throw std::runtime_error(msg);
  }
  return *r.value;
}

inline Model corpus(const std::string& name) {
  auto path = source_path("corpus/" + name + ".dartwin");
  return parse_or_throw(slurp(path), path);
}

inline Model fixture(const std::string& name) {
  auto path = source_path("tests/fixtures/" + name + ".dartwin");
  return parse_or_throw(slurp(path), path);
}

inline Fragment fragment(const std::string& name) {
  auto path = source_path("corpus/fragments/" + name + ".fragment");
  auto r = parse_fragment(slurp(path), path);
  if (!r.ok()) throw std::runtime_error("bad fragment " + path);
  return *r.value;
}

inline Fragment fragment_text(const std::string& text) {
  auto r = parse_fragment(text);
  if (!r.ok()) {
    std::string msg;
    for (const auto& d : r.diagnostics) msg += format_diagnostic(d) + "\n";
    throw std::runtime_error(msg);
  }
  return *r.value;
}

inline sim::Scenario scenario(const std::string& name) {
  return sim::parse_scenario(slurp(source_path("corpus/scenarios/" + name + ".scenario")));
}

inline const std::vector<std::string>& corpus_names() {
  static const std::vector<std::string> names = {
      "thermal_comfort",   "green_comfort",     "flat_green_comfort", "orthogonal_freeze",
      "additional_heater", "chained_freeze",    "compromise_saving",  "gantry_initial",
      "gantry_evolution1", "gantry_evolution2", "gantry_evolution3"};
  return names;
}

}  // namespace dartwin::testing
