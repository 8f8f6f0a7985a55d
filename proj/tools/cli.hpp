#pragma once

// Command-line front end. `run` takes the arguments after the program name and writes to
// the given streams, so tests can drive it without a subprocess.
//
// Exit codes: 0 success, 1 diagnostics with errors or violated goals, 2 usage error
// (bad flags, unreadable file, unbindable model or scenario), 3 transformation
// precondition failure.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dartwin/dartwin.hpp"

namespace dartwin::cli {

enum Exit : int { kOk = 0, kErrors = 1, kUsage = 2, kPrecondition = 3 };

namespace detail {

inline std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline bool write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  return static_cast<bool>(out);
}

// Splits "CODE: message" as produced for structural errors during parsing.
inline std::pair<std::string, std::string> split_code(const std::string& message) {
  static const std::regex code(R"(^([A-Z]+(?:-[A-Z]+)*): (.*)$)");
  std::smatch m;
  if (std::regex_match(message, m, code)) return {m[1], m[2]};
  return {"SYNTAX", message};
}

struct Context {
  std::ostream& out;
  std::ostream& err;
  bool records = false;
};

inline void print_parse_diagnostics(Context& cx, const std::vector<ParseDiagnostic>& diags) {
  for (const auto& d : diags) {
    if (cx.records) {
      auto [code, message] = split_code(d.message);
      nlohmann::json j{{"file", d.span.file}, {"line", d.span.line},    {"column", d.span.column},
                       {"severity", to_string(d.severity)}, {"code", code}, {"message", message}};
      cx.out << j.dump() << '\n';
    } else {
      cx.out << format_diagnostic(d) << '\n';
    }
  }
}

inline void print_diagnostic(Context& cx, const std::string& file, const Diagnostic& d) {
  if (cx.records) {
    nlohmann::json j{{"file", file}, {"severity", to_string(d.severity)}, {"code", d.code}, {"message", d.message},
                     {"elements", d.elements}};
    cx.out << j.dump() << '\n';
  } else {
    cx.out << file << ": " << to_string(d.severity) << ": " << d.code << ": " << d.message << '\n';
  }
}

// Loads and parses a model; on failure prints why and sets `code`.
inline std::optional<Model> load_model(Context& cx, const std::string& path, int& code) {
  auto text = read_file(path);
  if (!text) {
    cx.err << "cannot read '" << path << "'\n";
    code = kUsage;
    return std::nullopt;
  }
  auto r = parse_model(*text, path);
  if (!r.ok()) {
    print_parse_diagnostics(cx, r.diagnostics);
    code = kErrors;
    return std::nullopt;
  }
  return std::move(r.value);
}

inline int cmd_validate(Context& cx, const std::vector<std::string>& paths) {
  int code = kOk;
  for (const auto& path : paths) {
    auto text = read_file(path);
    if (!text) {
      cx.err << "cannot read '" << path << "'\n";
      code = kUsage;
      continue;
    }
    auto r = parse_model(*text, path);
    print_parse_diagnostics(cx, r.diagnostics);
    if (!r.ok()) {
      if (code == kOk) code = kErrors;
      continue;
    }
    auto diags = validate(*r.value);
    for (const auto& d : diags) print_diagnostic(cx, path, d);
    if (has_errors(diags) && code == kOk) code = kErrors;
  }
  return code;
}

struct TransformOptions {
  std::string kind;
  std::string input;
  std::string fragment;
  std::string output;
  std::string changes;
  std::map<std::string, std::string> parameters;
};

inline int cmd_transform(Context& cx, const TransformOptions& o) {
  auto kind = parse_transform_kind(o.kind);
  if (!kind) {
    cx.err << "unknown transformation '" << o.kind << "'\n";
    return kUsage;
  }
  TransformRequest req;
  req.kind = *kind;
  for (const auto& [k, v] : o.parameters) {
    if (!v.empty()) req.parameters[k] = v;
  }
  for (const auto& p : required_parameters(*kind)) {
    if (!req.parameters.count(p)) {
      cx.err << o.kind << ": missing --" << std::regex_replace(p, std::regex("_"), "-") << '\n';
      return kUsage;
    }
  }
  if (needs_fragment(*kind)) {
    if (o.fragment.empty()) {
      cx.err << o.kind << ": missing --fragment\n";
      return kUsage;
    }
    auto text = read_file(o.fragment);
    if (!text) {
      cx.err << "cannot read '" << o.fragment << "'\n";
      return kUsage;
    }
    auto f = parse_fragment(*text, o.fragment);
    if (!f.ok()) {
      print_parse_diagnostics(cx, f.diagnostics);
      return kErrors;
    }
    req.fragment = std::move(f.value);
  }
  Model source;
  if (*kind != TransformKind::basic) {
    if (o.input.empty()) {
      cx.err << o.kind << ": missing input model\n";
      return kUsage;
    }
    int code = kOk;
    auto m = load_model(cx, o.input, code);
    if (!m) return code;
    source = std::move(*m);
  }
  TransformResult res;
  try {
    res = apply(source, req);
  } catch (const TransformError& e) {
    cx.err << e.what() << '\n';
    return kPrecondition;
  } catch (const ModelError& e) {
    cx.err << e.what() << '\n';
    return kPrecondition;
  }
  for (const auto& w : res.warnings) cx.err << "warning: " << w.code << ": " << w.message << '\n';
  const std::string model_text = serialize_model(res.model);
  const std::string sidecar = write_changeset(res.changes);
  if (o.output.empty()) {
    cx.out << model_text;
  } else if (!write_file(o.output, model_text) || !write_file(o.output + ".changes", sidecar)) {
    cx.err << "cannot write '" << o.output << "'\n";
    return kUsage;
  }
  if (!o.changes.empty() && !write_file(o.changes, sidecar)) {
    cx.err << "cannot write '" << o.changes << "'\n";
    return kUsage;
  }
  return kOk;
}

inline int cmd_diff(Context& cx, const std::string& a, const std::string& b, const std::string& output) {
  int code = kOk;
  auto ma = load_model(cx, a, code);
  if (!ma) return code;
  auto mb = load_model(cx, b, code);
  if (!mb) return code;
  ChangeSet cs = diff(*ma, *mb);
  if (!output.empty() && !write_file(output, write_changeset(cs))) {
    cx.err << "cannot write '" << output << "'\n";
    return kUsage;
  }
  if (cx.records) {
    for (const auto& [tag, ids] : {std::pair{"added", &cs.added}, {"removed", &cs.removed}, {"modified", &cs.modified}}) {
      for (const auto& id : *ids) cx.out << nlohmann::json{{"change", tag}, {"id", id}}.dump() << '\n';
    }
  } else {
    cx.out << cs.added.size() << " added, " << cs.removed.size() << " removed, " << cs.modified.size() << " modified\n";
    for (const auto& id : cs.added) cx.out << "  + " << id << '\n';
    for (const auto& id : cs.removed) cx.out << "  - " << id << '\n';
    for (const auto& id : cs.modified) cx.out << "  ~ " << id << '\n';
  }
  return kOk;
}

inline int cmd_render(Context& cx, const std::string& path, const std::string& highlight, bool no_goals, bool collapse,
                      const std::string& output) {
  int code = kOk;
  auto m = load_model(cx, path, code);
  if (!m) return code;
  RenderOptions opt;
  opt.show_goal_layer = !no_goals;
  opt.collapse_actual_twins = collapse;
  if (!highlight.empty()) {
    auto text = read_file(highlight);
    if (!text) {
      cx.err << "cannot read '" << highlight << "'\n";
      return kUsage;
    }
    try {
      opt.highlight = read_changeset(*text);
    } catch (const std::runtime_error& e) {
      cx.err << highlight << ": " << e.what() << '\n';
      return kUsage;
    }
  }
  std::string dot = render_dot(*m, opt);
  if (output.empty()) {
    cx.out << dot;
  } else if (!write_file(output, dot)) {
    cx.err << "cannot write '" << output << "'\n";
    return kUsage;
  }
  return kOk;
}

struct SimulateOptions {
  std::string model;
  std::string scenario;
  std::string csv;
  std::vector<std::string> goals;
  std::vector<std::string> bindings;  // poi=channel
};

inline void print_report(Context& cx, const sim::GoalReport& report, const sim::Trace& trace) {
  using dartwin::detail::format_number;
  for (const auto& g : report.goals) {
    if (cx.records) {
      nlohmann::json violations = nlohmann::json::array();
      for (const auto& v : g.violations) violations.push_back({v.start, v.end});
      nlohmann::json summary = nlohmann::json::object();
      for (const auto& [poi, s] : g.summary) summary[poi] = {{"min", s.min}, {"max", s.max}, {"final", s.final}};
      cx.out << nlohmann::json{{"goal", g.goal}, {"satisfied", g.satisfied}, {"violations", violations},
                               {"bindings", g.bindings}, {"summary", summary}}.dump()
             << '\n';
      continue;
    }
    cx.out << "goal " << g.goal << ": " << (g.satisfied ? "satisfied" : "violated");
    if (!g.satisfied) {
      cx.out << " during";
      for (const auto& v : g.violations) cx.out << " [" << format_number(v.start) << ", " << format_number(v.end) << "]";
    }
    cx.out << '\n';
    for (const auto& [poi, s] : g.summary) {
      cx.out << "  " << poi << " <- " << g.bindings.at(poi) << ": min " << format_number(s.min) << ", max "
             << format_number(s.max) << ", final " << format_number(s.final) << '\n';
    }
  }
  if (!cx.records && trace.size() > 0) {
    auto room = trace.numbers("room_temp");
    cx.out << "room_temp min " << format_number(*std::min_element(room.begin(), room.end())) << ", energy_used "
           << format_number(trace.numbers("energy_used").back()) << " J\n";
  }
}

inline int cmd_simulate(Context& cx, const SimulateOptions& o) {
  int code = kOk;
  auto m = load_model(cx, o.model, code);
  if (!m) return code;
  auto text = read_file(o.scenario);
  if (!text) {
    cx.err << "cannot read '" << o.scenario << "'\n";
    return kUsage;
  }
  try {
    sim::Scenario scenario = sim::parse_scenario(*text);
    for (const auto& b : o.bindings) {
      auto eq = b.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == b.size()) {
        cx.err << "--bind expects poi=channel, got '" << b << "'\n";
        return kUsage;
      }
      scenario.bindings[b.substr(0, eq)] = b.substr(eq + 1);
    }
    std::set<std::string> only(o.goals.begin(), o.goals.end());
    for (const auto& g : only) {
      if (!ModelIndex(*m).goal(g)) {
        cx.err << "unknown goal '" << g << "'\n";
        return kUsage;
      }
    }
    auto plan = sim::bind_behaviors(*m, sim::builtin_registry());
    auto trace = sim::run(plan, scenario);
    if (!o.csv.empty() && !write_file(o.csv, sim::trace_csv(trace))) {
      cx.err << "cannot write '" << o.csv << "'\n";
      return kUsage;
    }
    auto report = sim::evaluate_goals(*m, trace, scenario.bindings, only);
    print_report(cx, report, trace);
    return report.all_satisfied() ? kOk : kErrors;
  } catch (const sim::ScenarioError& e) {
    cx.err << o.scenario << ": " << e.what() << '\n';
  } catch (const sim::BindError& e) {
    cx.err << o.model << ": " << e.what() << '\n';
  } catch (const sim::UnboundPoiError& e) {
    cx.err << e.what() << '\n';
  } catch (const std::runtime_error& e) {
    cx.err << "simulation failed: " << e.what() << '\n';
  }
  return kUsage;
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Model, transform, render and simulate digital twin architectures", "dartwin"};
  app.require_subcommand(1);
  std::string format = "text";
  app.add_option("--format", format, "Report format")->check(CLI::IsMember({"text", "records"}));

  std::vector<std::string> validate_paths;
  auto* validate_cmd = app.add_subcommand("validate", "Parse and check models");
  validate_cmd->add_option("models", validate_paths, "Model files")->required();

  detail::TransformOptions topt;
  auto* transform_cmd = app.add_subcommand("transform", "Apply an architectural transformation");
  transform_cmd->add_option("--kind", topt.kind, "basic, hierarchical, augmented, orthogonal, new_output, chaining, arbitration or flatten")
      ->required();
  transform_cmd->add_option("input", topt.input, "Source model (not used by basic)");
  transform_cmd->add_option("--fragment", topt.fragment, "Fragment with the new elements");
  transform_cmd->add_option("-o,--output", topt.output, "Result model; the change set goes to <output>.changes");
  transform_cmd->add_option("--changes", topt.changes, "Also write the change set here");
  for (const char* name : {"system", "dt", "port", "unit", "role", "upstream", "downstream", "signal", "writer_a",
                           "writer_b", "target", "rule", "arbiter"}) {
    std::string flag = std::string("--") + name;
    for (auto& c : flag) c = c == '_' ? '-' : c;
    transform_cmd->add_option(flag, topt.parameters[name]);
  }

  std::string diff_a, diff_b, diff_out;
  auto* diff_cmd = app.add_subcommand("diff", "Element-level changes between two models");
  diff_cmd->add_option("source", diff_a)->required();
  diff_cmd->add_option("result", diff_b)->required();
  diff_cmd->add_option("-o,--output", diff_out, "Write the change set file here");

  std::string render_in, render_highlight, render_out;
  bool no_goals = false, collapse = false;
  auto* render_cmd = app.add_subcommand("render", "Emit a Graphviz description of a model");
  render_cmd->add_option("model", render_in)->required();
  render_cmd->add_option("--highlight", render_highlight, "Change set file whose added and modified elements are highlighted");
  render_cmd->add_flag("--no-goal-layer", no_goals);
  render_cmd->add_flag("--collapse-actual-twins", collapse);
  render_cmd->add_option("-o,--output", render_out);

  detail::SimulateOptions sopt;
  auto* simulate_cmd = app.add_subcommand("simulate", "Run a model against a scenario and check its goals");
  simulate_cmd->add_option("model", sopt.model)->required();
  simulate_cmd->add_option("scenario", sopt.scenario)->required();
  simulate_cmd->add_option("--csv", sopt.csv, "Write the trace as CSV");
  simulate_cmd->add_option("--goal", sopt.goals, "Only evaluate these goals");
  simulate_cmd->add_option("--bind", sopt.bindings, "Bind a PoI to a trace channel (poi=channel)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  detail::Context cx{out, err, format == "records"};
  if (*validate_cmd) return detail::cmd_validate(cx, validate_paths);
  if (*transform_cmd) return detail::cmd_transform(cx, topt);
  if (*diff_cmd) return detail::cmd_diff(cx, diff_a, diff_b, diff_out);
  if (*render_cmd) return detail::cmd_render(cx, render_in, render_highlight, no_goals, collapse, render_out);
  if (*simulate_cmd) return detail::cmd_simulate(cx, sopt);
  return kUsage;
}

}  // namespace dartwin::cli
