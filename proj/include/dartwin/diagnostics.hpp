#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dartwin {

struct SourceSpan {
  std::string file;
  int line = 1;    // 1-based
  int column = 1;  // 1-based, in characters
  int length = 1;  // characters

  friend bool operator==(const SourceSpan&, const SourceSpan&) = default;
};

enum class Severity { error, warning, info };

inline std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::error: return "error";
    case Severity::warning: return "warning";
    case Severity::info: return "info";
  }
  return "";
}

struct ParseDiagnostic {
  Severity severity = Severity::error;
  std::string message;
  SourceSpan span;
};

// Stable diagnostic codes. Errors first, then warnings, then infos.
//   DUP-ID           two elements share an identifier
//   DANGLING-REF     a relation, link or flow names a missing element
//   SELF-EDGE        a goal relation whose source and target coincide
//   GEN-CYCLE        generalization relations form a cycle
//   POI-NONE         a goal without properties of interest
//   POI-UNIT         a PoI unit outside the registered unit set
//   PORT-UNIT        a port unit outside the registered unit set
//   CONSTRAINT-TYPE  a constraint referencing unknown PoIs or mixing units
//   AT-CONTENTS      an actual twin that contains Dts or subsystems
//   FLOW-ENDPOINT    a flow endpoint outside the declaring system's reach
//   FLOW-DIRECTION   a flow whose source cannot emit or whose sink cannot receive
//   FLOW-UNIT        a flow between ports of different units
//   DT-NO-GOAL       a Dt that satisfies no goal
//   GOAL-UNSATISFIED a goal no Dt satisfies and that generalizes nothing
//   PORT-DANGLING    a system boundary port that no flow touches
//   ACT-CONFLICT     two or more Dts write the same actuator without consolidation
struct Diagnostic {
  Severity severity = Severity::error;
  std::string code;
  std::string message;
  std::vector<std::string> elements;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

inline bool has_errors(const std::vector<Diagnostic>& diags) {
  for (const auto& d : diags) {
    if (d.severity == Severity::error) return true;
  }
  return false;
}

}  // namespace dartwin
