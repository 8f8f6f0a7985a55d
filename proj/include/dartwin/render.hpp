#pragma once

// Graphviz DOT output. Every rendered element carries its model id in an `id` attribute
// (`ID` inside HTML labels), so a highlight or a test can find it again.

#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "changeset.hpp"
#include "model.hpp"

namespace dartwin {

inline constexpr std::string_view kHighlightColour = "#E69F00";

struct RenderOptions {
  std::optional<ChangeSet> highlight;
  bool show_goal_layer = true;
  // Draws an actual twin as one node; elements inside it are then not rendered.
  bool collapse_actual_twins = false;
};

namespace detail {

inline std::string dot_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + '"';
}

inline std::string html_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

class DotWriter {
 public:
  DotWriter(const Model& m, const RenderOptions& opt) : m_(canonicalize(m)), idx_(m_), opt_(opt) {
    if (opt.highlight) {
      marked_.insert(opt.highlight->added.begin(), opt.highlight->added.end());
      marked_.insert(opt.highlight->modified.begin(), opt.highlight->modified.end());
    }
  }

  std::string run() {
    os_ << "digraph " << dot_quote(m_.name) << " {\n";
    os_ << "  rankdir=TB;\n  newrank=true;\n  node [fontname=\"Helvetica\", fontsize=11];\n";
    os_ << "  edge [fontname=\"Helvetica\", fontsize=9];\n";
    if (opt_.show_goal_layer) goal_layer();
    system(m_.root_system, 1);
    if (opt_.show_goal_layer) {
      links();
      // Keeps the goal layer above the architecture layer.
      if (!m_.goals.empty() && !anchor_.empty()) {
        os_ << "  " << dot_quote(m_.goals.front().id) << " -> " << dot_quote(anchor_) << " [style=invis];\n";
      }
    }
    os_ << "}\n";
    return os_.str();
  }

 private:
  bool marked(const std::string& id) const { return marked_.count(id) > 0; }

  // `id="X"` plus the highlight colour when X is marked.
  std::string attr_id(const std::string& id, const char* sep = ", ") const {
    std::string out = "id=" + dot_quote(id);
    if (marked(id)) out += std::string(sep) + "color=\"" + std::string(kHighlightColour) + "\"";
    return out;
  }

  std::string cell(const std::string& id, const std::string& port, const std::string& text) const {
    std::string out = "<TR><TD ID=\"" + html_escape(id) + "\"";
    if (marked(id)) out += " BGCOLOR=\"" + std::string(kHighlightColour) + "\"";
    if (!port.empty()) out += " PORT=\"" + html_escape(port) + "\"";
    return out + " ALIGN=\"LEFT\">" + html_escape(text) + "</TD></TR>";
  }

  static std::string port_text(const Port& p) {
    return std::string(to_string(p.direction)) + " " + p.name + ": " + p.signal_unit + " [" + std::string(to_string(p.role)) + "]";
  }

  void goal_layer() {
    os_ << "  subgraph \"cluster_goals\" {\n    label=\"goals\";\n    style=dashed;\n";
    for (const auto& g : m_.goals) {
      std::string label = "<TABLE BORDER=\"0\" CELLSPACING=\"0\"><TR><TD><B>" + html_escape(g.title) + "</B></TD></TR>";
      for (const auto& p : g.pois) label += cell(p.id, "", p.name + ": " + p.unit);
      if (g.constraint) label += "<TR><TD><I>" + html_escape(to_string(*g.constraint)) + "</I></TD></TR>";
      label += "</TABLE>";
      os_ << "    " << dot_quote(g.id) << " [" << attr_id(g.id) << ", shape=trapezium, label=<" << label << ">];\n";
    }
    os_ << "  }\n";
    for (const auto& e : m_.goal_edges) {
      os_ << "  " << dot_quote(e.source) << " -> " << dot_quote(e.target) << " [" << attr_id(e.id());
      switch (e.kind) {
        case GoalEdgeKind::generalization: os_ << ", arrowhead=onormal"; break;
        case GoalEdgeKind::positive_relation: os_ << ", arrowhead=normal"; break;
        case GoalEdgeKind::conflict: os_ << ", dir=both, arrowhead=normal, arrowtail=normal, style=bold"; break;
      }
      std::string label = e.label.value_or("");
      if (e.combinator) label += (label.empty() ? "" : " ") + std::string("[") + std::string(to_string(*e.combinator)) + "]";
      if (!label.empty()) os_ << ", label=" << dot_quote(label);
      os_ << "];\n";
    }
  }

  void links() {
    for (const auto& l : m_.dt_goal_links) {
      if (!rendered_dts_.count(l.dt)) continue;
      os_ << "  " << dot_quote(l.goal) << " -> " << dot_quote(l.dt) << " [" << attr_id(l.id())
          << ", style=dashed, dir=back, arrowtail=normal];\n";
    }
  }

  // Node endpoint of a port reference: boundary ports are nodes, Dt ports are cells.
  std::string endpoint(const PortRef& r) const {
    const auto* info = idx_.port(r);
    if (info && !info->dt && !collapsed_.count(info->system->id)) return dot_quote(info->port->id);
    return dot_quote(r.owner) + ":" + dot_quote(r.port);
  }

  void collapsed_node(const TwinSystem& s, const std::string& pad) {
    collapsed_.insert(s.id);
    std::string label = "<TABLE BORDER=\"0\" CELLSPACING=\"0\"><TR><TD><B>" + html_escape(s.name) + "</B></TD></TR>";
    for (const auto& p : s.ports) label += cell(p.id, p.name, port_text(p));
    label += "</TABLE>";
    os_ << pad << dot_quote(s.id) << " [" << attr_id(s.id) << ", shape=box3d, label=<" << label << ">];\n";
  }

  void system(const TwinSystem& s, int depth) {
    const std::string pad(2 * depth, ' ');
    if (opt_.collapse_actual_twins && s.kind == SystemKind::actual_twin && depth > 1) {
      collapsed_node(s, pad);
      return;
    }
    os_ << pad << "subgraph " << dot_quote("cluster_" + s.id) << " {\n";
    os_ << pad << "  " << attr_id(s.id, "; ") << ";\n";
    std::string title = s.kind == SystemKind::actual_twin ? "AT " + s.name : s.name;
    os_ << pad << "  label=" << dot_quote(title) << ";\n";
    if (s.kind == SystemKind::actual_twin) os_ << pad << "  style=dashed;\n";
    for (const auto& p : s.ports) {
      os_ << pad << "  " << dot_quote(p.id) << " [" << attr_id(p.id) << ", shape=box, width=0.2, height=0.2, fontsize=9, label="
          << dot_quote(p.name) << (p.direction == Direction::input ? ", style=filled, fillcolor=\"#F0F0F0\"" : "") << "];\n";
      if (anchor_.empty()) anchor_ = p.id;
    }
    for (const auto& d : s.dts) {
      std::string label = "<TABLE BORDER=\"0\" CELLSPACING=\"0\"><TR><TD><B>" + html_escape(d.name) + "</B></TD></TR>";
      for (const auto& p : d.ports) label += cell(p.id, p.name, port_text(p));
      if (d.behavior_key) label += "<TR><TD><I>" + html_escape(*d.behavior_key) + "</I></TD></TR>";
      label += "</TABLE>";
      os_ << pad << "  " << dot_quote(d.id) << " [" << attr_id(d.id) << ", shape=box, style=rounded, label=<" << label << ">];\n";
      rendered_dts_.insert(d.id);
      if (anchor_.empty()) anchor_ = d.id;
    }
    for (const auto& sub : s.subsystems) system(sub, depth + 1);
    for (const auto& f : s.flows) {
      os_ << pad << "  " << endpoint(f.from) << " -> " << endpoint(f.to) << " [" << attr_id(f.id()) << "];\n";
    }
    os_ << pad << "}\n";
  }

  Model m_;
  ModelIndex idx_;
  RenderOptions opt_;
  std::set<std::string> marked_;
  std::set<std::string> collapsed_;
  std::set<std::string> rendered_dts_;
  std::string anchor_;
  std::ostringstream os_;
};

}  // namespace detail

inline std::string render_dot(const Model& model, const RenderOptions& options = {}) {
  return detail::DotWriter(model, options).run();
}

}  // namespace dartwin
