#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "model.hpp"

namespace dartwin {

struct ChangeSet {
  std::vector<std::string> added;
  std::vector<std::string> removed;
  std::vector<std::string> modified;

  bool empty() const { return added.empty() && removed.empty() && modified.empty(); }

  friend bool operator==(const ChangeSet&, const ChangeSet&) = default;
};

namespace detail {

inline std::string element_signature(const ModelIndex& idx, const ElementRef& e) {
  std::ostringstream os;
  os << to_string(e.kind) << '|';
  switch (e.kind) {
    case ElementKind::goal: {
      const auto* g = std::get<const Goal*>(e.ptr);
      os << g->title << '|' << (g->constraint ? to_string(*g->constraint) : "");
      break;
    }
    case ElementKind::poi: {
      const auto* p = std::get<const Poi*>(e.ptr);
      os << p->name << '|' << p->unit;
      break;
    }
    case ElementKind::goal_edge: {
      const auto* g = std::get<const GoalEdge*>(e.ptr);
      os << g->label.value_or("") << '|' << (g->combinator ? to_string(*g->combinator) : "");
      break;
    }
    case ElementKind::system: {
      const auto* s = std::get<const TwinSystem*>(e.ptr);
      const auto* parent = idx.parent_of(s->id);
      os << s->name << '|' << static_cast<int>(s->kind) << '|' << (parent ? parent->id : "");
      break;
    }
    case ElementKind::dt: {
      const auto* d = std::get<const Dt*>(e.ptr);
      const auto* owner = idx.dt_owner(d->id);
      os << d->name << '|' << d->behavior_key.value_or("") << '|' << (owner ? owner->id : "");
      break;
    }
    case ElementKind::port: {
      const auto* p = std::get<const Port*>(e.ptr);
      os << p->name << '|' << to_string(p->direction) << '|' << to_string(p->role) << '|' << p->signal_unit;
      for (const auto& f : idx.incident_flow_ids(p->id)) os << '|' << f;
      break;
    }
    case ElementKind::flow: {
      const auto* scope = idx.flow_scope(e.id);
      os << (scope ? scope->id : "");
      break;
    }
    case ElementKind::link:
      break;
  }
  return os.str();
}

inline std::map<std::string, std::string> signatures(const Model& m) {
  ModelIndex idx(m);
  std::map<std::string, std::string> out;
  for (const auto& e : enumerate_elements(m)) out[e.id] = element_signature(idx, e);
  return out;
}

}  // namespace detail

// Element-level difference. A shared id is modified when its own fields, its place in the
// system tree, or (for ports) its incident flows differ.
inline ChangeSet diff(const Model& source, const Model& result) {
  auto a = detail::signatures(source);
  auto b = detail::signatures(result);
  ChangeSet cs;
  for (const auto& [id, sig] : b) {
    auto it = a.find(id);
    if (it == a.end()) {
      cs.added.push_back(id);
    } else if (it->second != sig) {
      cs.modified.push_back(id);
    }
  }
  for (const auto& [id, _] : a) {
    if (!b.count(id)) cs.removed.push_back(id);
  }
  return cs;
}

// Edit log kept by rewrites while they build a result; independent of `diff`.
class ChangeRecorder {
 public:
  void added(const std::string& id) {
    auto it = state_.find(id);
    if (it != state_.end() && it->second == State::removed) {
      it->second = State::touched;
    } else {
      state_[id] = State::added;
    }
  }

  void removed(const std::string& id) {
    auto it = state_.find(id);
    if (it != state_.end() && it->second == State::added) {
      state_.erase(it);
    } else {
      state_[id] = State::removed;
    }
  }

  void touched(const std::string& id) { state_.emplace(id, State::touched); }

  ChangeSet finish() const {
    ChangeSet cs;
    for (const auto& [id, s] : state_) {
      switch (s) {
        case State::added: cs.added.push_back(id); break;
        case State::removed: cs.removed.push_back(id); break;
        case State::touched: cs.modified.push_back(id); break;
      }
    }
    return cs;
  }

 private:
  enum class State { added, removed, touched };
  std::map<std::string, State> state_;
};

// Sidecar text: one "added|removed|modified <id>" line per entry, grouped, each group sorted.
inline std::string write_changeset(const ChangeSet& cs) {
  std::string out;
  auto emit = [&](const char* tag, std::vector<std::string> ids) {
    std::sort(ids.begin(), ids.end());
    for (const auto& id : ids) out += std::string(tag) + ' ' + id + '\n';
  };
  emit("added", cs.added);
  emit("removed", cs.removed);
  emit("modified", cs.modified);
  return out;
}

inline ChangeSet read_changeset(const std::string& text) {
  ChangeSet cs;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto sp = line.find(' ');
    std::string tag = line.substr(0, sp);
    std::string id = sp == std::string::npos ? "" : line.substr(sp + 1);
    if (id.empty()) throw std::runtime_error("change set line " + std::to_string(lineno) + ": missing identifier");
    if (tag == "added") {
      cs.added.push_back(id);
    } else if (tag == "removed") {
      cs.removed.push_back(id);
    } else if (tag == "modified") {
      cs.modified.push_back(id);
    } else {
      throw std::runtime_error("change set line " + std::to_string(lineno) + ": unknown tag '" + tag + "'");
    }
  }
  for (auto* v : {&cs.added, &cs.removed, &cs.modified}) std::sort(v->begin(), v->end());
  return cs;
}

}  // namespace dartwin
