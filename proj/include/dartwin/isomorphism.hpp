#pragma once

// Structural isomorphism of models, ignoring identifiers, display names, relation labels
// and behavior keys.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "model.hpp"

namespace dartwin {

struct IsomorphismResult {
  bool isomorphic = false;
  std::map<std::string, std::string> mapping;  // element id in a -> element id in b

  explicit operator bool() const { return isomorphic; }
};

namespace detail {

struct LabeledGraph {
  std::vector<std::string> ids;
  std::vector<std::string> labels;
  // (from, to) -> sorted edge labels
  std::map<std::pair<int, int>, std::vector<std::string>> edges;
  std::vector<std::vector<int>> out_adj, in_adj;

  int vertex(const std::map<std::string, int>& index, const std::string& id) const {
    auto it = index.find(id);
    return it == index.end() ? -1 : it->second;
  }
};

inline LabeledGraph build_graph(const Model& m) {
  LabeledGraph g;
  ModelIndex idx(m);
  std::map<std::string, int> index;
  for (const auto& e : enumerate_elements(m)) {
    std::string label(to_string(e.kind));
    switch (e.kind) {
      case ElementKind::poi: label += ":" + std::get<const Poi*>(e.ptr)->unit; break;
      case ElementKind::goal_edge: {
        const auto* ge = std::get<const GoalEdge*>(e.ptr);
        label += ":" + std::string(to_string(ge->kind));
        if (ge->combinator) label += ":" + std::string(to_string(*ge->combinator));
        break;
      }
      case ElementKind::system:
        label += std::get<const TwinSystem*>(e.ptr)->kind == SystemKind::actual_twin ? ":at" : ":ts";
        break;
      case ElementKind::port: {
        const auto* p = std::get<const Port*>(e.ptr);
        label += ":" + std::string(to_string(p->direction)) + ":" + std::string(to_string(p->role)) + ":" + p->signal_unit;
        break;
      }
      default: break;
    }
    index[e.id] = static_cast<int>(g.ids.size());
    g.ids.push_back(e.id);
    g.labels.push_back(std::move(label));
  }
  auto edge = [&](const std::string& a, const std::string& b, const char* label) {
    int u = g.vertex(index, a), v = g.vertex(index, b);
    if (u < 0 || v < 0) return;
    g.edges[{u, v}].push_back(label);
  };
  for (const auto& goal : m.goals) {
    for (const auto& p : goal.pois) edge(goal.id, p.id, "has");
  }
  for (const auto& ge : m.goal_edges) {
    edge(ge.source, ge.id(), "source");
    edge(ge.id(), ge.target, "target");
  }
  for (const auto* sys : idx.all_systems()) {
    for (const auto& p : sys->ports) edge(sys->id, p.id, "boundary");
    for (const auto& d : sys->dts) {
      edge(sys->id, d.id, "contains");
      for (const auto& p : d.ports) edge(d.id, p.id, "port");
    }
    for (const auto& sub : sys->subsystems) edge(sys->id, sub.id, "contains");
    for (const auto& f : sys->flows) {
      edge(sys->id, f.id(), "scope");
      edge(f.from.id(), f.id(), "from");
      edge(f.id(), f.to.id(), "to");
    }
  }
  for (const auto& l : m.dt_goal_links) {
    edge(l.dt, l.id(), "link");
    edge(l.id(), l.goal, "satisfies");
  }
  g.out_adj.assign(g.ids.size(), {});
  g.in_adj.assign(g.ids.size(), {});
  for (auto& [uv, labels] : g.edges) {
    std::sort(labels.begin(), labels.end());
    g.out_adj[uv.first].push_back(uv.second);
    g.in_adj[uv.second].push_back(uv.first);
  }
  return g;
}

// Joint colour refinement so colours are comparable across both graphs.
inline std::pair<std::vector<int>, std::vector<int>> refine_colours(const LabeledGraph& a, const LabeledGraph& b) {
  std::map<std::string, int> palette;
  auto initial = [&](const LabeledGraph& g) {
    std::vector<int> c(g.ids.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = palette.emplace(g.labels[i], static_cast<int>(palette.size())).first->second;
    return c;
  };
  std::vector<int> ca = initial(a), cb = initial(b);
  std::size_t classes = palette.size();
  while (true) {
    std::map<std::vector<int>, int> next_palette;
    auto step = [&](const LabeledGraph& g, const std::vector<int>& c) {
      std::vector<int> out(c.size());
      for (std::size_t v = 0; v < c.size(); ++v) {
        std::vector<std::vector<int>> parts;
        for (int u : g.out_adj[v]) {
          std::vector<int> part{0, c[u]};
          for (const auto& l : g.edges.at({static_cast<int>(v), u})) part.push_back(palette.emplace(l, static_cast<int>(palette.size())).first->second);
          parts.push_back(std::move(part));
        }
        for (int u : g.in_adj[v]) {
          std::vector<int> part{1, c[u]};
          for (const auto& l : g.edges.at({u, static_cast<int>(v)})) part.push_back(palette.emplace(l, static_cast<int>(palette.size())).first->second);
          parts.push_back(std::move(part));
        }
        std::sort(parts.begin(), parts.end());
        std::vector<int> key{c[v]};
        for (const auto& p : parts) {
          key.push_back(-1);
          key.insert(key.end(), p.begin(), p.end());
        }
        out[v] = next_palette.emplace(std::move(key), static_cast<int>(next_palette.size())).first->second;
      }
      return out;
    };
    auto na = step(a, ca);
    auto nb = step(b, cb);
    ca = std::move(na);
    cb = std::move(nb);
    if (next_palette.size() == classes) break;
    classes = next_palette.size();
  }
  return {ca, cb};
}

class Matcher {
 public:
  Matcher(const LabeledGraph& a, const LabeledGraph& b, std::vector<int> ca, std::vector<int> cb)
      : a_(a), b_(b), ca_(std::move(ca)), cb_(std::move(cb)), map_(a.ids.size(), -1), used_(b.ids.size(), false) {
    std::map<int, int> class_size;
    for (int c : ca_) ++class_size[c];
    for (std::size_t v = 0; v < a.ids.size(); ++v) order_.push_back(static_cast<int>(v));
    std::stable_sort(order_.begin(), order_.end(), [&](int x, int y) { return class_size[ca_[x]] < class_size[ca_[y]]; });
  }

  bool run() { return extend(0); }
  const std::vector<int>& mapping() const { return map_; }

 private:
  static const std::vector<std::string>* labels(const LabeledGraph& g, int u, int v) {
    auto it = g.edges.find({u, v});
    return it == g.edges.end() ? nullptr : &it->second;
  }

  static bool same(const std::vector<std::string>* x, const std::vector<std::string>* y) {
    if (!x || !y) return x == y;
    return *x == *y;
  }

  bool consistent(int v, int w) const {
    for (int u : a_.out_adj[v]) {
      if (map_[u] >= 0 && !same(labels(a_, v, u), labels(b_, w, map_[u]))) return false;
    }
    for (int u : a_.in_adj[v]) {
      if (map_[u] >= 0 && !same(labels(a_, u, v), labels(b_, map_[u], w))) return false;
    }
    // Edges present in b between w and already-mapped vertices must exist in a too.
    for (int x : b_.out_adj[w]) {
      if (used_[x] && !labels(a_, v, inverse_.at(x))) return false;
    }
    for (int x : b_.in_adj[w]) {
      if (used_[x] && !labels(a_, inverse_.at(x), v)) return false;
    }
    if (labels(a_, v, v) || labels(b_, w, w)) return same(labels(a_, v, v), labels(b_, w, w));
    return true;
  }

  bool extend(std::size_t depth) {
    if (depth == order_.size()) return true;
    int v = order_[depth];
    for (std::size_t w = 0; w < b_.ids.size(); ++w) {
      if (used_[w] || cb_[w] != ca_[v]) continue;
      if (!consistent(v, static_cast<int>(w))) continue;
      map_[v] = static_cast<int>(w);
      used_[w] = true;
      inverse_[static_cast<int>(w)] = v;
      if (extend(depth + 1)) return true;
      map_[v] = -1;
      used_[w] = false;
      inverse_.erase(static_cast<int>(w));
    }
    return false;
  }

  const LabeledGraph& a_;
  const LabeledGraph& b_;
  std::vector<int> ca_, cb_;
  std::vector<int> map_;
  std::vector<bool> used_;
  std::map<int, int> inverse_;
  std::vector<int> order_;
};

}  // namespace detail

inline IsomorphismResult is_isomorphic(const Model& a, const Model& b) {
  IsomorphismResult result;
  auto ga = detail::build_graph(a);
  auto gb = detail::build_graph(b);
  if (ga.ids.size() != gb.ids.size() || ga.edges.size() != gb.edges.size()) return result;
  auto [ca, cb] = detail::refine_colours(ga, gb);
  auto hist = [](std::vector<int> c) {
    std::sort(c.begin(), c.end());
    return c;
  };
  if (hist(ca) != hist(cb)) return result;
  detail::Matcher matcher(ga, gb, ca, cb);
  if (!matcher.run()) return result;
  result.isomorphic = true;
  for (std::size_t v = 0; v < ga.ids.size(); ++v) result.mapping[ga.ids[v]] = gb.ids[matcher.mapping()[v]];
  return result;
}

}  // namespace dartwin
