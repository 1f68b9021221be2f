#pragma once

#include <algorithm>
#include <deque>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cccov/error.hpp"

namespace cccov {

// Directed acyclic graph over named nodes. Acyclicity is checked on
// construction; edge endpoints are added to the node set automatically.
class Dag {
 public:
  using Edge = std::pair<std::string, std::string>;

  Dag(std::set<std::string> nodes, std::set<Edge> edges)
      : nodes_(std::move(nodes)), edges_(std::move(edges)) {
    for (const auto& [from, to] : edges_) {
      if (from == to)
        throw ArgumentError("self-loop on node '" + from + "'");
      nodes_.insert(from);
      nodes_.insert(to);
    }
    for (const auto& name : nodes_) {
      parents_[name];
      children_[name];
    }
    for (const auto& [from, to] : edges_) {
      parents_[to].insert(from);
      children_[from].insert(to);
    }
    check_acyclic();
  }

  // Text format: one edge per line, "FROM -> TO"; '#' starts a comment.
  static Dag parse(std::istream& in) {
    std::set<std::string> nodes;
    std::set<Edge> edges;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      auto trim = [](std::string s) {
        auto b = s.find_first_not_of(" \t\r");
        auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      line = trim(line);
      if (line.empty()) continue;
      auto arrow = line.find("->");
      if (arrow == std::string::npos)
        throw SchemaError("line " + std::to_string(lineno) +
                          ": expected 'FROM -> TO'");
      std::string from = trim(line.substr(0, arrow));
      std::string to = trim(line.substr(arrow + 2));
      if (from.empty() || to.empty() ||
          from.find_first_of(" \t") != std::string::npos ||
          to.find_first_of(" \t") != std::string::npos)
        throw SchemaError("line " + std::to_string(lineno) +
                          ": malformed edge '" + line + "'");
      edges.insert({from, to});
    }
    return Dag(std::move(nodes), std::move(edges));
  }

  static Dag parse(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  const std::set<std::string>& nodes() const { return nodes_; }
  const std::set<Edge>& edges() const { return edges_; }
  bool has_node(const std::string& name) const { return nodes_.count(name) > 0; }
  bool has_edge(const std::string& from, const std::string& to) const {
    return edges_.count({from, to}) > 0;
  }

  const std::set<std::string>& parents(const std::string& name) const {
    return lookup(parents_, name);
  }
  const std::set<std::string>& children(const std::string& name) const {
    return lookup(children_, name);
  }

  std::set<std::string> descendants(const std::string& name) const {
    require_node(name);
    std::set<std::string> seen;
    std::deque<std::string> todo{name};
    while (!todo.empty()) {
      std::string v = todo.front();
      todo.pop_front();
      for (const auto& ch : children(v))
        if (seen.insert(ch).second) todo.push_back(ch);
    }
    return seen;
  }

  void require_node(const std::string& name) const {
    if (!has_node(name))
      throw ArgumentError("unknown node '" + name + "'");
  }

 private:
  const std::set<std::string>& lookup(
      const std::map<std::string, std::set<std::string>>& m,
      const std::string& name) const {
    auto it = m.find(name);
    if (it == m.end()) throw ArgumentError("unknown node '" + name + "'");
    return it->second;
  }

  void check_acyclic() const {
    std::map<std::string, int> indeg;
    for (const auto& nm : nodes_) indeg[nm] = 0;
    for (const auto& [from, to] : edges_) ++indeg[to];
    std::deque<std::string> ready;
    for (const auto& [nm, d] : indeg)
      if (d == 0) ready.push_back(nm);
    std::size_t removed = 0;
    while (!ready.empty()) {
      std::string v = ready.front();
      ready.pop_front();
      ++removed;
      for (const auto& ch : children_.at(v))
        if (--indeg[ch] == 0) ready.push_back(ch);
    }
    if (removed != nodes_.size())
      throw ArgumentError("graph is not acyclic");
  }

  std::set<std::string> nodes_;
  std::set<Edge> edges_;
  std::map<std::string, std::set<std::string>> parents_;
  std::map<std::string, std::set<std::string>> children_;
};

// Standard d-separation, decided by reachability: a trail is active at a
// non-collider not in cond, and at a collider whose closure (itself or a
// descendant) meets cond. Returns true iff no active trail joins a and b.
inline bool d_separated(const Dag& dag, const std::string& a,
                        const std::string& b,
                        const std::set<std::string>& cond) {
  dag.require_node(a);
  dag.require_node(b);
  for (const auto& s : cond) dag.require_node(s);
  if (a == b) throw ArgumentError("d_separated: endpoints must differ");
  if (cond.count(a) || cond.count(b))
    throw ArgumentError("d_separated: endpoints may not be conditioned on");

  // Nodes whose descendants (or themselves) are conditioned on; a collider
  // in this set lets the trail pass.
  std::set<std::string> anc = cond;
  {
    std::deque<std::string> todo(cond.begin(), cond.end());
    while (!todo.empty()) {
      std::string v = todo.front();
      todo.pop_front();
      for (const auto& par : dag.parents(v))
        if (anc.insert(par).second) todo.push_back(par);
    }
  }

  enum Dir { Up, Down };  // Up: arrived from a child; Down: from a parent.
  std::set<std::pair<std::string, int>> visited;
  std::deque<std::pair<std::string, int>> todo;
  todo.push_back({a, Up});
  while (!todo.empty()) {
    auto [v, dir] = todo.front();
    todo.pop_front();
    if (!visited.insert({v, dir}).second) continue;
    if (v == b) return false;
    if (dir == Up && !cond.count(v)) {
      for (const auto& par : dag.parents(v)) todo.push_back({par, Up});
      for (const auto& ch : dag.children(v)) todo.push_back({ch, Down});
    } else if (dir == Down) {
      if (!cond.count(v))
        for (const auto& ch : dag.children(v)) todo.push_back({ch, Down});
      if (anc.count(v))
        for (const auto& par : dag.parents(v)) todo.push_back({par, Up});
    }
  }
  return true;
}

// All simple undirected paths from a to b, each an ordered node list, in
// lexicographic order.
inline std::vector<std::vector<std::string>> enumerate_paths(
    const Dag& dag, const std::string& a, const std::string& b) {
  dag.require_node(a);
  dag.require_node(b);
  if (a == b) throw ArgumentError("enumerate_paths: endpoints must differ");

  std::vector<std::vector<std::string>> paths;
  std::vector<std::string> current{a};
  std::set<std::string> on_path{a};

  auto neighbors = [&](const std::string& v) {
    std::set<std::string> nb = dag.parents(v);
    nb.insert(dag.children(v).begin(), dag.children(v).end());
    return nb;
  };

  std::function<void(const std::string&)> dfs = [&](const std::string& v) {
    if (v == b) {
      paths.push_back(current);
      return;
    }
    for (const auto& nb : neighbors(v)) {
      if (on_path.count(nb)) continue;
      current.push_back(nb);
      on_path.insert(nb);
      dfs(nb);
      current.pop_back();
      on_path.erase(nb);
    }
  };
  dfs(a);
  return paths;
}

// Blocking test for one undirected path under a conditioning set: blocked
// by a conditioned non-collider, or by a collider none of whose closure
// (itself or a descendant) is conditioned on.
inline bool is_path_blocked(const Dag& dag,
                            const std::vector<std::string>& path,
                            const std::set<std::string>& cond) {
  for (std::size_t i = 1; i + 1 < path.size(); ++i) {
    const std::string& prev = path[i - 1];
    const std::string& v = path[i];
    const std::string& next = path[i + 1];
    bool collider = dag.has_edge(prev, v) && dag.has_edge(next, v);
    if (collider) {
      bool opened = cond.count(v) > 0;
      if (!opened)
        for (const auto& d : dag.descendants(v))
          if (cond.count(d)) { opened = true; break; }
      if (!opened) return true;
    } else if (cond.count(v)) {
      return true;
    }
  }
  return false;
}

// First unblocked path in enumeration order, if any; the witness printed by
// the checker when an independence fails.
inline std::optional<std::vector<std::string>> find_unblocked_path(
    const Dag& dag, const std::string& a, const std::string& b,
    const std::set<std::string>& cond) {
  for (const auto& path : enumerate_paths(dag, a, b))
    if (!is_path_blocked(dag, path, cond)) return path;
  return std::nullopt;
}

// The five censoring-mechanism assumptions. C1 and C2 constrain the error
// distribution and cannot be posed as graph queries; C3-C5 are conditional
// independencies between c and the rest.
enum class CensoringMechanism { C1, C2, C3, C4, C5 };

inline std::string censoring_mechanism_name(CensoringMechanism m) {
  switch (m) {
    case CensoringMechanism::C1: return "C1";
    case CensoringMechanism::C2: return "C2";
    case CensoringMechanism::C3: return "C3";
    case CensoringMechanism::C4: return "C4";
    case CensoringMechanism::C5: return "C5";
  }
  throw ArgumentError("invalid censoring mechanism");
}

// Which DAG nodes play y, x, c, delta and z in a mechanism query.
struct MechanismQuery {
  CensoringMechanism target = CensoringMechanism::C3;
  std::string y;
  std::string x;
  std::string c;
  std::optional<std::string> delta;
  std::vector<std::string> z;
};

struct MechanismVerdict {
  bool holds = false;
  // Populated when the mechanism fails: the dependent pair and one
  // unblocked path between them.
  std::string pair_a, pair_b;
  std::vector<std::string> witness;
};

namespace detail {

inline void validate_query(const Dag& dag, const MechanismQuery& q) {
  std::vector<std::string> bound{q.y, q.x, q.c};
  if (q.delta) bound.push_back(*q.delta);
  for (const auto& zn : q.z) bound.push_back(zn);
  std::set<std::string> seen;
  for (const auto& name : bound) {
    dag.require_node(name);
    if (!seen.insert(name).second)
      throw ArgumentError("role bindings must be disjoint; '" + name +
                          "' is bound twice");
  }
}

}  // namespace detail

inline MechanismVerdict check_mechanism_verdict(const Dag& dag,
                                                const MechanismQuery& q) {
  if (q.target == CensoringMechanism::C1 || q.target == CensoringMechanism::C2)
    throw ArgumentError(
        censoring_mechanism_name(q.target) +
        " constrains the error distribution through an expectation; it has "
        "no DAG rendering. Only C3, C4 and C5 can be checked graphically.");
  detail::validate_query(dag, q);

  std::set<std::string> zset(q.z.begin(), q.z.end());
  std::vector<std::pair<std::string, std::string>> pairs;
  std::set<std::string> cond;
  switch (q.target) {
    case CensoringMechanism::C3:  // c independent of y given (x, z)
      pairs = {{q.c, q.y}};
      cond = zset;
      cond.insert(q.x);
      break;
    case CensoringMechanism::C4:  // c independent of (x, y) given z
      pairs = {{q.c, q.x}, {q.c, q.y}};
      cond = zset;
      break;
    case CensoringMechanism::C5:  // c independent of (x, y, z)
      pairs = {{q.c, q.x}, {q.c, q.y}};
      for (const auto& zn : q.z) pairs.push_back({q.c, zn});
      break;
    default:
      break;
  }

  MechanismVerdict verdict;
  verdict.holds = true;
  for (const auto& [a, b] : pairs) {
    if (d_separated(dag, a, b, cond)) continue;
    verdict.holds = false;
    verdict.pair_a = a;
    verdict.pair_b = b;
    if (auto path = find_unblocked_path(dag, a, b, cond))
      verdict.witness = *path;
    return verdict;
  }
  return verdict;
}

inline bool check_mechanism(const Dag& dag, const MechanismQuery& q) {
  return check_mechanism_verdict(dag, q).holds;
}

}  // namespace cccov
