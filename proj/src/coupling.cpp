#include <algorithm>
#include <deque>
#include <functional>
#include <limits>
#include <map>

#include "mcfsm/analysis.hpp"

namespace mcfsm::analysis {

std::size_t CouplingGraph::arc_count() const {
  std::size_t n = 0;
  for (const auto& s : successors) n += s.size();
  return n;
}

CouplingGraph build_coupling_graph(const ResolvedModel& model) {
  CouplingGraph g;
  g.node_count = model.event_count();
  g.successors.resize(g.node_count);
  const auto edges = model.edges();
  for (EdgeIndex e = 0; e < edges.size(); ++e) {
    const EventId target = model.event_id(EventRef::internal(e));
    for (EventRef cause : edges[e].captures) g.successors[model.event_id(cause)].push_back(target);
  }
  for (auto& s : g.successors) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
  }
  return g;
}

namespace {

constexpr std::uint64_t kSaturated = std::numeric_limits<std::uint64_t>::max();

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
  return a > kSaturated - b ? kSaturated : a + b;
}

/// Iterative Tarjan. Components come out in reverse topological order.
struct Components {
  std::vector<std::size_t> component;  // node -> component id
  std::vector<std::vector<EventId>> members;
};

Components strongly_connected(const CouplingGraph& g) {
  const std::size_t n = g.node_count;
  constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> index(n, kUnset), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<EventId> stack;
  Components out;
  out.component.assign(n, kUnset);
  std::size_t counter = 0;

  struct Frame {
    EventId node;
    std::size_t next;
  };
  for (EventId root = 0; root < n; ++root) {
    if (index[root] != kUnset) continue;
    std::vector<Frame> frames{{root, 0}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!frames.empty()) {
      Frame& f = frames.back();
      const auto& succ = g.successors[f.node];
      if (f.next < succ.size()) {
        EventId w = succ[f.next++];
        if (index[w] == kUnset) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          frames.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.node] = std::min(low[f.node], index[w]);
        }
        continue;
      }
      const EventId v = f.node;
      frames.pop_back();
      if (!frames.empty()) low[frames.back().node] = std::min(low[frames.back().node], low[v]);
      if (low[v] == index[v]) {
        std::vector<EventId> comp;
        EventId w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          out.component[w] = out.members.size();
          comp.push_back(w);
        } while (w != v);
        out.members.push_back(std::move(comp));
      }
    }
  }
  return out;
}

std::vector<EventId> bfs_path(const CouplingGraph& g, EventId from,
                              const std::function<bool(EventId)>& goal,
                              const std::function<bool(EventId)>& allowed) {
  std::vector<std::optional<EventId>> parent(g.node_count);
  std::vector<bool> seen(g.node_count, false);
  std::deque<EventId> queue{from};
  seen[from] = true;
  while (!queue.empty()) {
    EventId v = queue.front();
    queue.pop_front();
    if (goal(v)) {
      std::vector<EventId> path{v};
      while (parent[path.back()]) path.push_back(*parent[path.back()]);
      std::reverse(path.begin(), path.end());
      return path;
    }
    for (EventId w : g.successors[v]) {
      if (!seen[w] && allowed(w)) {
        seen[w] = true;
        parent[w] = v;
        queue.push_back(w);
      }
    }
  }
  return {};
}

}  // namespace

BoundReport cascade_bound(const ResolvedModel& model) {
  const CouplingGraph g = build_coupling_graph(model);
  const Components scc = strongly_connected(g);
  const std::size_t n = g.node_count;

  std::vector<bool> cyclic(n, false);
  for (const auto& comp : scc.members) {
    bool is_cycle = comp.size() > 1;
    if (!is_cycle) {
      const auto& s = g.successors[comp.front()];
      is_cycle = std::binary_search(s.begin(), s.end(), comp.front());
    }
    if (is_cycle) {
      for (EventId v : comp) cyclic[v] = true;
    }
  }

  auto machine_of = [&](EventId id) { return model.edges()[id - model.external_events().size()].id.machine; };

  // Components are emitted sinks first, so successors are always settled.
  std::vector<bool> unbounded(n, false);
  std::vector<std::uint64_t> weight(n, 1), depth(n, 1);
  for (const auto& comp : scc.members) {
    for (EventId v : comp) {
      if (cyclic[v]) {
        unbounded[v] = true;
        continue;
      }
      std::map<MachineIndex, std::uint64_t> per_machine;
      for (EventId w : g.successors[v]) {
        if (unbounded[w]) {
          unbounded[v] = true;
          break;
        }
        auto& best = per_machine[machine_of(w)];
        best = std::max(best, weight[w]);
        depth[v] = std::max(depth[v], depth[w] + 1);
      }
      if (unbounded[v]) continue;
      std::uint64_t total = 1;
      for (const auto& [m, w] : per_machine) total = sat_add(total, w);
      weight[v] = total;
    }
  }

  BoundReport report;
  for (std::uint32_t x = 0; x < model.external_events().size(); ++x) {
    EventBound b;
    b.event = EventRef::external(x);
    const EventId root = model.event_id(b.event);
    std::vector<EventId> path;
    if (!unbounded[root]) {
      b.bound = weight[root];
      b.fired_bound = weight[root] - 1;
      path.push_back(root);
      while (!g.successors[path.back()].empty()) {
        const auto& succ = g.successors[path.back()];
        path.push_back(*std::max_element(succ.begin(), succ.end(), [&](EventId a, EventId c) {
          return depth[a] < depth[c] || (depth[a] == depth[c] && a > c);
        }));
      }
    } else {
      path = bfs_path(g, root, [&](EventId v) { return cyclic[v]; }, [](EventId) { return true; });
      const EventId entry = path.back();
      const std::size_t comp = scc.component[entry];
      // Shortest way around the cycle, back to the entry node.
      std::vector<EventId> loop;
      for (EventId start : g.successors[entry]) {
        if (scc.component[start] != comp) continue;
        auto candidate = bfs_path(
            g, start, [&](EventId v) { return v == entry; },
            [&](EventId v) { return scc.component[v] == comp; });
        if (!candidate.empty() && (loop.empty() || candidate.size() < loop.size())) {
          loop = std::move(candidate);
        }
      }
      path.insert(path.end(), loop.begin(), loop.end());
    }
    for (EventId id : path) b.witness.push_back(model.event_from_id(id));
    report.per_event.push_back(std::move(b));
  }
  return report;
}

}  // namespace mcfsm::analysis
