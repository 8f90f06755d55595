// Breadth-first exploration of the reachable global states.
//
// Both kernels visit states in exactly the order of a plain FIFO BFS that
// tries external events in declaration order. The parallel kernel computes
// the successors of a whole frontier concurrently and then merges them
// serially in (frontier position, event) order; errors are held per slot
// and only raised when the merge reaches them, so the first error seen is
// the one the serial kernel would raise.

#include <algorithm>
#include <functional>
#include <unordered_map>

#include "mcfsm/analysis.hpp"

namespace mcfsm::analysis {

std::vector<EventRef> ReachResult::path_to(std::size_t i) const {
  std::vector<EventRef> path;
  while (parent.at(i) != i) {
    path.push_back(via[i]);
    i = parent[i];
  }
  std::reverse(path.begin(), path.end());
  return path;
}

namespace {

using StopFn = std::function<bool(const GlobalState&)>;

class Explorer {
 public:
  Explorer(const ResolvedModel& model, std::uint64_t max_states, std::size_t cap, StopFn stop)
      : model_(model), max_states_(max_states), cap_(cap), stop_(std::move(stop)) {}

  /// Returns true when the stop predicate fired.
  bool seed() {
    return insert(initial_state(model_), 0, EventRef{}, /*root=*/true);
  }

  bool insert(GlobalState s, std::size_t parent, EventRef via, bool root = false) {
    auto [it, fresh] = index_.try_emplace(s, result_.states.size());
    if (!fresh) return false;
    if (result_.states.size() >= max_states_) {
      throw Error(ErrorCode::StateSpaceTooLarge,
                  "more than " + std::to_string(max_states_) + " reachable global states");
    }
    result_.states.push_back(std::move(s));
    result_.parent.push_back(root ? result_.states.size() - 1 : parent);
    result_.via.push_back(via);
    if (stop_ && stop_(result_.states.back())) {
      hit_ = result_.states.size() - 1;
      return true;
    }
    return false;
  }

  struct Slot {
    GlobalState next;
    std::optional<Error> error;
  };

  Slot successor(std::size_t i, std::uint32_t x) const {
    Slot slot{result_.states[i], std::nullopt};
    try {
      advance(model_, slot.next, EventRef::external(x), cap_);
    } catch (const Error& e) {
      slot.error = Error(e.code(), std::string(e.what()) + " from state " +
                                       format_state(model_, result_.states[i]) + " on " +
                                       model_.external_events()[x]);
    }
    return slot;
  }

  void run_serial() {
    if (seed()) return;
    const auto events = static_cast<std::uint32_t>(model_.external_events().size());
    for (std::size_t i = 0; i < result_.states.size(); ++i) {
      for (std::uint32_t x = 0; x < events; ++x) {
        Slot slot = successor(i, x);
        if (slot.error) throw *slot.error;
        if (insert(std::move(slot.next), i, EventRef::external(x))) return;
      }
    }
  }

  void run_parallel() {
    if (seed()) return;
    const auto events = static_cast<std::uint32_t>(model_.external_events().size());
    std::size_t begin = 0;
    while (begin < result_.states.size()) {
      const std::size_t end = result_.states.size();
      const auto width = static_cast<std::int64_t>((end - begin) * events);
      std::vector<Slot> slots(static_cast<std::size_t>(width));
#pragma omp parallel for schedule(dynamic, 64)
      for (std::int64_t k = 0; k < width; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        slots[uk] = successor(begin + uk / events, static_cast<std::uint32_t>(uk % events));
      }
      for (std::size_t k = 0; k < slots.size(); ++k) {
        if (slots[k].error) throw *slots[k].error;
        const auto x = static_cast<std::uint32_t>(k % events);
        if (insert(std::move(slots[k].next), begin + k / events, EventRef::external(x))) return;
      }
      begin = end;
    }
  }

  ReachResult take() { return std::move(result_); }
  std::optional<std::size_t> hit() const { return hit_; }

 private:
  const ResolvedModel& model_;
  std::uint64_t max_states_;
  std::size_t cap_;
  StopFn stop_;
  ReachResult result_;
  std::unordered_map<GlobalState, std::size_t, GlobalStateHash> index_;
  std::optional<std::size_t> hit_;
};

}  // namespace

ReachResult explore_serial(const ResolvedModel& model, std::uint64_t max_states,
                           std::size_t cascade_cap) {
  Explorer ex(model, max_states, cascade_cap, nullptr);
  ex.run_serial();
  return ex.take();
}

ReachResult explore_parallel(const ResolvedModel& model, std::uint64_t max_states,
                             std::size_t cascade_cap) {
  Explorer ex(model, max_states, cascade_cap, nullptr);
  ex.run_parallel();
  return ex.take();
}

ReachResult explore(const ResolvedModel& model, const ReachOptions& options) {
  return options.parallel ? explore_parallel(model, options.max_states, options.cascade_cap)
                          : explore_serial(model, options.max_states, options.cascade_cap);
}

std::vector<GlobalState> reachable_states(const ResolvedModel& model, const ReachOptions& options) {
  return explore(model, options).states;
}

// ---------------------------------------------------------------------------

bool Predicate::matches(const GlobalState& s) const {
  return std::all_of(all_of.begin(), all_of.end(),
                     [&](const StateConstraint& c) { return s[c.machine] == c.state; });
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

Predicate parse_predicate(const ResolvedModel& model, std::string_view text) {
  std::string normalized(text);
  for (std::string_view sep : {"\xE2\x88\xA7", "&&", " and ", ","}) {
    for (auto pos = normalized.find(sep); pos != std::string::npos; pos = normalized.find(sep)) {
      normalized.replace(pos, sep.size(), "&");
    }
  }
  Predicate p;
  std::string_view rest = normalized;
  for (;;) {
    auto amp = rest.find('&');
    std::string_view term = trim(rest.substr(0, amp));
    if (!term.empty()) {
      auto eq = term.find('=');
      if (eq == std::string_view::npos) {
        throw Error(ErrorCode::InvalidSelector,
                    "predicate term '" + std::string(term) + "' must have the form instance=state");
      }
      std::string_view inst = trim(term.substr(0, eq));
      std::string_view state = trim(term.substr(eq + 1));
      auto m = model.find_machine(inst);
      if (!m) throw Error(ErrorCode::UnknownPath, "unknown instance '" + std::string(inst) + "'");
      auto s = model.machines()[*m].find_state(state);
      if (!s) {
        throw Error(ErrorCode::UnknownPath, "instance '" + std::string(inst) +
                                                "' has no state '" + std::string(state) + "'");
      }
      p.all_of.push_back({*m, *s});
    }
    if (amp == std::string_view::npos) break;
    rest.remove_prefix(amp + 1);
  }
  if (p.all_of.empty()) throw Error(ErrorCode::InvalidSelector, "empty predicate");
  return p;
}

ForbiddenResult check_forbidden(const ResolvedModel& model, const Predicate& predicate,
                                const ReachOptions& options) {
  for (const auto& c : predicate.all_of) {
    if (c.machine >= model.machines().size() ||
        c.state >= model.machines()[c.machine].states.size()) {
      throw Error(ErrorCode::UnknownPath, "predicate references an unknown machine or state");
    }
  }
  Explorer ex(model, options.max_states, options.cascade_cap,
              [&](const GlobalState& s) { return predicate.matches(s); });
  options.parallel ? ex.run_parallel() : ex.run_serial();
  ForbiddenResult result;
  if (auto hit = ex.hit()) {
    ReachResult r = ex.take();
    result.holds_never = false;
    result.witness = r.path_to(*hit);
    result.reached = r.states[*hit];
  }
  return result;
}

}  // namespace mcfsm::analysis
