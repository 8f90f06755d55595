#include "mcfsm/model.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

#include "mcfsm/error.hpp"

namespace mcfsm {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownClass: return "UnknownClass";
    case ErrorCode::DuplicateClass: return "DuplicateClass";
    case ErrorCode::DuplicateInstance: return "DuplicateInstance";
    case ErrorCode::UnknownPath: return "UnknownPath";
    case ErrorCode::EmptyGlobMatch: return "EmptyGlobMatch";
    case ErrorCode::MissingStart: return "MissingStart";
    case ErrorCode::UnknownStartState: return "UnknownStartState";
    case ErrorCode::NondeterministicState: return "NondeterministicState";
    case ErrorCode::UnderscoreInStateName: return "UnderscoreInStateName";
    case ErrorCode::DuplicateState: return "DuplicateState";
    case ErrorCode::DuplicateEdge: return "DuplicateEdge";
    case ErrorCode::InvalidLabel: return "InvalidLabel";
    case ErrorCode::InvalidSelector: return "InvalidSelector";
    case ErrorCode::InvalidCapTarget: return "InvalidCapTarget";
    case ErrorCode::UnsupportedNesting: return "UnsupportedNesting";
    case ErrorCode::UnknownExternalEvent: return "UnknownExternalEvent";
    case ErrorCode::AmbiguousEvent: return "AmbiguousEvent";
    case ErrorCode::CascadeOverflow: return "CascadeOverflow";
    case ErrorCode::StateSpaceTooLarge: return "StateSpaceTooLarge";
    case ErrorCode::UnknownBackend: return "UnknownBackend";
    case ErrorCode::InvalidTable: return "InvalidTable";
    case ErrorCode::SessionNotFound: return "SessionNotFound";
    case ErrorCode::InvalidModel: return "InvalidModel";
  }
  return "Unknown";
}

namespace {

bool is_identifier(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s.front()))) return false;
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return std::isalnum(static_cast<unsigned char>(c)); });
}

std::string_view leaf_of(std::string_view path) {
  auto pos = path.rfind('/');
  return pos == std::string_view::npos ? path : path.substr(pos + 1);
}

}  // namespace

bool ResolvedEdge::has_label(std::string_view label) const {
  const auto& labels = (!label.empty() && label.front() == 'y') ? y_labels : x_labels;
  return std::find(labels.begin(), labels.end(), label) != labels.end();
}

std::optional<StateIndex> ResolvedMachine::find_state(std::string_view state) const {
  auto it = std::find(states.begin(), states.end(), state);
  if (it == states.end()) return std::nullopt;
  return static_cast<StateIndex>(it - states.begin());
}

std::size_t GlobalStateHash::operator()(const GlobalState& s) const noexcept {
  std::size_t h = 0xcbf29ce484222325ull;
  for (StateIndex v : s.assignment()) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  }
  return h;
}

std::span<const ResolvedEdge> ResolvedModel::machine_edges(MachineIndex m) const {
  const auto& machine = machines_.at(m);
  return std::span<const ResolvedEdge>(edges_).subspan(machine.first_edge, machine.edge_count);
}

EventRef ResolvedModel::event_from_id(EventId id) const noexcept {
  if (id < externals_.size()) return EventRef::external(id);
  return EventRef::internal(static_cast<EdgeIndex>(id - externals_.size()));
}

std::optional<EdgeIndex> ResolvedModel::transition(MachineIndex m, StateIndex state,
                                                   EventRef event) const {
  std::int32_t raw = transition_raw(m, state, event_id(event));
  if (raw < 0) return std::nullopt;
  return static_cast<EdgeIndex>(raw);
}

std::string ResolvedModel::edge_path(EdgeIndex e) const {
  const auto& edge = edges_.at(e);
  return machines_[edge.id.machine].path + "/" + edge.hop_name;
}

std::string ResolvedModel::edge_name(EdgeIndex e) const {
  const auto& edge = edges_.at(e);
  return machines_[edge.id.machine].name + "/" + edge.hop_name;
}

std::string ResolvedModel::event_path(EventRef e) const {
  if (e.is_external()) return externals_.at(e.index());
  return edge_path(e.index());
}

std::string ResolvedModel::event_name(EventRef e) const {
  if (e.is_external()) return std::string(leaf_of(externals_.at(e.index())));
  return edge_name(e.index());
}

const std::string& ResolvedModel::state_name(MachineIndex m, StateIndex s) const {
  return machines_.at(m).states.at(s);
}

std::optional<MachineIndex> ResolvedModel::find_machine(std::string_view name_or_path) const {
  for (MachineIndex m = 0; m < machines_.size(); ++m) {
    if (machines_[m].name == name_or_path || machines_[m].path == name_or_path) return m;
  }
  return std::nullopt;
}

EventRef ResolvedModel::resolve_external(std::string_view name_or_path) const {
  for (std::uint32_t i = 0; i < externals_.size(); ++i) {
    if (externals_[i] == name_or_path) return EventRef::external(i);
  }
  std::optional<std::uint32_t> found;
  for (std::uint32_t i = 0; i < externals_.size(); ++i) {
    if (leaf_of(externals_[i]) == name_or_path) {
      if (found) {
        throw Error(ErrorCode::AmbiguousEvent,
                    "event name '" + std::string(name_or_path) + "' is ambiguous");
      }
      found = i;
    }
  }
  if (!found) {
    throw Error(ErrorCode::UnknownExternalEvent,
                "unknown external event '" + std::string(name_or_path) + "'");
  }
  return EventRef::external(*found);
}

GlobalState initial_state(const ResolvedModel& model) {
  std::vector<StateIndex> assignment;
  assignment.reserve(model.machines().size());
  for (const auto& m : model.machines()) assignment.push_back(m.start);
  return GlobalState(std::move(assignment));
}

ModelSize model_size(const ResolvedModel& model) {
  ModelSize size;
  for (const auto& m : model.machines()) size.states += m.states.size();
  size.edges = model.edges().size();
  return size;
}

bool is_valid_state(const ResolvedModel& model, const GlobalState& state) {
  if (state.size() != model.machines().size()) return false;
  for (MachineIndex m = 0; m < state.size(); ++m) {
    if (state[m] >= model.machines()[m].states.size()) return false;
  }
  return true;
}

std::string format_state(const ResolvedModel& model, const GlobalState& state) {
  std::string out = "(";
  for (MachineIndex m = 0; m < state.size(); ++m) {
    if (m) out += ", ";
    out += model.state_name(m, state[m]);
  }
  out += ")";
  return out;
}

// ---------------------------------------------------------------------------

ModelBuilder::ModelBuilder(std::string name) : name_(std::move(name)) {}

MachineIndex ModelBuilder::add_machine(std::string name, std::string class_name) {
  for (const auto& m : machines_) {
    if (m.name == name) {
      throw Error(ErrorCode::DuplicateInstance, "duplicate instance '" + name + "'");
    }
  }
  machines_.push_back(DraftMachine{std::move(name), std::move(class_name), {}, {}, {}});
  return static_cast<MachineIndex>(machines_.size() - 1);
}

StateIndex ModelBuilder::add_state(MachineIndex m, std::string_view name) {
  auto& states = machines_.at(m).states;
  auto it = std::find(states.begin(), states.end(), name);
  if (it != states.end()) return static_cast<StateIndex>(it - states.begin());
  if (name.find('_') != std::string_view::npos) {
    throw Error(ErrorCode::UnderscoreInStateName,
                "state name '" + std::string(name) + "' contains an underscore");
  }
  if (!is_identifier(name)) {
    throw Error(ErrorCode::InvalidModel, "invalid state name '" + std::string(name) + "'");
  }
  states.emplace_back(name);
  return static_cast<StateIndex>(states.size() - 1);
}

std::optional<EdgeHandle> ModelBuilder::find_edge(MachineIndex m, StateIndex src,
                                                  StateIndex dst) const {
  const auto& edges = machines_.at(m).edges;
  for (std::uint32_t i = 0; i < edges.size(); ++i) {
    if (edges[i].src == src && edges[i].dst == dst) return EdgeHandle{m, i};
  }
  return std::nullopt;
}

EdgeHandle ModelBuilder::add_edge(MachineIndex m, StateIndex src, StateIndex dst) {
  auto& machine = machines_.at(m);
  if (src >= machine.states.size() || dst >= machine.states.size()) {
    throw Error(ErrorCode::InvalidModel, "edge endpoint outside machine '" + machine.name + "'");
  }
  if (find_edge(m, src, dst)) {
    throw Error(ErrorCode::DuplicateEdge, "duplicate edge " + machine.states[src] + "_" +
                                              machine.states[dst] + " in '" + machine.name + "'");
  }
  machine.edges.push_back(DraftEdge{src, dst, {}, {}, {}, {}});
  return EdgeHandle{m, static_cast<std::uint32_t>(machine.edges.size() - 1)};
}

void ModelBuilder::add_label(EdgeHandle edge, std::string label) {
  auto& e = machines_.at(edge.machine).edges.at(edge.local);
  if (!is_identifier(label) || (label.front() != 'x' && label.front() != 'y')) {
    throw Error(ErrorCode::InvalidLabel,
                "label '" + label + "' must be an identifier starting with 'x' or 'y'");
  }
  auto& labels = label.front() == 'x' ? e.x_labels : e.y_labels;
  if (std::find(labels.begin(), labels.end(), label) == labels.end()) {
    labels.push_back(std::move(label));
  }
}

void ModelBuilder::set_start(MachineIndex m, StateIndex start) {
  auto& machine = machines_.at(m);
  if (start >= machine.states.size()) {
    throw Error(ErrorCode::UnknownStartState, "start state out of range in '" + machine.name + "'");
  }
  machine.start = start;
}

std::uint32_t ModelBuilder::add_external(std::string path) {
  auto it = std::find(externals_.begin(), externals_.end(), path);
  if (it != externals_.end()) return static_cast<std::uint32_t>(it - externals_.begin());
  std::string_view leaf = leaf_of(path);
  if (leaf.empty() || leaf.front() != 'x' || !is_identifier(leaf)) {
    throw Error(ErrorCode::InvalidLabel,
                "external event '" + path + "' must have an x-prefixed identifier leaf");
  }
  externals_.push_back(std::move(path));
  return static_cast<std::uint32_t>(externals_.size() - 1);
}

bool ModelBuilder::add_capture(EdgeHandle edge, CaptureTarget target, Provenance origin) {
  auto& e = machines_.at(edge.machine).edges.at(edge.local);
  if (std::find(e.captures.begin(), e.captures.end(), target) != e.captures.end()) return false;
  e.captures.push_back(target);
  e.origins.push_back(std::move(origin));
  return true;
}

void ModelBuilder::set_dispatch_order(std::vector<MachineIndex> order) {
  dispatch_ = std::move(order);
}

ResolvedModel ModelBuilder::build() && {
  if (!is_identifier(name_)) {
    throw Error(ErrorCode::InvalidModel, "invalid model name '" + name_ + "'");
  }
  ResolvedModel model;
  model.name_ = name_;
  const std::string root = "/" + name_;

  for (const auto& path : externals_) {
    if (path.rfind(root + "/", 0) != 0 || path.find('/', root.size() + 1) != std::string::npos) {
      throw Error(ErrorCode::InvalidModel,
                  "external event '" + path + "' is not at the " + root + " level");
    }
  }
  model.externals_ = externals_;

  // Global edge numbering: machine-major.
  std::vector<EdgeIndex> first_edge(machines_.size());
  EdgeIndex next = 0;
  for (std::size_t m = 0; m < machines_.size(); ++m) {
    first_edge[m] = next;
    next += static_cast<EdgeIndex>(machines_[m].edges.size());
  }
  const EdgeIndex edge_total = next;

  auto to_event = [&](const CaptureTarget& t) -> EventRef {
    if (const auto* ext = std::get_if<std::uint32_t>(&t)) {
      if (*ext >= externals_.size()) {
        throw Error(ErrorCode::InvalidModel, "capture references unknown external event");
      }
      return EventRef::external(*ext);
    }
    const auto& h = std::get<EdgeHandle>(t);
    if (h.machine >= machines_.size() || h.local >= machines_[h.machine].edges.size()) {
      throw Error(ErrorCode::InvalidModel, "capture references unknown edge");
    }
    return EventRef::internal(first_edge[h.machine] + h.local);
  };

  for (MachineIndex m = 0; m < machines_.size(); ++m) {
    const auto& draft = machines_[m];
    if (!is_identifier(draft.name)) {
      throw Error(ErrorCode::InvalidModel, "invalid instance name '" + draft.name + "'");
    }
    if (!draft.start) {
      throw Error(ErrorCode::MissingStart, "instance '" + draft.name + "' has no start state");
    }
    ResolvedMachine machine;
    machine.path = root + "/" + draft.name;
    machine.name = draft.name;
    machine.class_name = draft.class_name;
    machine.states = draft.states;
    machine.start = *draft.start;
    machine.first_edge = first_edge[m];
    machine.edge_count = static_cast<std::uint32_t>(draft.edges.size());
    model.machines_.push_back(std::move(machine));

    for (const auto& de : draft.edges) {
      ResolvedEdge edge;
      edge.id = EdgeId{m, de.src, de.dst};
      edge.hop_name = draft.states[de.src] + "_" + draft.states[de.dst];
      for (const auto& c : de.captures) edge.captures.push_back(to_event(c));
      edge.capture_origins = de.origins;
      edge.x_labels = de.x_labels;
      edge.y_labels = de.y_labels;
      model.edges_.push_back(std::move(edge));
    }
  }

  if (dispatch_) {
    std::vector<MachineIndex> sorted = *dispatch_;
    std::sort(sorted.begin(), sorted.end());
    std::vector<MachineIndex> expected(machines_.size());
    std::iota(expected.begin(), expected.end(), 0);
    if (sorted != expected) {
      throw Error(ErrorCode::InvalidModel, "dispatch order is not a permutation of the machines");
    }
    model.dispatch_ = *dispatch_;
  } else {
    model.dispatch_.resize(machines_.size());
    std::iota(model.dispatch_.begin(), model.dispatch_.end(), 0);
  }

  // Dense transition tables, one block of |states| x |events| per machine.
  const std::size_t events = externals_.size() + edge_total;
  std::size_t offset = 0;
  for (const auto& machine : model.machines_) {
    model.table_offset_.push_back(offset);
    offset += machine.states.size() * events;
  }
  model.table_.assign(offset, -1);
  for (EdgeIndex e = 0; e < edge_total; ++e) {
    const auto& edge = model.edges_[e];
    const auto& machine = model.machines_[edge.id.machine];
    for (EventRef ev : edge.captures) {
      auto& slot = model.table_[model.table_offset_[edge.id.machine] +
                                static_cast<std::size_t>(edge.id.src) * events + model.event_id(ev)];
      if (slot >= 0) {
        throw Error(ErrorCode::NondeterministicState,
                    "state '" + machine.states[edge.id.src] + "' of '" + machine.name +
                        "' has two edges (" + model.edges_[slot].hop_name + ", " + edge.hop_name +
                        ") capturing " + model.event_path(ev));
      }
      slot = static_cast<std::int32_t>(e);
    }
  }
  return model;
}

}  // namespace mcfsm
