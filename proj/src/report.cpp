#include <sstream>

#include <nlohmann/json.hpp>

#include "mcfsm/analysis.hpp"

namespace mcfsm::analysis {

std::string bound_report_json(const ResolvedModel& model, const BoundReport& report) {
  nlohmann::ordered_json j;
  j["model"] = model.name();
  j["metric"] = "processed-events";
  j["events"] = nlohmann::ordered_json::array();
  for (const auto& b : report.per_event) {
    nlohmann::ordered_json e;
    e["event"] = model.event_path(b.event);
    if (b.bound) {
      e["bound"] = *b.bound;
      e["fired_bound"] = *b.fired_bound;
    } else {
      e["bound"] = "unbounded";
      e["fired_bound"] = "unbounded";
    }
    e["witness"] = nlohmann::ordered_json::array();
    for (EventRef w : b.witness) e["witness"].push_back(model.event_path(w));
    j["events"].push_back(std::move(e));
  }
  return j.dump();
}

std::string bound_report_text(const ResolvedModel& model, const BoundReport& report) {
  std::ostringstream out;
  for (const auto& b : report.per_event) {
    out << model.event_name(b.event) << ": ";
    if (b.bound) {
      out << "bound " << *b.bound << " (fired " << *b.fired_bound << ")";
    } else {
      out << "unbounded";
    }
    out << (b.bound ? "  longest chain: " : "  cycle: ");
    for (std::size_t i = 0; i < b.witness.size(); ++i) {
      out << (i ? " -> " : "") << model.event_name(b.witness[i]);
    }
    out << "\n";
  }
  return out.str();
}

namespace {

std::string dot_string(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string node_id(const ResolvedModel& model, MachineIndex m, StateIndex s) {
  return dot_string(model.machines()[m].name + "." + model.state_name(m, s));
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? std::string(sep) : "") + parts[i];
  return out;
}

}  // namespace

std::string to_dot(const ResolvedModel& model) {
  std::ostringstream out;
  out << "digraph " << dot_string(model.name()) << " {\n  rankdir=LR;\n  node [shape=circle];\n";
  for (MachineIndex m = 0; m < model.machines().size(); ++m) {
    const auto& machine = model.machines()[m];
    out << "  subgraph " << dot_string("cluster_" + machine.name) << " {\n"
        << "    label=" << dot_string(machine.name + " : " + machine.class_name) << ";\n";
    for (StateIndex s = 0; s < machine.states.size(); ++s) {
      out << "    " << node_id(model, m, s) << " [label=" << dot_string(machine.states[s])
          << (s == machine.start ? ", style=bold" : "") << "];\n";
    }
    out << "  }\n";
  }
  for (const auto& edge : model.edges()) {
    std::vector<std::string> above;
    for (EventRef c : edge.captures) above.push_back(model.event_name(c));
    for (const auto& l : edge.x_labels) above.push_back(l);
    out << "  " << node_id(model, edge.id.machine, edge.id.src) << " -> "
        << node_id(model, edge.id.machine, edge.id.dst)
        << " [label=" << dot_string(join(above, ", ") + "\n----\n" + join(edge.y_labels, ", "))
        << "];\n";
  }
  out << "}\n";
  return out.str();
}

std::string to_dot(const ResolvedModel& model, const ProductFsm& product) {
  std::ostringstream out;
  out << "digraph " << dot_string(model.name() + "_product") << " {\n  node [shape=box];\n";
  for (std::uint64_t s = 0; s < product.state_count(); ++s) {
    out << "  s" << s << " [label=" << dot_string(format_state(model, product.decode(s)))
        << (s == product.initial() ? ", style=bold" : "") << "];\n";
  }
  for (std::uint64_t s = 0; s < product.state_count(); ++s) {
    for (std::size_t x = 0; x < product.event_count(); ++x) {
      out << "  s" << s << " -> s" << product.next(s, x) << " [label="
          << dot_string(model.event_name(EventRef::external(static_cast<std::uint32_t>(x)))) << "];\n";
    }
  }
  out << "}\n";
  return out.str();
}

std::string to_dot(const ResolvedModel& model, const CouplingGraph& graph) {
  std::ostringstream out;
  out << "digraph " << dot_string(model.name() + "_coupling") << " {\n";
  for (EventId v = 0; v < graph.node_count; ++v) {
    const EventRef e = model.event_from_id(v);
    out << "  e" << v << " [label=" << dot_string(model.event_name(e))
        << (e.is_external() ? ", shape=box" : ", shape=ellipse") << "];\n";
  }
  for (EventId v = 0; v < graph.node_count; ++v) {
    for (EventId w : graph.successors[v]) out << "  e" << v << " -> e" << w << ";\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace mcfsm::analysis
