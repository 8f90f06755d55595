// Portable C backend. Emits a header and one translation unit that embeds
// the flat tables and a step() entry point running the same XQueue loop as
// the reference runtime. Only <stddef.h> and <stdint.h> are included, both
// of which are available to freestanding implementations.

#include <cctype>
#include <sstream>

#include "mcfsm/codegen.hpp"
#include "mcfsm/error.hpp"

namespace mcfsm::codegen {

std::vector<std::string> source_backends() { return {"c"}; }

std::string default_basename(const ResolvedModel& model) {
  std::string p;
  for (char c : model.name()) p += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return p;
}

std::string default_prefix(const ResolvedModel& model) { return default_basename(model) + "_"; }

namespace {

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::string c_string(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

template <class T, class F>
void emit_array(std::ostream& out, std::string_view type, const std::string& name,
                const std::vector<T>& items, F&& render) {
  out << "static const " << type << ' ' << name << '[' << (items.empty() ? 1 : items.size())
      << "] = {";
  if (items.empty()) out << "0";
  for (std::size_t i = 0; i < items.size(); ++i) {
    out << (i % 12 == 0 ? "\n    " : " ") << render(items[i]) << (i + 1 < items.size() ? "," : "");
  }
  out << "\n};\n";
}

std::vector<GeneratedFile> emit_c(const ResolvedModel& model, const SourceOptions& options) {
  const FlatTable t = flatten(model);
  const std::string p = options.prefix.empty() ? default_prefix(model) : options.prefix;
  const std::string P = upper(p);
  const std::size_t events = t.events.size();

  std::vector<std::uint32_t> state_count, start, offsets, edge_dst;
  std::vector<std::int32_t> table;
  std::vector<std::string> state_names;
  std::vector<std::uint32_t> state_name_offset;
  for (MachineIndex m = 0; m < t.machines.size(); ++m) {
    const auto& fm = t.machines[m];
    state_count.push_back(static_cast<std::uint32_t>(fm.states.size()));
    start.push_back(fm.start);
    offsets.push_back(static_cast<std::uint32_t>(table.size()));
    state_name_offset.push_back(static_cast<std::uint32_t>(state_names.size()));
    for (const auto& s : fm.states) state_names.push_back(s);
    for (StateIndex s = 0; s < fm.states.size(); ++s) {
      for (EventId e = 0; e < events; ++e) table.push_back(model.transition_raw(m, s, e));
    }
  }
  for (const auto& edge : model.edges()) edge_dst.push_back(edge.id.dst);
  std::vector<std::string> machine_names;
  for (const auto& fm : t.machines) machine_names.push_back(fm.name);

  const std::string base = options.basename.empty() ? default_basename(model) : options.basename;
  const std::string guard = upper(base) + "_H";

  std::ostringstream h;
  h << "/* Generated by mcfsm from model " << model.name() << ". Do not edit.\n"
    << " *\n"
    << " * Event ids below " << t.external_count << " are external, the rest are internal\n"
    << " * (one per edge). " << p << "step() processes one external event and its\n"
    << " * whole coupling cascade, then returns the number of processed events, or\n"
    << " * a negative error code. On error the state is left untouched. */\n\n"
    << "#ifndef " << guard << "\n#define " << guard << "\n\n"
    << "#include <stddef.h>\n#include <stdint.h>\n\n";
  h << "#define " << P << "MACHINE_COUNT " << t.machines.size() << "\n"
    << "#define " << P << "EVENT_COUNT " << events << "\n"
    << "#define " << P << "EXTERNAL_COUNT " << t.external_count << "\n"
    << "#define " << P << "EDGE_COUNT " << model.edges().size() << "\n"
    << "#define " << P << "CASCADE_CAP " << options.cascade_cap << "\n"
    << "#define " << P << "ERR_UNKNOWN_EVENT (-1)\n"
    << "#define " << P << "ERR_CASCADE_OVERFLOW (-2)\n\n";
  for (std::uint32_t x = 0; x < t.external_count; ++x) {
    const std::string& path = t.events[x];
    h << "#define " << P << "EV_" << upper(path.substr(path.rfind('/') + 1)) << ' ' << x << "\n";
  }
  h << "\n#ifdef __cplusplus\nextern \"C\" {\n#endif\n\n";
  h << "typedef struct {\n    uint32_t current[" << P << "MACHINE_COUNT > 0 ? " << P
    << "MACHINE_COUNT : 1];\n} " << p << "state;\n\n";
  h << "void " << p << "init(" << p << "state *s);\n"
    << "int32_t " << p << "step(" << p << "state *s, int32_t event);\n"
    << "const char *" << p << "state_name(const " << p << "state *s, uint32_t machine);\n"
    << "uint32_t " << p << "state_count_of(uint32_t machine);\n"
    << "const char *" << p << "event_name(int32_t event);\n"
    << "const char *" << p << "machine_name(uint32_t machine);\n";
  h << "\n#ifdef __cplusplus\n}\n#endif\n\n#endif\n";

  std::ostringstream out;
  out << "/* Generated by mcfsm from model " << model.name() << ". Do not edit. */\n\n"
      << "#include \"" << base << ".h\"\n\n";
  auto num = [](auto v) { return std::to_string(v); };
  emit_array(out, "uint32_t", p + "state_count", state_count, num);
  emit_array(out, "uint32_t", p + "start", start, num);
  emit_array(out, "uint32_t", p + "dispatch", t.dispatch, num);
  emit_array(out, "uint32_t", p + "table_offset", offsets, num);
  emit_array(out, "int32_t", p + "table", table, num);
  emit_array(out, "uint32_t", p + "edge_dst", edge_dst, num);
  emit_array(out, "uint32_t", p + "state_name_offset", state_name_offset, num);
  emit_array(out, "char *const", p + "state_names", state_names, c_string);
  emit_array(out, "char *const", p + "machine_names", machine_names, c_string);
  emit_array(out, "char *const", p + "event_names", t.events, c_string);

  out << "\nvoid " << p << "init(" << p << "state *s)\n{\n"
      << "    size_t m;\n"
      << "    for (m = 0; m < " << P << "MACHINE_COUNT; ++m) s->current[m] = " << p << "start[m];\n"
      << "}\n\n";

  out << "const char *" << p << "state_name(const " << p << "state *s, uint32_t machine)\n{\n"
      << "    if (machine >= " << P << "MACHINE_COUNT) return NULL;\n"
      << "    return " << p << "state_names[" << p << "state_name_offset[machine] + s->current[machine]];\n"
      << "}\n\n";

  out << "uint32_t " << p << "state_count_of(uint32_t machine)\n{\n"
      << "    return machine < " << P << "MACHINE_COUNT ? " << p << "state_count[machine] : 0;\n"
      << "}\n\n";

  out << "const char *" << p << "event_name(int32_t event)\n{\n"
      << "    if (event < 0 || event >= " << P << "EVENT_COUNT) return NULL;\n"
      << "    return " << p << "event_names[event];\n"
      << "}\n\n";

  out << "const char *" << p << "machine_name(uint32_t machine)\n{\n"
      << "    if (machine >= " << P << "MACHINE_COUNT) return NULL;\n"
      << "    return " << p << "machine_names[machine];\n"
      << "}\n\n";

  // Internal events are FIFO among themselves; the single external event is
  // processed first, so a plain ring buffer of internals is the whole XQueue.
  out << "int32_t " << p << "step(" << p << "state *s, int32_t event)\n{\n"
      << "    int32_t queue[" << P << "CASCADE_CAP];\n"
      << "    size_t head = 0, count = 0, processed = 0, m;\n"
      << "    " << p << "state next = *s;\n"
      << "    int32_t current = event;\n"
      << "    if (event < 0 || event >= " << P << "EXTERNAL_COUNT) return " << P << "ERR_UNKNOWN_EVENT;\n"
      << "    for (;;) {\n"
      << "        if (processed == " << P << "CASCADE_CAP) return " << P << "ERR_CASCADE_OVERFLOW;\n"
      << "        ++processed;\n"
      << "        for (m = 0; m < " << P << "MACHINE_COUNT; ++m) {\n"
      << "            uint32_t machine = " << p << "dispatch[m];\n"
      << "            int32_t edge = " << p << "table[" << p << "table_offset[machine] +\n"
      << "                next.current[machine] * " << P << "EVENT_COUNT + (uint32_t)current];\n"
      << "            if (edge < 0) continue;\n"
      << "            next.current[machine] = " << p << "edge_dst[edge];\n"
      << "            if (count == " << P << "CASCADE_CAP) return " << P << "ERR_CASCADE_OVERFLOW;\n"
      << "            queue[(head + count) % " << P << "CASCADE_CAP] = " << P << "EXTERNAL_COUNT + edge;\n"
      << "            ++count;\n"
      << "        }\n"
      << "        if (count == 0) break;\n"
      << "        current = queue[head];\n"
      << "        head = (head + 1) % " << P << "CASCADE_CAP;\n"
      << "        --count;\n"
      << "    }\n"
      << "    *s = next;\n"
      << "    return (int32_t)processed;\n"
      << "}\n";
  return {{base + ".h", h.str()}, {base + ".c", out.str()}};
}

}  // namespace

std::vector<GeneratedFile> emit_source(const ResolvedModel& model, std::string_view backend,
                                       const SourceOptions& options) {
  if (backend == "c") return emit_c(model, options);
  throw Error(ErrorCode::UnknownBackend, "unknown source backend '" + std::string(backend) + "'");
}

}  // namespace mcfsm::codegen
