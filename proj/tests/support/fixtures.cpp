#include "support/fixtures.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mcfsm/dsl.hpp"

namespace mcfsm::test {

ResolvedModel compile_ok(std::string_view source, std::string_view mcfsm_class) {
  auto result = dsl::compile(source, mcfsm_class);
  if (!result.ok()) {
    std::string msg = "unexpected diagnostics:";
    for (const auto& d : result.diagnostics) msg += "\n  " + dsl::format_diagnostic(d, "<test>");
    throw std::runtime_error(msg);
  }
  return std::move(*result.model);
}

ResolvedModel combo_model() { return compile_ok(kComboListing, "ComboSwitches"); }

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string source_path(const std::string& relative) {
  return std::string(MCFSM_SOURCE_DIR) + "/" + relative;
}

GlobalState state_of(const ResolvedModel& model, std::initializer_list<std::string_view> names) {
  if (names.size() != model.machines().size()) throw std::invalid_argument("state_of: arity");
  std::vector<StateIndex> a;
  MachineIndex m = 0;
  for (auto n : names) {
    auto s = model.machines()[m++].find_state(n);
    if (!s) throw std::invalid_argument("state_of: unknown state " + std::string(n));
    a.push_back(*s);
  }
  return GlobalState(std::move(a));
}

}  // namespace mcfsm::test
