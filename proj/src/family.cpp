#include <sstream>

#include "mcfsm/analysis.hpp"
#include "mcfsm/dsl.hpp"

namespace mcfsm::analysis {

namespace {

std::vector<std::string> level_names(int levels) {
  if (levels == 3) return {"green", "yellow", "red"};
  std::vector<std::string> names;
  for (int i = 0; i < levels; ++i) names.push_back("L" + std::to_string(i));
  return names;
}

std::string capitalized(std::string s) {
  if (!s.empty() && s.front() >= 'a' && s.front() <= 'z') s.front() = static_cast<char>(s.front() - 'a' + 'A');
  return s;
}

}  // namespace

std::string switch_family_source(int switches, int levels) {
  if (switches < 1 || levels < 2) {
    throw Error(ErrorCode::InvalidModel, "switch family needs n >= 1 switches and m >= 2 levels");
  }
  const auto names = level_names(levels);
  std::ostringstream out;
  out << "FSM class \"HealthSignal\" {\n";
  for (int i = 0; i < levels; ++i) {
    const std::string& src = names[static_cast<std::size_t>(i)];
    const std::string& dst = names[static_cast<std::size_t>((i + 1) % levels)];
    out << "    hop " << src << "_" << dst << " += xFlip y" << capitalized(dst) << "\n";
  }
  out << "}\n\n";
  out << "FSM class \"Switch\" {\n"
      << "    hop up_down  += xPress yFlip\n"
      << "    hop down_up  += xPress yFlip\n"
      << "}\n\n";
  out << "McFSM class \"ComboSwitches\" {\n";
  for (int i = 1; i <= switches; ++i) {
    out << "    Switch inst S" << i << " {\n"
        << "        Start: up\n"
        << "        cap &xPress  += ../xPressS" << i << "\n"
        << "    }\n";
  }
  out << "    HealthSignal inst Lights {\n"
      << "        Start: " << names[1] << "\n"
      << "        cap &xFlip   +=  ../S*/yFlip\n"
      << "    }\n"
      << "}\n";
  return out.str();
}

ResolvedModel generate_switch_family(int switches, int levels) {
  return dsl::elaborate(dsl::parse(switch_family_source(switches, levels)), "ComboSwitches");
}

}  // namespace mcfsm::analysis
