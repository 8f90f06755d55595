#pragma once

#include <string>
#include <string_view>

#include "mcfsm/model.hpp"

namespace mcfsm::test {

// The ComboSwitches listing exactly as published.
inline constexpr std::string_view kComboListing = R"(FSM class "HealthSignal" {
    hop green_yellow  += xFlip yYellow
    hop yellow_red    += xFlip yRed
    hop red_green     += xFlip yGreen
}

FSM class "Switch" {
    hop up_down  += xPress yFlip
    hop down_up  += xPress yFlip
}

McFSM class "ComboSwitches" {
    Switch inst S1 {
        Start: up
        cap &xPress  += ../xPressS1
    }
    Switch inst S2 {
        Start: up
        cap &xPress  += ../xPressS2
    }
    HealthSignal inst Lights {
        Start: yellow
        cap &xFlip   +=  ../S*/yFlip
    }
}
)";

ResolvedModel combo_model();
/// Compiles or fails the current test with the diagnostics.
ResolvedModel compile_ok(std::string_view source, std::string_view mcfsm_class);
std::string read_text(const std::string& path);
std::string source_path(const std::string& relative);

/// Global state from state names, machine order.
GlobalState state_of(const ResolvedModel& model, std::initializer_list<std::string_view> names);

}  // namespace mcfsm::test
