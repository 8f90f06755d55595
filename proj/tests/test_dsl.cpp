#include <doctest.h>

#include <map>
#include <set>

#include "mcfsm/codegen.hpp"
#include "mcfsm/dsl.hpp"
#include "mcfsm/error.hpp"
#include "support/fixtures.hpp"

using namespace mcfsm;
using namespace mcfsm::dsl;
using test::kComboListing;
using test::combo_model;

namespace {

std::vector<Diagnostic> diagnostics_of(std::string_view source, std::string_view cls) {
  auto r = compile(source, cls);
  CHECK_FALSE(r.ok());
  return r.diagnostics;
}

ErrorCode first_code(std::string_view source, std::string_view cls) {
  auto d = diagnostics_of(source, cls);
  REQUIRE_FALSE(d.empty());
  return d.front().code;
}

std::string with_lights_cap(std::string_view cap) {
  std::string s(kComboListing);
  const std::string original = "cap &xFlip   +=  ../S*/yFlip";
  s.replace(s.find(original), original.size(), std::string(cap));
  return s;
}

// Selector targets rendered as "S1/up_down" or the external path.
std::vector<std::string> names(const DraftModel& draft, const std::vector<SelectorTarget>& ts) {
  std::vector<std::string> out;
  for (const auto& t : ts) {
    if (t.kind == SelectorTarget::Kind::External) {
      out.push_back(t.external_path);
    } else {
      out.push_back(draft.instances[t.instance].name + "/" + draft.instances[t.instance].edges[t.edge].hop_name);
    }
  }
  return out;
}

DraftModel combo_draft() {
  const DraftEdge up_down{"up_down", {"xPress"}, {"yFlip"}};
  const DraftEdge down_up{"down_up", {"xPress"}, {"yFlip"}};
  DraftModel d;
  d.root = "ComboSwitches";
  d.instances = {{"S1", "Switch", {up_down, down_up}},
                 {"S2", "Switch", {up_down, down_up}},
                 {"Lights",
                  "HealthSignal",
                  {{"green_yellow", {"xFlip"}, {"yYellow"}},
                   {"yellow_red", {"xFlip"}, {"yRed"}},
                   {"red_green", {"xFlip"}, {"yGreen"}}}}};
  d.external_events = {"/ComboSwitches/xPressS1"};
  return d;
}

ErrorCode selector_error(std::string_view text, Scope scope) {
  try {
    resolve_selector(classify_selector(text), scope, combo_draft());
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("selector resolved: " << text);
  return ErrorCode::ParseError;
}

}  // namespace

TEST_SUITE("dsl") {

TEST_CASE("parse: the published listing has three classes in order") {
  const Ast ast = parse(kComboListing);
  REQUIRE(ast.classes.size() == 3);
  CHECK(ast.classes[0].name() == "HealthSignal");
  CHECK(ast.classes[0].kind == ClassKind::Fsm);
  CHECK(ast.classes[1].name() == "Switch");
  CHECK(ast.classes[2].name() == "ComboSwitches");
  CHECK(ast.classes[2].kind == ClassKind::Mcfsm);
  CHECK(ast.mcfsm_class_names() == std::vector<std::string>{"ComboSwitches"});
  const auto& combo = ast.classes[2].mcfsm;
  REQUIRE(combo.instances.size() == 3);
  CHECK(combo.instances[2].name.text == "Lights");
  CHECK(combo.instances[2].span.line == 21);
  CHECK(ast.classes[0].fsm.hops.size() == 3);
}

TEST_CASE("parse: empty input and comments") {
  CHECK(parse("").classes.empty());
  CHECK(parse("# nothing here\n\n   \n").classes.empty());
}

TEST_CASE("parse errors carry a position") {
  SUBCASE("empty label list") {
    try {
      parse("FSM class \"X\" { hop a_b += }");
      FAIL("parsed");
    } catch (const DslError& e) {
      REQUIRE(e.diagnostics().size() == 1);
      CHECK(e.diagnostics()[0].code == ErrorCode::ParseError);
      CHECK(e.diagnostics()[0].span.line == 1);
    }
  }
  SUBCASE("unterminated class on a later line") {
    try {
      parse("FSM class \"X\" {\n  hop a_b += xGo\n");
      FAIL("parsed");
    } catch (const DslError& e) {
      CHECK(e.diagnostics()[0].code == ErrorCode::ParseError);
      CHECK(e.diagnostics()[0].span.line >= 2);
    }
  }
  SUBCASE("formatted as file:line:col") {
    const auto d = diagnostics_of("FSM class \"X\" {\n  hop a_b xGo\n}\n", "X");
    REQUIRE(d.size() == 1);
    const std::string text = format_diagnostic(d[0], "x.mcfsm");
    CHECK(text.rfind("x.mcfsm:2:", 0) == 0);
    CHECK(text.find(": error: ") != std::string::npos);
  }
  SUBCASE("duplicate class") {
    CHECK(first_code("FSM class \"A\" {\n hop a_b += xGo\n}\nFSM class \"A\" {\n hop a_b += xGo\n}\n",
                     "A") == ErrorCode::DuplicateClass);
  }
}

TEST_CASE("elaborate: ComboSwitches listing counts") {
  const auto model = combo_model();
  CHECK(model.name() == "ComboSwitches");
  REQUIRE(model.machines().size() == 3);
  CHECK(model.machines()[0].name == "S1");
  CHECK(model.machines()[1].name == "S2");
  CHECK(model.machines()[2].name == "Lights");
  CHECK(model.machines()[2].class_name == "HealthSignal");
  CHECK(model_size(model) == ModelSize{7, 7});
  REQUIRE(model.external_events().size() == 2);
  CHECK(model.external_events()[0] == "/ComboSwitches/xPressS1");
  CHECK(model.external_events()[1] == "/ComboSwitches/xPressS2");
  CHECK(model.machines()[0].states == std::vector<std::string>{"up", "down"});
  CHECK(model.machines()[2].states == std::vector<std::string>{"green", "yellow", "red"});
}

TEST_CASE("elaborate: hand resolution table") {
  // Worked out by hand from the listing before the elaborator existed.
  const std::map<std::string, std::vector<std::string>> expected = {
      {"S1/up_down", {"/ComboSwitches/xPressS1"}},
      {"S1/down_up", {"/ComboSwitches/xPressS1"}},
      {"S2/up_down", {"/ComboSwitches/xPressS2"}},
      {"S2/down_up", {"/ComboSwitches/xPressS2"}},
      {"Lights/green_yellow",
       {"/ComboSwitches/S1/up_down", "/ComboSwitches/S1/down_up", "/ComboSwitches/S2/up_down",
        "/ComboSwitches/S2/down_up"}},
      {"Lights/yellow_red",
       {"/ComboSwitches/S1/up_down", "/ComboSwitches/S1/down_up", "/ComboSwitches/S2/up_down",
        "/ComboSwitches/S2/down_up"}},
      {"Lights/red_green",
       {"/ComboSwitches/S1/up_down", "/ComboSwitches/S1/down_up", "/ComboSwitches/S2/up_down",
        "/ComboSwitches/S2/down_up"}},
  };
  const auto model = combo_model();
  std::map<std::string, std::vector<std::string>> actual;
  for (EdgeIndex e = 0; e < model.edges().size(); ++e) {
    auto& list = actual[model.edge_name(e)];
    for (EventRef c : model.edges()[e].captures) list.push_back(model.event_path(c));
  }
  CHECK(actual == expected);

  const auto& up_down = model.edges()[0];
  CHECK(up_down.x_labels == std::vector<std::string>{"xPress"});
  CHECK(up_down.y_labels == std::vector<std::string>{"yFlip"});
  CHECK(model.edges()[5].y_labels == std::vector<std::string>{"yRed"});
}

TEST_CASE("elaborate: every capture has provenance") {
  const auto model = combo_model();
  for (const auto& edge : model.edges()) {
    REQUIRE(edge.capture_origins.size() == edge.captures.size());
    for (const auto& origin : edge.capture_origins) {
      CHECK(origin.line > 0);
      CHECK(origin.statement.rfind("cap ", 0) == 0);
    }
  }
  CHECK(model.edges()[4].capture_origins[0].line == 23);
  CHECK(model.edges()[0].capture_origins[0].line == 15);
}

TEST_CASE("elaborate is deterministic") {
  const Ast ast = parse(kComboListing);
  CHECK(codegen::emit_table(elaborate(ast, "ComboSwitches")) ==
        codegen::emit_table(elaborate(ast, "ComboSwitches")));
}

TEST_CASE("the shipped model file is the published listing") {
  const std::string text = test::read_text(test::source_path("models/combo_switches.mcfsm"));
  CHECK(codegen::emit_table(test::compile_ok(text, "ComboSwitches")) ==
        codegen::emit_table(combo_model()));
}

TEST_CASE("elaboration errors") {
  std::string listing(kComboListing);
  auto replaced = [&](std::string_view from, std::string_view to) {
    std::string s = listing;
    s.replace(s.find(from), from.size(), to);
    return s;
  };

  SUBCASE("unknown start state") {
    const auto src = replaced("Start: yellow", "Start: sideways");
    const auto d = diagnostics_of(src, "ComboSwitches");
    REQUIRE_FALSE(d.empty());
    CHECK(d[0].code == ErrorCode::UnknownStartState);
    CHECK(d[0].span.line == 22);
  }
  SUBCASE("missing start") {
    CHECK(first_code(replaced("        Start: yellow\n", ""), "ComboSwitches") == ErrorCode::MissingStart);
  }
  SUBCASE("unknown class") {
    CHECK(first_code(listing, "Nope") == ErrorCode::UnknownClass);
    CHECK(first_code(replaced("HealthSignal inst", "Signal inst"), "ComboSwitches") ==
          ErrorCode::UnknownClass);
  }
  SUBCASE("duplicate instance") {
    CHECK(first_code(replaced("Switch inst S2", "Switch inst S1"), "ComboSwitches") ==
          ErrorCode::DuplicateInstance);
  }
  SUBCASE("empty glob match is an error") {
    CHECK(first_code(with_lights_cap("cap &xFlip += ../Q*/yFlip"), "ComboSwitches") ==
          ErrorCode::EmptyGlobMatch);
  }
  SUBCASE("unknown path") {
    CHECK(first_code(with_lights_cap("cap &xFlip += ../S1/yNope"), "ComboSwitches") ==
          ErrorCode::UnknownPath);
    CHECK(first_code(with_lights_cap("cap &xFlip += /ComboSwitch/S1/yFlip"), "ComboSwitches") ==
          ErrorCode::UnknownPath);
    CHECK(first_code(with_lights_cap("cap &xNothing += ../S1/yFlip"), "ComboSwitches") ==
          ErrorCode::UnknownPath);
  }
  SUBCASE("underscore in a state name") {
    CHECK(first_code(replaced("hop up_down  +=", "hop up_down_left  +="), "ComboSwitches") ==
          ErrorCode::UnderscoreInStateName);
  }
  SUBCASE("labels must be x or y") {
    CHECK(first_code(replaced("xPress yFlip\n    hop down_up", "xPress flip\n    hop down_up"),
                     "ComboSwitches") == ErrorCode::InvalidLabel);
  }
  SUBCASE("nondeterminism names the cap") {
    // A second hop out of 'up' also carries xPress, so &xPress binds both.
    const auto src = replaced("    hop down_up  += xPress yFlip\n",
                              "    hop down_up  += xPress yFlip\n    hop up_left  += xPress\n");
    const auto d = diagnostics_of(src, "ComboSwitches");
    REQUIRE_FALSE(d.empty());
    CHECK(d[0].code == ErrorCode::NondeterministicState);
    CHECK(d[0].span.line == 16);
  }
  SUBCASE("semantic reference at McFSM level") {
    const auto bad = replaced("    HealthSignal inst Lights {", "    cap &xFlip += ../xOops\n    HealthSignal inst Lights {");
    CHECK(first_code(bad, "ComboSwitches") == ErrorCode::InvalidSelector);
  }
  SUBCASE("deeper nesting is rejected") {
    CHECK(first_code(with_lights_cap("cap &xFlip += ../S1/up_down/more"), "ComboSwitches") ==
          ErrorCode::UnsupportedNesting);
  }
  SUBCASE("McFSM instances of McFSM classes are rejected") {
    const std::string nested = listing + "McFSM class \"Outer\" {\n    ComboSwitches inst C {\n        Start: up\n    }\n}\n";
    CHECK(first_code(nested, "Outer") == ErrorCode::UnsupportedNesting);
  }
  SUBCASE("several problems are reported together") {
    auto src = replaced("Start: yellow", "Start: sideways");
    src.replace(src.find("Switch inst S2"), 14, "Switch inst S1");
    CHECK(diagnostics_of(src, "ComboSwitches").size() >= 2);
  }
}

TEST_CASE("caps may mix selectors and duplicates are dropped") {
  const auto model = test::compile_ok(
      with_lights_cap("cap &xFlip += ../S1/yFlip ../S*/yFlip ../S1/up_down"), "ComboSwitches");
  const auto& captures = model.edges()[4].captures;
  REQUIRE(captures.size() == 4);
  CHECK(model.event_path(captures[0]) == "/ComboSwitches/S1/up_down");
  CHECK(model.event_path(captures[1]) == "/ComboSwitches/S1/down_up");
  CHECK(model.event_path(captures[2]) == "/ComboSwitches/S2/up_down");
}

TEST_CASE("caps at McFSM level with absolute paths") {
  std::string src(kComboListing);
  src.replace(src.find("        cap &xFlip   +=  ../S*/yFlip\n"), 38, "");
  src.insert(src.rfind("}"), "    cap /ComboSwitches/Lights/xFlip += /ComboSwitches/S*/yFlip\n");
  CHECK(codegen::emit_table(test::compile_ok(src, "ComboSwitches")) ==
        codegen::emit_table(combo_model()));
}

TEST_CASE("classify_selector") {
  CHECK(classify_selector("&xPress").kind == SelectorKind::SemanticRef);
  CHECK(classify_selector("../S*/yFlip").kind == SelectorKind::Glob);
  CHECK(classify_selector("../xPressS1").kind == SelectorKind::RelativePath);
  CHECK(classify_selector("/ComboSwitches/S1/up_down").kind == SelectorKind::AbsolutePath);
  CHECK(classify_selector("up_down").kind == SelectorKind::LocalPath);
}

TEST_CASE("resolve_selector examples") {
  const DraftModel draft = combo_draft();
  auto resolve = [&](std::string_view text, std::optional<std::size_t> instance) {
    return names(draft, resolve_selector(classify_selector(text), Scope{instance}, draft));
  };
  using V = std::vector<std::string>;
  CHECK(resolve("&xPress", 0) == V{"S1/up_down", "S1/down_up"});
  CHECK(resolve("&yFlip", 1) == V{"S2/up_down", "S2/down_up"});
  CHECK(resolve("&xFlip", 2) == V{"Lights/green_yellow", "Lights/yellow_red", "Lights/red_green"});
  CHECK(resolve("../S*/yFlip", 2) == V{"S1/up_down", "S1/down_up", "S2/up_down", "S2/down_up"});
  CHECK(resolve("../xPressS1", 0) == V{"/ComboSwitches/xPressS1"});
  CHECK(resolve("../xPressS2", 1) == V{"/ComboSwitches/xPressS2"});
  CHECK(resolve("/ComboSwitches/S2/down_up", std::nullopt) == V{"S2/down_up"});
  CHECK(resolve("down_up", 1) == V{"S2/down_up"});
  CHECK(resolve("/ComboSwitches/*/yRed", 0) == V{"Lights/yellow_red"});
  CHECK(resolve("/ComboSwitches/x*", std::nullopt) == V{"/ComboSwitches/xPressS1"});

  CHECK(selector_error("/ComboSwitch/xPressS1", Scope{}) == ErrorCode::UnknownPath);
  CHECK(selector_error("../Q*/yFlip", Scope{2}) == ErrorCode::EmptyGlobMatch);
  CHECK(selector_error("&xPress", Scope{}) == ErrorCode::InvalidSelector);
  CHECK(selector_error("&xNope", Scope{0}) == ErrorCode::UnknownPath);
  CHECK(selector_error("../S1/up_down/x", Scope{0}) == ErrorCode::UnsupportedNesting);
}

TEST_CASE("resolution is deterministic") {
  const DraftModel draft = combo_draft();
  const auto sel = classify_selector("../S*/yFlip");
  CHECK(resolve_selector(sel, Scope{2}, draft) == resolve_selector(sel, Scope{2}, draft));
}

}  // TEST_SUITE
