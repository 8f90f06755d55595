#include <doctest.h>

#include <deque>
#include <set>

#include <nlohmann/json.hpp>

#include "mcfsm/analysis.hpp"
#include "mcfsm/error.hpp"
#include "support/fixtures.hpp"
#include "support/random_model.hpp"

using namespace mcfsm;
using namespace mcfsm::analysis;
using test::combo_model;
using test::state_of;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an mcfsm::Error");
  return ErrorCode::InvalidModel;
}

std::set<std::string> successors(const ResolvedModel& model, const CouplingGraph& g, std::string_view node) {
  std::set<std::string> out;
  for (EventId v = 0; v < g.node_count; ++v) {
    if (model.event_name(model.event_from_id(v)) != node) continue;
    for (EventId w : g.successors[v]) out.insert(model.event_name(model.event_from_id(w)));
  }
  return out;
}

std::vector<std::string> names(const ResolvedModel& model, const std::vector<EventRef>& events) {
  std::vector<std::string> out;
  for (EventRef e : events) out.push_back(model.event_name(e));
  return out;
}

constexpr std::string_view kLoop = R"(FSM class "P" {
    hop a_b += xGo yHop
    hop b_a += xGo yHop
}
McFSM class "Loop" {
    P inst A {
        Start: a
        cap &xGo += ../xKick ../B/yHop
    }
    P inst B {
        Start: a
        cap &xGo += ../A/yHop ../xOther
    }
    P inst C {
        Start: a
        cap &xGo += ../xCalm
    }
}
)";

// Breadth-first search over the explicit product; the independent oracle for
// check_forbidden.
std::optional<std::size_t> product_distance(const ProductFsm& p, const Predicate& pred) {
  std::vector<int> dist(p.state_count(), -1);
  std::deque<std::uint64_t> todo{p.initial()};
  dist[p.initial()] = 0;
  while (!todo.empty()) {
    const auto s = todo.front();
    todo.pop_front();
    if (pred.matches(p.decode(s))) return static_cast<std::size_t>(dist[s]);
    for (std::size_t x = 0; x < p.event_count(); ++x) {
      const auto t = p.next(s, x);
      if (dist[t] < 0) {
        dist[t] = dist[s] + 1;
        todo.push_back(t);
      }
    }
  }
  return std::nullopt;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("coupling graph of ComboSwitches") {
  const auto model = combo_model();
  const auto g = build_coupling_graph(model);
  CHECK(g.node_count == 9);
  using S = std::set<std::string>;
  CHECK(successors(model, g, "xPressS1") == S{"S1/up_down", "S1/down_up"});
  CHECK(successors(model, g, "xPressS2") == S{"S2/up_down", "S2/down_up"});
  const S lights{"Lights/green_yellow", "Lights/yellow_red", "Lights/red_green"};
  for (auto sw : {"S1/up_down", "S1/down_up", "S2/up_down", "S2/down_up"}) {
    CHECK(successors(model, g, sw) == lights);
  }
  for (const auto& l : lights) CHECK(successors(model, g, l).empty());
  CHECK(g.arc_count() == 4 + 12);
  for (const auto& list : g.successors) CHECK(std::is_sorted(list.begin(), list.end()));
}

TEST_CASE("coupling graph without internal captures has no internal arcs") {
  const auto model = test::compile_ok(R"(FSM class "T" {
    hop a_b += xGo
    hop b_a += xGo
}
McFSM class "M" {
    T inst X {
        Start: a
        cap &xGo += ../xGo
    }
}
)", "M");
  const auto g = build_coupling_graph(model);
  for (EventId v = static_cast<EventId>(model.external_events().size()); v < g.node_count; ++v) {
    CHECK(g.successors[v].empty());
  }
  const auto report = cascade_bound(model);
  CHECK(report.per_event[0].bound == 2u);
}

TEST_CASE("cascade_bound of ComboSwitches") {
  const auto model = combo_model();
  const auto report = cascade_bound(model);
  REQUIRE(report.per_event.size() == 2);
  for (const auto& b : report.per_event) {
    CHECK(b.bound == 3u);
    CHECK(b.fired_bound == 2u);
    CHECK(b.witness.size() == 3);
  }
  CHECK(names(model, report.at(EventRef::external(1)).witness).front() == "xPressS2");
}

TEST_CASE("cascade_bound: zero couplings") {
  ModelBuilder b("Z");
  b.add_external("/Z/xA");
  b.add_external("/Z/xB");
  const auto m = b.add_machine("M", "K");
  b.add_state(m, "a");
  b.set_start(m, 0);
  const auto model = std::move(b).build();
  for (const auto& e : cascade_bound(model).per_event) CHECK(e.bound == 1u);
}

TEST_CASE("cascade_bound: cycles are unbounded per event") {
  const auto model = test::compile_ok(kLoop, "Loop");
  const auto report = cascade_bound(model);
  const auto& kick = report.at(model.resolve_external("xKick"));
  CHECK_FALSE(kick.bound.has_value());
  REQUIRE(kick.witness.size() >= 3);
  CHECK(names(model, kick.witness).front() == "xKick");
  // The witness ends by re-entering the cycle.
  const auto last = kick.witness.back();
  CHECK(std::count(kick.witness.begin(), kick.witness.end(), last) == 2);
  CHECK_FALSE(report.at(model.resolve_external("xOther")).bound.has_value());
  CHECK(report.at(model.resolve_external("xCalm")).bound == 2u);
}

TEST_CASE("cascade_bound counts fan-out per machine") {
  // xGo fires A and B at once, and each of their edges fires C: 1 + 2 + 2.
  const auto model = test::compile_ok(R"(FSM class "T" {
    hop a_b += xGo
    hop b_a += xGo
}
McFSM class "M" {
    T inst A {
        Start: a
        cap &xGo += ../xGo
    }
    T inst B {
        Start: a
        cap &xGo += ../xGo
    }
    T inst C {
        Start: a
        cap &xGo += ../A/a_b ../B/a_b ../A/b_a ../B/b_a
    }
}
)", "M");
  const auto bound = cascade_bound(model).per_event[0].bound;
  CHECK(bound == 5u);
  // Observed: xGo, A/a_b, B/a_b, C/a_b, C/b_a.
  CHECK(macro_step(model, initial_state(model), EventRef::external(0)).trace.step_count() == 5);
}

TEST_CASE("expand_product: ComboSwitches") {
  const auto model = combo_model();
  const auto p = expand_product(model);
  CHECK(p.state_count() == 12);
  CHECK(p.event_count() == 2);
  CHECK(p.transition_count() == 24);
  CHECK(p.decode(p.initial()) == initial_state(model));
  for (std::uint64_t s = 0; s < p.state_count(); ++s) {
    CHECK(p.encode(p.decode(s)) == s);
    for (std::size_t x = 0; x < 2; ++x) {
      const auto r = macro_step(model, p.decode(s), EventRef::external(static_cast<std::uint32_t>(x)));
      CHECK(p.decode(p.next(s, x)) == r.state);
      CHECK(p.steps(s, x) == r.trace.step_count());
    }
  }
}

TEST_CASE("expand_product: switch family sizes") {
  for (int n = 1; n <= 5; ++n) {
    for (int m = 2; m <= 4; ++m) {
      const auto p = expand_product(generate_switch_family(n, m));
      CHECK(p.state_count() == static_cast<std::uint64_t>(m) << n);
      CHECK(p.transition_count() == p.state_count() * static_cast<std::uint64_t>(n));
    }
  }
  const auto f12 = generate_switch_family(1, 2);
  CHECK(model_size(f12) == ModelSize{4, 4});
  CHECK(expand_product(f12).state_count() == 4);
  const auto f54 = generate_switch_family(5, 4);
  CHECK(model_size(f54).states == 14);
  CHECK(expand_product(f54).state_count() == 128);
}

TEST_CASE("expand_product: a single two-state machine") {
  const auto model = test::compile_ok(R"(FSM class "T" {
    hop a_b += xFlip
    hop b_a += xFlip
}
McFSM class "M" {
    T inst X {
        Start: a
        cap &xFlip += ../xFlip
    }
}
)", "M");
  const auto p = expand_product(model);
  CHECK(p.state_count() == 2);
  CHECK(p.transition_count() == 2);
  CHECK(p.next(0, 0) == 1);
  CHECK(p.next(1, 0) == 0);
}

TEST_CASE("expand_product: limits and overflow") {
  const auto model = combo_model();
  CHECK(code_of([&] { expand_product(model, {11, kDefaultCascadeCap, true}); }) ==
        ErrorCode::StateSpaceTooLarge);
  CHECK(code_of([&] { expand_product(model, {11, kDefaultCascadeCap, false}); }) ==
        ErrorCode::StateSpaceTooLarge);
  CHECK(product_state_count(model) == 12u);

  const auto loop = test::compile_ok(kLoop, "Loop");
  for (bool parallel : {false, true}) {
    try {
      expand_product(loop, {kDefaultMaxStates, 100, parallel});
      FAIL("no overflow");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::CascadeOverflow);
      CHECK(std::string(e.what()).find("xKick") != std::string::npos);
    }
  }
}

TEST_CASE("serial and parallel kernels agree") {
  for (auto [n, m] : {std::pair{2, 3}, {4, 3}, {5, 4}, {7, 5}}) {
    const auto model = generate_switch_family(n, m);
    CHECK(expand_product_serial(model, kDefaultMaxStates, kDefaultCascadeCap) ==
          expand_product_parallel(model, kDefaultMaxStates, kDefaultCascadeCap));
    const auto a = explore_serial(model, kDefaultMaxStates, kDefaultCascadeCap);
    const auto b = explore_parallel(model, kDefaultMaxStates, kDefaultCascadeCap);
    CHECK(a.states == b.states);
    CHECK(a.parent == b.parent);
    CHECK(a.via == b.via);
  }
  std::mt19937_64 rng(99);
  for (int i = 0; i < 40; ++i) {
    const auto model = test::random_model(rng, {5, 4, 3, true});
    CHECK(expand_product_serial(model, kDefaultMaxStates, 1000) ==
          expand_product_parallel(model, kDefaultMaxStates, 1000));
    CHECK(explore_serial(model, kDefaultMaxStates, 1000).states ==
          explore_parallel(model, kDefaultMaxStates, 1000).states);
  }
}

TEST_CASE("reachable states") {
  const auto model = combo_model();
  const auto reach = explore(model);
  CHECK(reach.states.size() == 12);
  CHECK(reach.states.front() == initial_state(model));
  for (std::size_t i = 0; i < reach.states.size(); ++i) {
    GlobalState s = initial_state(model);
    const auto path = reach.path_to(i);
    for (EventRef e : path) s = macro_step(model, s, e).state;
    CHECK(s == reach.states[i]);
    // Every reachable state satisfies the closed form found by hand.
    int p1 = 0, p2 = 0;
    for (EventRef e : path) (e.index() == 0 ? p1 : p2)++;
    CHECK(s[0] == static_cast<StateIndex>(p1 % 2));
    CHECK(s[1] == static_cast<StateIndex>(p2 % 2));
    CHECK(s[2] == static_cast<StateIndex>((1 + p1 + p2) % 3));
  }
  CHECK(reachable_states(model).size() == 12);
  CHECK(code_of([&] { explore(model, {5, kDefaultCascadeCap, true}); }) == ErrorCode::StateSpaceTooLarge);
}

TEST_CASE("reachable states: an isolated machine stays at its start") {
  const auto model = test::compile_ok(R"(FSM class "T" {
    hop a_b += xGo
    hop b_a += xGo
}
McFSM class "M" {
    T inst X {
        Start: a
        cap &xGo += ../xGo
    }
    T inst Idle {
        Start: b
    }
}
)", "M");
  const auto states = reachable_states(model);
  CHECK(states.size() == 2);
  for (const auto& s : states) CHECK(model.state_name(1, s[1]) == "b");
}

TEST_CASE("predicates") {
  const auto model = combo_model();
  const auto p = parse_predicate(model, "S1=down ∧ Lights=green");
  REQUIRE(p.all_of.size() == 2);
  CHECK(p.matches(state_of(model, {"down", "up", "green"})));
  CHECK_FALSE(p.matches(state_of(model, {"down", "up", "red"})));
  CHECK(parse_predicate(model, "/ComboSwitches/S1 = down && S2=up").all_of.size() == 2);
  CHECK(parse_predicate(model, "S1=down and S2=up, Lights=red").all_of.size() == 3);
  CHECK(code_of([&] { parse_predicate(model, "Lights = purple"); }) == ErrorCode::UnknownPath);
  CHECK(code_of([&] { parse_predicate(model, "Lamp = red"); }) == ErrorCode::UnknownPath);
}

TEST_CASE("check_forbidden") {
  const auto model = combo_model();
  SUBCASE("initial state matches with an empty witness") {
    const auto r = check_forbidden(model, parse_predicate(model, "S1=up & Lights=yellow"));
    CHECK_FALSE(r.holds_never);
    REQUIRE(r.witness.has_value());
    CHECK(r.witness->empty());
  }
  SUBCASE("all switches down with yellow needs six presses") {
    const auto r = check_forbidden(model, parse_predicate(model, "S1=down ∧ S2=down ∧ Lights=yellow"));
    CHECK_FALSE(r.holds_never);
    REQUIRE(r.witness.has_value());
    CHECK(r.witness->size() == 6);
    GlobalState s = initial_state(model);
    for (EventRef e : *r.witness) s = macro_step(model, s, e).state;
    CHECK(format_state(model, s) == "(down, down, yellow)");
    CHECK(r.reached == s);
  }
  SUBCASE("S1=down and green") {
    const auto r = check_forbidden(model, parse_predicate(model, "S1=down ∧ Lights=green"));
    CHECK_FALSE(r.holds_never);
    CHECK(r.witness->size() == 2);
  }
  SUBCASE("an unreachable combination") {
    const auto isolated = test::compile_ok(R"(FSM class "T" {
    hop a_b += xGo
    hop b_a += xGo
}
McFSM class "M" {
    T inst X {
        Start: a
        cap &xGo += ../xGo
    }
    T inst Idle {
        Start: b
    }
}
)", "M");
    const auto r = check_forbidden(isolated, parse_predicate(isolated, "Idle=a"));
    CHECK(r.holds_never);
    CHECK_FALSE(r.witness.has_value());
  }
}

TEST_CASE("check_forbidden agrees with BFS over the product for every single-state predicate") {
  const auto model = combo_model();
  const auto product = expand_product(model);
  for (std::uint64_t target = 0; target < product.state_count(); ++target) {
    const GlobalState g = product.decode(target);
    Predicate pred;
    for (MachineIndex m = 0; m < g.size(); ++m) pred.all_of.push_back({m, g[m]});
    const auto r = check_forbidden(model, pred);
    const auto d = product_distance(product, pred);
    CHECK(r.holds_never == !d.has_value());
    if (d) CHECK(r.witness->size() == *d);
  }
}

TEST_CASE("explosion ratio grows with n") {
  for (int m = 2; m <= 5; ++m) {
    double last = 0;
    for (int n = 1; n <= 8; ++n) {
      const auto model = generate_switch_family(n, m);
      const double ratio = static_cast<double>(*product_state_count(model)) /
                           static_cast<double>(model_size(model).states);
      CHECK(ratio == doctest::Approx(static_cast<double>(m << n) / (2 * n + m)));
      CHECK(ratio > last);
      last = ratio;
    }
  }
}

TEST_CASE("generator") {
  CHECK(code_of([] { generate_switch_family(0, 3); }) == ErrorCode::InvalidModel);
  CHECK(code_of([] { generate_switch_family(2, 1); }) == ErrorCode::InvalidModel);
  CHECK(switch_family_source(2, 3) == switch_family_source(2, 3));
  // (2, 3) is the published model.
  const auto g = generate_switch_family(2, 3);
  const auto p = combo_model();
  CHECK(model_size(g) == model_size(p));
  CHECK(build_coupling_graph(g).successors == build_coupling_graph(p).successors);
  CHECK(expand_product(g) == expand_product(p));
  const auto m4 = generate_switch_family(1, 4);
  CHECK(m4.machines()[1].states.size() == 4);
}

TEST_CASE("bound soundness on random acyclic models") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 100; ++i) {
    const auto model = test::random_model(rng, {4, 4, 3, true});
    const auto report = cascade_bound(model);
    for (const auto& s : reachable_states(model, {kDefaultMaxStates, 1000, false})) {
      for (std::uint32_t x = 0; x < model.external_events().size(); ++x) {
        const auto& b = report.per_event[x];
        REQUIRE(b.bound.has_value());
        GlobalState t = s;
        CHECK(advance(model, t, EventRef::external(x), 1000) <= *b.bound);
      }
    }
  }
}

TEST_CASE("observed causation follows coupling arcs") {
  const auto model = generate_switch_family(3, 4);
  const auto g = build_coupling_graph(model);
  std::mt19937_64 rng(5);
  GlobalState s = initial_state(model);
  for (int i = 0; i < 300; ++i) {
    const auto r = macro_step(model, s, EventRef::external(static_cast<std::uint32_t>(rng() % 3)));
    for (std::size_t k = 1; k < r.trace.processed.size(); ++k) {
      const EventId w = model.event_id(r.trace.processed[k]);
      bool caused = false;
      for (std::size_t j = 0; j < k; ++j) {
        const auto& succ = g.successors[model.event_id(r.trace.processed[j])];
        caused = caused || std::binary_search(succ.begin(), succ.end(), w);
      }
      CHECK(caused);
    }
    s = r.state;
  }
}

TEST_CASE("reports") {
  const auto model = combo_model();
  const auto json = nlohmann::json::parse(bound_report_json(model, cascade_bound(model)));
  CHECK(json["events"].size() == 2);
  CHECK(json["events"][0]["event"] == "/ComboSwitches/xPressS1");
  CHECK(json["events"][0]["bound"] == 3);
  CHECK(json["events"][1]["bound"] == 3);
  CHECK(bound_report_text(model, cascade_bound(model)).find("xPressS2: bound 3") != std::string::npos);

  const auto dot = to_dot(model);
  CHECK(dot.find("cluster_Lights") != std::string::npos);
  CHECK(dot.find("\"S1.up\" -> \"S1.down\"") != std::string::npos);
  CHECK(dot.find("xPressS1, xPress\\n----\\nyFlip") != std::string::npos);
  CHECK(to_dot(model) == dot);
  const auto pdot = to_dot(model, expand_product(model));
  CHECK(std::count(pdot.begin(), pdot.end(), '>') == 24);
  CHECK(to_dot(model, build_coupling_graph(model)).find("e0 -> e2") != std::string::npos);
  const auto loop = test::compile_ok(kLoop, "Loop");
  CHECK(bound_report_json(loop, cascade_bound(loop)).find("\"unbounded\"") != std::string::npos);
}

}  // TEST_SUITE
