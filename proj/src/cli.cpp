#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mcfsm/analysis.hpp"
#include "mcfsm/cli.hpp"
#include "mcfsm/codegen.hpp"
#include "mcfsm/dsl.hpp"
#include "mcfsm/runtime.hpp"
#include "mcfsm/service.hpp"

namespace mcfsm::cli {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Config {
  std::string file;
  std::string mcfsm_class;
  std::size_t cap = kDefaultCascadeCap;

  std::vector<std::string> events;
  std::string trace_format = "text";
  bool json = false;
  std::uint64_t max_states = analysis::kDefaultMaxStates;
  bool dot = false;
  bool table = false;
  bool serial = false;
  std::string forbid;
  std::string backend;
  std::string out_dir;
  std::string prefix;
  std::string basename;
  std::string output;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;
  int switches = 0;
  int levels = 0;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

std::string pick_class(const Config& c, std::string_view source) {
  if (!c.mcfsm_class.empty()) return c.mcfsm_class;
  const auto names = dsl::parse(source).mcfsm_class_names();
  if (names.size() == 1) return names.front();
  std::string msg = "--class is required";
  if (!names.empty()) {
    msg += " (candidates:";
    for (const auto& n : names) msg += " " + n;
    msg += ")";
  }
  throw UsageError(msg);
}

ResolvedModel load(const Config& c) {
  const std::string source = read_file(c.file);
  return dsl::elaborate(dsl::parse(source), pick_class(c, source));
}

int cmd_check(const Config& c, std::ostream& out, std::ostream& err) {
  const std::string source = read_file(c.file);
  std::vector<std::string> classes;
  if (!c.mcfsm_class.empty()) {
    classes.push_back(c.mcfsm_class);
  } else {
    try {
      classes = dsl::parse(source).mcfsm_class_names();
    } catch (const dsl::DslError&) {
      classes.push_back("");  // let compile() report the parse error
    }
  }
  bool clean = true;
  for (const auto& cls : classes) {
    auto result = dsl::compile(source, cls);
    for (const auto& d : result.diagnostics) err << dsl::format_diagnostic(d, c.file) << "\n";
    if (!result.ok()) {
      clean = false;
      continue;
    }
    const ResolvedModel& m = *result.model;
    const ModelSize size = model_size(m);
    out << m.name() << ": " << m.machines().size() << " machines, " << size.states << " states, "
        << size.edges << " edges, " << m.external_events().size() << " external events\n";
  }
  if (classes.empty()) out << c.file << ": no McFSM class\n";
  return clean ? kExitOk : kExitDiagnostics;
}

int cmd_simulate(const Config& c, std::ostream& out, std::ostream& err) {
  const ResolvedModel model = load(c);
  std::vector<EventRef> events;
  for (const auto& e : c.events) events.push_back(model.resolve_external(e));
  const RuntimeOptions options{c.cap};
  GlobalState state = initial_state(model);
  for (std::size_t i = 0; i < events.size(); ++i) {
    MacroStepResult r;
    try {
      r = macro_step(model, state, events[i], options);
    } catch (const Error& e) {
      err << "error: event #" << i + 1 << " (" << c.events[i] << "): " << e.what() << "\n";
      return kExitDiagnostics;
    }
    if (c.trace_format == "jsonl") {
      out << trace_to_jsonl(model, r.trace) << "\n";
    } else {
      out << trace_to_text(model, r.trace, i + 1);
    }
    state = r.state;
  }
  if (c.trace_format == "text") out << "final: " << format_state(model, state) << "\n";
  return kExitOk;
}

int cmd_bound(const Config& c, std::ostream& out) {
  const ResolvedModel model = load(c);
  const auto report = analysis::cascade_bound(model);
  if (c.json) {
    out << analysis::bound_report_json(model, report) << "\n";
  } else {
    out << analysis::bound_report_text(model, report);
  }
  return kExitOk;
}

int cmd_expand(const Config& c, std::ostream& out) {
  const ResolvedModel model = load(c);
  const analysis::ProductFsm product =
      analysis::expand_product(model, {c.max_states, c.cap, !c.serial});
  if (c.dot) {
    out << analysis::to_dot(model, product);
    return kExitOk;
  }
  if (c.table) {
    out << "states " << product.state_count() << "\n";
    for (std::uint64_t s = 0; s < product.state_count(); ++s) {
      out << "s" << s << " " << format_state(model, product.decode(s)) << "\n";
    }
    out << "transitions " << product.transition_count() << "\n";
    for (std::uint64_t s = 0; s < product.state_count(); ++s) {
      for (std::size_t x = 0; x < product.event_count(); ++x) {
        out << "s" << s << " " << model.event_name(EventRef::external(static_cast<std::uint32_t>(x)))
            << " -> s" << product.next(s, x) << " steps=" << product.steps(s, x) << "\n";
      }
    }
    return kExitOk;
  }
  const ModelSize size = model_size(model);
  out << "model states: " << size.states << "\n"
      << "model edges: " << size.edges << "\n"
      << "product states: " << product.state_count() << "\n"
      << "product transitions: " << product.transition_count() << "\n"
      << "initial: " << format_state(model, product.decode(product.initial())) << "\n";
  return kExitOk;
}

std::string join_events(const ResolvedModel& model, const std::vector<EventRef>& path) {
  std::string s;
  for (std::size_t i = 0; i < path.size(); ++i) s += (i ? ", " : "") + model.event_name(path[i]);
  return path.empty() ? "(empty)" : s;
}

int cmd_reach(const Config& c, std::ostream& out) {
  const ResolvedModel model = load(c);
  const analysis::ReachOptions options{c.max_states, c.cap, !c.serial};
  if (!c.forbid.empty()) {
    const auto predicate = analysis::parse_predicate(model, c.forbid);
    const auto result = analysis::check_forbidden(model, predicate, options);
    if (result.holds_never) {
      out << "forbidden: unreachable\n";
    } else {
      out << "forbidden: reachable\n"
          << "witness: " << join_events(model, *result.witness) << "\n"
          << "reached: " << format_state(model, *result.reached) << "\n";
    }
    return kExitOk;
  }
  const auto result = analysis::explore(model, options);
  out << "reachable: " << result.states.size() << "\n";
  for (std::size_t i = 0; i < result.states.size(); ++i) {
    out << format_state(model, result.states[i]) << "  via: " << join_events(model, result.path_to(i))
        << "\n";
  }
  return kExitOk;
}

int cmd_codegen(const Config& c, std::ostream& out) {
  const ResolvedModel model = load(c);
  codegen::SourceOptions options{c.prefix, c.basename, c.cap};
  const auto files = codegen::emit_source(model, c.backend, options);
  const std::string table = codegen::emit_table(model);
  const std::string stem = c.basename.empty() ? codegen::default_basename(model) : c.basename;
  const std::filesystem::path dir(c.out_dir);
  std::filesystem::create_directories(dir);
  const auto write = [&](const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << "wrote " << path.string() << "\n";
  };
  write(dir / (stem + ".table"), table);
  for (const auto& f : files) write(dir / f.name, f.text);
  return kExitOk;
}

int cmd_serve(const Config& c, std::ostream& out, std::ostream& err) {
  service::ServiceOptions options;
  options.runtime.cascade_cap = c.cap;
  service::SessionManager sessions(options);
  service::Server server(sessions, {c.host, c.port, c.static_dir});
  const int port = server.bind();
  if (port < 0) {
    err << "error: cannot listen on " << c.host << ":" << c.port << "\n";
    return kExitDiagnostics;
  }
  out << "listening on http://" << c.host << ":" << port << std::endl;
  server.run();
  return kExitOk;
}

int cmd_family(const Config& c, std::ostream& out) {
  const std::string source = analysis::switch_family_source(c.switches, c.levels);
  if (c.output.empty()) {
    out << source;
    return kExitOk;
  }
  std::ofstream f(c.output, std::ios::binary);
  f << source;
  if (!f) throw std::runtime_error("cannot write '" + c.output + "'");
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Config c;
  CLI::App app{"Multiple coupled finite state machines: check, simulate, analyse, generate code.",
               "mcfsm"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--cap", c.cap, "Cascade cap (processed events per macro-step)")
      ->check(CLI::PositiveNumber);

  const auto file_arg = [&](CLI::App* sub) {
    sub->add_option("file", c.file, "Model source (.mcfsm)")->required();
  };
  const auto class_opt = [&](CLI::App* sub) {
    sub->add_option("--class", c.mcfsm_class, "McFSM class to elaborate");
  };

  auto* check = app.add_subcommand("check", "Elaborate every McFSM class and print diagnostics");
  file_arg(check);
  class_opt(check);

  auto* simulate = app.add_subcommand("simulate", "Run external events from the initial state");
  file_arg(simulate);
  class_opt(simulate);
  simulate->add_option("--events", c.events, "Comma-separated external events")
      ->delimiter(',')
      ->required();
  simulate->add_option("--trace", c.trace_format, "Trace format")
      ->check(CLI::IsMember({"text", "jsonl"}));

  auto* bound = app.add_subcommand("bound", "Worst-case cascade length per external event");
  file_arg(bound);
  class_opt(bound);
  bound->add_flag("--json", c.json, "JSON report");

  auto* expand = app.add_subcommand("expand", "Build the equivalent product automaton");
  file_arg(expand);
  class_opt(expand);
  expand->add_option("--max-states", c.max_states, "Refuse larger products")
      ->check(CLI::PositiveNumber);
  auto* dot = expand->add_flag("--dot", c.dot, "Graphviz output");
  auto* tbl = expand->add_flag("--table", c.table, "Full transition table");
  dot->excludes(tbl);
  expand->add_flag("--serial", c.serial, "Use the serial kernel");

  auto* reach = app.add_subcommand("reach", "Reachable global states, or a forbidden-state check");
  file_arg(reach);
  class_opt(reach);
  reach->add_option("--forbid", c.forbid, "Predicate, e.g. \"S1=down & Lights=green\"");
  reach->add_option("--max-states", c.max_states, "Exploration limit")->check(CLI::PositiveNumber);
  reach->add_flag("--serial", c.serial, "Use the serial kernel");

  auto* gen = app.add_subcommand("codegen", "Write the flat table and generated source");
  file_arg(gen);
  class_opt(gen);
  gen->add_option("--backend", c.backend, "Source backend")
      ->required()
      ->check(CLI::IsMember(codegen::source_backends()));
  gen->add_option("--out", c.out_dir, "Output directory")->required();
  gen->add_option("--prefix", c.prefix, "Symbol prefix");
  gen->add_option("--name", c.basename, "Output file stem");

  auto* serve = app.add_subcommand("serve", "Serve interactive sessions over HTTP");
  serve->add_option("--port", c.port, "TCP port (0 picks one)")->check(CLI::Range(0, 65535));
  serve->add_option("--host", c.host, "Bind address");
  serve->add_option("--static", c.static_dir, "Directory served at /")->check(CLI::ExistingDirectory);

  auto* family = app.add_subcommand("family", "Print the n-switch, m-level example model");
  family->add_option("--switches", c.switches, "Number of switches")
      ->required()
      ->check(CLI::Range(1, 64));
  family->add_option("--levels", c.levels, "Indicator levels")->required()->check(CLI::Range(2, 1024));
  family->add_option("-o,--output", c.output, "Write to a file instead of standard output");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.front()->help());
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\nrun with --help for usage\n";
    return kExitUsage;
  }

  try {
    if (check->parsed()) return cmd_check(c, out, err);
    if (simulate->parsed()) return cmd_simulate(c, out, err);
    if (bound->parsed()) return cmd_bound(c, out);
    if (expand->parsed()) return cmd_expand(c, out);
    if (reach->parsed()) return cmd_reach(c, out);
    if (gen->parsed()) return cmd_codegen(c, out);
    if (serve->parsed()) return cmd_serve(c, out, err);
    if (family->parsed()) return cmd_family(c, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const dsl::DslError& e) {
    for (const auto& d : e.diagnostics()) err << dsl::format_diagnostic(d, c.file) << "\n";
    return kExitDiagnostics;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDiagnostics;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace mcfsm::cli
