#pragma once

// McFSM DSL: lexer, parser, selector resolution and elaboration.
//
// Grammar (statements are newline terminated, '#' starts a comment):
//
//   file      := { fsm_class | mcfsm_class }
//   fsm_class := 'FSM' 'class' STRING '{' { 'hop' NAME '+=' LABEL+ } '}'
//   mcfsm     := 'McFSM' 'class' STRING '{' { instance | cap } '}'
//   instance  := CLASS 'inst' NAME '{' { 'Start:' STATE | cap } '}'
//   cap       := 'cap' SELECTOR+ '+=' SELECTOR+

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mcfsm/error.hpp"
#include "mcfsm/model.hpp"

namespace mcfsm::dsl {

struct SourceSpan {
  std::uint32_t line = 1;
  std::uint32_t column = 1;
};

enum class Severity { Error, Warning, Note };

struct Diagnostic {
  Severity severity = Severity::Error;
  ErrorCode code = ErrorCode::ParseError;
  SourceSpan span;
  std::string message;
};

/// "file:line:col: error: message"
std::string format_diagnostic(const Diagnostic& d, std::string_view file);

/// Thrown by parse() and elaborate(); carries every diagnostic collected.
class DslError : public Error {
 public:
  explicit DslError(std::vector<Diagnostic> diagnostics);

  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

// --- AST --------------------------------------------------------------------

struct Word {
  std::string text;
  SourceSpan span;
};

struct HopDecl {
  Word name;  // "src_dst"
  std::vector<Word> labels;
  SourceSpan span;
};

struct FsmClassDecl {
  std::string name;
  std::vector<HopDecl> hops;
  SourceSpan span;
};

struct CapDecl {
  std::vector<Word> targets;
  std::vector<Word> labels;
  SourceSpan span;
};

struct InstanceDecl {
  Word class_name;
  Word name;
  std::optional<Word> start;
  std::vector<CapDecl> caps;
  SourceSpan span;
};

struct McfsmClassDecl {
  std::string name;
  std::vector<InstanceDecl> instances;
  std::vector<CapDecl> caps;  // caps written at McFSM level, outside instances
  SourceSpan span;
};

enum class ClassKind { Fsm, Mcfsm };

struct ClassDecl {
  ClassKind kind = ClassKind::Fsm;
  FsmClassDecl fsm;
  McfsmClassDecl mcfsm;

  const std::string& name() const { return kind == ClassKind::Fsm ? fsm.name : mcfsm.name; }
  SourceSpan span() const { return kind == ClassKind::Fsm ? fsm.span : mcfsm.span; }
};

struct Ast {
  std::vector<ClassDecl> classes;

  const ClassDecl* find(std::string_view name) const;
  std::vector<std::string> mcfsm_class_names() const;
};

/// Throws DslError with a single ParseError diagnostic on the first problem.
Ast parse(std::string_view source);

// --- Selectors ----------------------------------------------------------------

enum class SelectorKind { AbsolutePath, RelativePath, LocalPath, Glob, SemanticRef };

struct Selector {
  SelectorKind kind = SelectorKind::LocalPath;
  std::string text;
};

Selector classify_selector(std::string_view text);

/// The instance table an elaboration works on before it becomes a model.
struct DraftEdge {
  std::string hop_name;
  std::vector<std::string> x_labels;
  std::vector<std::string> y_labels;

  bool has_label(std::string_view label) const;
};

struct DraftInstance {
  std::string name;
  std::string class_name;
  std::vector<DraftEdge> edges;
};

struct DraftModel {
  std::string root;
  std::vector<DraftInstance> instances;
  std::vector<std::string> external_events;  // absolute paths, first-reference order
};

/// Where a selector is written: inside an instance, or at McFSM level.
struct Scope {
  std::optional<std::size_t> instance;
};

struct SelectorTarget {
  enum class Kind { Edge, External };
  Kind kind = Kind::Edge;
  std::size_t instance = 0;
  std::size_t edge = 0;
  std::string external_path;

  friend bool operator==(const SelectorTarget&, const SelectorTarget&) = default;
};

/// Resolves one selector to edges or external events, in instance
/// declaration order then edge declaration order. A plain x-prefixed leaf at
/// McFSM level resolves to an external event even if not yet declared.
/// Throws Error(UnknownPath | EmptyGlobMatch | InvalidSelector | UnsupportedNesting).
std::vector<SelectorTarget> resolve_selector(const Selector& selector, const Scope& scope,
                                             const DraftModel& draft);

// --- Elaboration ---------------------------------------------------------------

/// Elaborates McFSM class `mcfsm_class`. Throws DslError with every diagnostic
/// found (elaboration continues past recoverable errors).
ResolvedModel elaborate(const Ast& ast, std::string_view mcfsm_class);

struct CompileResult {
  std::optional<ResolvedModel> model;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return model.has_value(); }
};

/// parse + elaborate, never throws for DSL problems.
CompileResult compile(std::string_view source, std::string_view mcfsm_class);

}  // namespace mcfsm::dsl
