#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mcfsm {

enum class ErrorCode {
  ParseError,
  UnknownClass,
  DuplicateClass,
  DuplicateInstance,
  UnknownPath,
  EmptyGlobMatch,
  MissingStart,
  UnknownStartState,
  NondeterministicState,
  UnderscoreInStateName,
  DuplicateState,
  DuplicateEdge,
  InvalidLabel,
  InvalidSelector,
  InvalidCapTarget,
  UnsupportedNesting,
  UnknownExternalEvent,
  AmbiguousEvent,
  CascadeOverflow,
  StateSpaceTooLarge,
  UnknownBackend,
  InvalidTable,
  SessionNotFound,
  InvalidModel,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Base exception for every failure raised by the library. Carries a stable
/// machine-readable code next to the human message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mcfsm
