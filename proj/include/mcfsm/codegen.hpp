#pragma once

// Deployable artifacts. The flat table is the canonical, language-neutral
// carrier; source backends are templates over it. See docs/formats.md.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mcfsm/model.hpp"
#include "mcfsm/runtime.hpp"

namespace mcfsm::codegen {

inline constexpr std::string_view kTableMagic = "MCFSM-TABLE v1";

struct FlatEdge {
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  std::vector<EventId> captures;  // sorted ascending
  std::vector<std::string> x_labels;
  std::vector<std::string> y_labels;
};

struct FlatMachine {
  std::string name;
  std::string class_name;
  std::vector<std::string> states;
  std::uint32_t start = 0;
  std::vector<FlatEdge> edges;
};

/// Dense-id view of a model: events are numbered externals first, then one
/// internal event per edge in (machine, edge) declaration order.
struct FlatTable {
  std::string model;
  std::vector<std::string> events;  // absolute paths
  std::uint32_t external_count = 0;
  std::vector<FlatMachine> machines;
  std::vector<std::uint32_t> dispatch;
};

FlatTable flatten(const ResolvedModel& model);
std::string serialize(const FlatTable& table);
/// Throws Error(InvalidTable) with the offending line.
FlatTable read_table(std::string_view text);
ResolvedModel to_model(const FlatTable& table);

/// Canonical bytes; identical for identical models.
std::string emit_table(const ResolvedModel& model);
ResolvedModel parse_table(std::string_view text);

struct SourceOptions {
  /// Identifier prefix for every emitted symbol; defaults to the lower-cased
  /// model name followed by '_'.
  std::string prefix;
  /// File name stem; defaults to the lower-cased model name.
  std::string basename;
  std::size_t cascade_cap = kDefaultCascadeCap;
};

struct GeneratedFile {
  std::string name;
  std::string text;
};

std::vector<std::string> source_backends();

/// Interface and implementation files, in that order.
/// Throws Error(UnknownBackend).
std::vector<GeneratedFile> emit_source(const ResolvedModel& model, std::string_view backend,
                                       const SourceOptions& options = {});

std::string default_prefix(const ResolvedModel& model);
std::string default_basename(const ResolvedModel& model);

}  // namespace mcfsm::codegen
