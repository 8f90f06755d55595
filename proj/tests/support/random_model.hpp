#pragma once

#include <random>

#include "mcfsm/model.hpp"

namespace mcfsm::test {

struct RandomModelShape {
  int max_machines = 4;
  int max_states = 4;
  int max_externals = 3;
  /// Edges only capture externals and edges of earlier machines, so the
  /// coupling graph is acyclic.
  bool acyclic = true;
};

/// Random valid model; deterministic for a given generator state.
ResolvedModel random_model(std::mt19937_64& rng, const RandomModelShape& shape = {});

}  // namespace mcfsm::test
