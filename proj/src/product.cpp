// Exhaustive product expansion. The serial kernel is the reference; the
// OpenMP kernel partitions the global-state index range and must produce
// byte-identical tables, including which error surfaces first.

#include <limits>

#include "mcfsm/analysis.hpp"

namespace mcfsm::analysis {

ProductFsm::ProductFsm(std::vector<std::uint32_t> radices, std::size_t event_count,
                       std::uint64_t initial)
    : radices_(std::move(radices)), state_count_(1), event_count_(event_count), initial_(initial) {
  for (auto r : radices_) state_count_ *= r;
}

GlobalState ProductFsm::decode(std::uint64_t index) const {
  std::vector<StateIndex> s(radices_.size());
  for (std::size_t m = radices_.size(); m-- > 0;) {
    s[m] = static_cast<StateIndex>(index % radices_[m]);
    index /= radices_[m];
  }
  return GlobalState(std::move(s));
}

std::uint64_t ProductFsm::encode(const GlobalState& state) const {
  std::uint64_t index = 0;
  for (std::size_t m = 0; m < radices_.size(); ++m) index = index * radices_[m] + state[m];
  return index;
}

std::optional<std::uint64_t> product_state_count(const ResolvedModel& model) {
  std::uint64_t count = 1;
  for (const auto& m : model.machines()) {
    const std::uint64_t r = m.states.size();
    if (r != 0 && count > std::numeric_limits<std::uint64_t>::max() / r) return std::nullopt;
    count *= r;
  }
  return count;
}

namespace {

std::vector<std::uint32_t> radices_of(const ResolvedModel& model) {
  std::vector<std::uint32_t> r;
  for (const auto& m : model.machines()) r.push_back(static_cast<std::uint32_t>(m.states.size()));
  return r;
}

void check_size(const ResolvedModel& model, std::uint64_t max_states) {
  auto count = product_state_count(model);
  if (!count || *count > max_states) {
    throw Error(ErrorCode::StateSpaceTooLarge,
                "product has " + (count ? std::to_string(*count) : std::string("more than 2^64")) +
                    " global states (limit " + std::to_string(max_states) + ")");
  }
}

Error overflow_at(const ResolvedModel& model, const GlobalState& state, std::size_t external,
                  const Error& cause) {
  return Error(cause.code(), std::string(cause.what()) + " from state " +
                                 format_state(model, state) + " on " +
                                 model.external_events()[external]);
}

}  // namespace

ProductFsm expand_product_serial(const ResolvedModel& model, std::uint64_t max_states,
                                 std::size_t cascade_cap) {
  check_size(model, max_states);
  const std::size_t events = model.external_events().size();
  ProductFsm p(radices_of(model), events, 0);
  p.initial_ = p.encode(initial_state(model));
  p.next_.resize(p.state_count_ * events);
  p.steps_.resize(p.state_count_ * events);
  for (std::uint64_t s = 0; s < p.state_count_; ++s) {
    const GlobalState from = p.decode(s);
    for (std::size_t x = 0; x < events; ++x) {
      GlobalState g = from;
      std::size_t steps;
      try {
        steps = advance(model, g, EventRef::external(static_cast<std::uint32_t>(x)), cascade_cap);
      } catch (const Error& e) {
        throw overflow_at(model, from, x, e);
      }
      p.next_[s * events + x] = p.encode(g);
      p.steps_[s * events + x] = static_cast<std::uint32_t>(steps);
    }
  }
  return p;
}

ProductFsm expand_product_parallel(const ResolvedModel& model, std::uint64_t max_states,
                                   std::size_t cascade_cap) {
  check_size(model, max_states);
  const std::size_t events = model.external_events().size();
  ProductFsm p(radices_of(model), events, 0);
  p.initial_ = p.encode(initial_state(model));
  p.next_.resize(p.state_count_ * events);
  p.steps_.resize(p.state_count_ * events);

  const auto total = static_cast<std::int64_t>(p.state_count_);
  const std::uint64_t none = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t first_failure = none;

#pragma omp parallel for schedule(static) reduction(min : first_failure)
  for (std::int64_t si = 0; si < total; ++si) {
    const auto s = static_cast<std::uint64_t>(si);
    const GlobalState from = p.decode(s);
    for (std::size_t x = 0; x < events; ++x) {
      GlobalState g = from;
      try {
        const std::size_t steps =
            advance(model, g, EventRef::external(static_cast<std::uint32_t>(x)), cascade_cap);
        p.next_[s * events + x] = p.encode(g);
        p.steps_[s * events + x] = static_cast<std::uint32_t>(steps);
      } catch (const Error&) {
        first_failure = std::min<std::uint64_t>(first_failure, s * events + x);
      }
    }
  }

  if (first_failure != none) {
    // Replay the failing pair serially to obtain the same error text.
    const std::uint64_t s = first_failure / events;
    const std::size_t x = first_failure % events;
    const GlobalState from = p.decode(s);
    GlobalState g = from;
    try {
      advance(model, g, EventRef::external(static_cast<std::uint32_t>(x)), cascade_cap);
    } catch (const Error& e) {
      throw overflow_at(model, from, x, e);
    }
  }
  return p;
}

ProductFsm expand_product(const ResolvedModel& model, const ExpandOptions& options) {
  return options.parallel ? expand_product_parallel(model, options.max_states, options.cascade_cap)
                          : expand_product_serial(model, options.max_states, options.cascade_cap);
}

}  // namespace mcfsm::analysis
