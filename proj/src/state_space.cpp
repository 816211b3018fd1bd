#include "lod/state_space.hpp"

#include <limits>
#include <string>

#include "lod/error.hpp"

namespace lod {

StateSpace::StateSpace(std::vector<std::size_t> cards) : cards_(std::move(cards)) {
  if (cards_.empty()) throw DomainError("state space needs at least one variable");
  total_ = 1;
  for (std::size_t c : cards_) {
    if (c < 1) throw DomainError("cardinality must be >= 1");
    if (total_ > std::numeric_limits<std::size_t>::max() / c)
      throw DomainError("state space total overflows size_t");
    total_ *= c;
  }
}

StateSpace StateSpace::uniform(std::size_t n, std::size_t card) {
  return StateSpace(std::vector<std::size_t>(n, card));
}

std::size_t StateSpace::index(std::span<const std::size_t> state) const {
  if (state.size() != cards_.size())
    throw DomainError("state has " + std::to_string(state.size()) + " values, space has " +
                      std::to_string(cards_.size()) + " variables");
  std::size_t flat = 0;
  for (std::size_t v = 0; v < cards_.size(); ++v) {
    if (state[v] >= cards_[v])
      throw DomainError("value " + std::to_string(state[v]) + " out of range for variable " +
                        std::to_string(v) + " with cardinality " + std::to_string(cards_[v]));
    flat = flat * cards_[v] + state[v];
  }
  return flat;
}

State StateSpace::unindex(std::size_t flat) const {
  if (flat >= total_) throw DomainError("flat index " + std::to_string(flat) + " out of range");
  State state(cards_.size());
  for (std::size_t v = cards_.size(); v-- > 0;) {
    state[v] = flat % cards_[v];
    flat /= cards_[v];
  }
  return state;
}

StateSpace StateSpace::subspace(std::span<const std::size_t> vars) const {
  std::vector<std::size_t> cards;
  cards.reserve(vars.size());
  for (std::size_t v : vars) {
    if (v >= cards_.size()) throw DomainError("variable " + std::to_string(v) + " out of range");
    cards.push_back(cards_[v]);
  }
  return StateSpace(std::move(cards));
}

DigitTable::DigitTable(const StateSpace& space) : n_(space.num_vars()), digits_(space.total() * n_) {
  for (std::size_t flat = 0; flat < space.total(); ++flat) {
    std::size_t rest = flat;
    for (std::size_t v = n_; v-- > 0;) {
      digits_[flat * n_ + v] = rest % space.card(v);
      rest /= space.card(v);
    }
  }
}

}  // namespace lod
