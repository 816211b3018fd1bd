#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lod {

using State = std::vector<std::size_t>;

/// Cardinalities of a tuple of finite discrete variables.
///
/// Flat indices use mixed-radix, row-major encoding: the first variable is
/// the most significant digit and the last variable varies fastest. Every
/// table layout in the library (Pmf, Cpt, serialized models, IDX patches)
/// depends on this ordering.
class StateSpace {
 public:
  StateSpace() = default;
  explicit StateSpace(std::vector<std::size_t> cards);

  /// `n` variables sharing one cardinality.
  static StateSpace uniform(std::size_t n, std::size_t card);

  std::size_t num_vars() const noexcept { return cards_.size(); }
  std::size_t card(std::size_t var) const { return cards_.at(var); }
  const std::vector<std::size_t>& cards() const noexcept { return cards_; }
  std::size_t total() const noexcept { return total_; }

  std::size_t index(std::span<const std::size_t> state) const;
  State unindex(std::size_t flat) const;

  /// Sub-space over the listed variables, in the listed order.
  StateSpace subspace(std::span<const std::size_t> vars) const;

  bool operator==(const StateSpace&) const = default;

 private:
  std::vector<std::size_t> cards_;
  std::size_t total_ = 1;
};

/// Digits of every flat index, precomputed: `digits[flat * n + var]`.
class DigitTable {
 public:
  explicit DigitTable(const StateSpace& space);

  std::size_t operator()(std::size_t flat, std::size_t var) const {
    return digits_[flat * n_ + var];
  }
  std::size_t num_vars() const noexcept { return n_; }

 private:
  std::size_t n_;
  std::vector<std::size_t> digits_;
};

}  // namespace lod
