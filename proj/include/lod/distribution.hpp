#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "lod/state_space.hpp"

namespace lod {

/// Probabilities are clamped to this floor before any logarithm in smoothing
/// mode.
inline constexpr double kProbFloor = 1e-12;

/// Tolerance on the total mass of a Pmf or Cpt row.
inline constexpr double kMassTolerance = 1e-9;

/// How zero probabilities are treated under ln().
enum class SupportPolicy {
  kSmoothed,  // clamp to kProbFloor
  kStrict,    // raise EvaluationError
};

/// ln(max(p, kProbFloor)).
double floored_log(double p);

/// Numerically stable ln(sum(exp(v))).
double log_sum_exp(std::span<const double> values);

/// Dense probability mass function over a StateSpace.
class Pmf {
 public:
  Pmf() = default;

  /// Takes `probs` as-is; entries must be non-negative and sum to 1 within
  /// kMassTolerance.
  Pmf(StateSpace space, std::vector<double> probs);

  /// Normalizes non-negative `weights` (which must have positive mass).
  static Pmf normalized(StateSpace space, std::vector<double> weights);
  static Pmf uniform(StateSpace space);
  static Pmf point_mass(StateSpace space, std::size_t flat);

  const StateSpace& space() const noexcept { return space_; }
  std::span<const double> probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t flat) const { return probs_[flat]; }
  double at(std::span<const std::size_t> state) const { return probs_[space_.index(state)]; }

  /// Same probabilities viewed over a different space with the same total.
  Pmf reshaped(StateSpace space) const;

  /// Same probabilities over a single variable with `total` states.
  Pmf flattened() const;

 private:
  StateSpace space_;
  std::vector<double> probs_;
};

/// Conditional probability table: one distribution over `child_space` per
/// configuration of `parent_space`. A row may be marked undefined (zero
/// parent mass); reading it through row() throws.
class Cpt {
 public:
  Cpt() = default;

  /// `table` is parent-major: row `p` occupies [p*child.total(), (p+1)*child.total()).
  /// Every row flagged defined must sum to 1 within kMassTolerance.
  Cpt(StateSpace child_space, StateSpace parent_space, std::vector<double> table,
      std::vector<bool> defined = {});

  const StateSpace& child_space() const noexcept { return child_; }
  const StateSpace& parent_space() const noexcept { return parent_; }

  bool defined(std::size_t parent) const { return defined_.at(parent); }
  bool all_defined() const noexcept;

  /// Throws EvaluationError for an undefined row.
  std::span<const double> row(std::size_t parent) const;

  /// Row access without the definedness check (undefined rows read as zero).
  std::span<const double> raw_row(std::size_t parent) const;

  std::span<const double> table() const noexcept { return table_; }

 private:
  StateSpace child_;
  StateSpace parent_;
  std::vector<double> table_;
  std::vector<bool> defined_;
};

/// Independent product p(A) p(B) over the concatenated space (A first).
Pmf product(const Pmf& a, const Pmf& b);

/// D(p || q) in nats. Terms with p(i) = 0 contribute nothing. In smoothing
/// mode q is clamped to kProbFloor; in strict mode q(i) = 0 with p(i) > 0
/// raises EvaluationError carrying i.
double kl_divergence(std::span<const double> p, std::span<const double> q,
                     SupportPolicy policy = SupportPolicy::kSmoothed);
double kl_divergence(const Pmf& p, const Pmf& q, SupportPolicy policy = SupportPolicy::kSmoothed);

/// Shannon entropy in nats, 0 ln 0 := 0.
double entropy(std::span<const double> p);
double entropy(const Pmf& p);

/// Sums out all variables not in `keep`. Result variables follow the order
/// of `keep`.
Pmf marginalize(const Pmf& p, std::span<const std::size_t> keep);

/// Conditional of the remaining variables (ascending order) given `given`
/// (in the listed order). Rows with zero parent mass are marked undefined.
Cpt condition(const Pmf& p, std::span<const std::size_t> given);

}  // namespace lod
