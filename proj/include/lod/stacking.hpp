#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "lod/measures.hpp"
#include "lod/model.hpp"
#include "lod/training.hpp"

namespace lod {

/// Permutation of {0, ..., 2^m - 1}: SL latent state l becomes the m-bit
/// code `code[l]` (first bit most significant).
class Bijection {
 public:
  explicit Bijection(std::vector<std::size_t> code);

  std::size_t bits() const noexcept { return bits_; }
  const std::vector<std::size_t>& code() const noexcept { return code_; }
  StateSpace binary_space() const { return StateSpace::uniform(bits_, 2); }

  auto operator<=>(const Bijection&) const = default;

 private:
  std::vector<std::size_t> code_;
  std::size_t bits_ = 0;
};

/// Lower two-layer model plus an SL model trained on its latent layer.
///
/// `lower` is the model as trained. For SL lowers the `bijection` rewrites
/// its single latent variable as binary variables, and `higher` observes
/// those.
struct StackedModel {
  GenerativeModel lower;
  std::optional<Bijection> bijection;
  GenerativeModel higher;
  Pmf pdata;

  /// `lower` with the bijection applied (or `lower` itself).
  GenerativeModel effective_lower() const;
  /// Throws DomainError if the higher model does not observe the lower
  /// latent space.
  void validate() const;
};

/// pdata pushed through the lower posterior: sum_x pdata(x) p_L(Y|x).
Pmf pushforward_latent(const GenerativeModel& lower, const Pmf& pdata, const EvalOptions& options = {});

/// Applies the bijection to an SL model with 2^m latent states.
GenerativeModel binary_relabel(const GenerativeModel& lower, const Bijection& bijection);

/// Higher SL model with `k_z` latent states fit by EM to maximize
/// sum_y latent_pdata(y) ln p_H(y).
FitResult fit_higher(const Pmf& latent_pdata, std::size_t k_z, const TrainConfig& config);

/// Higher-model objective reached with a single binary Z after relabeling
/// by `bijection`.
double bijection_score(const GenerativeModel& lower, const Pmf& pdata, const Bijection& bijection,
                       const TrainConfig& config);

struct BinaryConversion {
  GenerativeModel converted;
  Bijection bijection;
  double score;                          // winning bijection_score
  std::vector<Bijection> candidates;     // in generation order
  std::vector<double> candidate_scores;  // parallel to candidates
};

/// Draws `candidates` random bijections (seeded by config.seed), scores each
/// with bijection_score and keeps the best; ties within 1e-12 go to the
/// lexicographically smallest permutation.
BinaryConversion sl_to_binary(const GenerativeModel& lower, const Pmf& pdata, std::size_t candidates,
                              const TrainConfig& config);

/// Scores of X against the lower latent layer along the encoder chain:
/// encoder p_L(Y|X), latent marginal sum_x pdata(x) p_L(Y|x). `loglik` is
/// the lower model's data loglik.
EvalScores chain_scores(const GenerativeModel& lower, const Pmf& pdata, const EvalOptions& options = {});

/// Scores of X against Z through the connected encoder
/// p_C(Z|x) = sum_y p_H(Z|y) p_L(y|x) with marginal p_C(Z) under pdata.
/// `loglik` holds the higher-model objective sum_y ptilde(y) ln p_H(y).
EvalScores connected_scores(const StackedModel& stacked, const EvalOptions& options = {});

/// p_C(Z|X) as a Cpt over Z given X.
Cpt connected_encoder(const StackedModel& stacked, const EvalOptions& options = {});

}  // namespace lod
