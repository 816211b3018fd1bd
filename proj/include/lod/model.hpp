#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "lod/distribution.hpp"
#include "lod/state_space.hpp"

namespace lod {

/// The four two-layer families, by which independence constraints hold on
/// the latent layer.
///
///   kind | p(X|Y) factorizes | p(Y|X) factorizes | p(Y) factorizes
///   SL   |        yes        |   (single latent) |  (single latent)
///   IL   |        yes        |         -         |       yes
///   CI   |        yes        |        yes        |        -
///   ICI  |        yes        |        yes        |       yes
enum class ModelKind { kSL, kIL, kCI, kICI };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);  // "sl", "SL", ...

constexpr bool has_factorized_prior(ModelKind k) { return k == ModelKind::kIL || k == ModelKind::kICI; }
constexpr bool has_recognition(ModelKind k) { return k == ModelKind::kCI || k == ModelKind::kICI; }

struct ModelShape {
  StateSpace obs;
  StateSpace lat;

  bool operator==(const ModelShape&) const = default;
};

/// Either one joint table over the latent space (SL, CI) or one table per
/// latent variable (IL, ICI).
using LatentPrior = std::variant<Pmf, std::vector<Pmf>>;

/// Two-layer discrete generative model p(X, Y) = prod_i p(X_i | Y) p(Y).
///
/// Each observed variable is conditioned on the full joint latent
/// configuration, for every kind. CI and ICI additionally carry a factorized
/// recognition model prod_j p(Y_j | X), one table per latent variable.
///
/// An SL model normally has one latent variable. A multi-variable latent
/// space with a joint prior and no recognition is also accepted as SL: it is
/// the same single-label model with its states written as tuples (this is
/// what binary relabeling for stacking produces).
class GenerativeModel {
 public:
  /// `theta[i]` has child space {K_i} and parent space `shape.lat`.
  /// `recognition[j]` has child space {L_j} and parent space `shape.obs`.
  GenerativeModel(ModelKind kind, ModelShape shape, std::vector<Cpt> theta, LatentPrior prior,
                  std::vector<Cpt> recognition = {});

  ModelKind kind() const noexcept { return kind_; }
  const ModelShape& shape() const noexcept { return shape_; }

  const Cpt& theta(std::size_t obs_var) const { return theta_.at(obs_var); }
  const std::vector<Cpt>& thetas() const noexcept { return theta_; }

  /// p(Y) as a joint table (the product of the factors for IL/ICI).
  const Pmf& latent_prior() const noexcept { return latent_prior_; }
  const LatentPrior& prior() const noexcept { return prior_; }

  /// Recognition tables; empty for SL/IL.
  const std::vector<Cpt>& recognition() const noexcept { return recognition_; }

  /// p(X = x | Y = y) = prod_i theta_i(x_i | y).
  double likelihood(std::size_t x, std::size_t y) const;

 private:
  ModelKind kind_;
  ModelShape shape_;
  std::vector<Cpt> theta_;
  LatentPrior prior_;
  Pmf latent_prior_;
  std::vector<Cpt> recognition_;
  DigitTable obs_digits_;
};

/// Joint p(X, Y) over the concatenated space (observed variables first).
Pmf joint(const GenerativeModel& model);

/// p_G(X).
Pmf observed_marginal(const GenerativeModel& model);

/// Exact Bayes posterior p_G(Y | X). Rows with p_G(x) = 0 are undefined.
Cpt posterior(const GenerativeModel& model);

/// Posterior row for `x` computed from floored factors,
/// proportional to prod_i max(theta, floor) * max(p(y), floor). Defined for
/// every x; used where the exact row is undefined in smoothing mode.
std::vector<double> clamped_posterior_row(const GenerativeModel& model, std::size_t x);

/// prod_j recognition_j(Y_j | X) as a joint Cpt over the latent space.
/// Throws UnsupportedKind for SL/IL.
Cpt recognition_posterior(const GenerativeModel& model);

/// SL model with alpha * |X| latent states where p(Y | X = k) is uniform on
/// the k-th block of alpha consecutive states and p(Y) spreads p(X = k)
/// evenly over that block. Its LOD against `base` is zero.
GenerativeModel construct_expanding(const Pmf& base, std::size_t alpha);

/// SL model with |X| / beta latent states, each covering beta consecutive
/// flat observed states (g(k) = k / beta). The observed space of the result
/// is `base` flattened to one variable; p_G(X) equals `base`.
GenerativeModel construct_shrinking(const Pmf& base, std::size_t beta);

/// Relabels the latent states of a joint-prior model: old state `l` becomes
/// state `mapping[l]` of `new_lat`. Only valid for SL models.
GenerativeModel relabel_latent(const GenerativeModel& model, std::span<const std::size_t> mapping,
                               StateSpace new_lat);

}  // namespace lod
