#pragma once

#include <span>
#include <vector>

#include "lod/distribution.hpp"
#include "lod/model.hpp"

namespace lod {

/// Which conditional p(Y|X) the information quantities are computed from.
enum class PosteriorSource {
  kExact,        // Bayes posterior of the generative model
  kRecognition,  // factorized recognition model (CI/ICI only)
};

struct EvalOptions {
  SupportPolicy policy = SupportPolicy::kSmoothed;
  PosteriorSource source = PosteriorSource::kExact;
};

/// Expected latent self-information f(x) = -sum_y p(y|x) ln p(y) and the
/// pmf q(x) = exp(-f(x)) / C it induces over the whole observed space.
struct LatentSurprise {
  std::vector<double> f;
  Pmf q;
  double log_normalizer = 0.0;  // ln C
};

struct EvalScores {
  double loglik = 0.0;  // nats per sample
  double mi = 0.0;      // nats
  double lod = 0.0;     // nats
};

// ---------------------------------------------------------------------------
// Encoder-level quantities. `encoder` is any conditional p(Y|X) and
// `latent_marginal` the latent distribution the information is measured
// against. These back both the two-layer scores and the connected-chain
// scores of stacked models.

/// Requires every row of `encoder` to be defined.
LatentSurprise latent_surprise(const Cpt& encoder, std::span<const double> latent_marginal,
                               SupportPolicy policy = SupportPolicy::kSmoothed);

/// sum_x w(x) D(encoder(.|x) || latent_marginal), over states with w(x) > 0.
double weighted_information(std::span<const double> weights, const Cpt& encoder,
                            std::span<const double> latent_marginal,
                            SupportPolicy policy = SupportPolicy::kSmoothed);

// ---------------------------------------------------------------------------
// Model-level scores.

/// The conditional used for evaluation. In smoothing mode, undefined exact
/// rows (p_G(x) = 0) are replaced by clamped_posterior_row(); in strict mode
/// they stay undefined.
Cpt evaluation_posterior(const GenerativeModel& model, const EvalOptions& options = {});

LatentSurprise expected_latent_information(const GenerativeModel& model, const Pmf& pdata,
                                           const EvalOptions& options = {});

/// D(pdata || q).
double lod(const GenerativeModel& model, const Pmf& pdata, const EvalOptions& options = {});

/// Data-weighted mutual information sum_x pdata(x) D(p(Y|x) || p_G(Y)).
double mi_data(const GenerativeModel& model, const Pmf& pdata, const EvalOptions& options = {});

/// Model-weighted mutual information sum_x p_G(x) D(p(Y|x) || p_G(Y)).
double model_mi(const GenerativeModel& model, const EvalOptions& options = {});

/// sum_x pdata(x) ln p_G(x).
double loglik(const GenerativeModel& model, const Pmf& pdata, SupportPolicy policy = SupportPolicy::kSmoothed);

EvalScores evaluate(const GenerativeModel& model, const Pmf& pdata, const EvalOptions& options = {});

}  // namespace lod
