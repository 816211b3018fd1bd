#include "lod/measures.hpp"

#include <cmath>
#include <string>

#include "lod/error.hpp"

namespace lod {

namespace {

void require_same_obs(const GenerativeModel& model, const Pmf& pdata) {
  if (pdata.space() != model.shape().obs)
    throw DomainError("data distribution is not over the model's observed space");
}

}  // namespace

LatentSurprise latent_surprise(const Cpt& encoder, std::span<const double> latent_marginal, SupportPolicy policy) {
  const std::size_t nx = encoder.parent_space().total();
  const std::size_t ny = encoder.child_space().total();
  if (latent_marginal.size() != ny) throw DomainError("latent marginal size does not match the encoder");

  std::vector<double> f(nx, 0.0);
  std::vector<double> neg_f(nx);
  for (std::size_t x = 0; x < nx; ++x) {
    auto row = encoder.row(x);
    double fx = 0.0;
    for (std::size_t y = 0; y < ny; ++y) {
      if (row[y] <= 0.0) continue;
      if (latent_marginal[y] <= 0.0 && policy == SupportPolicy::kStrict)
        throw EvaluationError("latent state with posterior mass has zero marginal", y);
      fx -= row[y] * floored_log(latent_marginal[y]);
    }
    f[x] = fx;
    neg_f[x] = -fx;
  }
  const double log_c = log_sum_exp(neg_f);
  std::vector<double> q(nx);
  for (std::size_t x = 0; x < nx; ++x) q[x] = std::exp(neg_f[x] - log_c);
  return LatentSurprise{std::move(f), Pmf::normalized(encoder.parent_space(), std::move(q)), log_c};
}

double weighted_information(std::span<const double> weights, const Cpt& encoder,
                            std::span<const double> latent_marginal, SupportPolicy policy) {
  const std::size_t nx = encoder.parent_space().total();
  if (weights.size() != nx) throw DomainError("weights size does not match the encoder");
  double info = 0.0;
  for (std::size_t x = 0; x < nx; ++x) {
    if (weights[x] <= 0.0) continue;
    info += weights[x] * kl_divergence(encoder.row(x), latent_marginal, policy);
  }
  return info;
}

Cpt evaluation_posterior(const GenerativeModel& model, const EvalOptions& options) {
  if (options.source == PosteriorSource::kRecognition) return recognition_posterior(model);
  Cpt exact = posterior(model);
  if (options.policy == SupportPolicy::kStrict || exact.all_defined()) return exact;

  const std::size_t nx = exact.parent_space().total();
  const std::size_t ny = exact.child_space().total();
  std::vector<double> table(exact.table().begin(), exact.table().end());
  for (std::size_t x = 0; x < nx; ++x) {
    if (exact.defined(x)) continue;
    const auto row = clamped_posterior_row(model, x);
    std::copy(row.begin(), row.end(), table.begin() + static_cast<std::ptrdiff_t>(x * ny));
  }
  return Cpt(exact.child_space(), exact.parent_space(), std::move(table));
}

LatentSurprise expected_latent_information(const GenerativeModel& model, const Pmf& pdata,
                                           const EvalOptions& options) {
  require_same_obs(model, pdata);
  return latent_surprise(evaluation_posterior(model, options), model.latent_prior().probs(), options.policy);
}

double lod(const GenerativeModel& model, const Pmf& pdata, const EvalOptions& options) {
  const LatentSurprise s = expected_latent_information(model, pdata, options);
  return kl_divergence(pdata, s.q, options.policy);
}

double mi_data(const GenerativeModel& model, const Pmf& pdata, const EvalOptions& options) {
  require_same_obs(model, pdata);
  return weighted_information(pdata.probs(), evaluation_posterior(model, options), model.latent_prior().probs(),
                              options.policy);
}

double model_mi(const GenerativeModel& model, const EvalOptions& options) {
  const Pmf px = observed_marginal(model);
  return weighted_information(px.probs(), evaluation_posterior(model, options), model.latent_prior().probs(),
                              options.policy);
}

double loglik(const GenerativeModel& model, const Pmf& pdata, SupportPolicy policy) {
  require_same_obs(model, pdata);
  const Pmf px = observed_marginal(model);
  double ll = 0.0;
  for (std::size_t x = 0; x < px.size(); ++x) {
    if (pdata[x] <= 0.0) continue;
    if (px[x] <= 0.0 && policy == SupportPolicy::kStrict)
      throw EvaluationError("observed state has zero model probability", x);
    ll += pdata[x] * floored_log(px[x]);
  }
  return ll;
}

EvalScores evaluate(const GenerativeModel& model, const Pmf& pdata, const EvalOptions& options) {
  require_same_obs(model, pdata);
  const Cpt enc = evaluation_posterior(model, options);
  const auto marginal = model.latent_prior().probs();
  const LatentSurprise s = latent_surprise(enc, marginal, options.policy);
  return EvalScores{loglik(model, pdata, options.policy),
                    weighted_information(pdata.probs(), enc, marginal, options.policy),
                    kl_divergence(pdata, s.q, options.policy)};
}

}  // namespace lod
