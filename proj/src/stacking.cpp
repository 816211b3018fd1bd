#include "lod/stacking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "lod/error.hpp"

namespace lod {

Bijection::Bijection(std::vector<std::size_t> code) : code_(std::move(code)) {
  const std::size_t n = code_.size();
  if (n < 2 || (n & (n - 1)) != 0) throw DomainError("bijection size must be a power of two >= 2");
  while ((std::size_t{1} << bits_) < n) ++bits_;
  std::vector<bool> hit(n, false);
  for (std::size_t c : code_) {
    if (c >= n || hit[c]) throw DomainError("bijection is not a permutation");
    hit[c] = true;
  }
}

GenerativeModel StackedModel::effective_lower() const {
  return bijection ? binary_relabel(lower, *bijection) : lower;
}

void StackedModel::validate() const {
  const StateSpace lat = bijection ? bijection->binary_space() : lower.shape().lat;
  if (higher.shape().obs != lat) throw DomainError("higher model does not observe the lower latent space");
  if (pdata.space() != lower.shape().obs) throw DomainError("data is not over the lower observed space");
}

namespace {

/// rows[x] = sum_y a(y|x) b(z|y)
Cpt compose(const Cpt& first, const Cpt& second) {
  const std::size_t nx = first.parent_space().total();
  const std::size_t ny = first.child_space().total();
  const std::size_t nz = second.child_space().total();
  if (second.parent_space().total() != ny) throw DomainError("encoders do not chain");
  std::vector<double> table(nx * nz, 0.0);
  for (std::size_t x = 0; x < nx; ++x) {
    auto a = first.row(x);
    for (std::size_t y = 0; y < ny; ++y) {
      if (a[y] == 0.0) continue;
      auto b = second.row(y);
      for (std::size_t z = 0; z < nz; ++z) table[x * nz + z] += a[y] * b[z];
    }
  }
  return Cpt(second.child_space(), first.parent_space(), std::move(table));
}

std::vector<double> data_marginal(const Cpt& encoder, const Pmf& pdata) {
  std::vector<double> m(encoder.child_space().total(), 0.0);
  for (std::size_t x = 0; x < pdata.size(); ++x) {
    if (pdata[x] <= 0.0) continue;
    auto row = encoder.row(x);
    for (std::size_t y = 0; y < m.size(); ++y) m[y] += pdata[x] * row[y];
  }
  return m;
}

EvalScores encoder_scores(const Cpt& encoder, const Pmf& pdata, double loglik_value, SupportPolicy policy) {
  const std::vector<double> marginal = data_marginal(encoder, pdata);
  const LatentSurprise s = latent_surprise(encoder, marginal, policy);
  return EvalScores{loglik_value, weighted_information(pdata.probs(), encoder, marginal, policy),
                    kl_divergence(pdata, s.q, policy)};
}

}  // namespace

Pmf pushforward_latent(const GenerativeModel& lower, const Pmf& pdata, const EvalOptions& options) {
  if (pdata.space() != lower.shape().obs) throw DomainError("data is not over the lower observed space");
  return Pmf::normalized(lower.shape().lat, data_marginal(evaluation_posterior(lower, options), pdata));
}

GenerativeModel binary_relabel(const GenerativeModel& lower, const Bijection& bijection) {
  if (lower.shape().lat.total() != bijection.code().size())
    throw DomainError("bijection size does not match the latent space");
  return relabel_latent(lower, bijection.code(), bijection.binary_space());
}

FitResult fit_higher(const Pmf& latent_pdata, std::size_t k_z, const TrainConfig& config) {
  if (k_z < 1) throw DomainError("K_z must be >= 1");
  return em_fit(ModelKind::kSL, ModelShape{latent_pdata.space(), StateSpace({k_z})}, latent_pdata, config);
}

double bijection_score(const GenerativeModel& lower, const Pmf& pdata, const Bijection& bijection,
                       const TrainConfig& config) {
  const Pmf py = pushforward_latent(binary_relabel(lower, bijection), pdata);
  return fit_higher(py, 2, config).report.final_loglik;
}

BinaryConversion sl_to_binary(const GenerativeModel& lower, const Pmf& pdata, std::size_t candidates,
                              const TrainConfig& config) {
  if (lower.kind() != ModelKind::kSL || lower.shape().lat.num_vars() != 1)
    throw UnsupportedKind("binary conversion needs an SL model with one latent variable");
  const std::size_t n = lower.shape().lat.total();
  if (n < 2 || (n & (n - 1)) != 0)
    throw DomainError("SL latent cardinality " + std::to_string(n) + " is not a power of two");
  if (candidates < 1) throw DomainError("need at least one candidate bijection");

  std::mt19937_64 rng(restart_seed(config.seed, 0xB17EC7ULL));
  std::vector<Bijection> pool;
  std::vector<double> scores;
  std::optional<std::size_t> best;
  for (std::size_t c = 0; c < candidates; ++c) {
    std::vector<std::size_t> code(n);
    std::iota(code.begin(), code.end(), std::size_t{0});
    std::shuffle(code.begin(), code.end(), rng);
    pool.emplace_back(std::move(code));
    scores.push_back(bijection_score(lower, pdata, pool.back(), config));
    if (!best) {
      best = c;
      continue;
    }
    const double diff = scores[c] - scores[*best];
    if (diff > 1e-12 || (std::abs(diff) <= 1e-12 && pool[c] < pool[*best])) best = c;
  }
  return BinaryConversion{binary_relabel(lower, pool[*best]), pool[*best], scores[*best], std::move(pool),
                          std::move(scores)};
}

EvalScores chain_scores(const GenerativeModel& lower, const Pmf& pdata, const EvalOptions& options) {
  if (pdata.space() != lower.shape().obs) throw DomainError("data is not over the lower observed space");
  return encoder_scores(evaluation_posterior(lower, options), pdata, loglik(lower, pdata, options.policy),
                        options.policy);
}

Cpt connected_encoder(const StackedModel& stacked, const EvalOptions& options) {
  stacked.validate();
  const Cpt lower_enc = evaluation_posterior(stacked.effective_lower(), options);
  EvalOptions higher_opts = options;
  higher_opts.source = PosteriorSource::kExact;
  const Cpt higher_enc = evaluation_posterior(stacked.higher, higher_opts);
  return compose(lower_enc, higher_enc);
}

EvalScores connected_scores(const StackedModel& stacked, const EvalOptions& options) {
  const GenerativeModel lower = stacked.effective_lower();
  const Pmf py = pushforward_latent(lower, stacked.pdata, options);
  return encoder_scores(connected_encoder(stacked, options), stacked.pdata,
                        loglik(stacked.higher, py, options.policy), options.policy);
}

}  // namespace lod
