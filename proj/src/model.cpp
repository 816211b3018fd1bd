#include "lod/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "lod/error.hpp"

namespace lod {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kSL: return "SL";
    case ModelKind::kIL: return "IL";
    case ModelKind::kCI: return "CI";
    case ModelKind::kICI: return "ICI";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  if (upper == "SL") return ModelKind::kSL;
  if (upper == "IL") return ModelKind::kIL;
  if (upper == "CI") return ModelKind::kCI;
  if (upper == "ICI") return ModelKind::kICI;
  throw DomainError("unknown model kind '" + std::string(name) + "'");
}

namespace {

Pmf joint_latent_prior(const ModelShape& shape, const LatentPrior& prior) {
  if (const auto* joint_prior = std::get_if<Pmf>(&prior)) {
    if (joint_prior->space() != shape.lat) throw DomainError("latent prior space does not match the model");
    return *joint_prior;
  }
  const auto& factors = std::get<std::vector<Pmf>>(prior);
  if (factors.size() != shape.lat.num_vars())
    throw DomainError("need one prior factor per latent variable");
  DigitTable digits(shape.lat);
  std::vector<double> probs(shape.lat.total(), 1.0);
  for (std::size_t j = 0; j < factors.size(); ++j) {
    if (factors[j].space() != StateSpace({shape.lat.card(j)}))
      throw DomainError("prior factor " + std::to_string(j) + " has the wrong cardinality");
  }
  for (std::size_t y = 0; y < shape.lat.total(); ++y)
    for (std::size_t j = 0; j < factors.size(); ++j) probs[y] *= factors[j][digits(y, j)];
  return Pmf::normalized(shape.lat, std::move(probs));
}

}  // namespace

GenerativeModel::GenerativeModel(ModelKind kind, ModelShape shape, std::vector<Cpt> theta, LatentPrior prior,
                                 std::vector<Cpt> recognition)
    : kind_(kind),
      shape_(std::move(shape)),
      theta_(std::move(theta)),
      prior_(std::move(prior)),
      latent_prior_(joint_latent_prior(shape_, prior_)),
      recognition_(std::move(recognition)),
      obs_digits_(shape_.obs) {
  const bool factorized = std::holds_alternative<std::vector<Pmf>>(prior_);
  if (factorized != has_factorized_prior(kind_))
    throw DomainError(std::string(to_string(kind_)) + " model given the wrong prior form");
  if (theta_.size() != shape_.obs.num_vars()) throw DomainError("need one theta table per observed variable");
  for (std::size_t i = 0; i < theta_.size(); ++i) {
    if (theta_[i].child_space() != StateSpace({shape_.obs.card(i)}) || theta_[i].parent_space() != shape_.lat)
      throw DomainError("theta table " + std::to_string(i) + " has mismatched spaces");
    if (!theta_[i].all_defined()) throw DomainError("theta table " + std::to_string(i) + " has undefined rows");
  }
  if (has_recognition(kind_)) {
    if (recognition_.size() != shape_.lat.num_vars())
      throw DomainError("need one recognition table per latent variable");
    for (std::size_t j = 0; j < recognition_.size(); ++j) {
      if (recognition_[j].child_space() != StateSpace({shape_.lat.card(j)}) ||
          recognition_[j].parent_space() != shape_.obs)
        throw DomainError("recognition table " + std::to_string(j) + " has mismatched spaces");
      if (!recognition_[j].all_defined())
        throw DomainError("recognition table " + std::to_string(j) + " has undefined rows");
    }
  } else if (!recognition_.empty()) {
    throw DomainError(std::string(to_string(kind_)) + " model has no recognition tables");
  }
}

double GenerativeModel::likelihood(std::size_t x, std::size_t y) const {
  double p = 1.0;
  for (std::size_t i = 0; i < theta_.size(); ++i) p *= theta_[i].raw_row(y)[obs_digits_(x, i)];
  return p;
}

Pmf joint(const GenerativeModel& model) {
  const auto& shape = model.shape();
  std::vector<std::size_t> cards = shape.obs.cards();
  cards.insert(cards.end(), shape.lat.cards().begin(), shape.lat.cards().end());
  const std::size_t ny = shape.lat.total();
  std::vector<double> probs(shape.obs.total() * ny);
  for (std::size_t x = 0; x < shape.obs.total(); ++x)
    for (std::size_t y = 0; y < ny; ++y) probs[x * ny + y] = model.likelihood(x, y) * model.latent_prior()[y];
  return Pmf(StateSpace(std::move(cards)), std::move(probs));
}

Pmf observed_marginal(const GenerativeModel& model) {
  const auto& shape = model.shape();
  std::vector<double> probs(shape.obs.total(), 0.0);
  std::vector<double> terms(shape.lat.total());
  for (std::size_t x = 0; x < shape.obs.total(); ++x) {
    for (std::size_t y = 0; y < shape.lat.total(); ++y) terms[y] = model.likelihood(x, y) * model.latent_prior()[y];
    // Sorted summation makes the result independent of how latent states are labeled.
    std::sort(terms.begin(), terms.end());
    for (double t : terms) probs[x] += t;
  }
  return Pmf(shape.obs, std::move(probs));
}

Cpt posterior(const GenerativeModel& model) {
  const auto& shape = model.shape();
  const std::size_t nx = shape.obs.total();
  const std::size_t ny = shape.lat.total();
  std::vector<double> table(nx * ny);
  std::vector<bool> defined(nx, true);
  for (std::size_t x = 0; x < nx; ++x) {
    double z = 0.0;
    for (std::size_t y = 0; y < ny; ++y) {
      table[x * ny + y] = model.likelihood(x, y) * model.latent_prior()[y];
      z += table[x * ny + y];
    }
    if (z <= 0.0) {
      defined[x] = false;
      continue;
    }
    for (std::size_t y = 0; y < ny; ++y) table[x * ny + y] /= z;
  }
  return Cpt(shape.lat, shape.obs, std::move(table), std::move(defined));
}

std::vector<double> clamped_posterior_row(const GenerativeModel& model, std::size_t x) {
  const auto& shape = model.shape();
  const std::size_t ny = shape.lat.total();
  const State xs = shape.obs.unindex(x);
  std::vector<double> logw(ny);
  for (std::size_t y = 0; y < ny; ++y) {
    double lw = floored_log(model.latent_prior()[y]);
    for (std::size_t i = 0; i < xs.size(); ++i) lw += floored_log(model.theta(i).raw_row(y)[xs[i]]);
    logw[y] = lw;
  }
  const double lz = log_sum_exp(logw);
  for (double& v : logw) v = std::exp(v - lz);
  return logw;
}

Cpt recognition_posterior(const GenerativeModel& model) {
  if (!has_recognition(model.kind()))
    throw UnsupportedKind(std::string(to_string(model.kind())) + " model has no recognition posterior");
  const auto& shape = model.shape();
  const std::size_t nx = shape.obs.total();
  const std::size_t ny = shape.lat.total();
  DigitTable lat_digits(shape.lat);
  std::vector<double> table(nx * ny, 1.0);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < ny; ++y)
      for (std::size_t j = 0; j < shape.lat.num_vars(); ++j)
        table[x * ny + y] *= model.recognition()[j].raw_row(x)[lat_digits(y, j)];
  return Cpt(shape.lat, shape.obs, std::move(table));
}

GenerativeModel construct_expanding(const Pmf& base, std::size_t alpha) {
  if (alpha < 1) throw DomainError("expanding factor must be >= 1");
  const StateSpace& obs = base.space();
  const std::size_t k_total = obs.total();
  StateSpace lat({alpha * k_total});
  std::vector<double> prior(lat.total());
  for (std::size_t l = 0; l < lat.total(); ++l) prior[l] = base[l / alpha] / static_cast<double>(alpha);

  DigitTable digits(obs);
  std::vector<Cpt> theta;
  for (std::size_t i = 0; i < obs.num_vars(); ++i) {
    const std::size_t ki = obs.card(i);
    std::vector<double> table(lat.total() * ki, 0.0);
    for (std::size_t l = 0; l < lat.total(); ++l) table[l * ki + digits(l / alpha, i)] = 1.0;
    theta.emplace_back(StateSpace({ki}), lat, std::move(table));
  }
  return GenerativeModel(ModelKind::kSL, ModelShape{obs, lat}, std::move(theta),
                         Pmf::normalized(lat, std::move(prior)));
}

GenerativeModel construct_shrinking(const Pmf& base, std::size_t beta) {
  const std::size_t k_total = base.space().total();
  if (beta < 1 || k_total % beta != 0)
    throw DomainError("shrinking factor " + std::to_string(beta) + " does not divide " + std::to_string(k_total));
  StateSpace obs({k_total});
  StateSpace lat({k_total / beta});
  std::vector<double> prior(lat.total(), 0.0);
  for (std::size_t k = 0; k < k_total; ++k) prior[k / beta] += base[k];

  std::vector<double> table(lat.total() * k_total, 0.0);
  for (std::size_t l = 0; l < lat.total(); ++l) {
    for (std::size_t k = l * beta; k < (l + 1) * beta; ++k)
      table[l * k_total + k] = prior[l] > 0.0 ? base[k] / prior[l] : 1.0 / static_cast<double>(beta);
  }
  std::vector<Cpt> theta;
  theta.emplace_back(obs, lat, std::move(table));
  return GenerativeModel(ModelKind::kSL, ModelShape{obs, lat}, std::move(theta),
                         Pmf::normalized(lat, std::move(prior)));
}

GenerativeModel relabel_latent(const GenerativeModel& model, std::span<const std::size_t> mapping,
                               StateSpace new_lat) {
  if (model.kind() != ModelKind::kSL) throw UnsupportedKind("latent relabeling is defined for SL models only");
  const StateSpace& old_lat = model.shape().lat;
  if (new_lat.total() != old_lat.total() || mapping.size() != old_lat.total())
    throw DomainError("relabeling must map the latent states one to one");
  std::vector<bool> hit(new_lat.total(), false);
  for (std::size_t target : mapping) {
    if (target >= new_lat.total() || hit[target]) throw DomainError("relabeling is not a bijection");
    hit[target] = true;
  }
  std::vector<double> prior(new_lat.total());
  for (std::size_t l = 0; l < old_lat.total(); ++l) prior[mapping[l]] = model.latent_prior()[l];

  std::vector<Cpt> theta;
  for (const Cpt& old : model.thetas()) {
    const std::size_t ki = old.child_space().total();
    std::vector<double> table(new_lat.total() * ki);
    for (std::size_t l = 0; l < old_lat.total(); ++l) {
      auto row = old.raw_row(l);
      std::copy(row.begin(), row.end(), table.begin() + static_cast<std::ptrdiff_t>(mapping[l] * ki));
    }
    theta.emplace_back(old.child_space(), new_lat, std::move(table));
  }
  return GenerativeModel(ModelKind::kSL, ModelShape{model.shape().obs, new_lat}, std::move(theta),
                         Pmf(new_lat, std::move(prior)));
}

}  // namespace lod
