#include "lod/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <random>
#include <string>

#include "lod/error.hpp"

namespace lod {

void TrainConfig::validate() const {
  if (max_iters < 1) throw DomainError("max_iters must be >= 1");
  if (!(tol > 0.0)) throw DomainError("tol must be positive");
  if (restarts < 1) throw DomainError("restarts must be >= 1");
  if (!(init_concentration > 0.0)) throw DomainError("init_concentration must be positive");
}

std::uint64_t restart_seed(std::uint64_t seed, std::size_t k) {
  // splitmix64 finalizer over the seed advanced by k golden-ratio steps
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(k) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

/// Flat working copy of a model's tables.
struct Params {
  ModelKind kind;
  ModelShape shape;
  DigitTable obs_digits;
  DigitTable lat_digits;
  std::size_t nx;
  std::size_t ny;
  std::vector<std::vector<double>> theta;   // [i][y * K_i + v]
  std::vector<double> prior;                // joint p(y)
  std::vector<std::vector<double>> factor;  // [j][v], IL/ICI
  std::vector<std::vector<double>> psi;     // [j][x * L_j + v], CI/ICI

  Params(ModelKind k, const ModelShape& s)
      : kind(k), shape(s), obs_digits(s.obs), lat_digits(s.lat), nx(s.obs.total()), ny(s.lat.total()) {}

  explicit Params(const GenerativeModel& m) : Params(m.kind(), m.shape()) {
    for (const Cpt& t : m.thetas()) theta.emplace_back(t.table().begin(), t.table().end());
    const auto lp = m.latent_prior().probs();
    prior.assign(lp.begin(), lp.end());
    if (has_factorized_prior(kind))
      for (const Pmf& f : std::get<std::vector<Pmf>>(m.prior())) factor.emplace_back(f.probs().begin(), f.probs().end());
    for (const Cpt& r : m.recognition()) psi.emplace_back(r.table().begin(), r.table().end());
  }

  std::size_t obs_card(std::size_t i) const { return shape.obs.card(i); }
  std::size_t lat_card(std::size_t j) const { return shape.lat.card(j); }

  /// p(x, y) for every y.
  void joint_row(std::size_t x, std::vector<double>& out) const {
    out.resize(ny);
    for (std::size_t y = 0; y < ny; ++y) {
      double a = prior[y];
      for (std::size_t i = 0; i < theta.size() && a > 0.0; ++i) a *= theta[i][y * obs_card(i) + obs_digits(x, i)];
      out[y] = a;
    }
  }

  void rebuild_prior_from_factors() {
    for (std::size_t y = 0; y < ny; ++y) {
      double p = 1.0;
      for (std::size_t j = 0; j < factor.size(); ++j) p *= factor[j][lat_digits(y, j)];
      prior[y] = p;
    }
  }

  /// Closed-form maximization of sum_{x,y} w(x,y) ln p(x,y) given the
  /// expected completed-data weights. Rows without weight keep their values.
  void maximize(const std::vector<double>& w) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const std::size_t k = obs_card(i);
      std::vector<double> acc(ny * k, 0.0);
      for (std::size_t x = 0; x < nx; ++x) {
        const std::size_t v = obs_digits(x, i);
        const double* wx = &w[x * ny];
        for (std::size_t y = 0; y < ny; ++y) acc[y * k + v] += wx[y];
      }
      for (std::size_t y = 0; y < ny; ++y) {
        double z = 0.0;
        for (std::size_t v = 0; v < k; ++v) z += acc[y * k + v];
        if (z <= 0.0) continue;
        for (std::size_t v = 0; v < k; ++v) theta[i][y * k + v] = acc[y * k + v] / z;
      }
    }
    std::vector<double> wy(ny, 0.0);
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t y = 0; y < ny; ++y) wy[y] += w[x * ny + y];
    double total = 0.0;
    for (double v : wy) total += v;
    if (total <= 0.0) return;
    if (has_factorized_prior(kind)) {
      for (std::size_t j = 0; j < factor.size(); ++j) {
        std::fill(factor[j].begin(), factor[j].end(), 0.0);
        for (std::size_t y = 0; y < ny; ++y) factor[j][lat_digits(y, j)] += wy[y] / total;
      }
      rebuild_prior_from_factors();
    } else {
      for (std::size_t y = 0; y < ny; ++y) prior[y] = wy[y] / total;
    }
  }

  /// Exact posterior over all x (clamped where p(x) = 0). Returns the data
  /// loglik of the current generative parameters.
  double exact_posterior(const std::vector<double>& pdata, std::vector<double>& post) const {
    post.assign(nx * ny, 0.0);
    std::vector<double> row;
    double ll = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
      joint_row(x, row);
      double px = 0.0;
      for (double v : row) px += v;
      if (pdata[x] > 0.0) ll += pdata[x] * floored_log(px);
      if (px > 0.0) {
        for (std::size_t y = 0; y < ny; ++y) post[x * ny + y] = row[y] / px;
      } else {
        clamped_row(x, &post[x * ny]);
      }
    }
    return ll;
  }

  void clamped_row(std::size_t x, double* out) const {
    std::vector<double> logw(ny);
    for (std::size_t y = 0; y < ny; ++y) {
      double lw = floored_log(prior[y]);
      for (std::size_t i = 0; i < theta.size(); ++i) lw += floored_log(theta[i][y * obs_card(i) + obs_digits(x, i)]);
      logw[y] = lw;
    }
    const double lz = log_sum_exp(logw);
    for (std::size_t y = 0; y < ny; ++y) out[y] = std::exp(logw[y] - lz);
  }

  /// E-step restricted to the data support: w(x,y) = pdata(x) p(y|x).
  double expectation(const std::vector<double>& pdata, std::vector<double>& w) const {
    w.assign(nx * ny, 0.0);
    std::vector<double> row;
    double ll = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
      if (pdata[x] <= 0.0) continue;
      joint_row(x, row);
      double px = 0.0;
      for (double v : row) px += v;
      ll += pdata[x] * floored_log(px);
      if (px <= 0.0) {
        clamped_row(x, &w[x * ny]);
        for (std::size_t y = 0; y < ny; ++y) w[x * ny + y] *= pdata[x];
        continue;
      }
      const double scale = pdata[x] / px;
      for (std::size_t y = 0; y < ny; ++y) w[x * ny + y] = row[y] * scale;
    }
    return ll;
  }

  /// Wake-phase completion w(x,y) = pdata(x) prod_j psi_j(y_j|x).
  void recognition_weights(const std::vector<double>& pdata, std::vector<double>& w) const {
    w.assign(nx * ny, 0.0);
    for (std::size_t x = 0; x < nx; ++x) {
      if (pdata[x] <= 0.0) continue;
      for (std::size_t y = 0; y < ny; ++y) {
        double r = pdata[x];
        for (std::size_t j = 0; j < psi.size(); ++j) r *= psi[j][x * lat_card(j) + lat_digits(y, j)];
        w[x * ny + y] = r;
      }
    }
  }

  /// Sleep phase: psi_j(.|x) <- j-th marginal of the exact posterior.
  double sleep(const std::vector<double>& pdata) {
    std::vector<double> post;
    const double ll = exact_posterior(pdata, post);
    for (std::size_t j = 0; j < psi.size(); ++j) {
      const std::size_t l = lat_card(j);
      std::fill(psi[j].begin(), psi[j].end(), 0.0);
      for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t y = 0; y < ny; ++y) psi[j][x * l + lat_digits(y, j)] += post[x * ny + y];
      // renormalize away rounding drift
      for (std::size_t x = 0; x < nx; ++x) {
        double z = 0.0;
        for (std::size_t v = 0; v < l; ++v) z += psi[j][x * l + v];
        for (std::size_t v = 0; v < l; ++v) psi[j][x * l + v] /= z;
      }
    }
    return ll;
  }

  double data_loglik(const std::vector<double>& pdata) const {
    std::vector<double> row;
    double ll = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
      if (pdata[x] <= 0.0) continue;
      joint_row(x, row);
      double px = 0.0;
      for (double v : row) px += v;
      ll += pdata[x] * floored_log(px);
    }
    return ll;
  }

  GenerativeModel to_model() const {
    std::vector<Cpt> thetas;
    for (std::size_t i = 0; i < theta.size(); ++i)
      thetas.emplace_back(StateSpace({obs_card(i)}), shape.lat, normalized_rows(theta[i], obs_card(i)));
    LatentPrior lp = has_factorized_prior(kind) ? LatentPrior{std::vector<Pmf>{}} : LatentPrior{Pmf{}};
    if (has_factorized_prior(kind)) {
      std::vector<Pmf> fs;
      for (std::size_t j = 0; j < factor.size(); ++j) fs.push_back(Pmf::normalized(StateSpace({lat_card(j)}), factor[j]));
      lp = std::move(fs);
    } else {
      lp = Pmf::normalized(shape.lat, prior);
    }
    std::vector<Cpt> rec;
    for (std::size_t j = 0; j < psi.size(); ++j)
      rec.emplace_back(StateSpace({lat_card(j)}), shape.obs, normalized_rows(psi[j], lat_card(j)));
    return GenerativeModel(kind, shape, std::move(thetas), std::move(lp), std::move(rec));
  }

  static std::vector<double> normalized_rows(std::vector<double> table, std::size_t width) {
    for (std::size_t r = 0; r * width < table.size(); ++r) {
      double z = 0.0;
      for (std::size_t v = 0; v < width; ++v) z += table[r * width + v];
      for (std::size_t v = 0; v < width; ++v) table[r * width + v] /= z;
    }
    return table;
  }
};

std::vector<double> dirichlet(std::mt19937_64& rng, std::size_t k, double concentration) {
  std::gamma_distribution<double> gamma(concentration, 1.0);
  std::vector<double> draw(k);
  double z = 0.0;
  for (double& v : draw) {
    v = gamma(rng);
    z += v;
  }
  if (!(z > 0.0)) return std::vector<double>(k, 1.0 / static_cast<double>(k));
  for (double& v : draw) v /= z;
  return draw;
}

std::vector<double> data_vector(const Pmf& pdata, const ModelShape& shape) {
  if (pdata.space() != shape.obs) throw DomainError("data distribution is not over the model's observed space");
  bool any = false;
  for (double p : pdata.probs()) any = any || p > 0.0;
  if (!any) throw DomainError("data distribution has empty support");
  return std::vector<double>(pdata.probs().begin(), pdata.probs().end());
}

void require_kind(ModelKind kind, bool ok, const char* what) {
  if (!ok) throw UnsupportedKind(std::string(what) + " does not apply to " + std::string(to_string(kind)) + " models");
}

bool em_kind(ModelKind k) { return k == ModelKind::kSL || k == ModelKind::kIL; }

template <class RunFn>
FitResult best_of_restarts(ModelKind kind, const ModelShape& shape, const Pmf& pdata, const TrainConfig& config,
                           RunFn run) {
  config.validate();
  std::vector<double> finals;
  std::optional<FitResult> best;
  for (std::size_t k = 0; k < config.restarts; ++k) {
    GenerativeModel init = random_init(shape, kind, restart_seed(config.seed, k), config.init_concentration);
    FitResult r = run(init, pdata, config);
    finals.push_back(r.report.final_loglik);
    // strict improvement beyond 1e-12 so ties go to the lowest restart index
    if (!best || r.report.final_loglik > best->report.final_loglik + 1e-12) {
      r.report.restart_index_selected = k;
      best = std::move(r);
    }
  }
  best->report.restart_logliks = std::move(finals);
  return std::move(*best);
}

}  // namespace

GenerativeModel random_init(const ModelShape& shape, ModelKind kind, std::uint64_t seed, double concentration) {
  if (!(concentration > 0.0)) throw DomainError("concentration must be positive");
  std::mt19937_64 rng(seed);
  Params p(kind, shape);
  for (std::size_t i = 0; i < shape.obs.num_vars(); ++i) {
    std::vector<double> t;
    t.reserve(p.ny * shape.obs.card(i));
    for (std::size_t y = 0; y < p.ny; ++y) {
      auto row = dirichlet(rng, shape.obs.card(i), concentration);
      t.insert(t.end(), row.begin(), row.end());
    }
    p.theta.push_back(std::move(t));
  }
  if (has_factorized_prior(kind)) {
    for (std::size_t j = 0; j < shape.lat.num_vars(); ++j) p.factor.push_back(dirichlet(rng, shape.lat.card(j), concentration));
    p.prior.assign(p.ny, 0.0);
    p.rebuild_prior_from_factors();
  } else {
    p.prior = dirichlet(rng, p.ny, concentration);
  }
  if (has_recognition(kind)) {
    for (std::size_t j = 0; j < shape.lat.num_vars(); ++j) {
      std::vector<double> r;
      r.reserve(p.nx * shape.lat.card(j));
      for (std::size_t x = 0; x < p.nx; ++x) {
        auto row = dirichlet(rng, shape.lat.card(j), concentration);
        r.insert(r.end(), row.begin(), row.end());
      }
      p.psi.push_back(std::move(r));
    }
  }
  return p.to_model();
}

GenerativeModel em_step(const GenerativeModel& model, const Pmf& pdata) {
  require_kind(model.kind(), em_kind(model.kind()), "EM");
  Params p(model);
  const auto data = data_vector(pdata, model.shape());
  std::vector<double> w;
  p.expectation(data, w);
  p.maximize(w);
  return p.to_model();
}

GenerativeModel wake_sleep_sweep(const GenerativeModel& model, const Pmf& pdata) {
  require_kind(model.kind(), has_recognition(model.kind()), "wake-sleep");
  Params p(model);
  const auto data = data_vector(pdata, model.shape());
  std::vector<double> w;
  p.recognition_weights(data, w);
  p.maximize(w);
  p.sleep(data);
  return p.to_model();
}

FitResult em_run(const GenerativeModel& init, const Pmf& pdata, const TrainConfig& config) {
  require_kind(init.kind(), em_kind(init.kind()), "EM");
  config.validate();
  Params p(init);
  const auto data = data_vector(pdata, init.shape());
  std::vector<double> w;
  TrainReport report;
  double ll = p.expectation(data, w);
  report.loglik_trace.push_back(ll);
  for (std::size_t it = 0; it < config.max_iters; ++it) {
    p.maximize(w);
    const double next = p.expectation(data, w);
    report.loglik_trace.push_back(next);
    ++report.iters_run;
    const bool done = std::abs(next - ll) < config.tol;
    ll = next;
    if (done) {
      report.converged = true;
      break;
    }
  }
  report.final_loglik = ll;
  return FitResult{p.to_model(), std::move(report)};
}

FitResult wake_sleep_run(const GenerativeModel& init, const Pmf& pdata, const TrainConfig& config) {
  require_kind(init.kind(), has_recognition(init.kind()), "wake-sleep");
  config.validate();
  Params p(init);
  const auto data = data_vector(pdata, init.shape());
  std::vector<double> w;
  TrainReport report;
  double ll = p.sleep(data);
  report.loglik_trace.push_back(ll);
  Params best = p;
  double best_ll = ll;
  for (std::size_t it = 0; it < config.max_iters; ++it) {
    p.recognition_weights(data, w);
    p.maximize(w);
    const double next = p.sleep(data);
    report.loglik_trace.push_back(next);
    ++report.iters_run;
    if (next > best_ll) {
      best_ll = next;
      best = p;
    }
    const bool done = std::abs(next - ll) < config.tol;
    ll = next;
    if (done) {
      report.converged = true;
      break;
    }
  }
  report.final_loglik = best_ll;
  GenerativeModel model = best.to_model();
  report.constraint_violation = recognition_discrepancy(model, pdata);
  return FitResult{std::move(model), std::move(report)};
}

FitResult em_fit(ModelKind kind, const ModelShape& shape, const Pmf& pdata, const TrainConfig& config) {
  require_kind(kind, em_kind(kind), "EM");
  data_vector(pdata, shape);
  return best_of_restarts(kind, shape, pdata, config, em_run);
}

FitResult wake_sleep_fit(ModelKind kind, const ModelShape& shape, const Pmf& pdata, const TrainConfig& config) {
  require_kind(kind, has_recognition(kind), "wake-sleep");
  data_vector(pdata, shape);
  return best_of_restarts(kind, shape, pdata, config, wake_sleep_run);
}

FitResult fit(ModelKind kind, const ModelShape& shape, const Pmf& pdata, const TrainConfig& config) {
  return em_kind(kind) ? em_fit(kind, shape, pdata, config) : wake_sleep_fit(kind, shape, pdata, config);
}

double recognition_discrepancy(const GenerativeModel& model, const Pmf& pdata) {
  require_kind(model.kind(), has_recognition(model.kind()), "recognition discrepancy");
  const Cpt exact = posterior(model);
  const Cpt rec = recognition_posterior(model);
  double d = 0.0;
  for (std::size_t x = 0; x < pdata.size(); ++x) {
    if (pdata[x] <= 0.0 || !exact.defined(x)) continue;
    d += pdata[x] * kl_divergence(exact.row(x), rec.row(x));
  }
  return d;
}

nlohmann::json report_to_json(const TrainReport& report) {
  return nlohmann::json{{"final_loglik", report.final_loglik},
                        {"iters_run", report.iters_run},
                        {"loglik_trace", report.loglik_trace},
                        {"restart_index_selected", report.restart_index_selected},
                        {"converged", report.converged},
                        {"restart_logliks", report.restart_logliks},
                        {"constraint_violation", report.constraint_violation}};
}

void write_trace_csv(const TrainReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "iteration,loglik\n" << std::setprecision(17);
  for (std::size_t t = 0; t < report.loglik_trace.size(); ++t) out << t << ',' << report.loglik_trace[t] << '\n';
}

}  // namespace lod
