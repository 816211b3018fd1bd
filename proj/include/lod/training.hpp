#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "lod/distribution.hpp"
#include "lod/model.hpp"

namespace lod {

enum class TrainMode { kEm, kWakeSleep };

struct TrainConfig {
  std::size_t max_iters = 1000;
  double tol = 1e-8;  // absolute loglik change, nats per sample
  std::size_t restarts = 20;
  std::uint64_t seed = 0;
  double init_concentration = 1.0;
  TrainMode mode = TrainMode::kEm;

  /// Throws DomainError on max_iters == 0, tol <= 0, restarts == 0 or a
  /// non-positive concentration.
  void validate() const;
};

struct TrainReport {
  double final_loglik = 0.0;
  std::size_t iters_run = 0;
  std::vector<double> loglik_trace;  // selected restart; entry 0 is the initial model
  std::size_t restart_index_selected = 0;
  bool converged = false;
  std::vector<double> restart_logliks;  // final loglik of every restart, in order
  /// sum_x pdata(x) D(p_G(Y|x) || prod_j psi_j(Y_j|x)); zero for SL/IL.
  double constraint_violation = 0.0;
};

struct FitResult {
  GenerativeModel model;
  TrainReport report;
};

/// Seed of restart `k`, derived so that serial and parallel runs agree.
std::uint64_t restart_seed(std::uint64_t seed, std::size_t k);

/// Every CPT row, prior and recognition row drawn from a symmetric
/// Dirichlet(concentration). Draw order is theta, prior, recognition, so SL
/// and CI with a single latent variable share generative parameters for the
/// same seed.
GenerativeModel random_init(const ModelShape& shape, ModelKind kind, std::uint64_t seed, double concentration = 1.0);

/// One EM iteration (exact E-step, closed-form M-step). SL/IL only.
GenerativeModel em_step(const GenerativeModel& model, const Pmf& pdata);

/// One wake phase followed by one sleep phase. CI/ICI only.
GenerativeModel wake_sleep_sweep(const GenerativeModel& model, const Pmf& pdata);

/// Single EM run from `init` until |delta loglik| < tol or max_iters.
FitResult em_run(const GenerativeModel& init, const Pmf& pdata, const TrainConfig& config);

/// Single wake-sleep run from `init`. The recognition tables are first set
/// by a sleep phase; the best-loglik iterate is returned.
FitResult wake_sleep_run(const GenerativeModel& init, const Pmf& pdata, const TrainConfig& config);

/// Best of `config.restarts` EM runs (SL or IL).
FitResult em_fit(ModelKind kind, const ModelShape& shape, const Pmf& pdata, const TrainConfig& config);

/// Best of `config.restarts` wake-sleep runs (CI or ICI).
FitResult wake_sleep_fit(ModelKind kind, const ModelShape& shape, const Pmf& pdata, const TrainConfig& config);

/// EM for SL/IL, wake-sleep for CI/ICI.
FitResult fit(ModelKind kind, const ModelShape& shape, const Pmf& pdata, const TrainConfig& config);

/// sum_x pdata(x) D(p_G(Y|x) || recognition posterior(Y|x)).
double recognition_discrepancy(const GenerativeModel& model, const Pmf& pdata);

nlohmann::json report_to_json(const TrainReport& report);
void write_trace_csv(const TrainReport& report, const std::filesystem::path& path);

}  // namespace lod
