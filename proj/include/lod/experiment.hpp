#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "lod/ingestion.hpp"
#include "lod/measures.hpp"
#include "lod/model.hpp"
#include "lod/stats.hpp"
#include "lod/training.hpp"

namespace lod {

/// Input data or an artifact from a previous run is missing or unreadable.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Single-variable example: six observed states with p(x_k) = k/21 and three
// latent states under a deterministic assignment.

/// p(x) = (1, ..., 6) / 21.
Pmf example_data();

/// SL model with p_G(X) = example_data() and p(Y | X = k) a point mass on
/// `assignment[k]`.
GenerativeModel deterministic_model(const std::vector<std::size_t>& assignment, std::size_t latent_states = 3);

/// Grouping {x1,x2},{x3,x4},{x5,x6}.
std::vector<std::size_t> best_lod_assignment();
/// Grouping {x1,x6},{x2,x5},{x3,x4}.
std::vector<std::size_t> best_mi_assignment();

/// Canonical form of an assignment up to latent relabeling: labels renumbered
/// in order of first appearance.
std::vector<std::size_t> canonical_partition(const std::vector<std::size_t>& assignment);

struct GoldenCheck {
  std::string name;
  double value;
  double expected;
  double tolerance;
  bool pass() const;
};

struct Table2Report {
  std::vector<GoldenCheck> checks;  // lod_p1, lod_p2, mi_p1, mi_p2
  bool all_pass() const;
};

Table2Report run_table2();

struct OracleReport {
  std::size_t assignments = 0;
  double min_lod = 0.0;
  double max_mi = 0.0;
  std::vector<std::vector<std::size_t>> lod_minimizers;  // canonical partitions within 1e-12 of the optimum
  std::vector<std::vector<std::size_t>> mi_maximizers;
  bool lod_matches = false;  // unique and equal to best_lod_assignment()
  bool mi_matches = false;
  std::vector<GoldenCheck> checks;
  bool all_pass() const;
};

OracleReport run_oracle();

void print_checks(std::ostream& out, const std::vector<GoldenCheck>& checks);

// ---------------------------------------------------------------------------
// Two-layer study.

/// Configuration fingerprint stamped on every result row.
struct Provenance {
  std::string source;  // "mnist" or "synthetic"
  std::uint64_t seed = 0;
  std::string quantization;
  std::vector<std::string> patch_labels;  // "r10c8", one per patch set
};

enum class DataSource { kMnist, kSynthetic };

struct TwoLayerConfig {
  DataSource source = DataSource::kSynthetic;
  std::filesystem::path mnist_dir;
  std::vector<ModelKind> kinds{ModelKind::kSL, ModelKind::kIL, ModelKind::kCI, ModelKind::kICI};
  std::vector<int> sizes{1, 2, 3, 4, 5, 6};
  std::vector<PatchSpec> patches = default_patch_locations();
  TrainConfig train;
  double synthetic_strength = 0.6;
  std::uint64_t synthetic_samples = 60000;
  std::size_t threads = 0;  // 0: hardware concurrency
};

/// Latent space of a model of the given kind and size: SL has one variable
/// with 2^size states, the others `size` binary variables.
StateSpace latent_space_for(ModelKind kind, int size);

struct TwoLayerRow {
  ModelKind kind;
  int size;
  int patch;
  std::size_t n_latent_vars;
  std::size_t latent_total;
  std::size_t restart;
  EvalScores scores;
  double constraint_violation;
};

struct TwoLayerResult {
  Provenance provenance;
  std::vector<EmpiricalDataset> datasets;  // one per patch set
  std::vector<TwoLayerRow> rows;           // patch-major, then kind, then size
  std::vector<GenerativeModel> models;     // parallel to rows
  ScoreTable adjusted_loglik;
  ScoreTable adjusted_mi;
  ScoreTable adjusted_lod;
};

/// MNIST patch sets or synthetic stand-ins, one per configured patch.
std::vector<EmpiricalDataset> load_patch_sets(const TwoLayerConfig& config);

/// Finds train-images-idx3-ubyte(.gz) under `dir`; DataError with a
/// download hint if absent.
std::filesystem::path find_mnist_images(const std::filesystem::path& dir);

TwoLayerResult run_two_layer(const TwoLayerConfig& config);
TwoLayerResult run_two_layer(const TwoLayerConfig& config, std::vector<EmpiricalDataset> datasets);

/// Writes raw.csv, adjusted.csv, summary.csv, config.json, models/ and
/// data/ under `out_dir`.
void write_two_layer_outputs(const TwoLayerResult& result, const TwoLayerConfig& config,
                             const std::filesystem::path& out_dir);

std::string model_file_name(ModelKind kind, int size, int patch);

// ---------------------------------------------------------------------------
// Stacking study.

struct StackConfig {
  std::vector<int> lower_sizes{3, 4, 5, 6};
  std::size_t candidates = 20;
  TrainConfig train;
  std::size_t threads = 0;
};

/// Higher latent sizes for a lower model with `n_y` binary latents:
/// 2, 3, ..., 2^(n_y - 2).
std::vector<std::size_t> higher_sizes(int n_y);

struct StackRow {
  ModelKind kind;
  int n_y;
  std::size_t k_z;
  int patch;
  double lod_xy;
  double lod_xz;
  double mi_xy;
  double mi_xz;
  double higher_loglik;
};

struct CorrelationRow {
  ModelKind kind;
  std::string score;  // "lod" or "mi"
  CorrelationResult result;
};

struct StackResult {
  Provenance provenance;
  std::vector<StackRow> rows;
  std::vector<CorrelationRow> correlations;  // kind-major, lod then mi
};

/// Stacks on every lower model of `two_layer` whose size is in
/// config.lower_sizes.
StackResult run_stack(const TwoLayerResult& two_layer, const StackConfig& config);

/// Same, reading lower models and datasets persisted by
/// write_two_layer_outputs. DataError lists missing artifacts.
StackResult run_stack(const std::filesystem::path& two_layer_dir, const StackConfig& config);

void write_stack_outputs(const StackResult& result, const std::filesystem::path& out_dir);

/// Runs `jobs(i)` for i in [0, n) on `threads` workers.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& job);

}  // namespace lod
