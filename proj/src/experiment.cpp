#include "lod/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "lod/error.hpp"
#include "lod/model_io.hpp"
#include "lod/stacking.hpp"

namespace lod {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Single-variable example

Pmf example_data() {
  std::vector<double> w{1, 2, 3, 4, 5, 6};
  return Pmf::normalized(StateSpace({6}), std::move(w));
}

GenerativeModel deterministic_model(const std::vector<std::size_t>& assignment, std::size_t latent_states) {
  const Pmf data = example_data();
  if (assignment.size() != data.size()) throw DomainError("assignment must cover all six observed states");
  StateSpace obs({data.size()});
  StateSpace lat({latent_states});
  std::vector<double> prior(latent_states, 0.0);
  for (std::size_t x = 0; x < assignment.size(); ++x) {
    if (assignment[x] >= latent_states) throw DomainError("assignment label out of range");
    prior[assignment[x]] += data[x];
  }
  std::vector<double> table(latent_states * data.size(), 0.0);
  for (std::size_t y = 0; y < latent_states; ++y) {
    for (std::size_t x = 0; x < data.size(); ++x) {
      if (prior[y] > 0.0)
        table[y * data.size() + x] = assignment[x] == y ? data[x] / prior[y] : 0.0;
      else
        table[y * data.size() + x] = 1.0 / static_cast<double>(data.size());
    }
  }
  std::vector<Cpt> theta;
  theta.emplace_back(obs, lat, std::move(table));
  return GenerativeModel(ModelKind::kSL, ModelShape{obs, lat}, std::move(theta),
                         Pmf::normalized(lat, std::move(prior)));
}

std::vector<std::size_t> best_lod_assignment() { return {0, 0, 1, 1, 2, 2}; }
std::vector<std::size_t> best_mi_assignment() { return {0, 1, 2, 2, 1, 0}; }

std::vector<std::size_t> canonical_partition(const std::vector<std::size_t>& assignment) {
  std::map<std::size_t, std::size_t> relabel;
  std::vector<std::size_t> out;
  out.reserve(assignment.size());
  for (std::size_t a : assignment) {
    auto [it, inserted] = relabel.try_emplace(a, relabel.size());
    out.push_back(it->second);
  }
  return out;
}

bool GoldenCheck::pass() const { return std::abs(value - expected) <= tolerance; }

bool Table2Report::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const GoldenCheck& c) { return c.pass(); });
}

Table2Report run_table2() {
  const Pmf data = example_data();
  const GenerativeModel p1 = deterministic_model(best_lod_assignment());
  const GenerativeModel p2 = deterministic_model(best_mi_assignment());
  Table2Report report;
  report.checks = {
      {"lod_p1", lod(p1, data), 0.0137, 5e-4},
      {"lod_p2", lod(p2, data), 0.129, 1e-3},
      {"mi_p1", mi_data(p1, data), 0.983, 1e-3},
      {"mi_p2", mi_data(p2, data), 1.0986, 1e-3},
  };
  return report;
}

bool OracleReport::all_pass() const {
  return lod_matches && mi_matches &&
         std::all_of(checks.begin(), checks.end(), [](const GoldenCheck& c) { return c.pass(); });
}

OracleReport run_oracle() {
  const Pmf data = example_data();
  constexpr std::size_t kStates = 6;
  constexpr std::size_t kLabels = 3;
  struct Scored {
    std::vector<std::size_t> assignment;
    double lod;
    double mi;
  };
  std::vector<Scored> all;
  std::vector<std::size_t> a(kStates, 0);
  while (true) {
    const GenerativeModel m = deterministic_model(a, kLabels);
    all.push_back({a, lod(m, data), mi_data(m, data)});
    std::size_t pos = 0;
    while (pos < kStates && ++a[pos] == kLabels) a[pos++] = 0;
    if (pos == kStates) break;
  }

  OracleReport report;
  report.assignments = all.size();
  report.min_lod = std::min_element(all.begin(), all.end(), [](auto& l, auto& r) { return l.lod < r.lod; })->lod;
  report.max_mi = std::max_element(all.begin(), all.end(), [](auto& l, auto& r) { return l.mi < r.mi; })->mi;
  std::set<std::vector<std::size_t>> lod_best;
  std::set<std::vector<std::size_t>> mi_best;
  for (const Scored& s : all) {
    if (s.lod <= report.min_lod + 1e-12) lod_best.insert(canonical_partition(s.assignment));
    if (s.mi >= report.max_mi - 1e-12) mi_best.insert(canonical_partition(s.assignment));
  }
  report.lod_minimizers.assign(lod_best.begin(), lod_best.end());
  report.mi_maximizers.assign(mi_best.begin(), mi_best.end());
  report.lod_matches = lod_best.size() == 1 && *lod_best.begin() == canonical_partition(best_lod_assignment());
  report.mi_matches = mi_best.size() == 1 && *mi_best.begin() == canonical_partition(best_mi_assignment());
  report.checks = {{"min_lod", report.min_lod, 0.0137, 5e-4}, {"max_mi", report.max_mi, 1.0986, 1e-3}};
  return report;
}

void print_checks(std::ostream& out, const std::vector<GoldenCheck>& checks) {
  const auto flags = out.flags();
  for (const GoldenCheck& c : checks) {
    out << std::left << std::setw(8) << c.name << ' ' << std::fixed << std::setprecision(6) << c.value
        << "  expected " << c.expected << " +- " << std::scientific << std::setprecision(0) << c.tolerance << "  "
        << (c.pass() ? "PASS" : "FAIL") << '\n';
    out.flags(flags);
  }
}

// ---------------------------------------------------------------------------
// Shared helpers

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& job) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

namespace {

std::string patch_label(const PatchSpec& p) {
  return "r" + std::to_string(p.row) + "c" + std::to_string(p.col);
}

std::uint64_t job_seed(std::uint64_t seed, int patch, ModelKind kind, int size) {
  return restart_seed(restart_seed(seed, static_cast<std::size_t>(patch)),
                      static_cast<std::size_t>(kind) * 64 + static_cast<std::size_t>(size));
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(12) << v;
  return s.str();
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::string provenance_cells(const Provenance& prov, int patch) {
  const std::string label =
      patch >= 0 && static_cast<std::size_t>(patch) < prov.patch_labels.size() ? prov.patch_labels[patch] : "";
  return prov.source + "," + std::to_string(prov.seed) + "," + prov.quantization + "," + label;
}

constexpr const char* kProvenanceHeader = "data_source,seed,quantization,patch_location";

json provenance_json(const Provenance& prov) {
  return json{{"source", prov.source},
              {"seed", prov.seed},
              {"quantization", prov.quantization},
              {"patch_labels", prov.patch_labels}};
}

Provenance provenance_from_json(const json& doc) {
  Provenance p;
  p.source = doc.at("source").get<std::string>();
  p.seed = doc.at("seed").get<std::uint64_t>();
  p.quantization = doc.at("quantization").get<std::string>();
  p.patch_labels = doc.at("patch_labels").get<std::vector<std::string>>();
  return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// Two-layer study

StateSpace latent_space_for(ModelKind kind, int size) {
  if (size < 1 || size > 20) throw DomainError("model size must be in [1, 20]");
  if (kind == ModelKind::kSL) return StateSpace({std::size_t{1} << size});
  return StateSpace::uniform(static_cast<std::size_t>(size), 2);
}

fs::path find_mnist_images(const fs::path& dir) {
  for (const char* name : {"train-images-idx3-ubyte", "train-images-idx3-ubyte.gz", "train-images.idx3-ubyte"}) {
    if (fs::exists(dir / name)) return dir / name;
  }
  throw DataError("MNIST training images not found in '" + dir.string() +
                  "'. Download train-images-idx3-ubyte.gz from the MNIST distribution site "
                  "(e.g. https://storage.googleapis.com/cvdf-datasets/mnist/) into that directory, "
                  "or pass --data synthetic.");
}

std::vector<EmpiricalDataset> load_patch_sets(const TwoLayerConfig& config) {
  validate_patch_set(config.patches);
  std::vector<EmpiricalDataset> out;
  if (config.source == DataSource::kMnist) {
    const ImageSet images = load_idx_images(find_mnist_images(config.mnist_dir));
    for (const PatchSpec& p : config.patches) out.push_back(quantize_and_extract(images, p));
    return out;
  }
  for (std::size_t n = 0; n < config.patches.size(); ++n) {
    out.push_back(synthetic_dataset(restart_seed(config.train.seed, 1000 + n), config.patches[n].space(),
                                    config.synthetic_strength, config.synthetic_samples));
  }
  return out;
}

TwoLayerResult run_two_layer(const TwoLayerConfig& config) { return run_two_layer(config, load_patch_sets(config)); }

TwoLayerResult run_two_layer(const TwoLayerConfig& config, std::vector<EmpiricalDataset> datasets) {
  config.train.validate();
  struct Job {
    int patch;
    ModelKind kind;
    int size;
  };
  std::vector<Job> jobs;
  for (std::size_t n = 0; n < datasets.size(); ++n)
    for (ModelKind k : config.kinds)
      for (int s : config.sizes) jobs.push_back({static_cast<int>(n), k, s});

  std::vector<std::optional<FitResult>> fits(jobs.size());
  parallel_for(jobs.size(), config.threads, [&](std::size_t i) {
    const Job& job = jobs[i];
    const Pmf& pdata = datasets[job.patch].pmf();
    TrainConfig tc = config.train;
    tc.seed = job_seed(config.train.seed, job.patch, job.kind, job.size);
    fits[i] = fit(job.kind, ModelShape{pdata.space(), latent_space_for(job.kind, job.size)}, pdata, tc);
  });

  TwoLayerResult result;
  result.provenance.source = config.source == DataSource::kMnist ? "mnist" : "synthetic";
  result.provenance.seed = config.train.seed;
  result.provenance.quantization =
      config.source == DataSource::kMnist ? std::string(to_string(config.patches.front().policy)) : "none";
  for (const PatchSpec& p : config.patches) result.provenance.patch_labels.push_back(patch_label(p));

  ScoreTable ll, mi, ld;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const Job& job = jobs[i];
    FitResult& f = *fits[i];
    const EvalScores scores = evaluate(f.model, datasets[job.patch].pmf());
    const StateSpace& lat = f.model.shape().lat;
    result.rows.push_back(TwoLayerRow{job.kind, job.size, job.patch, lat.num_vars(), lat.total(),
                                      f.report.restart_index_selected, scores, f.report.constraint_violation});
    const ScoreKey key{std::string(to_string(job.kind)), job.size, job.patch};
    ll[key] = scores.loglik;
    mi[key] = scores.mi;
    ld[key] = scores.lod;
    result.models.push_back(std::move(f.model));
  }
  result.adjusted_loglik = offset_removal(ll);
  result.adjusted_mi = offset_removal(mi);
  result.adjusted_lod = offset_removal(ld);
  result.datasets = std::move(datasets);
  return result;
}

std::string model_file_name(ModelKind kind, int size, int patch) {
  return std::string(to_string(kind)) + "_s" + std::to_string(size) + "_p" + std::to_string(patch) + ".json";
}

void write_two_layer_outputs(const TwoLayerResult& result, const TwoLayerConfig& config, const fs::path& out_dir) {
  fs::create_directories(out_dir / "models");
  fs::create_directories(out_dir / "data");

  {
    auto out = open_out(out_dir / "raw.csv");
    out << "model_kind,n_latent_vars,latent_total,patch_set,restart,loglik,mi,lod,size,constraint_violation,"
        << kProvenanceHeader << '\n';
    for (const TwoLayerRow& r : result.rows) {
      out << to_string(r.kind) << ',' << r.n_latent_vars << ',' << r.latent_total << ',' << r.patch << ','
          << r.restart << ',' << fmt(r.scores.loglik) << ',' << fmt(r.scores.mi) << ',' << fmt(r.scores.lod) << ','
          << r.size << ',' << fmt(r.constraint_violation) << ',' << provenance_cells(result.provenance, r.patch)
          << '\n';
    }
  }
  {
    auto out = open_out(out_dir / "adjusted.csv");
    out << "model_kind,size,patch_set,loglik,mi,lod," << kProvenanceHeader << '\n';
    for (const auto& [key, v] : result.adjusted_lod) {
      out << key.model << ',' << key.size << ',' << key.patch << ',' << fmt(result.adjusted_loglik.at(key)) << ','
          << fmt(result.adjusted_mi.at(key)) << ',' << fmt(v) << ','
          << provenance_cells(result.provenance, key.patch) << '\n';
    }
  }
  {
    auto out = open_out(out_dir / "summary.csv");
    out << "model_kind,size,score,mean,stddev,n,data_source,seed,quantization\n";
    const std::pair<const char*, const ScoreTable*> tables[] = {
        {"loglik", &result.adjusted_loglik}, {"mi", &result.adjusted_mi}, {"lod", &result.adjusted_lod}};
    for (const auto& [name, table] : tables) {
      std::map<std::pair<std::string, int>, std::vector<double>> groups;
      for (const auto& [key, v] : *table) groups[{key.model, key.size}].push_back(v);
      for (const auto& [group, vals] : groups) {
        double mean = 0.0;
        for (double v : vals) mean += v;
        mean /= static_cast<double>(vals.size());
        double var = 0.0;
        for (double v : vals) var += (v - mean) * (v - mean);
        var /= static_cast<double>(vals.size());
        out << group.first << ',' << group.second << ',' << name << ',' << fmt(mean) << ',' << fmt(std::sqrt(var))
            << ',' << vals.size() << ',' << result.provenance.source << ',' << result.provenance.seed << ','
            << result.provenance.quantization << '\n';
      }
    }
  }
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const TwoLayerRow& r = result.rows[i];
    save_model(result.models[i], out_dir / "models" / model_file_name(r.kind, r.size, r.patch));
  }
  for (std::size_t n = 0; n < result.datasets.size(); ++n)
    save_dataset(result.datasets[n], out_dir / "data" / ("patch_" + std::to_string(n) + ".json"));

  json cfg;
  cfg["format"] = "lod-two-layer";
  cfg["version"] = 1;
  cfg["provenance"] = provenance_json(result.provenance);
  std::vector<std::string> kinds;
  for (ModelKind k : config.kinds) kinds.emplace_back(to_string(k));
  cfg["kinds"] = kinds;
  cfg["sizes"] = config.sizes;
  json patches = json::array();
  for (const PatchSpec& p : config.patches)
    patches.push_back({{"row", p.row}, {"col", p.col}, {"height", p.height}, {"width", p.width}, {"levels", p.levels}});
  cfg["patches"] = patches;
  cfg["train"] = {{"max_iters", config.train.max_iters},
                  {"tol", config.train.tol},
                  {"restarts", config.train.restarts},
                  {"seed", config.train.seed},
                  {"init_concentration", config.train.init_concentration}};
  cfg["synthetic_strength"] = config.synthetic_strength;
  cfg["synthetic_samples"] = config.synthetic_samples;
  auto out = open_out(out_dir / "config.json");
  out << cfg.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Stacking study

std::vector<std::size_t> higher_sizes(int n_y) {
  if (n_y < 3) throw DomainError("stacking needs lower models with at least 3 latent bits");
  std::vector<std::size_t> out;
  for (std::size_t k = 2; k <= (std::size_t{1} << (n_y - 2)); ++k) out.push_back(k);
  return out;
}

namespace {

struct LowerEntry {
  ModelKind kind;
  int size;
  int patch;
  const GenerativeModel* model;
  const Pmf* pdata;
};

StackResult stack_entries(const std::vector<LowerEntry>& entries, const StackConfig& config, Provenance prov) {
  config.train.validate();
  std::vector<std::vector<StackRow>> per_entry(entries.size());
  parallel_for(entries.size(), config.threads, [&](std::size_t i) {
    const LowerEntry& e = entries[i];
    TrainConfig tc = config.train;
    tc.seed = job_seed(config.train.seed ^ 0x57AC4ULL, e.patch, e.kind, e.size);

    GenerativeModel lower = *e.model;
    std::optional<Bijection> bijection;
    if (e.kind == ModelKind::kSL) {
      BinaryConversion conv = sl_to_binary(lower, *e.pdata, config.candidates, tc);
      bijection = conv.bijection;
    }
    const GenerativeModel effective = bijection ? binary_relabel(lower, *bijection) : lower;
    const EvalScores xy = chain_scores(effective, *e.pdata);
    const Pmf py = pushforward_latent(effective, *e.pdata);
    const int n_y = static_cast<int>(effective.shape().lat.num_vars());
    for (std::size_t k_z : higher_sizes(n_y)) {
      TrainConfig hc = tc;
      hc.seed = restart_seed(tc.seed, 100 + k_z);
      FitResult higher = fit_higher(py, k_z, hc);
      const StackedModel stacked{lower, bijection, std::move(higher.model), *e.pdata};
      const EvalScores xz = connected_scores(stacked);
      per_entry[i].push_back(StackRow{e.kind, n_y, k_z, e.patch, xy.lod, xz.lod, xy.mi, xz.mi, xz.loglik});
    }
  });

  StackResult result;
  result.provenance = std::move(prov);
  for (auto& rows : per_entry) result.rows.insert(result.rows.end(), rows.begin(), rows.end());

  std::vector<ModelKind> kinds;
  for (const LowerEntry& e : entries)
    if (std::find(kinds.begin(), kinds.end(), e.kind) == kinds.end()) kinds.push_back(e.kind);
  std::sort(kinds.begin(), kinds.end());
  for (ModelKind k : kinds) {
    std::vector<double> lxy, lxz, mxy, mxz;
    for (const StackRow& r : result.rows) {
      if (r.kind != k) continue;
      lxy.push_back(r.lod_xy);
      lxz.push_back(r.lod_xz);
      mxy.push_back(r.mi_xy);
      mxz.push_back(r.mi_xz);
    }
    auto corr = [](const std::vector<double>& a, const std::vector<double>& b) {
      try {
        return pearson(a, b);
      } catch (const DomainError&) {
        return CorrelationResult{std::nan(""), std::nan(""), a.size()};
      }
    };
    result.correlations.push_back({k, "lod", corr(lxy, lxz)});
    result.correlations.push_back({k, "mi", corr(mxy, mxz)});
  }
  return result;
}

}  // namespace

StackResult run_stack(const TwoLayerResult& two_layer, const StackConfig& config) {
  std::vector<LowerEntry> entries;
  for (std::size_t i = 0; i < two_layer.rows.size(); ++i) {
    const TwoLayerRow& r = two_layer.rows[i];
    if (std::find(config.lower_sizes.begin(), config.lower_sizes.end(), r.size) == config.lower_sizes.end()) continue;
    entries.push_back({r.kind, r.size, r.patch, &two_layer.models[i], &two_layer.datasets[r.patch].pmf()});
  }
  return stack_entries(entries, config, two_layer.provenance);
}

StackResult run_stack(const fs::path& two_layer_dir, const StackConfig& config) {
  const fs::path cfg_path = two_layer_dir / "config.json";
  if (!fs::exists(cfg_path)) throw DataError("no two-layer output at '" + two_layer_dir.string() + "' (missing config.json)");
  json cfg;
  {
    std::ifstream in(cfg_path);
    cfg = json::parse(in);
  }
  const Provenance prov = provenance_from_json(cfg.at("provenance"));
  const std::size_t n_patches = cfg.at("patches").size();
  std::vector<ModelKind> kinds;
  for (const auto& k : cfg.at("kinds")) kinds.push_back(parse_model_kind(k.get<std::string>()));

  std::vector<std::string> missing;
  for (std::size_t n = 0; n < n_patches; ++n) {
    const fs::path d = two_layer_dir / "data" / ("patch_" + std::to_string(n) + ".json");
    if (!fs::exists(d)) missing.push_back(d.string());
    for (ModelKind k : kinds)
      for (int s : config.lower_sizes) {
        const fs::path m = two_layer_dir / "models" / model_file_name(k, s, static_cast<int>(n));
        if (!fs::exists(m)) missing.push_back(m.string());
      }
  }
  if (!missing.empty()) {
    std::string msg = "missing two-layer artifacts:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw DataError(msg);
  }

  std::vector<EmpiricalDataset> datasets;
  for (std::size_t n = 0; n < n_patches; ++n)
    datasets.push_back(load_dataset(two_layer_dir / "data" / ("patch_" + std::to_string(n) + ".json")));
  std::vector<GenerativeModel> models;
  std::vector<LowerEntry> entries;
  for (std::size_t n = 0; n < n_patches; ++n)
    for (ModelKind k : kinds)
      for (int s : config.lower_sizes) {
        models.push_back(load_model(two_layer_dir / "models" / model_file_name(k, s, static_cast<int>(n))));
        entries.push_back({k, s, static_cast<int>(n), nullptr, &datasets[n].pmf()});
      }
  for (std::size_t i = 0; i < entries.size(); ++i) entries[i].model = &models[i];
  return stack_entries(entries, config, prov);
}

void write_stack_outputs(const StackResult& result, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  {
    auto out = open_out(out_dir / "stack.csv");
    out << "lower_kind,N_y,K_z,patch_set,lod_xy,lod_xz,mi_xy,mi_xz,higher_loglik," << kProvenanceHeader << '\n';
    for (const StackRow& r : result.rows) {
      out << to_string(r.kind) << ',' << r.n_y << ',' << r.k_z << ',' << r.patch << ',' << fmt(r.lod_xy) << ','
          << fmt(r.lod_xz) << ',' << fmt(r.mi_xy) << ',' << fmt(r.mi_xz) << ',' << fmt(r.higher_loglik) << ','
          << provenance_cells(result.provenance, r.patch) << '\n';
    }
  }
  auto out = open_out(out_dir / "correlations.csv");
  out << "model,score_kind,r,p,n,data_source,seed\n";
  for (const CorrelationRow& c : result.correlations) {
    out << to_string(c.kind) << ',' << c.score << ',' << fmt(c.result.r) << ',' << fmt(c.result.p_value) << ','
        << c.result.n << ',' << result.provenance.source << ',' << result.provenance.seed << '\n';
  }
}

}  // namespace lod
