// Experiment driver: single-variable example, oracle search, two-layer study
// and stacking study.
//
// Exit codes: 0 success, 1 validation failure, 2 data error.

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lod/error.hpp"
#include "lod/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitData = 2;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<int> parse_sizes(const std::string& spec) {
  // "1..6" or "1,2,3"
  if (auto dots = spec.find(".."); dots != std::string::npos) {
    const int lo = std::stoi(spec.substr(0, dots));
    const int hi = std::stoi(spec.substr(dots + 2));
    if (lo > hi) throw lod::DomainError("empty size range '" + spec + "'");
    std::vector<int> out;
    for (int s = lo; s <= hi; ++s) out.push_back(s);
    return out;
  }
  std::vector<int> out;
  for (const auto& s : split(spec, ',')) out.push_back(std::stoi(s));
  return out;
}

std::vector<lod::PatchSpec> parse_patches(const std::string& spec) {
  // "r:c;r:c;..."
  std::vector<lod::PatchSpec> out;
  for (const auto& item : split(spec, ';')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw lod::DomainError("patch '" + item + "' is not row:col");
    out.push_back(lod::PatchSpec{.row = std::stoul(item.substr(0, colon)), .col = std::stoul(item.substr(colon + 1))});
  }
  return out;
}

void print_partitions(const char* label, const std::vector<std::vector<std::size_t>>& parts) {
  std::cout << label << ':';
  for (const auto& p : parts) {
    std::cout << " {";
    for (std::size_t group = 0; group < 3; ++group) {
      std::cout << (group ? "|" : "");
      for (std::size_t x = 0; x < p.size(); ++x)
        if (p[x] == group) std::cout << 'x' << x + 1;
    }
    std::cout << '}';
  }
  std::cout << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent-observed dissimilarity experiments"};
  app.require_subcommand(1);

  auto* table2 = app.add_subcommand("table2", "LOD and MI of the best-LOD and best-MI single-variable models");
  auto* oracle = app.add_subcommand("oracle", "Exhaustive search over the 729 deterministic assignments");

  auto* two_layer = app.add_subcommand("two-layer", "Train and score SL/IL/CI/ICI models on patch sets");
  std::string data = "mnist";
  std::string mnist_dir;
  if (const char* env = std::getenv("LOD_DATA_DIR")) mnist_dir = env;
  std::string models = "sl,il,ci,ici";
  std::string ny = "1..6";
  std::string patches;
  std::string out_dir = "two_layer_out";
  lod::TwoLayerConfig tl;
  two_layer->add_option("--data", data, "mnist or synthetic")->check(CLI::IsMember({"mnist", "synthetic"}));
  two_layer->add_option("--mnist-dir", mnist_dir, "Directory with train-images-idx3-ubyte[.gz] (env LOD_DATA_DIR)");
  two_layer->add_option("--models", models, "Comma-separated model kinds");
  two_layer->add_option("--ny", ny, "Model sizes, e.g. 1..6 or 1,3,5");
  two_layer->add_option("--restarts", tl.train.restarts, "Random restarts per model");
  two_layer->add_option("--max-iters", tl.train.max_iters, "Iteration cap per restart");
  two_layer->add_option("--tol", tl.train.tol, "Absolute loglik change for convergence");
  two_layer->add_option("--seed", tl.train.seed, "Master seed");
  two_layer->add_option("--concentration", tl.train.init_concentration, "Dirichlet init concentration");
  two_layer->add_option("--patches", patches, "Patch offsets 'row:col;row:col;...'");
  two_layer->add_option("--synthetic-strength", tl.synthetic_strength, "Mode weight of synthetic data");
  two_layer->add_option("--synthetic-samples", tl.synthetic_samples, "Samples per synthetic patch set");
  two_layer->add_option("--threads", tl.threads, "Worker threads (0: all cores)");
  two_layer->add_option("--out", out_dir, "Output directory");

  auto* stack = app.add_subcommand("stack", "Fit higher SL models on two-layer output and correlate scores");
  std::string from_dir = "two_layer_out";
  std::string stack_out = "stack_out";
  lod::StackConfig sc;
  std::string lower_ny = "3..6";
  stack->add_option("--ny", lower_ny, "Lower model sizes to stack on");
  stack->add_option("--from", from_dir, "two-layer output directory");
  stack->add_option("--out", stack_out, "Output directory");
  stack->add_option("--restarts", sc.train.restarts, "EM restarts per higher model");
  stack->add_option("--max-iters", sc.train.max_iters, "Iteration cap per restart");
  stack->add_option("--tol", sc.train.tol, "Absolute loglik change for convergence");
  stack->add_option("--seed", sc.train.seed, "Master seed");
  stack->add_option("--candidates", sc.candidates, "Random bijections tried per SL lower model");
  stack->add_option("--threads", sc.threads, "Worker threads (0: all cores)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*table2) {
      const auto report = lod::run_table2();
      lod::print_checks(std::cout, report.checks);
      return report.all_pass() ? kExitOk : kExitValidation;
    }
    if (*oracle) {
      const auto report = lod::run_oracle();
      std::cout << "assignments " << report.assignments << '\n';
      print_partitions("argmin_lod", report.lod_minimizers);
      print_partitions("argmax_mi", report.mi_maximizers);
      std::cout << "lod_grouping " << (report.lod_matches ? "PASS" : "FAIL") << '\n';
      std::cout << "mi_grouping " << (report.mi_matches ? "PASS" : "FAIL") << '\n';
      lod::print_checks(std::cout, report.checks);
      return report.all_pass() ? kExitOk : kExitValidation;
    }
    if (*two_layer) {
      tl.source = data == "mnist" ? lod::DataSource::kMnist : lod::DataSource::kSynthetic;
      tl.mnist_dir = mnist_dir.empty() ? "." : mnist_dir;
      tl.kinds.clear();
      for (const auto& k : split(models, ',')) tl.kinds.push_back(lod::parse_model_kind(k));
      tl.sizes = parse_sizes(ny);
      if (!patches.empty()) tl.patches = parse_patches(patches);
      const auto result = lod::run_two_layer(tl);
      lod::write_two_layer_outputs(result, tl, out_dir);
      std::cout << "wrote " << result.rows.size() << " rows to " << out_dir << '\n';
      return kExitOk;
    }
    if (*stack) {
      sc.lower_sizes = parse_sizes(lower_ny);
      const auto result = lod::run_stack(from_dir, sc);
      lod::write_stack_outputs(result, stack_out);
      std::cout << "wrote " << result.rows.size() << " stacked rows to " << stack_out << '\n';
      for (const auto& c : result.correlations)
        std::cout << lod::to_string(c.kind) << ' ' << c.score << " r=" << c.result.r << " p=" << c.result.p_value
                  << " n=" << c.result.n << '\n';
      return kExitOk;
    }
  } catch (const lod::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const lod::ParseError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}
