#include "lod/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "lod/error.hpp"

namespace lod {

namespace {

void check_probabilities(std::span<const double> probs, const char* what) {
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!(probs[i] >= 0.0) || !std::isfinite(probs[i]))
      throw DomainError(std::string(what) + ": entry " + std::to_string(i) +
                        " is negative or not finite");
  }
}

double mass(std::span<const double> probs) { return std::accumulate(probs.begin(), probs.end(), 0.0); }

}  // namespace

double floored_log(double p) { return std::log(std::max(p, kProbFloor)); }

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double top = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(top)) return top;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - top);
  return top + std::log(sum);
}

// ---------------------------------------------------------------------------
// Pmf

Pmf::Pmf(StateSpace space, std::vector<double> probs) : space_(std::move(space)), probs_(std::move(probs)) {
  if (probs_.size() != space_.total())
    throw DomainError("pmf has " + std::to_string(probs_.size()) + " entries, space has " +
                      std::to_string(space_.total()) + " states");
  check_probabilities(probs_, "pmf");
  const double total = mass(probs_);
  if (std::abs(total - 1.0) > kMassTolerance)
    throw DomainError("pmf mass " + std::to_string(total) + " is not 1");
}

Pmf Pmf::normalized(StateSpace space, std::vector<double> weights) {
  check_probabilities(weights, "pmf weights");
  const double total = mass(weights);
  if (!(total > 0.0)) throw DomainError("cannot normalize weights with zero mass");
  for (double& w : weights) w /= total;
  return Pmf(std::move(space), std::move(weights));
}

Pmf Pmf::uniform(StateSpace space) {
  const std::size_t n = space.total();
  return Pmf(std::move(space), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

Pmf Pmf::point_mass(StateSpace space, std::size_t flat) {
  if (flat >= space.total()) throw DomainError("point mass index out of range");
  std::vector<double> probs(space.total(), 0.0);
  probs[flat] = 1.0;
  return Pmf(std::move(space), std::move(probs));
}

Pmf Pmf::reshaped(StateSpace space) const {
  if (space.total() != space_.total()) throw DomainError("reshape changes the number of states");
  return Pmf(std::move(space), probs_);
}

Pmf Pmf::flattened() const { return reshaped(StateSpace({space_.total()})); }

// ---------------------------------------------------------------------------
// Cpt

Cpt::Cpt(StateSpace child_space, StateSpace parent_space, std::vector<double> table, std::vector<bool> defined)
    : child_(std::move(child_space)),
      parent_(std::move(parent_space)),
      table_(std::move(table)),
      defined_(std::move(defined)) {
  const std::size_t rows = parent_.total();
  const std::size_t cols = child_.total();
  if (table_.size() != rows * cols) throw DomainError("cpt table size does not match its spaces");
  if (defined_.empty()) defined_.assign(rows, true);
  if (defined_.size() != rows) throw DomainError("cpt definedness mask size mismatch");
  check_probabilities(table_, "cpt");
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = std::span<const double>(table_).subspan(r * cols, cols);
    if (!defined_[r]) {
      std::fill(table_.begin() + static_cast<std::ptrdiff_t>(r * cols),
                table_.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols), 0.0);
      continue;
    }
    if (std::abs(mass(row) - 1.0) > kMassTolerance)
      throw DomainError("cpt row " + std::to_string(r) + " does not sum to 1");
  }
}

bool Cpt::all_defined() const noexcept {
  return std::all_of(defined_.begin(), defined_.end(), [](bool d) { return d; });
}

std::span<const double> Cpt::row(std::size_t parent) const {
  if (!defined_.at(parent)) throw EvaluationError("conditional row undefined (zero parent mass)", parent);
  return raw_row(parent);
}

std::span<const double> Cpt::raw_row(std::size_t parent) const {
  const std::size_t cols = child_.total();
  return std::span<const double>(table_).subspan(parent * cols, cols);
}

// ---------------------------------------------------------------------------
// Operations

Pmf product(const Pmf& a, const Pmf& b) {
  std::vector<std::size_t> cards = a.space().cards();
  cards.insert(cards.end(), b.space().cards().begin(), b.space().cards().end());
  std::vector<double> probs;
  probs.reserve(a.size() * b.size());
  for (double pa : a.probs())
    for (double pb : b.probs()) probs.push_back(pa * pb);
  return Pmf::normalized(StateSpace(std::move(cards)), std::move(probs));
}

double kl_divergence(std::span<const double> p, std::span<const double> q, SupportPolicy policy) {
  if (p.size() != q.size()) throw DomainError("kl_divergence: distributions over different spaces");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0 && policy == SupportPolicy::kStrict)
      throw EvaluationError("kl_divergence: q is zero where p is positive", i);
    d += p[i] * (std::log(p[i]) - floored_log(q[i]));
  }
  // Rounding can leave a tiny negative value when p == q.
  return std::max(d, 0.0);
}

double kl_divergence(const Pmf& p, const Pmf& q, SupportPolicy policy) {
  if (p.space() != q.space()) throw DomainError("kl_divergence: distributions over different spaces");
  return kl_divergence(p.probs(), q.probs(), policy);
}

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return std::max(h, 0.0);
}

double entropy(const Pmf& p) { return entropy(p.probs()); }

Pmf marginalize(const Pmf& p, std::span<const std::size_t> keep) {
  if (keep.empty()) throw DomainError("marginalize: keep set is empty");
  const StateSpace& space = p.space();
  std::vector<bool> seen(space.num_vars(), false);
  for (std::size_t v : keep) {
    if (v >= space.num_vars()) throw DomainError("marginalize: variable out of range");
    if (seen[v]) throw DomainError("marginalize: duplicate variable in keep set");
    seen[v] = true;
  }
  StateSpace sub = space.subspace(keep);
  std::vector<double> out(sub.total(), 0.0);
  DigitTable digits(space);
  for (std::size_t flat = 0; flat < space.total(); ++flat) {
    std::size_t target = 0;
    for (std::size_t v : keep) target = target * space.card(v) + digits(flat, v);
    out[target] += p[flat];
  }
  return Pmf::normalized(std::move(sub), std::move(out));
}

Cpt condition(const Pmf& p, std::span<const std::size_t> given) {
  const StateSpace& space = p.space();
  if (given.empty()) throw DomainError("condition: given set is empty");
  std::vector<bool> is_given(space.num_vars(), false);
  for (std::size_t v : given) {
    if (v >= space.num_vars()) throw DomainError("condition: variable out of range");
    if (is_given[v]) throw DomainError("condition: duplicate variable in given set");
    is_given[v] = true;
  }
  std::vector<std::size_t> rest;
  for (std::size_t v = 0; v < space.num_vars(); ++v)
    if (!is_given[v]) rest.push_back(v);
  if (rest.empty()) throw DomainError("condition: nothing left to condition");

  StateSpace parent = space.subspace(given);
  StateSpace child = space.subspace(rest);
  const std::size_t cols = child.total();
  std::vector<double> table(parent.total() * cols, 0.0);
  DigitTable digits(space);
  for (std::size_t flat = 0; flat < space.total(); ++flat) {
    std::size_t pr = 0;
    for (std::size_t v : given) pr = pr * space.card(v) + digits(flat, v);
    std::size_t ch = 0;
    for (std::size_t v : rest) ch = ch * space.card(v) + digits(flat, v);
    table[pr * cols + ch] += p[flat];
  }
  std::vector<bool> defined(parent.total(), true);
  for (std::size_t r = 0; r < parent.total(); ++r) {
    const auto first = table.begin() + static_cast<std::ptrdiff_t>(r * cols);
    const double z = std::accumulate(first, first + static_cast<std::ptrdiff_t>(cols), 0.0);
    if (z <= 0.0) {
      defined[r] = false;
      continue;
    }
    std::for_each(first, first + static_cast<std::ptrdiff_t>(cols), [z](double& v) { v /= z; });
  }
  return Cpt(std::move(child), std::move(parent), std::move(table), std::move(defined));
}

}  // namespace lod
