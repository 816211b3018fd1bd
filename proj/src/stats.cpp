#include "lod/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "lod/error.hpp"

namespace lod {

ScoreTable offset_removal(const ScoreTable& values) {
  std::map<std::string, int> smallest;
  std::map<std::string, std::set<int>> patches;
  for (const auto& [key, v] : values) {
    auto [it, inserted] = smallest.try_emplace(key.model, key.size);
    if (!inserted) it->second = std::min(it->second, key.size);
    patches[key.model].insert(key.patch);
  }

  std::map<std::string, double> mean_smallest;
  for (const auto& [model, size0] : smallest) {
    double sum = 0.0;
    for (int n : patches[model]) {
      auto it = values.find(ScoreKey{model, size0, n});
      if (it == values.end())
        throw DomainError("offset removal: model " + model + " has no size-" + std::to_string(size0) +
                          " value for patch set " + std::to_string(n));
      sum += it->second;
    }
    mean_smallest[model] = sum / static_cast<double>(patches[model].size());
  }

  ScoreTable adjusted;
  for (const auto& [key, v] : values) {
    const double base = values.at(ScoreKey{key.model, smallest[key.model], key.patch});
    adjusted[key] = v + (mean_smallest[key.model] - base);
  }
  return adjusted;
}

namespace {

// Continued fraction for the incomplete beta (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 100000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("incomplete beta needs a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0)) return std::exp(log_front) * beta_continued_fraction(a, b, x) / a;
  return 1.0 - std::exp(log_front) * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double dof) {
  if (!(dof > 0.0)) throw DomainError("t distribution needs positive degrees of freedom");
  if (t == 0.0) return 0.5;
  const double tail = 0.5 * incomplete_beta(0.5 * dof, 0.5, dof / (dof + t * t));
  return t > 0.0 ? 1.0 - tail : tail;
}

double correlation_p_value(double r, std::size_t n) {
  if (n < 3) throw DomainError("correlation p-value needs n >= 3");
  const double r2 = std::min(r * r, 1.0);
  if (r2 >= 1.0) return 0.0;
  // P(|T| >= |t|) = I_{dof/(dof+t^2)}(dof/2, 1/2) and dof/(dof+t^2) = 1 - r^2
  return incomplete_beta(0.5 * static_cast<double>(n - 2), 0.5, 1.0 - r2);
}

CorrelationResult pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DomainError("pearson: inputs differ in length");
  const std::size_t n = xs.size();
  if (n < 3) throw DomainError("pearson: need at least 3 samples");
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw DomainError("pearson: correlation undefined for zero variance");
  const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  return CorrelationResult{r, correlation_p_value(r, n), n};
}

}  // namespace lod
