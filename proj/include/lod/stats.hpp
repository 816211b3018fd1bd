#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <span>
#include <string>

namespace lod {

/// Key of a raw evaluation value V(m, s, n): model kind, model size
/// (ordinal, smallest first) and patch set.
struct ScoreKey {
  std::string model;
  int size = 0;
  int patch = 0;

  auto operator<=>(const ScoreKey&) const = default;
};

using ScoreTable = std::map<ScoreKey, double>;

/// Removes patch-set offsets per model kind:
///   V_q(m,s,n) = V_a(m) + V(m,s,n) - V(m,s0,n),  V_a(m) = mean_n V(m,s0,n)
/// where s0 is the smallest size present for model m. Throws DomainError if
/// some (m, n) lacks its s0 entry.
ScoreTable offset_removal(const ScoreTable& values);

struct CorrelationResult {
  double r = 0.0;
  double p_value = 1.0;  // two-tailed
  std::size_t n = 0;
};

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

/// CDF of Student's t with `dof` degrees of freedom.
double student_t_cdf(double t, double dof);

/// Pearson r with a two-tailed p-value from t = r sqrt((n-2)/(1-r^2)) on
/// n-2 degrees of freedom. Needs n >= 3 and non-zero variance in both
/// inputs (DomainError otherwise).
CorrelationResult pearson(std::span<const double> xs, std::span<const double> ys);

/// Two-tailed p-value for a correlation r observed on n samples.
double correlation_p_value(double r, std::size_t n);

}  // namespace lod
