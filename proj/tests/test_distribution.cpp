#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "lod/distribution.hpp"
#include "lod/error.hpp"
#include "test_util.hpp"

using lod::Cpt;
using lod::Pmf;
using lod::StateSpace;

namespace {

Pmf example_p() { return Pmf::normalized(StateSpace({6}), {1, 2, 3, 4, 5, 6}); }

// p1(X, Y) of the deterministic best-LOD grouping, X major.
Pmf table1_top_joint() {
  std::vector<double> w(18, 0.0);
  const std::size_t group[6] = {0, 0, 1, 1, 2, 2};
  for (std::size_t x = 0; x < 6; ++x) w[x * 3 + group[x]] = static_cast<double>(x + 1);
  return Pmf::normalized(StateSpace({6, 3}), w);
}

}  // namespace

TEST(Pmf, RejectsBadInput) {
  EXPECT_THROW(Pmf(StateSpace({2}), {0.5, 0.6}), lod::DomainError);
  EXPECT_THROW(Pmf(StateSpace({2}), {1.5, -0.5}), lod::DomainError);
  EXPECT_THROW(Pmf(StateSpace({3}), {0.5, 0.5}), lod::DomainError);
  EXPECT_THROW(Pmf::normalized(StateSpace({2}), {0.0, 0.0}), lod::DomainError);
}

TEST(Cpt, RejectsBadRows) {
  EXPECT_THROW(Cpt(StateSpace({2}), StateSpace({2}), {0.5, 0.5, 0.2, 0.2}), lod::DomainError);
  EXPECT_THROW(Cpt(StateSpace({2}), StateSpace({2}), {0.5, 0.5, 1.0}), lod::DomainError);
}

TEST(Cpt, UndefinedRowThrowsOnUse) {
  const Cpt c(StateSpace({2}), StateSpace({2}), {0.5, 0.5, 0.0, 0.0}, {true, false});
  EXPECT_FALSE(c.all_defined());
  EXPECT_NO_THROW(c.row(0));
  try {
    c.row(1);
    FAIL() << "expected EvaluationError";
  } catch (const lod::EvaluationError& e) {
    EXPECT_EQ(e.index(), 1u);
  }
}

TEST(Kl, IdentityIsZero) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const Pmf p = testutil::random_pmf(rng, StateSpace({7}));
    EXPECT_NEAR(lod::kl_divergence(p, p), 0.0, 1e-15);
  }
}

TEST(Kl, TableOneQ) {
  const Pmf q = Pmf::normalized(StateSpace({6}), {3, 3, 7, 7, 11, 11});
  EXPECT_NEAR(lod::kl_divergence(example_p(), q), 0.0137, 5e-4);
}

TEST(Kl, TwoTermSum) {
  const Pmf p(StateSpace({2}), {0.5, 0.5});
  const Pmf q(StateSpace({2}), {0.25, 0.75});
  const double expected = 0.5 * std::log(0.5 / 0.25) + 0.5 * std::log(0.5 / 0.75);
  EXPECT_NEAR(lod::kl_divergence(p, q), expected, 1e-15);
  EXPECT_NEAR(lod::kl_divergence(p, q), 0.14384, 1e-5);
}

TEST(Kl, NonNegativeOnRandomPairs) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 200; ++t) {
    const StateSpace s({2 + static_cast<std::size_t>(t % 9)});
    const Pmf p = testutil::random_pmf(rng, s);
    const Pmf q = testutil::random_pmf(rng, s);
    const double d = lod::kl_divergence(p, q);
    EXPECT_GE(d, 0.0);
    EXPECT_NEAR(d, testutil::direct_kl(testutil::to_vec(p.probs()), testutil::to_vec(q.probs())), 1e-12);
    EXPECT_GT(d, 1e-12);
  }
}

TEST(Kl, SupportViolation) {
  const Pmf p(StateSpace({3}), {0.5, 0.5, 0.0});
  const Pmf q(StateSpace({3}), {1.0, 0.0, 0.0});
  try {
    lod::kl_divergence(p, q, lod::SupportPolicy::kStrict);
    FAIL() << "expected EvaluationError";
  } catch (const lod::EvaluationError& e) {
    EXPECT_EQ(e.index(), 1u);
  }
  // Smoothed: q clamped to the floor.
  EXPECT_NEAR(lod::kl_divergence(p, q), 0.5 * std::log(0.5) + 0.5 * (std::log(0.5) - std::log(lod::kProbFloor)),
              1e-12);
}

TEST(Kl, MismatchedSpacesThrow) {
  EXPECT_THROW(lod::kl_divergence(Pmf::uniform(StateSpace({2})), Pmf::uniform(StateSpace({3}))), lod::DomainError);
}

TEST(Entropy, Examples) {
  EXPECT_DOUBLE_EQ(lod::entropy(Pmf::point_mass(StateSpace({6}), 3)), 0.0);
  EXPECT_NEAR(lod::entropy(Pmf::uniform(StateSpace({6}))), std::log(6.0), 1e-14);
  EXPECT_NEAR(lod::entropy(Pmf::uniform(StateSpace({6}))), 1.79176, 1e-5);
  double h = 0.0;
  for (int k = 1; k <= 6; ++k) h -= k / 21.0 * std::log(k / 21.0);
  EXPECT_NEAR(lod::entropy(example_p()), h, 1e-14);
  EXPECT_NEAR(lod::entropy(example_p()), 1.6623, 1e-4);
}

TEST(Entropy, Bounds) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const Pmf p = testutil::random_pmf(rng, StateSpace({5, 2}));
    const double h = lod::entropy(p);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, std::log(10.0) + 1e-12);
  }
}

TEST(Marginalize, Examples) {
  const Pmf joint = table1_top_joint();
  const std::vector<std::size_t> both{0, 1};
  const Pmf same = lod::marginalize(joint, both);
  for (std::size_t i = 0; i < joint.size(); ++i) EXPECT_DOUBLE_EQ(same[i], joint[i]);

  const std::vector<std::size_t> y{1};
  const Pmf py = lod::marginalize(joint, y);
  EXPECT_NEAR(py[0], 3.0 / 21, 1e-15);
  EXPECT_NEAR(py[1], 7.0 / 21, 1e-15);
  EXPECT_NEAR(py[2], 11.0 / 21, 1e-15);

  std::mt19937_64 rng(4);
  const Pmf a = testutil::random_pmf(rng, StateSpace({4}));
  const Pmf b = testutil::random_pmf(rng, StateSpace({3}));
  const std::vector<std::size_t> x{0};
  const Pmf px = lod::marginalize(lod::product(a, b), x);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(px[i], a[i], 1e-15);
}

TEST(Marginalize, EmptyKeepThrows) {
  EXPECT_THROW(lod::marginalize(table1_top_joint(), std::vector<std::size_t>{}), lod::DomainError);
}

TEST(Marginalize, PathIndependence) {
  std::mt19937_64 rng(5);
  const Pmf p = testutil::random_pmf(rng, StateSpace({2, 3, 4, 2}));
  const std::vector<std::size_t> keep3{0, 2, 3};
  const std::vector<std::size_t> keep_then{0, 1};  // positions 0,1 of the kept (0,2)
  const std::vector<std::size_t> direct{0, 2};
  const Pmf two_step = lod::marginalize(lod::marginalize(p, keep3), keep_then);
  const Pmf one_step = lod::marginalize(p, direct);
  ASSERT_EQ(two_step.space(), one_step.space());
  for (std::size_t i = 0; i < one_step.size(); ++i) EXPECT_NEAR(two_step[i], one_step[i], 1e-15);
}

TEST(Condition, TableOneRowsArePointMasses) {
  const std::vector<std::size_t> given{0};
  const Cpt c = lod::condition(table1_top_joint(), given);
  const std::size_t group[6] = {0, 0, 1, 1, 2, 2};
  for (std::size_t x = 0; x < 6; ++x)
    for (std::size_t y = 0; y < 3; ++y) EXPECT_DOUBLE_EQ(c.row(x)[y], y == group[x] ? 1.0 : 0.0);
}

TEST(Condition, ProductRowsEqualMarginal) {
  std::mt19937_64 rng(6);
  const Pmf a = testutil::random_pmf(rng, StateSpace({4}));
  const Pmf b = testutil::random_pmf(rng, StateSpace({3}));
  const std::vector<std::size_t> given{0};
  const Cpt c = lod::condition(lod::product(a, b), given);
  for (std::size_t x = 0; x < 4; ++x)
    for (std::size_t y = 0; y < 3; ++y) EXPECT_NEAR(c.row(x)[y], b[y], 1e-14);
}

TEST(Condition, HandNormalized) {
  const Pmf p(StateSpace({2, 2}), {0.1, 0.2, 0.3, 0.4});
  const std::vector<std::size_t> given{0};
  const Cpt c = lod::condition(p, given);
  EXPECT_NEAR(c.row(0)[0], 1.0 / 3, 1e-15);
  EXPECT_NEAR(c.row(0)[1], 2.0 / 3, 1e-15);
  EXPECT_NEAR(c.row(1)[0], 3.0 / 7, 1e-15);
  EXPECT_NEAR(c.row(1)[1], 4.0 / 7, 1e-15);
}

TEST(Condition, ZeroParentRowIsUndefined) {
  const Pmf p(StateSpace({2, 2}), {0.0, 0.0, 0.3, 0.7});
  const std::vector<std::size_t> given{0};
  const Cpt c = lod::condition(p, given);
  EXPECT_FALSE(c.defined(0));
  EXPECT_TRUE(c.defined(1));
  EXPECT_THROW(c.row(0), lod::EvaluationError);
}

TEST(Condition, ReconstructsJoint) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    const Pmf p = testutil::random_pmf(rng, StateSpace({3, 2, 4}));
    const std::vector<std::size_t> given{1};
    const Cpt c = lod::condition(p, given);
    const Pmf parent = lod::marginalize(p, given);
    // child space = remaining vars (0, 2) in ascending order
    for (std::size_t flat = 0; flat < p.size(); ++flat) {
      const auto s = p.space().unindex(flat);
      const std::size_t child = s[0] * 4 + s[2];
      EXPECT_NEAR(c.row(s[1])[child] * parent[s[1]], p[flat], 1e-12);
    }
  }
}

TEST(LogSumExp, StableForLargeInputs) {
  const std::vector<double> v{-1000.0, -1000.0};
  EXPECT_NEAR(lod::log_sum_exp(v), -1000.0 + std::log(2.0), 1e-12);
}

TEST(FlooredLog, NeverBelowFloor) {
  EXPECT_DOUBLE_EQ(lod::floored_log(0.0), std::log(lod::kProbFloor));
  EXPECT_DOUBLE_EQ(lod::floored_log(0.5), std::log(0.5));
}
