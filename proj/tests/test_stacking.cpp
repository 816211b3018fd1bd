#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "lod/error.hpp"
#include "lod/measures.hpp"
#include "lod/model.hpp"
#include "lod/stacking.hpp"
#include "test_util.hpp"

using lod::Bijection;
using lod::Cpt;
using lod::GenerativeModel;
using lod::ModelKind;
using lod::Pmf;
using lod::StackedModel;
using lod::StateSpace;
using lod::TrainConfig;
using testutil::brute_posterior;
using testutil::enumerate;

namespace {

const std::vector<double> kExample{1 / 21.0, 2 / 21.0, 3 / 21.0, 4 / 21.0, 5 / 21.0, 6 / 21.0};

TrainConfig config(std::size_t restarts, std::uint64_t seed = 0) {
  TrainConfig c;
  c.restarts = restarts;
  c.seed = seed;
  return c;
}

GenerativeModel random_higher(std::mt19937_64& rng, const StateSpace& obs, std::size_t k_z) {
  return testutil::random_model(rng, ModelKind::kSL, obs, StateSpace({k_z}));
}

}  // namespace

TEST(Bijection, Validation) {
  EXPECT_THROW(Bijection({0, 1, 2}), lod::DomainError);
  EXPECT_THROW(Bijection({0}), lod::DomainError);
  EXPECT_THROW(Bijection({0, 0, 1, 2}), lod::DomainError);
  const Bijection b({3, 1, 0, 2});
  EXPECT_EQ(b.bits(), 2u);
  EXPECT_EQ(b.binary_space(), StateSpace({2, 2}));
}

TEST(Pushforward, Examples) {
  const GenerativeModel identity = testutil::deterministic_sl(kExample, {0, 1, 2, 3, 4, 5}, 6);
  const Pmf p(StateSpace({6}), kExample);
  const Pmf py = lod::pushforward_latent(identity, p);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(py[i], kExample[i], 1e-15);

  const Pmf top = lod::pushforward_latent(testutil::deterministic_sl(kExample, {0, 0, 1, 1, 2, 2}, 3), p);
  EXPECT_NEAR(top[0], 3.0 / 21, 1e-15);
  EXPECT_NEAR(top[1], 7.0 / 21, 1e-15);
  EXPECT_NEAR(top[2], 11.0 / 21, 1e-15);

  std::mt19937_64 rng(1);
  const auto row = testutil::random_simplex(rng, 5);
  std::vector<double> table;
  for (int y = 0; y < 3; ++y) table.insert(table.end(), row.begin(), row.end());
  const Pmf prior = testutil::random_pmf(rng, StateSpace({3}));
  const GenerativeModel flat(ModelKind::kSL, {StateSpace({5}), StateSpace({3})},
                             {Cpt(StateSpace({5}), StateSpace({3}), table)}, prior);
  const Pmf pf = lod::pushforward_latent(flat, testutil::random_pmf(rng, StateSpace({5})));
  for (std::size_t y = 0; y < 3; ++y) EXPECT_NEAR(pf[y], prior[y], 1e-14);
}

TEST(SlToBinary, RejectsNonPowerOfTwo) {
  std::mt19937_64 rng(2);
  const GenerativeModel m = testutil::random_model(rng, ModelKind::kSL, StateSpace({3, 3}), StateSpace({6}));
  EXPECT_THROW(lod::sl_to_binary(m, Pmf::uniform(StateSpace({3, 3})), 4, config(1)), lod::DomainError);
  const GenerativeModel il = testutil::random_model(rng, ModelKind::kIL, StateSpace({3, 3}), StateSpace({2, 2}));
  EXPECT_THROW(lod::sl_to_binary(il, Pmf::uniform(StateSpace({3, 3})), 4, config(1)), lod::UnsupportedKind);
}

TEST(SlToBinary, SingleBitTieBreaksToIdentity) {
  std::mt19937_64 rng(3);
  const GenerativeModel m = testutil::random_model(rng, ModelKind::kSL, StateSpace({3, 3}), StateSpace({2}));
  const Pmf p = testutil::random_pmf(rng, StateSpace({3, 3}));
  const auto conv = lod::sl_to_binary(m, p, 20, config(3));
  EXPECT_EQ(conv.bijection.code(), (std::vector<std::size_t>{0, 1}));
  for (double s : conv.candidate_scores) EXPECT_NEAR(s, conv.score, 1e-9);
}

TEST(SlToBinary, ConversionPreservesObservedModel) {
  std::mt19937_64 rng(4);
  const GenerativeModel m = testutil::random_model(rng, ModelKind::kSL, StateSpace({3, 3}), StateSpace({8}));
  const Pmf p = testutil::random_pmf(rng, StateSpace({3, 3}));
  const auto conv = lod::sl_to_binary(m, p, 20, config(2));
  ASSERT_EQ(conv.candidates.size(), 20u);
  const Pmf base = lod::observed_marginal(m);
  for (const Bijection& b : conv.candidates) {
    const Pmf other = lod::observed_marginal(lod::binary_relabel(m, b));
    for (std::size_t x = 0; x < base.size(); ++x) EXPECT_NEAR(other[x], base[x], 1e-12);
  }
  EXPECT_EQ(lod::loglik(conv.converted, p), lod::loglik(m, p));
  EXPECT_EQ(conv.converted.shape().lat, StateSpace({2, 2, 2}));
  const double best = *std::max_element(conv.candidate_scores.begin(), conv.candidate_scores.end());
  EXPECT_NEAR(conv.score, best, 1e-12);
  // Reproducible from the seed.
  const auto again = lod::sl_to_binary(m, p, 20, config(2));
  EXPECT_EQ(again.bijection, conv.bijection);
  // LOD and MI do not depend on latent labels.
  EXPECT_NEAR(lod::lod(conv.converted, p), lod::lod(m, p), 1e-12);
  EXPECT_NEAR(lod::mi_data(conv.converted, p), lod::mi_data(m, p), 1e-12);
}

TEST(SlToBinary, HammingAdjacentPairScoresAtLeastAsWellExhaustive) {
  // Four-state latent whose data mass sits mostly on states 0 and 1.
  const std::vector<double> data{0.46, 0.46, 0.05, 0.03};
  const GenerativeModel lower = testutil::deterministic_sl(data, {0, 1, 2, 3}, 4);
  const Pmf p(StateSpace({4}), data);
  std::vector<std::size_t> code{0, 1, 2, 3};
  std::vector<double> scores;
  std::vector<bool> adjacent;
  do {
    scores.push_back(lod::bijection_score(lower, p, Bijection(code), config(10)));
    adjacent.push_back(std::popcount(code[0] ^ code[1]) == 1);
  } while (std::next_permutation(code.begin(), code.end()));
  ASSERT_EQ(scores.size(), 24u);
  const double best = *std::max_element(scores.begin(), scores.end());
  for (std::size_t i = 0; i < 24; ++i)
    if (adjacent[i]) EXPECT_GE(scores[i], best - 1e-6);
  // Two binary clusters can represent any law on two bits.
  EXPECT_NEAR(best, -testutil::direct_entropy(data), 1e-3);
}

TEST(FitHigher, Examples) {
  std::mt19937_64 rng(5);
  const Pmf py = testutil::random_pmf(rng, StateSpace({2, 2, 2}));
  const auto full = lod::fit_higher(py, 8, config(20));
  EXPECT_NEAR(full.report.final_loglik, -lod::entropy(py), 1e-3);

  const Pmf bits = lod::product(lod::product(testutil::random_pmf(rng, StateSpace({2})), testutil::random_pmf(rng, StateSpace({2}))),
                                testutil::random_pmf(rng, StateSpace({2})));
  EXPECT_NEAR(lod::fit_higher(bits, 1, config(1)).report.final_loglik, -lod::entropy(bits), 1e-12);

  const Pmf point = Pmf::point_mass(StateSpace({2, 2, 2}), 5);
  EXPECT_NEAR(lod::fit_higher(point, 2, config(2)).report.final_loglik, 0.0, 1e-6);
  EXPECT_THROW(lod::fit_higher(point, 0, config(1)), lod::DomainError);
}

TEST(ConnectedScores, RelabeledCopyMatchesChain) {
  std::mt19937_64 rng(6);
  const GenerativeModel lower = testutil::random_model(rng, ModelKind::kSL, StateSpace({3, 2}), StateSpace({4}));
  const Pmf p = testutil::random_pmf(rng, StateSpace({3, 2}));
  const std::size_t perm[4] = {2, 0, 3, 1};  // z -> y
  std::vector<double> table(16, 0.0);
  for (std::size_t z = 0; z < 4; ++z) table[z * 4 + perm[z]] = 1.0;
  const GenerativeModel higher(ModelKind::kSL, {StateSpace({4}), StateSpace({4})},
                               {Cpt(StateSpace({4}), StateSpace({4}), table)}, Pmf::uniform(StateSpace({4})));
  const StackedModel s{lower, std::nullopt, higher, p};
  const auto xz = lod::connected_scores(s);
  const auto xy = lod::chain_scores(lower, p);
  EXPECT_NEAR(xz.lod, xy.lod, 1e-12);
  EXPECT_NEAR(xz.mi, xy.mi, 1e-12);
}

TEST(ConnectedScores, ConstantHigherEncoderHasZeroMi) {
  std::mt19937_64 rng(7);
  const GenerativeModel lower = testutil::random_model(rng, ModelKind::kIL, StateSpace({3, 2}), StateSpace({2, 2}));
  const Pmf p = testutil::random_pmf(rng, StateSpace({3, 2}));
  // theta independent of z makes p_H(Z | Y) equal the prior for every y.
  std::vector<Cpt> theta;
  for (int j = 0; j < 2; ++j) {
    const auto row = testutil::random_simplex(rng, 2);
    std::vector<double> t;
    for (int z = 0; z < 3; ++z) t.insert(t.end(), row.begin(), row.end());
    theta.emplace_back(StateSpace({2}), StateSpace({3}), t);
  }
  const GenerativeModel higher(ModelKind::kSL, {StateSpace({2, 2}), StateSpace({3})}, theta,
                               testutil::random_pmf(rng, StateSpace({3})));
  EXPECT_NEAR(lod::connected_scores(StackedModel{lower, std::nullopt, higher, p}).mi, 0.0, 1e-14);
}

TEST(ConnectedScores, MatchesTripleEnumeration) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 50; ++t) {
    const GenerativeModel lower = testutil::random_model(rng, ModelKind::kSL, StateSpace({6}), StateSpace({4}));
    const GenerativeModel higher = random_higher(rng, StateSpace({4}), 2);
    const Pmf p = testutil::random_pmf(rng, StateSpace({6}));
    const StackedModel s{lower, std::nullopt, higher, p};
    const auto got = lod::connected_scores(s);
    const auto ref = enumerate(lower, higher, testutil::to_vec(p.probs()));
    EXPECT_NEAR(got.lod, ref.lod, 1e-12);
    EXPECT_NEAR(got.mi, ref.mi, 1e-12);
    EXPECT_NEAR(got.loglik, ref.higher_loglik, 1e-12);
  }
}

TEST(ConnectedScores, WithBijectionMatchesEnumeration) {
  std::mt19937_64 rng(9);
  const GenerativeModel lower = testutil::random_model(rng, ModelKind::kSL, StateSpace({3, 3}), StateSpace({4}));
  const Bijection b({2, 3, 1, 0});
  const GenerativeModel higher = random_higher(rng, StateSpace({2, 2}), 3);
  const Pmf p = testutil::random_pmf(rng, StateSpace({3, 3}));
  const auto got = lod::connected_scores(StackedModel{lower, b, higher, p});
  const auto ref = enumerate(lod::binary_relabel(lower, b), higher, testutil::to_vec(p.probs()));
  EXPECT_NEAR(got.lod, ref.lod, 1e-12);
  EXPECT_NEAR(got.mi, ref.mi, 1e-12);
}

TEST(ConnectedScores, DataProcessingInequality) {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 50; ++t) {
    const ModelKind kind = t % 2 ? ModelKind::kIL : ModelKind::kCI;
    const GenerativeModel lower = testutil::random_model(rng, kind, StateSpace({3, 3}), StateSpace({2, 2}));
    const GenerativeModel higher = random_higher(rng, StateSpace({2, 2}), 2 + t % 3);
    const Pmf p = testutil::random_pmf(rng, StateSpace({3, 3}));
    const auto xz = lod::connected_scores(StackedModel{lower, std::nullopt, higher, p});
    const auto xy = lod::chain_scores(lower, p);
    EXPECT_LE(xz.mi, xy.mi + 1e-9);
  }
}

TEST(ConnectedScores, EncoderRowsAndMarginalNormalized) {
  std::mt19937_64 rng(11);
  const GenerativeModel lower = testutil::random_model(rng, ModelKind::kICI, StateSpace({3, 3}), StateSpace({2, 2}));
  const GenerativeModel higher = random_higher(rng, StateSpace({2, 2}), 3);
  const Pmf p = testutil::random_pmf(rng, StateSpace({3, 3}));
  const Cpt enc = lod::connected_encoder(StackedModel{lower, std::nullopt, higher, p});
  std::vector<double> pz(3, 0.0);
  for (std::size_t x = 0; x < 9; ++x) {
    double z = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      z += enc.row(x)[k];
      pz[k] += p[x] * enc.row(x)[k];
    }
    EXPECT_NEAR(z, 1.0, 1e-12);
  }
  EXPECT_NEAR(std::accumulate(pz.begin(), pz.end(), 0.0), 1.0, 1e-12);
}

TEST(ConnectedScores, InvariantToZRelabeling) {
  std::mt19937_64 rng(12);
  const GenerativeModel lower = testutil::random_model(rng, ModelKind::kSL, StateSpace({3, 2}), StateSpace({4}));
  const GenerativeModel higher = random_higher(rng, StateSpace({4}), 3);
  const Pmf p = testutil::random_pmf(rng, StateSpace({3, 2}));
  const std::vector<std::size_t> perm{2, 0, 1};
  const GenerativeModel relabeled = lod::relabel_latent(higher, perm, StateSpace({3}));
  const auto a = lod::connected_scores(StackedModel{lower, std::nullopt, higher, p});
  const auto b = lod::connected_scores(StackedModel{lower, std::nullopt, relabeled, p});
  EXPECT_NEAR(a.lod, b.lod, 1e-12);
  EXPECT_NEAR(a.mi, b.mi, 1e-12);
}

TEST(StackedModel, ValidationRejectsMismatchedSpaces) {
  std::mt19937_64 rng(13);
  const GenerativeModel lower = testutil::random_model(rng, ModelKind::kSL, StateSpace({3}), StateSpace({4}));
  const GenerativeModel higher = random_higher(rng, StateSpace({2, 2}), 2);
  const Pmf p = Pmf::uniform(StateSpace({3}));
  EXPECT_THROW(lod::connected_scores(StackedModel{lower, std::nullopt, higher, p}), lod::DomainError);
  EXPECT_NO_THROW(lod::connected_scores(StackedModel{lower, Bijection({0, 1, 2, 3}), higher, p}));
}
