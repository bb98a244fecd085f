// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "distelect/electoral_college.hpp"
#include "support/oracles.hpp"

namespace de = distelect;

namespace {

de::EVAllocation alloc(std::map<std::string, int> v) { return de::EVAllocation(std::move(v)); }

template <typename Fn>
de::ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const de::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return de::ErrorCode::IoError;
}

}  // namespace

TEST(Allocation, BundledTables) {
  for (const auto* a : {&de::allocation_2024(), &de::allocation_2012()}) {
    EXPECT_EQ(a->size(), 51u);
    EXPECT_EQ(a->total(), 538);
    EXPECT_EQ(a->majority(), 270);
    EXPECT_TRUE(a->contains("District of Columbia"));
  }
  EXPECT_EQ(de::allocation_2024().at("California"), 54);
  EXPECT_EQ(de::allocation_2012().at("California"), 55);
  EXPECT_EQ(&de::allocation_for_year(2020), &de::allocation_2012());
  EXPECT_EQ(&de::allocation_for_year(2024), &de::allocation_2024());
}

TEST(Allocation, CsvRoundTripAndErrors) {
  auto text = de::allocation_to_csv(de::allocation_2024());
  EXPECT_EQ(de::parse_allocation_csv(text), de::allocation_2024());
  EXPECT_EQ(code_of([] { de::parse_allocation_csv("state,electoral_votes\nA,0\n"); }),
            de::ErrorCode::SchemaError);
  EXPECT_EQ(code_of([] { de::parse_allocation_csv("state,votes\nA,1\n"); }), de::ErrorCode::SchemaError);
  EXPECT_EQ(code_of([] { de::parse_allocation_csv("state,electoral_votes\nA,1\nA,2\n"); }),
            de::ErrorCode::SchemaError);
  EXPECT_EQ(code_of([] { de::parse_allocation_csv("state,electoral_votes\nA,x\n"); }),
            de::ErrorCode::SchemaError);
}

TEST(EcDistribution, CertainSweep) {
  auto d = de::ec_distribution({{"A", 1.0}, {"B", 1.0}}, alloc({{"A", 2}, {"B", 3}}));
  ASSERT_EQ(d.pmf.size(), 6u);
  EXPECT_EQ(d.pmf[5], 1.0);
  for (int k = 0; k < 5; ++k) EXPECT_EQ(d.pmf[k], 0.0);
  EXPECT_EQ(de::exact_tie_probability(de::ec_distribution({{"A", 1.0}, {"B", 1.0}}, alloc({{"A", 1}, {"B", 1}}))),
            0.0);
}

TEST(EcDistribution, TwoCoinFlips) {
  const auto a = alloc({{"A", 1}, {"B", 2}});
  const de::StateWins p{{"A", 0.5}, {"B", 0.5}};
  auto d = de::ec_distribution(p, a);
  EXPECT_EQ(d.pmf, (std::vector<double>{0.25, 0.25, 0.25, 0.25}));
  EXPECT_EQ(de::brute_force_ec(p, a).pmf, d.pmf);
  EXPECT_EQ(de::win_chance(d, 2), 0.5);
  EXPECT_EQ(de::win_chance(d, 0), 1.0);
  EXPECT_EQ(de::win_chance(d, 4), 0.0);
  EXPECT_EQ(code_of([&] { de::exact_tie_probability(d); }), de::ErrorCode::OddTotal);
}

TEST(EcDistribution, EvenSplitTie) {
  auto d = de::ec_distribution({{"A", 0.5}, {"B", 0.5}}, alloc({{"A", 1}, {"B", 1}}));
  EXPECT_EQ(de::exact_tie_probability(d), 0.5);
}

TEST(EcDistribution, Errors) {
  const auto a = alloc({{"A", 1}, {"B", 2}});
  EXPECT_EQ(code_of([&] { de::ec_distribution({{"A", 0.5}}, a); }), de::ErrorCode::StateMismatch);
  EXPECT_EQ(code_of([&] { de::ec_distribution({{"A", 0.5}, {"B", 0.5}, {"C", 0.5}}, a); }),
            de::ErrorCode::StateMismatch);
  EXPECT_EQ(code_of([&] { de::ec_distribution({{"A", 0.5}, {"B", 1.5}}, a); }),
            de::ErrorCode::ProbabilityOutOfRange);
  auto d = de::ec_distribution({{"A", 0.5}, {"B", 0.5}}, a);
  EXPECT_EQ(code_of([&] { de::win_chance(d, -1); }), de::ErrorCode::ThresholdOutOfRange);
  EXPECT_EQ(code_of([&] { de::win_chance(d, 5); }), de::ErrorCode::ThresholdOutOfRange);
  EXPECT_EQ(de::win_chance(d, 4), 0.0);
}

TEST(BruteForce, SingleStateAndGuard) {
  auto d = de::brute_force_ec({{"A", 0.7}}, alloc({{"A", 3}}));
  ASSERT_EQ(d.pmf.size(), 4u);
  EXPECT_NEAR(d.pmf[0], 0.3, 1e-15);
  EXPECT_EQ(d.pmf[1], 0.0);
  EXPECT_EQ(d.pmf[2], 0.0);
  EXPECT_EQ(d.pmf[3], 0.7);
  EXPECT_EQ(de::win_chance(d, 2), 0.7);

  std::mt19937_64 rng(1);
  auto big = de::testing::random_allocation(rng, 21);
  EXPECT_EQ(code_of([&] { de::brute_force_ec(de::testing::random_wins(rng, big), big); }),
            de::ErrorCode::TooManyStates);
}

TEST(EcProperties, OracleOrderMirrorAndMean) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> nstates(1, 12);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = de::testing::random_allocation(rng, nstates(rng));
    const auto p = de::testing::random_wins(rng, a);
    const auto fast = de::ec_distribution(p, a);
    const auto slow = de::brute_force_ec(p, a);
    ASSERT_EQ(fast.pmf.size(), slow.pmf.size());
    double total = 0.0, mean = 0.0, expect_mean = 0.0;
    for (std::size_t k = 0; k < fast.pmf.size(); ++k) {
      EXPECT_NEAR(fast.pmf[k], slow.pmf[k], 1e-12);
      EXPECT_GE(fast.pmf[k], 0.0);
      total += fast.pmf[k];
      mean += static_cast<double>(k) * fast.pmf[k];
    }
    for (const auto& [s, ev] : a.votes()) expect_mean += p.at(s) * ev;
    EXPECT_NEAR(total, 1.0, 1e-9);
    EXPECT_NEAR(mean, expect_mean, 1e-9);
    EXPECT_NEAR(de::expected_votes(fast), expect_mean, 1e-9);

    de::StateWins flipped;
    for (const auto& [s, v] : p) flipped[s] = 1.0 - v;
    const auto mirror = de::ec_distribution(flipped, a);
    for (int k = 0; k <= fast.e_total; ++k) EXPECT_NEAR(fast.pmf[k], mirror.pmf[fast.e_total - k], 1e-12);
    EXPECT_NEAR(de::loss_chance(fast, a.majority()), de::win_chance(mirror, a.majority()), 1e-12);

    // Renaming states changes the multiplication order.
    std::map<std::string, int> renamed;
    de::StateWins renamed_p;
    for (const auto& [s, ev] : a.votes()) {
      renamed["z" + std::string(s.rbegin(), s.rend())] = ev;
      renamed_p["z" + std::string(s.rbegin(), s.rend())] = p.at(s);
    }
    const auto reordered = de::ec_distribution(renamed_p, alloc(renamed));
    for (int k = 0; k <= fast.e_total; ++k) EXPECT_NEAR(fast.pmf[k], reordered.pmf[k], 1e-12);
  }
}

TEST(EcDistribution, PmfCsv) {
  auto d = de::ec_distribution({{"A", 0.5}, {"B", 0.5}}, alloc({{"A", 1}, {"B", 2}}));
  EXPECT_EQ(de::pmf_to_csv(d), "k,probability\n0,0.25\n1,0.25\n2,0.25\n3,0.25\n");
}
