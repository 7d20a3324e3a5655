#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "pvar/random.hpp"
#include "pvar/selection.hpp"

namespace {

using pvar::ScoredPrompt;
using pvar::SelectionStrategy;
using pvar::StrategyKind;

pvar::PromptRecord record_with(std::vector<double> rewards) {
  pvar::PromptRecord rec{"p", "", {}};
  for (std::size_t i = 0; i < rewards.size(); ++i) rec.responses.push_back({"y" + std::to_string(i), "", rewards[i]});
  return rec;
}

std::vector<ScoredPrompt> random_scores(pvar::Rng& rng, std::size_t n, bool with_ties) {
  std::vector<ScoredPrompt> s;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = with_ties ? std::floor(rng.uniform() * 5.0) / 20.0 : rng.uniform(0.0, 0.25);
    s.push_back({"q" + std::to_string(rng.below(1000000)) + "_" + std::to_string(i), v});
  }
  return s;
}

TEST(RankByScore, Examples) {
  const std::vector<ScoredPrompt> s{{"a", 0.1}, {"b", 0.2}, {"c", 0.05}};
  EXPECT_EQ(pvar::rank_by_score(s), (std::vector<std::string>{"b", "a", "c"}));
  const std::vector<ScoredPrompt> tie{{"b", 0.1}, {"a", 0.1}};
  EXPECT_EQ(pvar::rank_by_score(tie), (std::vector<std::string>{"a", "b"}));
  EXPECT_TRUE(pvar::rank_by_score(std::vector<ScoredPrompt>{}).empty());
}

TEST(RankByScore, RejectsNonFinite) {
  const std::vector<ScoredPrompt> s{{"a", NAN}};
  EXPECT_THROW(pvar::rank_by_score(s), pvar::InvalidInputError);
}

TEST(SelectionCount, CeilWithFloor1) {
  EXPECT_EQ(pvar::selection_count(0.1, 100), 10u);
  EXPECT_EQ(pvar::selection_count(0.1, 9), 1u);
  EXPECT_EQ(pvar::selection_count(0.7, 10), 7u);
  EXPECT_EQ(pvar::selection_count(0.5, 5), 3u);
  EXPECT_EQ(pvar::selection_count(0.001, 10), 1u);
  EXPECT_EQ(pvar::selection_count(1.0, 13), 13u);
  EXPECT_EQ(pvar::selection_count(0.5, 0), 0u);
}

TEST(Select, TopHalfOfFour) {
  const std::vector<ScoredPrompt> s{{"a", 0.01}, {"b", 0.2}, {"c", 0.15}, {"d", 0.05}};
  const auto m = pvar::select(s, {StrategyKind::kPvarTop, 0.5, 0}, 4);
  EXPECT_EQ(m.selected_ids(), (std::vector<std::string>{"b", "c"}));
  const auto bottom = pvar::select(s, {StrategyKind::kPvarBottom, 0.5, 0}, 4);
  EXPECT_EQ(bottom.selected_ids(), (std::vector<std::string>{"a", "d"}));
}

TEST(Select, TopTenPercentOfHundred) {
  pvar::Rng rng(1);
  const auto s = random_scores(rng, 100, false);
  const auto m = pvar::select(s, {StrategyKind::kPvarTop, 0.1, 0}, 100);
  EXPECT_EQ(m.selected.size(), 10u);
}

TEST(Select, RandomIsSeedDeterministic) {
  pvar::Rng rng(2);
  const auto s = random_scores(rng, 50, false);
  const auto a = pvar::select(s, {StrategyKind::kRandom, 0.5, 42}, 50);
  const auto b = pvar::select(s, {StrategyKind::kRandom, 0.5, 42}, 50);
  const auto c = pvar::select(s, {StrategyKind::kRandom, 0.5, 43}, 50);
  EXPECT_EQ(a, b);
  EXPECT_NE(a.selected_ids(), c.selected_ids());
  EXPECT_EQ(a.selected.size(), 25u);
  const auto ids = a.selected_ids();
  std::set<std::string> unique(ids.begin(), ids.end());
  EXPECT_EQ(unique.size(), 25u);

  // Input order does not affect the draw.
  auto reversed = s;
  std::reverse(reversed.begin(), reversed.end());
  EXPECT_EQ(pvar::select(reversed, {StrategyKind::kRandom, 0.5, 42}, 50), a);
}

TEST(Select, RandomIsRoughlyUniform) {
  std::vector<ScoredPrompt> s;
  for (int i = 0; i < 10; ++i) s.push_back({"p" + std::to_string(i), 0.0});
  std::map<std::string, int> hits;
  for (std::uint64_t seed = 0; seed < 4000; ++seed) {
    for (const auto& id : pvar::select(s, {StrategyKind::kRandom, 0.3, seed}, 10).selected_ids()) ++hits[id];
  }
  // Each id expected 1200 times; 5 sigma is about 145.
  for (const auto& [id, n] : hits) EXPECT_NEAR(n, 1200, 150) << id;
}

TEST(Select, FractionValidation) {
  const std::vector<ScoredPrompt> s{{"a", 0.1}};
  EXPECT_THROW(pvar::select(s, {StrategyKind::kPvarTop, 0.0, 0}, 1), pvar::InvalidInputError);
  EXPECT_THROW(pvar::select(s, {StrategyKind::kPvarTop, 1.5, 0}, 1), pvar::InvalidInputError);
  EXPECT_EQ(pvar::select(s, {StrategyKind::kPvarTop, 0.01, 0}, 1).selected.size(), 1u);
}

TEST(Select, MatchesSortThenPrefixOracle) {
  pvar::Rng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(60);
    const auto s = random_scores(rng, n, trial % 2 == 0);
    const double fraction = rng.uniform(0.01, 1.0);
    auto sorted = s;
    std::sort(sorted.begin(), sorted.end(), [](const ScoredPrompt& a, const ScoredPrompt& b) {
      return a.score > b.score || (a.score == b.score && a.prompt_id < b.prompt_id);
    });
    const std::size_t k = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * n - 1e-9)));
    sorted.resize(std::min(k, n));
    ASSERT_EQ(pvar::select(s, {StrategyKind::kPvarTop, fraction, 0}, n).selected, sorted);
  }
}

TEST(Select, TopAndBottomDisjointWithoutTies) {
  pvar::Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(40);
    const auto s = random_scores(rng, n, false);
    const double fraction = rng.uniform(0.01, 0.5);
    if (2 * pvar::selection_count(fraction, n) > n) continue;
    const auto top = pvar::select(s, {StrategyKind::kPvarTop, fraction, 0}, n).selected_ids();
    const auto bottom = pvar::select(s, {StrategyKind::kPvarBottom, fraction, 0}, n).selected_ids();
    for (const auto& id : top) ASSERT_EQ(std::count(bottom.begin(), bottom.end(), id), 0);
  }
}

TEST(Select, OverlapOnlyAmongTies) {
  const std::vector<ScoredPrompt> s{{"a", 0.1}, {"b", 0.1}, {"c", 0.1}};
  const auto top = pvar::select(s, {StrategyKind::kPvarTop, 0.5, 0}, 3).selected;
  const auto bottom = pvar::select(s, {StrategyKind::kPvarBottom, 0.5, 0}, 3).selected;
  // Both take the lexicographically first tied ids.
  EXPECT_EQ(top, bottom);
}

TEST(RewardGap, Examples) {
  EXPECT_EQ(pvar::reward_gap(record_with({0, 1, 2})), 2.0);
  EXPECT_EQ(pvar::reward_gap(record_with({-1.5, 3.5})), 5.0);
  EXPECT_EQ(pvar::reward_gap(record_with({0.7, 0.7})), 0.0);
  EXPECT_THROW(pvar::reward_gap(record_with({1.0})), pvar::IneligiblePromptError);
}

TEST(RewardGap, ShiftAndScale) {
  pvar::Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> r(2 + rng.below(6));
    for (double& v : r) v = rng.normal(0.0, 2.0);
    const double g = pvar::reward_gap(record_with(r));
    const double c = rng.uniform(-10, 10), a = rng.uniform(0.1, 10);
    auto shifted = r, scaled = r;
    for (double& v : shifted) v += c;
    for (double& v : scaled) v *= a;
    ASSERT_NEAR(pvar::reward_gap(record_with(shifted)), g, 1e-12);
    ASSERT_NEAR(pvar::reward_gap(record_with(scaled)), a * g, 1e-12 * (1 + a * g));
  }
}

TEST(BuildPreferencePair, ArgmaxArgmin) {
  const auto p = pvar::build_preference_pair(record_with({0.1, 0.9, 0.5}));
  EXPECT_EQ(p.chosen_id, "y1");
  EXPECT_EQ(p.rejected_id, "y0");
  EXPECT_EQ(p.reward_chosen, 0.9);
  EXPECT_EQ(p.reward_rejected, 0.1);
}

TEST(BuildPreferencePair, TieGoesToEarliest) {
  const auto p = pvar::build_preference_pair(record_with({0.9, 0.9, 0.1}));
  EXPECT_EQ(p.chosen_id, "y0");
  EXPECT_EQ(p.rejected_id, "y2");
  const auto q = pvar::build_preference_pair(record_with({0.5, 0.1, 0.1}));
  EXPECT_EQ(q.rejected_id, "y1");
}

TEST(BuildPreferencePair, Errors) {
  EXPECT_THROW(pvar::build_preference_pair(record_with({0.5, 0.5})), pvar::DegeneratePairError);
  EXPECT_THROW(pvar::build_preference_pair(record_with({0.5})), pvar::IneligiblePromptError);
}

TEST(BuildPreferencePair, ChosenNeverBelowRejected) {
  pvar::Rng rng(6);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> r(2 + rng.below(6));
    for (double& v : r) v = std::round(rng.normal(0.0, 2.0));
    try {
      const auto p = pvar::build_preference_pair(record_with(r));
      ASSERT_GE(p.reward_chosen, p.reward_rejected);
      ASSERT_NE(p.chosen_id, p.rejected_id);
    } catch (const pvar::DegeneratePairError&) {
      ASSERT_EQ(*std::min_element(r.begin(), r.end()), *std::max_element(r.begin(), r.end()));
    }
  }
}

}  // namespace
