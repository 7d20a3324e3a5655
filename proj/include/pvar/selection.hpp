#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pvar/errors.hpp"
#include "pvar/random.hpp"
#include "pvar/types.hpp"

namespace pvar {

enum class StrategyKind { kPvarTop, kPvarBottom, kRandom, kRewardGapTop };

inline std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kPvarTop: return "pvar_top";
    case StrategyKind::kPvarBottom: return "pvar_bottom";
    case StrategyKind::kRandom: return "random";
    case StrategyKind::kRewardGapTop: return "reward_gap_top";
  }
  return "unknown";
}

inline std::optional<StrategyKind> parse_strategy(std::string_view name) {
  for (auto k : {StrategyKind::kPvarTop, StrategyKind::kPvarBottom, StrategyKind::kRandom,
                 StrategyKind::kRewardGapTop}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

struct SelectionStrategy {
  StrategyKind kind = StrategyKind::kPvarTop;
  double fraction = 1.0;
  std::uint64_t seed = 0;  // only read by kRandom

  void validate() const {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
      throw InvalidInputError("selection fraction must lie in (0, 1]");
    }
  }
};

struct ScoredPrompt {
  std::string prompt_id;
  double score = 0.0;

  friend bool operator==(const ScoredPrompt&, const ScoredPrompt&) = default;
};

// Generator tag written into manifests; bump when the sampling procedure changes.
inline constexpr std::string_view kSelectionGenerator = "mt19937_64+partial-fisher-yates/v1";

struct SelectionManifest {
  StrategyKind strategy = StrategyKind::kPvarTop;
  double fraction = 1.0;
  std::uint64_t seed = 0;
  std::string generator{kSelectionGenerator};
  std::size_t dataset_size = 0;
  std::vector<ScoredPrompt> selected;

  std::vector<std::string> selected_ids() const {
    std::vector<std::string> ids;
    ids.reserve(selected.size());
    for (const auto& s : selected) ids.push_back(s.prompt_id);
    return ids;
  }

  friend bool operator==(const SelectionManifest&, const SelectionManifest&) = default;
};

namespace detail {

inline void require_finite_scores(std::span<const ScoredPrompt> scores) {
  for (const auto& s : scores) {
    if (!std::isfinite(s.score)) throw InvalidInputError("non-finite score for prompt " + s.prompt_id);
  }
}

inline bool higher_first(const ScoredPrompt& a, const ScoredPrompt& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.prompt_id < b.prompt_id;
}

inline bool lower_first(const ScoredPrompt& a, const ScoredPrompt& b) {
  if (a.score != b.score) return a.score < b.score;
  return a.prompt_id < b.prompt_id;
}

}  // namespace detail

// Descending by score, ties by prompt_id ascending.
inline std::vector<std::string> rank_by_score(std::span<const ScoredPrompt> scores) {
  detail::require_finite_scores(scores);
  std::vector<ScoredPrompt> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(), detail::higher_first);
  std::vector<std::string> ids;
  ids.reserve(sorted.size());
  for (auto& s : sorted) ids.push_back(std::move(s.prompt_id));
  return ids;
}

// ceil(fraction * n), at least 1 when n > 0. Products within 1e-9 of an integer
// count as that integer so 0.7 * 10 selects 7, not 8.
inline std::size_t selection_count(double fraction, std::size_t n) {
  if (n == 0) return 0;
  const double product = fraction * static_cast<double>(n);
  const double nearest = std::round(product);
  std::size_t k = std::abs(product - nearest) < 1e-9 ? static_cast<std::size_t>(nearest)
                                                       : static_cast<std::size_t>(std::ceil(product));
  return std::clamp<std::size_t>(k, 1, n);
}

// `scores` carries the criterion matching the strategy: PVar for pvar_*, reward gap
// for reward_gap_top; random ignores the values but records them.
inline SelectionManifest select(std::span<const ScoredPrompt> scores, const SelectionStrategy& strategy,
                                std::size_t dataset_size) {
  strategy.validate();
  detail::require_finite_scores(scores);
  const std::size_t k = selection_count(strategy.fraction, dataset_size);
  if (k > scores.size()) {
    throw InvalidInputError("selection needs " + std::to_string(k) + " scored prompts but only " +
                            std::to_string(scores.size()) + " are available");
  }

  SelectionManifest m;
  m.strategy = strategy.kind;
  m.fraction = strategy.fraction;
  m.seed = strategy.seed;
  m.dataset_size = dataset_size;

  std::vector<ScoredPrompt> pool(scores.begin(), scores.end());
  switch (strategy.kind) {
    case StrategyKind::kPvarTop:
    case StrategyKind::kRewardGapTop:
      std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k), pool.end(),
                        detail::higher_first);
      break;
    case StrategyKind::kPvarBottom:
      std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k), pool.end(),
                        detail::lower_first);
      break;
    case StrategyKind::kRandom: {
      // Canonical order first so the draw does not depend on input order.
      std::sort(pool.begin(), pool.end(),
                [](const ScoredPrompt& a, const ScoredPrompt& b) { return a.prompt_id < b.prompt_id; });
      Rng rng(strategy.seed);
      for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
      }
      break;
    }
  }
  pool.resize(k);
  m.selected = std::move(pool);
  return m;
}

inline double reward_gap(const PromptRecord& record) {
  if (record.responses.size() < kMinResponsesForEstimate) {
    throw IneligiblePromptError("reward_gap: prompt " + record.prompt_id + " has fewer than 2 responses");
  }
  const auto [lo, hi] = std::minmax_element(
      record.responses.begin(), record.responses.end(),
      [](const ScoredResponse& a, const ScoredResponse& b) { return a.reward < b.reward; });
  return hi->reward - lo->reward;
}

// Chosen = highest reward, rejected = lowest; ties go to the earliest response.
inline PreferencePair build_preference_pair(const PromptRecord& record) {
  const auto& rs = record.responses;
  if (rs.size() < kMinResponsesForEstimate) {
    throw IneligiblePromptError("build_preference_pair: prompt " + record.prompt_id +
                                " has fewer than 2 responses");
  }
  std::size_t best = 0;
  std::size_t worst = 0;
  for (std::size_t i = 1; i < rs.size(); ++i) {
    if (rs[i].reward > rs[best].reward) best = i;
    if (rs[i].reward < rs[worst].reward) worst = i;
  }
  if (rs[best].reward == rs[worst].reward) {
    throw DegeneratePairError("build_preference_pair: all rewards equal for prompt " + record.prompt_id);
  }
  return {record.prompt_id, rs[best].response_id, rs[worst].response_id, rs[best].reward, rs[worst].reward};
}

}  // namespace pvar
