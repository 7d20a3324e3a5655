#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pvar/distribution.hpp"
#include "pvar/errors.hpp"
#include "pvar/types.hpp"

namespace pvar {

// Logistic function evaluated branchwise so exp() never overflows.
inline double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// -log(sigmoid(z)) without cancellation for large |z|.
inline double neg_log_sigmoid(double z) {
  if (z >= 0.0) return std::log1p(std::exp(-z));
  return -z + std::log1p(std::exp(z));
}

// Bradley-Terry probability that the response with reward r_i beats the one with r_j.
inline double preference_probability(double r_i, double r_j) {
  if (!std::isfinite(r_i) || !std::isfinite(r_j)) {
    throw InvalidInputError("preference_probability: non-finite reward");
  }
  return sigmoid(r_i - r_j);
}

namespace detail {

inline void require_finite(std::span<const double> rewards, const char* who) {
  for (double r : rewards) {
    if (!std::isfinite(r)) throw InvalidInputError(std::string(who) + ": non-finite reward");
  }
}

}  // namespace detail

// Empirical preference variance over the n(n-1) ordered pairs of distinct samples.
// The mean is held at exactly 1/2 rather than re-estimated.
inline double empirical_pvar(std::span<const double> rewards) {
  const std::size_t n = rewards.size();
  if (n < kMinResponsesForEstimate) {
    throw IneligiblePromptError("estimate_pvar: need at least 2 responses, got " + std::to_string(n));
  }
  detail::require_finite(rewards, "estimate_pvar");
  // p(i,j) - 1/2 = -(p(j,i) - 1/2), so each unordered pair contributes twice.
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = sigmoid(rewards[i] - rewards[j]) - 0.5;
      sum += 2.0 * d * d;
    }
  }
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1);
  return sum / pairs;
}

inline PVarEstimate estimate_pvar(std::span<const double> rewards, std::string prompt_id = {}) {
  PVarEstimate est;
  est.pvar = empirical_pvar(rewards);
  est.prompt_id = std::move(prompt_id);
  est.n_responses = rewards.size();
  est.mean_pref = 0.5;
  return est;
}

// Var of sigmoid(r(a) - r(b)) with a, b drawn independently from dist, diagonal included.
inline double exact_pvar(const DiscreteDistribution& dist, std::span<const double> rewards) {
  if (rewards.size() != dist.size()) throw InvalidInputError("exact_pvar: reward/support size mismatch");
  detail::require_finite(rewards, "exact_pvar");
  const std::size_t n = dist.size();
  // E[p] over pi x pi is exactly 1/2 by symmetry
  double var = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    if (dist[a] == 0.0) continue;
    for (std::size_t b = 0; b < n; ++b) {
      const double d = sigmoid(rewards[a] - rewards[b]) - 0.5;
      var += dist[a] * dist[b] * d * d;
    }
  }
  return var;
}

struct SkippedPrompt {
  std::size_t index = 0;
  std::string prompt_id;
  std::string reason;
};

struct BatchEstimate {
  std::vector<PVarEstimate> estimates;
  std::vector<SkippedPrompt> skipped;
};

// Estimates every eligible record; invalid or short records land in `skipped`. Input order is kept.
inline BatchEstimate batch_estimate(std::span<const PromptRecord> dataset) {
  BatchEstimate out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& rec = dataset[i];
    const auto check = validate_record(rec);
    if (!check.ok()) {
      std::string reason;
      for (const auto& v : check.violations) reason += (reason.empty() ? "" : "; ") + v;
      out.skipped.push_back({i, rec.prompt_id, std::move(reason)});
      continue;
    }
    const auto rewards = rec.rewards();
    out.estimates.push_back(estimate_pvar(rewards, rec.prompt_id));
  }
  return out;
}

}  // namespace pvar
