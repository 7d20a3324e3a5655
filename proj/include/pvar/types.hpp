#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

namespace pvar {

struct ScoredResponse {
  std::string response_id;
  std::string text;
  double reward = 0.0;

  friend bool operator==(const ScoredResponse&, const ScoredResponse&) = default;
};

// A prompt together with its reward-scored candidate responses.
struct PromptRecord {
  std::string prompt_id;
  std::string prompt_text;
  std::vector<ScoredResponse> responses;

  std::vector<double> rewards() const {
    std::vector<double> out;
    out.reserve(responses.size());
    for (const auto& r : responses) out.push_back(r.reward);
    return out;
  }

  friend bool operator==(const PromptRecord&, const PromptRecord&) = default;
};

struct PVarEstimate {
  std::string prompt_id;
  double pvar = 0.0;
  std::size_t n_responses = 0;
  // Always exactly 1/2: p(i,j) + p(j,i) = 1 pins the pairwise mean.
  double mean_pref = 0.5;

  friend bool operator==(const PVarEstimate&, const PVarEstimate&) = default;
};

struct PreferencePair {
  std::string prompt_id;
  std::string chosen_id;
  std::string rejected_id;
  double reward_chosen = 0.0;
  double reward_rejected = 0.0;

  friend bool operator==(const PreferencePair&, const PreferencePair&) = default;
};

struct ValidationResult {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

inline constexpr std::size_t kMinResponsesForEstimate = 2;

// Violations are returned as data; nothing here throws.
inline ValidationResult validate_record(const PromptRecord& record) {
  ValidationResult result;
  if (record.prompt_id.empty()) result.violations.emplace_back("empty prompt_id");

  std::unordered_set<std::string> seen;
  bool dup_reported = false;
  bool nonfinite_reported = false;
  for (const auto& r : record.responses) {
    if (r.response_id.empty()) result.violations.emplace_back("empty response_id");
    if (!seen.insert(r.response_id).second && !dup_reported) {
      result.violations.emplace_back("duplicate response_id");
      dup_reported = true;
    }
    if (!std::isfinite(r.reward) && !nonfinite_reported) {
      result.violations.emplace_back("non-finite reward");
      nonfinite_reported = true;
    }
  }
  if (record.responses.size() < kMinResponsesForEstimate) {
    result.violations.emplace_back("fewer than 2 responses");
  }
  return result;
}

// Dataset-level check: prompt ids unique across records.
inline std::vector<std::string> duplicate_prompt_ids(const std::vector<PromptRecord>& dataset) {
  std::unordered_set<std::string> seen;
  std::vector<std::string> dups;
  for (const auto& rec : dataset) {
    if (!seen.insert(rec.prompt_id).second) dups.push_back(rec.prompt_id);
  }
  return dups;
}

}  // namespace pvar
