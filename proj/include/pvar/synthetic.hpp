#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pvar/bounds.hpp"
#include "pvar/dpo.hpp"
#include "pvar/estimator.hpp"
#include "pvar/random.hpp"
#include "pvar/selection.hpp"
#include "pvar/tabular_policy.hpp"
#include "pvar/types.hpp"

namespace pvar::synthetic {

inline void randomize_logits(TabularPolicy& policy, Rng& rng, double scale) {
  for (double& v : policy.logits()) v = rng.normal(0.0, scale);
}

inline std::vector<double> random_rewards(std::size_t n, Rng& rng, double scale) {
  std::vector<double> r(n);
  for (double& v : r) v = rng.normal(0.0, scale);
  return r;
}

// Random distribution on n outcomes; `sparse` zeroes some masses (never all).
inline DiscreteDistribution random_distribution(std::size_t n, Rng& rng, bool sparse = false) {
  std::vector<double> w(n);
  const double temp = rng.uniform(0.2, 3.0);
  for (double& v : w) v = std::exp(temp * rng.normal());
  if (sparse) {
    for (double& v : w) {
      if (rng.uniform() < 0.3) v = 0.0;
    }
    w[rng.below(n)] = 1.0;
  }
  return DiscreteDistribution::from_weights(w);
}

inline constexpr std::array<double, 3> kSweepBetas = {0.01, 0.1, 1.0};

struct PolicyInstance {
  std::uint64_t seed = 0;
  TabularPolicy policy;
  TabularPolicy ref;
  std::size_t context = 0;
  double beta = 0.1;
};

// Random tabular instance with V <= max_vocab, L <= max_horizon.
inline PolicyInstance make_policy_instance(std::uint64_t seed, std::size_t max_vocab = 5,
                                           std::size_t max_horizon = 2) {
  Rng rng(seed);
  const std::size_t vocab = 2 + rng.below(max_vocab - 1);
  const std::size_t horizon = 1 + rng.below(max_horizon);
  const std::size_t contexts = 1 + rng.below(2);
  PolicyInstance inst;
  inst.seed = seed;
  inst.beta = kSweepBetas[rng.below(kSweepBetas.size())];
  inst.policy = TabularPolicy(contexts, vocab, horizon);
  inst.ref = TabularPolicy(contexts, vocab, horizon);
  // Wide spread of logit scales so the sweep covers flat and sharply peaked policies.
  randomize_logits(inst.policy, rng, rng.uniform(0.0, 1.0) < 0.2 ? rng.uniform(3.0, 12.0) : rng.uniform(0.0, 3.0));
  if (rng.uniform() < 0.5) randomize_logits(inst.ref, rng, rng.uniform(0.0, 2.0));
  inst.context = rng.below(contexts);
  return inst;
}

// Pairs for one context: each of `samples` draws from `policy` compared against the
// next; the higher `reward` wins. Identical draws are skipped.
inline std::vector<ToyPair> sampled_pairs(const TabularPolicy& policy, std::size_t x,
                                          std::span<const double> reward, std::size_t samples, Rng& rng) {
  const auto dist = policy.response_distribution(x);
  auto draw = [&] {
    double u = rng.uniform();
    for (std::size_t i = 0; i < dist.size(); ++i) {
      u -= dist[i];
      if (u < 0.0) return i;
    }
    return dist.size() - 1;
  };
  std::vector<std::size_t> ys(samples);
  for (auto& y : ys) y = draw();
  std::vector<ToyPair> pairs;
  for (std::size_t i = 0; i + 1 < ys.size(); ++i) {
    const std::size_t a = ys[i];
    const std::size_t b = ys[i + 1];
    if (a == b || reward[a] == reward[b]) continue;
    pairs.push_back(reward[a] > reward[b] ? ToyPair{x, a, b} : ToyPair{x, b, a});
  }
  if (pairs.empty()) {
    const auto [lo, hi] = std::minmax_element(reward.begin(), reward.end());
    pairs.push_back({x, static_cast<std::size_t>(hi - reward.begin()), static_cast<std::size_t>(lo - reward.begin())});
  }
  return pairs;
}

struct OfflineInstance {
  std::uint64_t seed = 0;
  TabularPolicy theta0;
  TabularPolicy theta;
  TabularPolicy ref;
  std::vector<double> reward_star;
  std::vector<double> reward_phi;
  std::size_t context = 0;
  double beta = 0.1;
  std::size_t train_steps = 0;
};

// Initial policy, perturbed reward model, and a policy trained 1..max_steps DPO
// steps on pairs labelled by that reward model.
inline OfflineInstance make_offline_instance(std::uint64_t seed, std::size_t max_steps = 50,
                                             std::size_t max_vocab = 5, std::size_t max_horizon = 2) {
  if (max_steps == 0) throw InvalidInputError("offline instances need at least one training step");
  Rng rng(seed);
  const std::size_t vocab = 2 + rng.below(max_vocab - 1);
  const std::size_t horizon = 1 + rng.below(max_horizon);
  OfflineInstance inst;
  inst.seed = seed;
  inst.beta = kSweepBetas[rng.below(kSweepBetas.size())];
  inst.ref = TabularPolicy(1, vocab, horizon);
  if (rng.uniform() < 0.5) randomize_logits(inst.ref, rng, rng.uniform(0.0, 1.5));
  inst.theta0 = inst.ref;
  for (double& v : inst.theta0.logits()) v += rng.normal(0.0, rng.uniform(0.0, 1.5));
  const std::size_t n = inst.theta0.num_responses();
  inst.reward_star = random_rewards(n, rng, rng.uniform(0.1, 3.0));
  const double noise = rng.uniform(0.0, 0.5);
  inst.reward_phi = inst.reward_star;
  for (double& v : inst.reward_phi) v += rng.normal(0.0, noise);

  const auto pairs = sampled_pairs(inst.theta0, 0, inst.reward_phi, 8, rng);
  inst.train_steps = 1 + rng.below(max_steps);
  DpoConfig cfg{inst.beta, rng.uniform(0.05, 1.0), inst.train_steps, seed};
  inst.theta = train(inst.theta0, inst.ref, pairs, cfg).first;
  return inst;
}

// Synthetic preference dataset for comparing training on high- versus low-PVar prompts.
//
// Each prompt has its own context and a true reward table whose scale is drawn
// log-uniformly, so prompts range from nearly flat (PVar ~ 0) to sharply
// separated responses. `samples_per_prompt` responses are drawn from the uniform
// reference policy and scored by a reward model (true reward plus small noise);
// PVar is estimated from those scores. Every distinct pair of samples is
// annotated once with a Bradley-Terry draw under the true reward, which makes
// labels on flat prompts close to coin flips.
struct ToyDatasetConfig {
  std::size_t prompts = 40;
  std::size_t vocab = 8;
  std::size_t horizon = 1;
  std::size_t samples_per_prompt = 5;
  double min_reward_scale = 0.02;
  double max_reward_scale = 6.0;
  double reward_model_noise = 0.05;
  std::uint64_t seed = 7;
};

struct ToyDataset {
  TabularPolicy ref;
  std::vector<PromptRecord> records;
  std::vector<std::vector<ToyPair>> pairs;  // indexed like records
};

inline std::string prompt_name(std::size_t i) {
  std::string s = std::to_string(i);
  return "p" + std::string(s.size() < 4 ? 4 - s.size() : 0, '0') + s;
}

inline ToyDataset make_toy_dataset(const ToyDatasetConfig& cfg) {
  Rng rng(cfg.seed);
  ToyDataset ds;
  ds.ref = TabularPolicy(cfg.prompts, cfg.vocab, cfg.horizon);
  const std::size_t n = ds.ref.num_responses();
  const double log_lo = std::log(cfg.min_reward_scale);
  const double log_hi = std::log(cfg.max_reward_scale);
  for (std::size_t x = 0; x < cfg.prompts; ++x) {
    const double scale = std::exp(rng.uniform(log_lo, log_hi));
    const auto truth = random_rewards(n, rng, scale);

    PromptRecord rec;
    rec.prompt_id = prompt_name(x);
    std::vector<std::size_t> ys(cfg.samples_per_prompt);
    for (std::size_t i = 0; i < ys.size(); ++i) {
      ys[i] = rng.below(n);
      std::string text;
      for (std::size_t t : ds.ref.decode(ys[i])) text += (text.empty() ? "" : " ") + std::to_string(t);
      rec.responses.push_back({rec.prompt_id + "-r" + std::to_string(i), std::move(text),
                               truth[ys[i]] + rng.normal(0.0, cfg.reward_model_noise)});
    }

    std::vector<ToyPair> pairs;
    for (std::size_t i = 0; i < ys.size(); ++i) {
      for (std::size_t j = i + 1; j < ys.size(); ++j) {
        if (ys[i] == ys[j]) continue;
        const bool i_wins = rng.uniform() < sigmoid(truth[ys[i]] - truth[ys[j]]);
        pairs.push_back(i_wins ? ToyPair{x, ys[i], ys[j]} : ToyPair{x, ys[j], ys[i]});
      }
    }
    ds.records.push_back(std::move(rec));
    ds.pairs.push_back(std::move(pairs));
  }
  return ds;
}

// Training pairs belonging to the selected prompts, in dataset order.
inline std::vector<ToyPair> pairs_for(const ToyDataset& ds, std::span<const std::string> selected_ids) {
  std::vector<ToyPair> out;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    if (std::find(selected_ids.begin(), selected_ids.end(), ds.records[i].prompt_id) == selected_ids.end()) continue;
    out.insert(out.end(), ds.pairs[i].begin(), ds.pairs[i].end());
  }
  return out;
}

inline std::vector<ScoredPrompt> pvar_scores(std::span<const PVarEstimate> estimates) {
  std::vector<ScoredPrompt> out;
  out.reserve(estimates.size());
  for (const auto& e : estimates) out.push_back({e.prompt_id, e.pvar});
  return out;
}

}  // namespace pvar::synthetic
