#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pvar/errors.hpp"
#include "pvar/estimator.hpp"
#include "pvar/tabular_policy.hpp"

namespace pvar {

// A preference pair over the enumerable toy response space; responses are indices
// into the policy's response enumeration.
struct ToyPair {
  std::size_t context = 0;
  std::size_t chosen = 0;
  std::size_t rejected = 0;

  friend bool operator==(const ToyPair&, const ToyPair&) = default;
};

struct DpoConfig {
  double beta = 0.1;
  double learning_rate = 0.1;
  std::size_t steps = 0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidInputError("beta must be positive");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
      throw InvalidInputError("learning rate must be nonnegative");
    }
  }
};

struct TrainTrace {
  std::vector<double> loss;
  std::vector<double> margin;
  std::vector<double> grad_norm;

  std::size_t size() const { return loss.size(); }
};

namespace detail {

inline void require_same_shape(const TabularPolicy& policy, const TabularPolicy& ref) {
  if (!policy.same_shape(ref)) throw InvalidInputError("policy and reference policy differ in shape");
}

inline void require_pairs(const TabularPolicy& policy, std::span<const ToyPair> pairs) {
  if (pairs.empty()) throw InvalidInputError("DPO needs at least one preference pair");
  for (const auto& p : pairs) {
    policy.check_context(p.context);
    if (p.chosen >= policy.num_responses() || p.rejected >= policy.num_responses()) {
      throw InvalidInputError("pair references a response outside the enumeration");
    }
  }
}

inline void require_beta(double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidInputError("beta must be positive");
}

}  // namespace detail

// beta * (log pi(y|x) - log pi_ref(y|x))
inline double implicit_reward(const TabularPolicy& policy, const TabularPolicy& ref, std::size_t x,
                              std::span<const std::size_t> y, double beta) {
  detail::require_same_shape(policy, ref);
  return beta * (policy.log_prob(x, y) - ref.log_prob(x, y));
}

inline double implicit_reward(const TabularPolicy& policy, const TabularPolicy& ref, std::size_t x,
                              std::size_t response, double beta) {
  return implicit_reward(policy, ref, x, policy.decode(response), beta);
}

// Implicit rewards of every response of context x.
inline std::vector<double> implicit_rewards(const TabularPolicy& policy, const TabularPolicy& ref,
                                            std::size_t x, double beta) {
  detail::require_same_shape(policy, ref);
  auto lp = policy.log_probs(x);
  const auto lr = ref.log_probs(x);
  for (std::size_t i = 0; i < lp.size(); ++i) lp[i] = beta * (lp[i] - lr[i]);
  return lp;
}

inline double pair_margin(const TabularPolicy& policy, const TabularPolicy& ref, const ToyPair& pair,
                          double beta) {
  return implicit_reward(policy, ref, pair.context, pair.chosen, beta) -
         implicit_reward(policy, ref, pair.context, pair.rejected, beta);
}

inline double dpo_loss(const TabularPolicy& policy, const TabularPolicy& ref, std::span<const ToyPair> pairs,
                       double beta) {
  detail::require_same_shape(policy, ref);
  detail::require_pairs(policy, pairs);
  detail::require_beta(beta);
  double total = 0.0;
  for (const auto& p : pairs) total += neg_log_sigmoid(pair_margin(policy, ref, p, beta));
  return total / static_cast<double>(pairs.size());
}

inline double mean_margin(const TabularPolicy& policy, const TabularPolicy& ref, std::span<const ToyPair> pairs,
                          double beta) {
  detail::require_same_shape(policy, ref);
  detail::require_pairs(policy, pairs);
  double total = 0.0;
  for (const auto& p : pairs) total += pair_margin(policy, ref, p, beta);
  return total / static_cast<double>(pairs.size());
}

// Sum_k weights[k] * grad of -log sigmoid(margin_k). Each pair contributes
// -(1 - sigmoid(margin)) * beta * (score(y_w) - score(y_l)).
inline Gradient weighted_dpo_gradient(const TabularPolicy& policy, const TabularPolicy& ref,
                                      std::span<const ToyPair> pairs, std::span<const double> weights,
                                      double beta) {
  detail::require_same_shape(policy, ref);
  detail::require_pairs(policy, pairs);
  detail::require_beta(beta);
  if (weights.size() != pairs.size()) throw InvalidInputError("one weight per pair required");
  Gradient grad(policy.num_parameters(), 0.0);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& p = pairs[k];
    const double coef = -weights[k] * beta * sigmoid(-pair_margin(policy, ref, p, beta));
    policy.accumulate_score(grad, p.context, policy.decode(p.chosen), coef);
    policy.accumulate_score(grad, p.context, policy.decode(p.rejected), -coef);
  }
  return grad;
}

// Gradient of the mean pair loss with respect to all logits.
inline Gradient dpo_gradient(const TabularPolicy& policy, const TabularPolicy& ref, std::span<const ToyPair> pairs,
                             double beta) {
  const std::vector<double> w(pairs.size(), pairs.empty() ? 0.0 : 1.0 / static_cast<double>(pairs.size()));
  return weighted_dpo_gradient(policy, ref, pairs, w, beta);
}

inline constexpr std::size_t kMaxEnumeratedResponses = 1000;

inline void require_enumerable(const TabularPolicy& policy) {
  if (policy.num_responses() > kMaxEnumeratedResponses) {
    throw CapacityError("response space has " + std::to_string(policy.num_responses()) +
                        " sequences; enumeration is capped at 1000");
  }
}

// DPO gradient at x in expectation over (y_w, y_l) ~ pi(.|x) (x) pi(.|x).
//
// Collecting the coefficient of each score vector: response k receives
//   -beta * pi_k * sum_j pi_j * [sigmoid(r_j - r_k) - sigmoid(r_k - r_j)]
// which is the pair sum with the winner and loser roles merged.
inline Gradient expected_dpo_gradient(const TabularPolicy& policy, const TabularPolicy& ref, std::size_t x,
                                      double beta) {
  require_enumerable(policy);
  detail::require_beta(beta);
  const auto rewards = implicit_rewards(policy, ref, x, beta);
  const auto dist = policy.response_distribution(x);
  const std::size_t n = dist.size();
  Gradient grad(policy.num_parameters(), 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    if (dist[k] == 0.0) continue;
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      s += dist[j] * (sigmoid(rewards[j] - rewards[k]) - sigmoid(rewards[k] - rewards[j]));
    }
    const double coef = -beta * dist[k] * s;
    if (coef != 0.0) policy.accumulate_score(grad, x, policy.decode(k), coef);
  }
  return grad;
}

// Full-batch gradient descent on dpo_loss. Trace entry k holds loss, margin and
// gradient norm at the parameters before update k.
inline std::pair<TabularPolicy, TrainTrace> train(TabularPolicy policy, const TabularPolicy& ref,
                                                  std::span<const ToyPair> pairs, const DpoConfig& config) {
  config.validate();
  detail::require_same_shape(policy, ref);
  TrainTrace trace;
  if (config.steps == 0) return {std::move(policy), std::move(trace)};
  detail::require_pairs(policy, pairs);

  for (std::size_t step = 0; step < config.steps; ++step) {
    const double loss = dpo_loss(policy, ref, pairs, config.beta);
    if (!std::isfinite(loss)) throw DivergedError(step, "DPO loss became non-finite");
    const auto grad = dpo_gradient(policy, ref, pairs, config.beta);
    trace.loss.push_back(loss);
    trace.margin.push_back(mean_margin(policy, ref, pairs, config.beta));
    trace.grad_norm.push_back(l2_norm(grad));
    auto theta = policy.logits();
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= config.learning_rate * grad[i];
  }
  return {std::move(policy), std::move(trace)};
}

}  // namespace pvar
