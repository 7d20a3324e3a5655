#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "pvar/distribution.hpp"
#include "pvar/dpo.hpp"
#include "pvar/errors.hpp"
#include "pvar/estimator.hpp"
#include "pvar/tabular_policy.hpp"

namespace pvar {

inline constexpr double kBoundTolerance = 1e-9;
inline constexpr double kLemmaTolerance = 1e-12;

struct XiBreakdown {
  double policy_reward_disagreement = 0.0;  // 2 sup_y |r_hat_theta - r_phi|
  double reward_model_error = 0.0;          // 2 sup_y |r_phi - r_star|
  double policy_shift = 0.0;                // 6 TV(pi_theta (x) pi_theta, pi_theta0 (x) pi_theta0)

  double total() const { return policy_reward_disagreement + reward_model_error + policy_shift; }
};

struct BoundCheck {
  double grad_norm = 0.0;
  // PVar fed into the bound: online for the first theorem, offline for the second.
  double pvar = 0.0;
  double online_pvar = 0.0;
  double constant_C = 0.0;
  double bound_value = 0.0;
  std::optional<XiBreakdown> xi;
  bool holds = false;
  double slack = 0.0;
  // online PVar <= offline PVar + Xi; always true when xi is absent.
  bool intermediate_holds = true;
};

// Spectral norm of d logits / d parameters at any state. Each state's logits are
// a disjoint block of the parameter vector, so the Jacobian is a row selection.
inline double gamma(const TabularPolicy&) { return 1.0; }

inline double constant_C(double beta, std::size_t max_len, double gamma_value) {
  return 8.0 * beta * static_cast<double>(max_len) * gamma_value;
}

// PVar of the policy's own implicit rewards under pi(.|x) (x) pi(.|x).
inline double online_pvar(const TabularPolicy& policy, const TabularPolicy& ref, std::size_t x, double beta) {
  require_enumerable(policy);
  const auto rewards = implicit_rewards(policy, ref, x, beta);
  return exact_pvar(policy.response_distribution(x), rewards);
}

namespace detail {

inline BoundCheck finish_bound(BoundCheck c) {
  c.slack = c.bound_value - c.grad_norm;
  c.holds = c.grad_norm <= c.bound_value + kBoundTolerance;
  return c;
}

// -beta * sum_{a,b} pi_a pi_b w(a,b) (score_a - score_b), for an n x n weight matrix.
inline Gradient pair_weighted_score_sum(const TabularPolicy& policy, std::size_t x,
                                        const DiscreteDistribution& dist, std::span<const double> w,
                                        double beta) {
  const std::size_t n = dist.size();
  Gradient grad(policy.num_parameters(), 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    if (dist[k] == 0.0) continue;
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += dist[j] * (w[k * n + j] - w[j * n + k]);
    const double coef = -beta * dist[k] * s;
    if (coef != 0.0) policy.accumulate_score(grad, x, policy.decode(k), coef);
  }
  return grad;
}

}  // namespace detail

inline BoundCheck theorem1_check(const TabularPolicy& policy, const TabularPolicy& ref, std::size_t x,
                                 double beta) {
  require_enumerable(policy);
  BoundCheck c;
  c.grad_norm = l2_norm(expected_dpo_gradient(policy, ref, x, beta));
  c.online_pvar = online_pvar(policy, ref, x, beta);
  c.pvar = c.online_pvar;
  c.constant_C = constant_C(beta, policy.horizon(), gamma(policy));
  c.bound_value = c.constant_C * std::cbrt(std::max(c.pvar, 0.0));
  return detail::finish_bound(c);
}

// Split of the expected gradient at threshold c into pairs with |p - 1/2| <= c
// (term A, preference clipped to itself) and the rest (term B).
struct GradientSplit {
  double c = 0.0;
  double grad_norm = 0.0;
  double norm_a = 0.0;
  double norm_b = 0.0;
  double bound_a = 0.0;  // 4 beta c |y| gamma
  double bound_b = 0.0;  // 4 beta |y| gamma PVar / c^2
  double max_reassembly_error = 0.0;  // max_i |A_i + B_i - grad_i|
};

inline double optimal_threshold(double pvar) { return std::cbrt(2.0 * std::max(pvar, 0.0)); }

inline GradientSplit gradient_split(const TabularPolicy& policy, const TabularPolicy& ref, std::size_t x,
                                    double beta, std::optional<double> threshold = std::nullopt) {
  require_enumerable(policy);
  const auto rewards = implicit_rewards(policy, ref, x, beta);
  const auto dist = policy.response_distribution(x);
  const double pv = exact_pvar(dist, rewards);
  const double c = threshold.value_or(optimal_threshold(pv));
  const std::size_t n = dist.size();

  // Weights multiplying (score_w - score_l): 1 - p_tilde for A, p_tilde - p for B.
  std::vector<double> wa(n * n), wb(n * n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const double p = sigmoid(rewards[a] - rewards[b]);
      const double p_tilde = std::abs(p - 0.5) > c ? 0.5 : p;
      wa[a * n + b] = 1.0 - p_tilde;
      wb[a * n + b] = p_tilde - p;
    }
  }
  const auto A = detail::pair_weighted_score_sum(policy, x, dist, wa, beta);
  const auto B = detail::pair_weighted_score_sum(policy, x, dist, wb, beta);
  const auto G = expected_dpo_gradient(policy, ref, x, beta);

  GradientSplit s;
  s.c = c;
  s.grad_norm = l2_norm(G);
  s.norm_a = l2_norm(A);
  s.norm_b = l2_norm(B);
  const double scale = 4.0 * beta * static_cast<double>(policy.horizon()) * gamma(policy);
  s.bound_a = scale * c;
  if (c > 0.0) {
    s.bound_b = scale * pv / (c * c);
  } else {
    s.bound_b = pv > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  for (std::size_t i = 0; i < G.size(); ++i) {
    s.max_reassembly_error = std::max(s.max_reassembly_error, std::abs(A[i] + B[i] - G[i]));
  }
  return s;
}

struct MassCheck {
  double mass = 0.0;
  double bound = 0.0;
  bool holds = false;
};

// P(|p - 1/2| > c) under pi (x) pi against PVar / c^2.
inline MassCheck chebyshev_mass_check(const TabularPolicy& policy, const TabularPolicy& ref, std::size_t x,
                                      double beta, double c) {
  if (!(c > 0.0)) throw InvalidInputError("chebyshev threshold must be positive");
  require_enumerable(policy);
  const auto rewards = implicit_rewards(policy, ref, x, beta);
  const auto dist = policy.response_distribution(x);
  MassCheck m;
  for (std::size_t a = 0; a < dist.size(); ++a) {
    for (std::size_t b = 0; b < dist.size(); ++b) {
      if (std::abs(sigmoid(rewards[a] - rewards[b]) - 0.5) > c) m.mass += dist[a] * dist[b];
    }
  }
  m.bound = exact_pvar(dist, rewards) / (c * c);
  m.holds = m.mass <= m.bound + kLemmaTolerance;
  return m;
}

struct LemmaCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

namespace detail {
inline LemmaCheck finish_lemma(double lhs, double rhs) { return {lhs, rhs, lhs <= rhs + kLemmaTolerance}; }
}  // namespace detail

// |Var_mu(U) - Var_nu(U)| <= 6 TV(mu, nu) for U with values in [0, 1].
inline LemmaCheck lemma1_check(std::span<const double> U, const DiscreteDistribution& mu,
                               const DiscreteDistribution& nu) {
  for (double u : U) {
    if (!(u >= 0.0 && u <= 1.0)) throw InvalidInputError("lemma1_check: U must take values in [0, 1]");
  }
  if (U.size() != mu.size() || U.size() != nu.size()) throw InvalidInputError("lemma1_check: support mismatch");
  return detail::finish_lemma(std::abs(variance(mu, U) - variance(nu, U)), 6.0 * tv_distance(mu, nu));
}

// |PVar[r1, mu] - PVar[r2, mu]| <= 2 sup |r1 - r2|.
inline LemmaCheck lemma2_check(std::span<const double> r1, std::span<const double> r2,
                               const DiscreteDistribution& mu) {
  if (r1.size() != mu.size() || r2.size() != mu.size()) throw InvalidInputError("lemma2_check: support mismatch");
  double delta = 0.0;
  for (std::size_t i = 0; i < r1.size(); ++i) delta = std::max(delta, std::abs(r1[i] - r2[i]));
  return detail::finish_lemma(std::abs(exact_pvar(mu, r1) - exact_pvar(mu, r2)), 2.0 * delta);
}

// TV(p1 (x) p1, p2 (x) p2) <= 2 TV(p1, p2).
inline LemmaCheck lemma3_check(const DiscreteDistribution& p1, const DiscreteDistribution& p2) {
  if (p1.size() != p2.size()) throw InvalidInputError("lemma3_check: support mismatch");
  return detail::finish_lemma(tv_distance(product(p1, p1), product(p2, p2)), 2.0 * tv_distance(p1, p2));
}

// Rewards are indexed by response over the enumerated space of `theta`.
inline XiBreakdown xi_terms(const TabularPolicy& theta, const TabularPolicy& theta0,
                            std::span<const double> reward_phi, std::span<const double> reward_star,
                            const TabularPolicy& ref, std::size_t x, double beta) {
  require_enumerable(theta);
  if (!theta.same_shape(theta0)) throw InvalidInputError("xi_terms: policies differ in shape");
  const std::size_t n = theta.num_responses();
  if (reward_phi.size() != n || reward_star.size() != n) {
    throw InvalidInputError("xi_terms: reward tables must cover the response space");
  }
  detail::require_finite(reward_phi, "xi_terms");
  detail::require_finite(reward_star, "xi_terms");

  const auto implicit = implicit_rewards(theta, ref, x, beta);
  double disagreement = 0.0;
  double model_error = 0.0;
  for (std::size_t y = 0; y < n; ++y) {
    disagreement = std::max(disagreement, std::abs(implicit[y] - reward_phi[y]));
    model_error = std::max(model_error, std::abs(reward_phi[y] - reward_star[y]));
  }
  const auto pi = theta.response_distribution(x);
  const auto pi0 = theta0.response_distribution(x);
  XiBreakdown xi;
  xi.policy_reward_disagreement = 2.0 * disagreement;
  xi.reward_model_error = 2.0 * model_error;
  xi.policy_shift = 6.0 * tv_distance(product(pi, pi), product(pi0, pi0));
  return xi;
}

// Offline PVar is exact under pi_theta0 with the reward model's scores.
inline BoundCheck theorem2_check(const TabularPolicy& theta, const TabularPolicy& theta0,
                                 std::span<const double> reward_phi, std::span<const double> reward_star,
                                 const TabularPolicy& ref, std::size_t x, double beta) {
  const auto xi = xi_terms(theta, theta0, reward_phi, reward_star, ref, x, beta);
  BoundCheck c;
  c.xi = xi;
  c.pvar = exact_pvar(theta0.response_distribution(x), reward_phi);
  c.online_pvar = online_pvar(theta, ref, x, beta);
  c.grad_norm = l2_norm(expected_dpo_gradient(theta, ref, x, beta));
  c.constant_C = constant_C(beta, theta.horizon(), gamma(theta));
  c.bound_value = c.constant_C * std::cbrt(c.pvar + xi.total());
  c.intermediate_holds = c.online_pvar <= c.pvar + xi.total() + kBoundTolerance;
  return detail::finish_bound(c);
}

}  // namespace pvar
