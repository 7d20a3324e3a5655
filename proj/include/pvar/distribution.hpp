#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "pvar/errors.hpp"

namespace pvar {

inline constexpr double kNormalizationTolerance = 1e-12;

// Finite distribution over outcomes 0..size()-1.
class DiscreteDistribution {
 public:
  DiscreteDistribution() = default;

  explicit DiscreteDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw InvalidInputError("distribution has empty support");
    double total = 0.0;
    for (double p : probs_) {
      if (!std::isfinite(p) || p < 0.0) throw InvalidInputError("distribution has a negative or non-finite mass");
      total += p;
    }
    if (std::abs(total - 1.0) > kNormalizationTolerance) {
      throw InvalidInputError("distribution does not sum to 1");
    }
  }

  static DiscreteDistribution uniform(std::size_t n) {
    if (n == 0) throw InvalidInputError("distribution has empty support");
    return DiscreteDistribution(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  static DiscreteDistribution point_mass(std::size_t n, std::size_t at) {
    if (at >= n) throw InvalidInputError("point mass outside support");
    std::vector<double> p(n, 0.0);
    p[at] = 1.0;
    return DiscreteDistribution(std::move(p));
  }

  // Normalizes nonnegative weights; used where masses come from exp() of log-probs.
  static DiscreteDistribution from_weights(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) {
      if (!std::isfinite(w) || w < 0.0) throw InvalidInputError("invalid weight");
      total += w;
    }
    if (!(total > 0.0)) throw InvalidInputError("weights sum to zero");
    std::vector<double> p(weights.begin(), weights.end());
    for (double& v : p) v /= total;
    return DiscreteDistribution(std::move(p));
  }

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

// The product measure p (x) p over pairs, outcome (a, b) stored at a * n + b.
inline DiscreteDistribution product(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  std::vector<double> out;
  out.reserve(p.size() * q.size());
  for (std::size_t a = 0; a < p.size(); ++a) {
    for (std::size_t b = 0; b < q.size(); ++b) out.push_back(p[a] * q[b]);
  }
  return DiscreteDistribution(std::move(out));
}

inline double tv_distance(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  if (p.size() != q.size()) throw InvalidInputError("tv_distance: support mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += std::abs(p[i] - q[i]);
  return 0.5 * sum;
}

inline double expectation(const DiscreteDistribution& mu, std::span<const double> values) {
  if (values.size() != mu.size()) throw InvalidInputError("expectation: support mismatch");
  double e = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) e += mu[i] * values[i];
  return e;
}

// Two-pass variance of a random variable given by its values on the support.
inline double variance(const DiscreteDistribution& mu, std::span<const double> values) {
  const double mean = expectation(mu, values);
  double v = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double d = values[i] - mean;
    v += mu[i] * d * d;
  }
  return v;
}

}  // namespace pvar
