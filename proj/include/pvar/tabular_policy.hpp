#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pvar/distribution.hpp"
#include "pvar/errors.hpp"

namespace pvar {

using Gradient = std::vector<double>;
using Sequence = std::vector<std::size_t>;

inline constexpr std::size_t kMaxVocab = 10;
inline constexpr std::size_t kMaxHorizon = 3;

inline double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Autoregressive softmax policy whose parameters are the logits themselves.
//
// Every prompt (context) owns one logit row per prefix y_<i, for i = 1..L, so a
// context has 1 + V + ... + V^(L-1) states. A prefix of length k with base-V code
// c (first token most significant) sits at state offset(k) + c. Responses are the
// V^L full-length sequences, indexed by the same base-V code.
class TabularPolicy {
 public:
  TabularPolicy() = default;

  TabularPolicy(std::size_t contexts, std::size_t vocab, std::size_t horizon)
      : contexts_(contexts), vocab_(vocab), horizon_(horizon) {
    if (contexts == 0) throw InvalidInputError("policy needs at least one context");
    if (vocab < 2) throw InvalidInputError("policy vocabulary must have at least 2 tokens");
    if (horizon == 0) throw InvalidInputError("policy horizon must be at least 1");
    if (vocab > kMaxVocab || horizon > kMaxHorizon) {
      throw CapacityError("response space V^L exceeds the enumeration cap (V <= 10, L <= 3)");
    }
    std::size_t width = 1;
    offsets_.push_back(0);
    for (std::size_t k = 0; k < horizon; ++k) {
      states_per_context_ += width;
      offsets_.push_back(states_per_context_);
      width *= vocab;
    }
    num_responses_ = width;
    logits_.assign(contexts_ * states_per_context_ * vocab_, 0.0);
  }

  static TabularPolicy uniform(std::size_t contexts, std::size_t vocab, std::size_t horizon) {
    return TabularPolicy(contexts, vocab, horizon);
  }

  std::size_t contexts() const { return contexts_; }
  std::size_t vocab() const { return vocab_; }
  std::size_t horizon() const { return horizon_; }
  std::size_t states_per_context() const { return states_per_context_; }
  std::size_t num_responses() const { return num_responses_; }
  std::size_t num_parameters() const { return logits_.size(); }

  std::span<double> logits() { return logits_; }
  std::span<const double> logits() const { return logits_; }

  bool same_shape(const TabularPolicy& other) const {
    return contexts_ == other.contexts_ && vocab_ == other.vocab_ && horizon_ == other.horizon_;
  }

  // Global row index for the state reached after `prefix` in context x.
  std::size_t row_index(std::size_t x, std::span<const std::size_t> prefix) const {
    std::size_t code = 0;
    for (std::size_t t : prefix) code = code * vocab_ + t;
    return x * states_per_context_ + offsets_[prefix.size()] + code;
  }

  std::span<const double> row(std::size_t global_row) const {
    return std::span<const double>(logits_).subspan(global_row * vocab_, vocab_);
  }

  std::vector<double> softmax_row(std::size_t global_row) const {
    const auto r = row(global_row);
    const double mx = *std::max_element(r.begin(), r.end());
    std::vector<double> p(vocab_);
    double z = 0.0;
    for (std::size_t t = 0; t < vocab_; ++t) {
      p[t] = std::exp(r[t] - mx);
      z += p[t];
    }
    for (double& v : p) v /= z;
    return p;
  }

  double log_softmax(std::size_t global_row, std::size_t token) const {
    const auto r = row(global_row);
    const double mx = *std::max_element(r.begin(), r.end());
    double z = 0.0;
    for (double v : r) z += std::exp(v - mx);
    return r[token] - mx - std::log(z);
  }

  Sequence decode(std::size_t response) const {
    if (response >= num_responses_) throw InvalidInputError("response index out of range");
    Sequence y(horizon_);
    for (std::size_t i = horizon_; i-- > 0;) {
      y[i] = response % vocab_;
      response /= vocab_;
    }
    return y;
  }

  std::size_t encode(std::span<const std::size_t> y) const {
    check_sequence(y);
    std::size_t code = 0;
    for (std::size_t t : y) code = code * vocab_ + t;
    return code;
  }

  void check_context(std::size_t x) const {
    if (x >= contexts_) throw InvalidInputError("context " + std::to_string(x) + " out of range");
  }

  void check_sequence(std::span<const std::size_t> y) const {
    if (y.size() != horizon_) throw InvalidInputError("response length must equal the policy horizon");
    for (std::size_t t : y) {
      if (t >= vocab_) throw InvalidInputError("token " + std::to_string(t) + " outside vocabulary");
    }
  }

  double log_prob(std::size_t x, std::span<const std::size_t> y) const {
    check_context(x);
    check_sequence(y);
    double lp = 0.0;
    for (std::size_t i = 0; i < horizon_; ++i) lp += log_softmax(row_index(x, y.first(i)), y[i]);
    return lp;
  }

  double log_prob(std::size_t x, std::size_t response) const { return log_prob(x, decode(response)); }

  // log pi(y|x) for every response of context x, in response-index order.
  std::vector<double> log_probs(std::size_t x) const {
    check_context(x);
    std::vector<double> out(num_responses_);
    for (std::size_t r = 0; r < num_responses_; ++r) out[r] = log_prob(x, decode(r));
    return out;
  }

  DiscreteDistribution response_distribution(std::size_t x) const {
    auto lp = log_probs(x);
    for (double& v : lp) v = std::exp(v);
    return DiscreteDistribution::from_weights(lp);
  }

  // grad += coef * d/dlogits log pi(y|x); at each visited row this is onehot(y_i) - softmax(row).
  void accumulate_score(std::span<double> grad, std::size_t x, std::span<const std::size_t> y,
                        double coef) const {
    for (std::size_t i = 0; i < horizon_; ++i) {
      const std::size_t gr = row_index(x, y.first(i));
      const auto p = softmax_row(gr);
      double* g = grad.data() + gr * vocab_;
      for (std::size_t t = 0; t < vocab_; ++t) g[t] -= coef * p[t];
      g[y[i]] += coef;
    }
  }

 private:
  std::size_t contexts_ = 0;
  std::size_t vocab_ = 0;
  std::size_t horizon_ = 0;
  std::size_t states_per_context_ = 0;
  std::size_t num_responses_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<double> logits_;
};

}  // namespace pvar
