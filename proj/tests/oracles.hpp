#pragma once

// Test-only reference computations. These deliberately avoid the library's
// evaluation paths: plain loops over ordered pairs, explicit sequence
// enumeration, and numerical differentiation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "pvar/tabular_policy.hpp"

namespace oracle {

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// (1 / (n(n-1))) sum_{i != j} (sigmoid(r_i - r_j) - 1/2)^2, one ordered pair at a time.
inline double pvar_double_loop(const std::vector<double>& r) {
  const std::size_t n = r.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double d = logistic(r[i] - r[j]) - 0.5;
      s += d * d;
    }
  }
  return s / static_cast<double>(n * (n - 1));
}

// Var of sigmoid(r_a - r_b) over (a, b) ~ p (x) p, with E computed from the same enumeration.
inline double pvar_weighted_enumeration(const std::vector<double>& p, const std::vector<double>& r) {
  double e1 = 0.0, e2 = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) {
    for (std::size_t b = 0; b < p.size(); ++b) {
      const double v = logistic(r[a] - r[b]);
      e1 += p[a] * p[b] * v;
      e2 += p[a] * p[b] * v * v;
    }
  }
  return e2 - e1 * e1;
}

// log pi(y|x) from the raw logit table, walking the state layout by hand.
inline double log_prob_from_table(const pvar::TabularPolicy& policy, std::size_t x, const std::vector<std::size_t>& y) {
  const std::size_t V = policy.vocab();
  const auto logits = policy.logits();
  double lp = 0.0;
  std::size_t offset = 0;
  std::size_t width = 1;
  std::size_t code = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const std::size_t row = x * policy.states_per_context() + offset + code;
    double z = 0.0;
    for (std::size_t t = 0; t < V; ++t) z += std::exp(logits[row * V + t]);
    lp += logits[row * V + y[i]] - std::log(z);
    offset += width;
    width *= V;
    code = code * V + y[i];
  }
  return lp;
}

// All V^L sequences in lexicographic order.
inline std::vector<std::vector<std::size_t>> all_sequences(std::size_t V, std::size_t L) {
  std::vector<std::vector<std::size_t>> out{{}};
  for (std::size_t i = 0; i < L; ++i) {
    std::vector<std::vector<std::size_t>> next;
    for (const auto& prefix : out) {
      for (std::size_t t = 0; t < V; ++t) {
        auto s = prefix;
        s.push_back(t);
        next.push_back(std::move(s));
      }
    }
    out = std::move(next);
  }
  return out;
}

// Central differences of f over every logit of `policy`.
inline std::vector<double> central_difference(pvar::TabularPolicy policy,
                                              const std::function<double(const pvar::TabularPolicy&)>& f,
                                              double h) {
  std::vector<double> g(policy.num_parameters());
  auto theta = policy.logits();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double keep = theta[i];
    theta[i] = keep + h;
    const double up = f(policy);
    theta[i] = keep - h;
    const double down = f(policy);
    theta[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
  return std::sqrt(diff) / denom;
}

// Largest singular value of a dense rows x cols matrix via power iteration on J^T J.
inline double spectral_norm(const std::vector<double>& J, std::size_t rows, std::size_t cols, int iters = 200) {
  std::vector<double> v(cols, 1.0), Jv(rows), w(cols);
  double sigma = 0.0;
  for (int it = 0; it < iters; ++it) {
    double nv = 0.0;
    for (double e : v) nv += e * e;
    nv = std::sqrt(nv);
    if (nv == 0.0) return 0.0;
    for (double& e : v) e /= nv;
    for (std::size_t r = 0; r < rows; ++r) {
      Jv[r] = 0.0;
      for (std::size_t c = 0; c < cols; ++c) Jv[r] += J[r * cols + c] * v[c];
    }
    double nJv = 0.0;
    for (double e : Jv) nJv += e * e;
    sigma = std::sqrt(nJv);
    for (std::size_t c = 0; c < cols; ++c) {
      w[c] = 0.0;
      for (std::size_t r = 0; r < rows; ++r) w[c] += J[r * cols + c] * Jv[r];
    }
    v = w;
  }
  return sigma;
}

}  // namespace oracle
