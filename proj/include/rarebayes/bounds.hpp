#pragma once

#include <cstdint>
#include <string>

#include "rarebayes/bernstein.hpp"
#include "rarebayes/priors.hpp"

namespace rarebayes {

/// P(W <= k) for W ~ Poisson(nu), summed in log space.
double poisson_cdf(std::int64_t k, double nu);

/// P(S <= k) for S ~ Binomial(n, p), summed in log space.
double binomial_cdf(std::int64_t k, std::int64_t n, double p);

/// e^{(1 - c) d}, bounding P(S_n/n >= c p + d/n) and P(S_n/n <= p/c - d/n). Needs 1 < c < 2.
double chernoff_bound(double c, double d);

/// (c'/c)^{c' d / (c' + 1)}, bounding P(T_m/m >= S_n/(c' n) + d/min(n, m)) when p >= c q.
double lemma3_bound(double c, double c_prime, double d);

/// Least N such that P(S_n <= M) <= epsilon whenever n p >= N, built as
/// ceil(2 N0 / epsilon) with N0 the least nu >= 1 with P(Poisson(nu) <= M) < epsilon / 2.
std::int64_t lemma4_threshold(double M, double epsilon);

enum class Theorem1Method { kRemark3pp, kMarkovUniform };

std::string to_string(Theorem1Method method);

struct Theorem1Threshold {
  std::int64_t N = 0;
  double epsilon = 0.0;
  /// Zero for the Markov route, which needs no certificate.
  double gamma = 0.0;
  Theorem1Method method = Theorem1Method::kRemark3pp;
  /// Auxiliary constants of the route (c = 1 + eps/4, delta = eps/5, d = 3/eps^2).
  double c = 0.0;
  double delta = 0.0;
  double d = 0.0;
};

/// N = ceil(8/eps^3 + 3 gamma/eps); the certificate must hold at eps/5.
Theorem1Threshold theorem1_threshold(double epsilon, const GammaCertificate& certificate);

/// Same, computing the certificate at eps/5 for `prior`.
Theorem1Threshold theorem1_threshold(double epsilon, const Prior& prior,
                                     const GammaSearchOptions& options = {});

/// N = ceil(2/eps^3) for the uniform prior on the 2-simplex.
Theorem1Threshold theorem1_markov_uniform(double epsilon);

/// Exact mean squared error of (X + 1)/(n + 2) for X ~ Binomial(n, p).
double mse_uniform(std::int64_t n, double p);

struct Theorem2Constants {
  double c = 0.0;
  double delta = 0.0;
  double eta = 0.0;
  double epsilon = 0.0;
  double gamma = 0.0;
  double beta = 0.0;
  double c_prime = 0.0;
  double d = 0.0;
  double M = 0.0;
  std::int64_t N1 = 0;
  std::int64_t N2 = 0;
  std::int64_t N = 0;

  /// Left minus right side of the (beta, c') feasibility inequality.
  double feasibility_margin() const;
};

/// Constants of the two-dice threshold. `certificate` must bracket both
/// priors' posterior means (use the larger gamma of the two); beta is limited
/// to values the certificate covers.
Theorem2Constants theorem2_constants(double c, double delta, double eta, double epsilon,
                                     const GammaCertificate& certificate);

struct Corollary1Threshold {
  double mu_b = 0.0;
  double eta = 0.0;
  /// Sample size making eta <= B_n/n <= 1 - eta likely to 1 - eps/2 (Chebyshev).
  std::int64_t N1 = 0;
  Theorem2Constants inner;
  std::int64_t N = 0;
};

/// Threshold on n p for a random die choice with blue probability mu_b:
/// eta = min(mu_b, 1 - mu_b)/2, inner constants at eps/2, N = max(N1, ceil(inner.N / eta)).
Corollary1Threshold corollary1_threshold(double c, double delta, double epsilon, double mu_b,
                                         const GammaCertificate& certificate);

}  // namespace rarebayes
