#include <cmath>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "rarebayes/bounds.hpp"
#include "rarebayes/error.hpp"

using namespace rarebayes;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

GammaCertificate exact_gamma(double gamma) {
  GammaCertificate cert;
  cert.gamma = gamma;
  cert.method = GammaMethod::kDirichletExact;
  cert.alpha = vec({1, 1});
  return cert;
}

// Least nu >= 1 with P(Poisson(nu) <= floor(M)) < target, by linear scan.
std::int64_t poisson_n0(double M, double target) {
  const auto k = static_cast<std::int64_t>(std::floor(M));
  std::int64_t nu = 1;
  while (oracle::poisson_cdf(k, static_cast<double>(nu)) >= target) ++nu;
  return nu;
}

}  // namespace

TEST_CASE("distribution functions agree with reference implementations") {
  for (std::int64_t n : {1, 7, 60, 1000}) {
    for (double p : {0.001, 0.05, 0.3, 0.5, 0.97}) {
      for (std::int64_t k : {std::int64_t{0}, n / 3, n / 2, n - 1, n}) {
        CHECK(binomial_cdf(k, n, p) == doctest::Approx(oracle::binomial_cdf(k, n, p)).epsilon(1e-11));
      }
    }
  }
  for (double nu : {0.5, 3.0, 40.0, 900.0}) {
    for (std::int64_t k : {0, 2, 30, 1000}) {
      const double expected = oracle::poisson_cdf(k, nu);
      CHECK(std::abs(poisson_cdf(k, nu) - expected) <= 1e-12 + 1e-11 * expected);
    }
  }
  CHECK(binomial_cdf(-1, 10, 0.3) == 0.0);
  CHECK(binomial_cdf(10, 10, 0.3) == 1.0);
}

TEST_CASE("Chernoff bound values") {
  CHECK(chernoff_bound(1.25, 4.0) == doctest::Approx(std::exp(-1.0)));
  CHECK(chernoff_bound(1.0 + 1e-9, 1.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(chernoff_bound(2.0, 1.0), ConfigError);
  CHECK_THROWS_AS(chernoff_bound(1.0, 1.0), ConfigError);

  const double bound = chernoff_bound(1.5, 2.0);
  double tail = 0.0;
  for (int s = 0; s <= 20; ++s) {
    if (s / 20.0 >= 1.5 * 0.3 + 2.0 / 20.0 - 1e-12) tail += oracle::binomial_pmf(20, 0.3, s);
  }
  CHECK(tail <= bound);
}

TEST_CASE("Chernoff bound dominates exact binomial tails in both directions") {
  CHECK(oracle::chernoff_violations([](double c, double d) { return chernoff_bound(c, d); }) == 0);
}

TEST_CASE("two-sample bound values and domination") {
  CHECK(lemma3_bound(2.0, 1.0, 2.0) == doctest::Approx(0.5));
  CHECK(lemma3_bound(2.0, 1.0, 1e4) < 1e-100);
  CHECK_THROWS_AS(lemma3_bound(2.0, 2.0, 1.0), ConfigError);

  long checked = 0;
  CHECK(oracle::two_sample_violations(
            [](double c, double cp, double d) { return lemma3_bound(c, cp, d); }, &checked) == 0);
  CHECK(checked > 100000);
}

TEST_CASE("Poisson threshold construction") {
  CHECK(lemma4_threshold(0.0, 0.5) == 8);
  CHECK(lemma4_threshold(10.0, 0.1) == static_cast<std::int64_t>(std::ceil(2.0 * poisson_n0(10.0, 0.05) / 0.1)));

  std::int64_t previous = INT64_MAX;
  for (double eps = 0.05; eps < 1.0; eps += 0.05) {
    const auto N = lemma4_threshold(10.0, eps);
    CHECK(N <= previous);
    previous = N;
  }
}

TEST_CASE("Poisson threshold meets its contract on an exact binomial grid") {
  const double M = 10.0;
  const double eps = 0.1;
  const auto N = lemma4_threshold(M, eps);
  int violations = 0;
  for (std::int64_t n = N; n <= 10000; ++n) {
    // The tail P(S_n <= M) decreases in p, so p = N/n is the worst admissible case.
    for (double scale : {1.0, 1.5}) {
      const double p = std::min(1.0, scale * static_cast<double>(N) / static_cast<double>(n));
      if (binomial_cdf(10, n, p) > eps) ++violations;
    }
  }
  CHECK(violations == 0);
  CHECK(oracle::binomial_cdf(10, N, 1.0 - 1e-12) <= eps);
}

TEST_CASE("single-die thresholds") {
  CHECK(theorem1_threshold(0.1, exact_gamma(2.0)).N == 8060);
  CHECK(theorem1_threshold(0.5, exact_gamma(2.0)).N == 76);
  const auto t = theorem1_threshold(0.5, exact_gamma(2.0));
  CHECK(t.c == doctest::Approx(1.125));
  CHECK(t.delta == doctest::Approx(0.1));
  CHECK(t.d == doctest::Approx(12.0));
  CHECK(theorem1_markov_uniform(0.1).N == 2000);

  const auto from_prior = theorem1_threshold(0.2, Prior(ConditionPPrior::dirichlet(vec({2, 3}))));
  CHECK(from_prior.N == 1075);

  GammaCertificate loose;
  loose.gamma = 9.0;
  loose.epsilon = 0.04;
  loose.method = GammaMethod::kBernsteinSearch;
  CHECK_THROWS_AS(theorem1_threshold(0.1, loose), PreconditionError);
  CHECK(theorem1_threshold(0.2, loose).N == 1135);

  std::int64_t previous = INT64_MAX;
  for (double eps = 0.05; eps < 1.0; eps += 0.05) {
    const auto N = theorem1_threshold(eps, exact_gamma(3.0)).N;
    CHECK(N <= previous);
    previous = N;
  }
  previous = 0;
  for (double g = 1.0; g <= 50.0; g += 3.5) {
    const auto N = theorem1_threshold(0.3, exact_gamma(g)).N;
    CHECK(N >= previous);
    previous = N;
  }
}

TEST_CASE("mean squared error of the uniform-prior estimator") {
  CHECK(mse_uniform(2, 0.5) == doctest::Approx(0.03125));
  double brute = 0.0;
  for (int x = 0; x <= 50; ++x) {
    const double err = (x + 1.0) / 52.0 - 0.2;
    brute += oracle::binomial_pmf(50, 0.2, x) * err * err;
  }
  CHECK(mse_uniform(50, 0.2) == doctest::Approx(brute).epsilon(1e-13));
  for (std::int64_t n : {10, 1000, 100000, 10000000}) {
    const double scaled = mse_uniform(n, 1.0 / static_cast<double>(n)) * static_cast<double>(n) * n;
    CHECK(scaled <= 2.0);
    CHECK(scaled >= 1.0);
  }
}

TEST_CASE("two-dice constants: feasibility and the d formula") {
  Theorem2Constants probe;
  probe.c = 1.0;
  probe.delta = 0.5;
  probe.beta = 0.05;
  probe.c_prime = 0.9;
  CHECK(probe.feasibility_margin() > 0.0);
  CHECK((1 - 0.05) / (1.05 * 0.5) == doctest::Approx(1.8095).epsilon(1e-4));

  const double d = 2.0 * std::log(10.0) / std::log(2.0);
  CHECK(d == doctest::Approx(6.6439).epsilon(1e-5));
  CHECK(lemma3_bound(2.0, 1.0, d) == doctest::Approx(0.1));
}

TEST_CASE("two-dice constants match a straight-line re-derivation") {
  const double c = 1.0, delta = 0.5, eta = 0.5, eps = 0.2, gamma = 2.0;
  const auto got = theorem2_constants(c, delta, eta, eps, exact_gamma(gamma));

  // Re-derivation: beta = 0.01 is the least grid value, then scan c' = c (1 - j/100).
  double best_cp = 0.0, best_d = 0.0, best_M = 0.0;
  std::int64_t best_N = INT64_MAX, best_N1 = 0, best_N2 = 0;
  for (int j = 1; j < 100; ++j) {
    const double cp = c * (1.0 - 0.01 * j);
    const double margin = (1.0 - 0.01) / ((1.0 + 0.01) * (1.0 - delta)) - (c / cp + delta);
    if (margin < 1e-9) continue;
    double d = (cp + 1.0) * std::log(2.0 / eps) / (cp * std::log(c / cp));
    while (std::pow(cp / c, cp * d / (cp + 1.0)) > eps / 2.0) d = std::nextafter(d, INFINITY);
    const double M = 3.0 * c * (d + gamma) / (delta * eta);
    const auto N1 = static_cast<std::int64_t>(std::ceil(2.0 * c * gamma / (cp * delta) - 1e-9));
    const auto N2 =
        static_cast<std::int64_t>(std::ceil(2.0 * poisson_n0(M, eps / 4.0) / (eps / 2.0) - 1e-9));
    const auto N = std::max(N1, N2);
    if (N < best_N) {
      best_N = N;
      best_cp = cp;
      best_d = d;
      best_M = M;
      best_N1 = N1;
      best_N2 = N2;
    }
  }
  CHECK(got.beta == doctest::Approx(0.01));
  CHECK(got.c_prime == doctest::Approx(best_cp).epsilon(1e-15));
  CHECK(got.d == doctest::Approx(best_d).epsilon(1e-14));
  CHECK(got.M == doctest::Approx(best_M).epsilon(1e-14));
  CHECK(got.N1 == best_N1);
  CHECK(got.N2 == best_N2);
  CHECK(got.N == best_N);

  // Invariants.
  CHECK(got.feasibility_margin() >= 1e-9);
  CHECK(lemma3_bound(c, got.c_prime, got.d) <= eps / 2.0);
  CHECK(got.N == std::max(got.N1, got.N2));
}

TEST_CASE("two-dice constants respect the certificate tolerance") {
  GammaCertificate approx;
  approx.gamma = 9.0;
  approx.epsilon = 0.2;
  approx.method = GammaMethod::kBernsteinSearch;
  const auto t = theorem2_constants(1.0, 0.9, 0.5, 0.2, approx);
  CHECK(t.beta >= 0.2);
  CHECK(t.feasibility_margin() >= 1e-9);

  approx.epsilon = 0.9;
  CHECK_THROWS_AS(theorem2_constants(1.0, 0.5, 0.5, 0.2, approx), PreconditionError);
  CHECK_THROWS_AS(theorem2_constants(1.0, 1.0, 0.5, 0.2, exact_gamma(2.0)), ConfigError);
}

TEST_CASE("random-choice threshold wraps the two-dice constants") {
  const auto t = corollary1_threshold(1.0, 0.5, 0.2, 0.3, exact_gamma(2.0));
  CHECK(t.eta == doctest::Approx(0.15));
  CHECK(t.N1 == static_cast<std::int64_t>(std::ceil(2.0 * 0.3 * 0.7 / (0.2 * 0.15 * 0.15) - 1e-9)));
  const auto inner = theorem2_constants(1.0, 0.5, 0.15, 0.1, exact_gamma(2.0));
  CHECK(t.inner.N == inner.N);
  CHECK(t.N == std::max(t.N1, static_cast<std::int64_t>(std::ceil(inner.N / 0.15 - 1e-9))));
}
