#include <cmath>
#include <numbers>

#include <doctest.h>

#include "oracles.hpp"
#include "rarebayes/bernstein.hpp"
#include "rarebayes/error.hpp"

using namespace rarebayes;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

double sine_phi(double x) { return 2.0 + std::sin(std::numbers::pi * x); }

ConditionPPrior sine_prior() {
  return ConditionPPrior(vec({1, 1}), [](const SimplexPoint& p) { return sine_phi(p[0]); },
                         "2+sin(pi p1)", 2.0);
}

ConditionPPrior one_dim(std::function<double(double)> phi, double min_value) {
  return ConditionPPrior(
      vec({1, 1}), [phi](const SimplexPoint& p) { return phi(p[0]); }, "test", min_value);
}

}  // namespace

TEST_CASE("constants are reproduced at every degree") {
  const auto flat = ConditionPPrior::dirichlet(vec({1, 1}));
  for (std::int64_t m : {0, 1, 7, 100, 1000, 65536}) {
    const auto h = bernstein_fit(flat, m);
    for (double x : {0.0, 1e-6, 0.3, 0.5, 0.999, 1.0}) {
      CHECK(std::abs(h(SimplexPoint::binary(x)) - 1.0) <= 1e-10);
    }
  }
  const auto flat3 = ConditionPPrior::dirichlet(vec({1, 1, 1}));
  for (std::int64_t m : {1, 5, 40, 300}) {
    const auto h = bernstein_fit(flat3, m);
    for (const auto& p : simplex_grid(3, 9)) CHECK(std::abs(h(p) - 1.0) <= 1e-10);
    CHECK(sup_error(flat3, h, 256) <= 1e-10);
  }
}

TEST_CASE("low-degree reproduction") {
  const auto linear = one_dim([](double x) { return x; }, 0.0);
  const auto h1 = bernstein_fit(linear, 1);
  for (double x : {0.0, 0.2, 0.7, 1.0}) {
    CHECK(h1(SimplexPoint::binary(x)) == doctest::Approx(x).epsilon(1e-14));
  }
  CHECK(h1(SimplexPoint::binary(0.0)) == 0.0);

  const auto square = one_dim([](double x) { return x * x; }, 0.0);
  // Hand sum: 0 * 1/4 + 1/4 * 2/4 + 1 * 1/4.
  CHECK(bernstein_fit(square, 2)(SimplexPoint::binary(0.5)) == doctest::Approx(0.375));
}

TEST_CASE("degree-50 sine fit matches a term-by-term oracle on a dense grid") {
  const auto prior = sine_prior();
  const auto h = bernstein_fit(prior, 50);
  double worst = 0.0;
  for (int i = 0; i <= 100000; ++i) {
    const double x = i / 100000.0;
    worst = std::max(worst, std::abs(h(SimplexPoint::binary(x)) - oracle::bernstein_1d(sine_phi, 50, x)));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("coefficients are positive log-space values") {
  const auto h = bernstein_fit(sine_prior(), 200);
  CountVector nu(2);
  nu << 100, 100;
  const double expected = std::log(sine_phi(0.5)) + std::lgamma(201.0) - 2.0 * std::lgamma(101.0);
  CHECK(h.log_coefficient(nu) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("sup error shrinks along doubling degrees") {
  const auto prior = sine_prior();
  double previous = INFINITY;
  double first = 0.0;
  for (int j = 0; j <= 10; ++j) {
    const double err = sup_error(prior, bernstein_fit(prior, std::int64_t{1} << j), 1024);
    if (j == 0) first = err;
    CHECK(err <= previous * 1.0001);
    previous = err;
  }
  CHECK(previous < first / 100.0);
  CHECK(previous < 2e-3);
}

TEST_CASE("gamma for Dirichlet, mixture and boundary priors") {
  for (double eps : {0.01, 0.2, 0.5, 0.99}) {
    const auto cert = gamma_for_epsilon(ConditionPPrior::dirichlet(vec({2, 3})), eps);
    CHECK(cert.gamma == 5.0);
    CHECK(cert.m_used == 0);
    CHECK(cert.method == GammaMethod::kDirichletExact);
    CHECK(cert.valid_for_all_epsilon());
    CHECK(gamma_for_epsilon(ConditionPPrior::dirichlet(vec({1, 1})), eps).gamma == 2.0);
  }
  const DirichletMixturePrior mixture(vec({0.5, 0.5}), {vec({1, 1}), vec({3, 1})});
  const auto mix = gamma_for_epsilon(mixture, 0.3);
  CHECK(mix.gamma == 4.0);
  CHECK(mix.alpha.isApprox(vec({1, 1})));
  CHECK(mix.method == GammaMethod::kMixtureBox);
  CHECK_THROWS_AS(gamma_for_epsilon(BoundaryFailurePrior{}, 0.2), ConfigError);
  CHECK_THROWS_AS(gamma_for_epsilon(sine_prior(), 1.0), ConfigError);
}

TEST_CASE("searched gamma equals a linear scan over degrees") {
  const auto prior = sine_prior();
  for (double eps : {0.2, 0.5}) {
    const double target = 2.0 / (1.0 + 2.0 / eps);
    int m = 0;
    for (;; ++m) {
      double worst = 0.0;
      for (int i = 0; i <= 1024; ++i) {
        const double x = i / 1024.0;
        worst = std::max(worst, std::abs(oracle::bernstein_1d(sine_phi, m, x) - sine_phi(x)));
      }
      if (worst <= target) break;
    }
    const auto cert = gamma_for_epsilon(prior, eps);
    CHECK(cert.m_used == m);
    CHECK(cert.gamma == doctest::Approx(m + 2.0));
    CHECK(cert.epsilon == eps);
    CHECK(cert.method == GammaMethod::kBernsteinSearch);
    REQUIRE(cert.sup_error_estimate.has_value());
    CHECK(*cert.sup_error_estimate <= target);

    // Once the tolerance is met the polynomial stays above half the minimum.
    const auto h = bernstein_fit(prior, cert.m_used);
    for (int i = 0; i <= 1024; ++i) CHECK(h(SimplexPoint::binary(i / 1024.0)) >= 1.0);
  }
}

TEST_CASE("grid-estimated minima are discounted by the safety factor") {
  const ConditionPPrior estimated(
      vec({1, 1}), [](const SimplexPoint& p) { return sine_phi(p[0]); }, "sine, estimated min");
  const auto exact = gamma_for_epsilon(sine_prior(), 0.2);
  const auto discounted = gamma_for_epsilon(estimated, 0.2);
  CHECK(discounted.m_used >= exact.m_used);
  CHECK(*discounted.sup_error_estimate <= 0.9 * 2.0 / 11.0);
}

TEST_CASE("three-sided search and the degree cap") {
  const ConditionPPrior bumpy(
      vec({1, 1, 1}), [](const SimplexPoint& p) { return 1.0 + p[0] * p[1]; }, "1+p1 p2", 1.0);
  const auto cert = gamma_for_epsilon(bumpy, 0.5);
  CHECK(cert.gamma == doctest::Approx(cert.m_used + 3.0));
  CHECK(*cert.sup_error_estimate <= 1.0 / 5.0);

  GammaSearchOptions tight;
  tight.max_degree = 4;
  CHECK_THROWS_AS(gamma_for_epsilon(sine_prior(), 0.01, tight), ConvergenceError);
}

TEST_CASE("closed-form gamma for differentiable two-sided priors") {
  CHECK(gamma_remark3prime(vec({1, 1}), 0.3, 0.0, 1.0).gamma == 2.0);
  CHECK(gamma_remark3prime(vec({1, 1}), 1.0, 0.5, 1.0).gamma == 6.0);
  CHECK(gamma_remark3prime(vec({1, 1}), 0.2, 1.0, 1.0).gamma == 198.0);
  CHECK(gamma_remark3prime(vec({2, 3}), 0.2, 1.0, 1.0).method == GammaMethod::kRemark3Prime);
  CHECK_THROWS_AS(gamma_remark3prime(vec({1, 1}), 0.2, 1.0, 0.0), ConfigError);
  CHECK_THROWS_AS(gamma_remark3prime(vec({1, 1, 1}), 0.2, 1.0, 1.0), ConfigError);
}
