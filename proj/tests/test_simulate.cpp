#include <cmath>
#include <set>

#include <doctest.h>

#include "oracles.hpp"
#include "rarebayes/bounds.hpp"
#include "rarebayes/error.hpp"
#include "rarebayes/simulate.hpp"

using namespace rarebayes;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

const Prior kUniform = ConditionPPrior::dirichlet(vec({1, 1}));

RunOptions exploratory(std::uint64_t seed) {
  RunOptions o;
  o.seed = seed;
  o.exploratory = true;
  return o;
}

}  // namespace

TEST_CASE("stream seeds separate streams and replications") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t stream = 0; stream < 20; ++stream) {
    for (std::uint64_t rep = 0; rep < 50; ++rep) seen.insert(stream_seed(7, stream, rep));
  }
  CHECK(seen.size() == 1000);
  CHECK(stream_seed(7, 1, 2) == stream_seed(7, 1, 2));
  CHECK(stream_seed(7, 1, 2) != stream_seed(8, 1, 2));
}

TEST_CASE("multinomial draws") {
  Rng rng(3);
  const SimplexPoint p{0.2, 0.5, 0.3};
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (int i = 0; i < 4000; ++i) {
    const Counts c = sample_counts(p, 100, rng);
    CHECK(c.total() == 100);
    CHECK((c.tallies().array() >= 0).all());
    mean += c.tallies().cast<double>();
  }
  mean /= 4000.0;
  CHECK(mean[0] == doctest::Approx(20.0).epsilon(0.02));
  CHECK(mean[1] == doctest::Approx(50.0).epsilon(0.02));
  CHECK(sample_counts(SimplexPoint{0.0, 1.0}, 50, rng)[0] == 0);
  CHECK(sample_counts(p, 0, rng).total() == 0);
}

TEST_CASE("Wilson intervals") {
  const auto none = wilson_interval(0, 10);
  CHECK(none.lo == 0.0);
  CHECK(none.hi == doctest::Approx(0.2775).epsilon(1e-3));
  const auto half = wilson_interval(5, 10);
  CHECK(half.lo == doctest::Approx(0.2366).epsilon(1e-3));
  CHECK(half.hi == doctest::Approx(0.7634).epsilon(1e-3));
  CHECK(wilson_interval(10, 10).hi == doctest::Approx(1.0));
  CHECK(wilson_interval(3, 100, kZ99).hi > wilson_interval(3, 100, kZ95).hi);
  CHECK_THROWS_AS(wilson_interval(3, 0), ConfigError);
}

TEST_CASE("replication outcomes do not depend on the worker count") {
  auto body = [](std::int64_t rep, Rng& rng) {
    return static_cast<std::uint8_t>((rng() ^ static_cast<std::uint64_t>(rep)) & 0xff);
  };
  RunOptions one;
  one.seed = 11;
  RunOptions many = one;
  many.jobs = 8;
  const auto a = run_replications(1000, one, 4, body);
  const auto b = run_replications(1000, many, 4, body);
  CHECK(a == b);
  many.seed = 12;
  CHECK(run_replications(1000, many, 4, body) != a);
}

TEST_CASE("choice schedules and combined certificates") {
  CHECK(ChoiceSchedule::alternating().blue_count(11) == 5);
  CHECK(ChoiceSchedule::sequence({true, false, true, true}).blue_count(4) == 3);
  CHECK_THROWS_AS(ChoiceSchedule::sequence({true}).blue_count(2), ConfigError);
  CHECK_THROWS_AS(ChoiceSchedule::iid(0.4).blue_count(2), ConfigError);

  GammaCertificate exact;
  exact.gamma = 2.0;
  exact.method = GammaMethod::kDirichletExact;
  exact.alpha = vec({1, 1});
  GammaCertificate searched;
  searched.gamma = 9.0;
  searched.epsilon = 0.2;
  searched.method = GammaMethod::kBernsteinSearch;
  searched.alpha = vec({0.5, 2});
  const auto both = combine_certificates(exact, searched);
  CHECK(both.gamma == 9.0);
  CHECK(both.epsilon == 0.2);
  CHECK_FALSE(both.valid_for_all_epsilon());
  CHECK(both.alpha.isApprox(vec({0.5, 1})));
}

TEST_CASE("Monte Carlo frequencies agree with exact enumeration") {
  // Single die: failure |(X+1)/(n+2) - p| >= eps p at n = 15.
  const std::int64_t n = 15;
  const double p = 0.3, eps = 0.4;
  double exact_single = 0.0;
  for (int x = 0; x <= n; ++x) {
    if (std::abs((x + 1.0) / (n + 2.0) - p) >= eps * p) exact_single += oracle::binomial_pmf(n, p, x);
  }
  // Two dice, alternating: (S+1)/(b+2) >= 0.5 (T+1)/(r+2) with b = r = 20.
  const std::int64_t b = 20;
  const double pb = 0.2, qr = 0.15;
  double exact_pair = 0.0;
  for (int s = 0; s <= b; ++s) {
    for (int t = 0; t <= b; ++t) {
      if ((s + 1.0) / (b + 2.0) >= 0.5 * (t + 1.0) / (b + 2.0)) {
        exact_pair += oracle::binomial_pmf(b, pb, s) * oracle::binomial_pmf(b, qr, t);
      }
    }
  }
  int inside_single = 0, inside_pair = 0;
  const int trials = 100;
  for (int trial = 0; trial < trials; ++trial) {
    const auto single = verify_theorem1(kUniform, 0, eps, 1, {{n, SimplexPoint::binary(p)}}, 1000,
                                        exploratory(1000 + trial))
                            .front();
    const auto ci1 = wilson_interval(single.successes, single.replications, kZ99);
    inside_single += (exact_single >= ci1.lo && exact_single <= ci1.hi) ? 1 : 0;

    const TwoDiceParams params{SimplexPoint::binary(pb), SimplexPoint::binary(qr), 0, 1.0};
    const auto pair = verify_theorem2(kUniform, kUniform, params, ChoiceSchedule::alternating(),
                                      0.5, 0.2, 0.5, 2 * b, 1, 1000, exploratory(5000 + trial));
    const auto ci2 = wilson_interval(pair.successes, pair.replications, kZ99);
    inside_pair += (exact_pair >= ci2.lo && exact_pair <= ci2.hi) ? 1 : 0;
  }
  CHECK(inside_single >= 0.95 * trials);
  CHECK(inside_pair >= 0.95 * trials);
}

TEST_CASE("preconditions gate the verifiers unless exploratory") {
  RunOptions strict;
  CHECK_THROWS_AS(verify_theorem1(kUniform, 0, 0.1, 2000, {{100, SimplexPoint::binary(0.5)}}, 10,
                                  strict),
                  PreconditionError);
  const auto r = verify_theorem1(kUniform, 0, 0.1, 2000, {{100, SimplexPoint::binary(0.5)}}, 10,
                                 exploratory(1));
  CHECK(r.front().details["mode"] == "exploratory");
  CHECK_FALSE(r.front().theorem_check);
  CHECK(r.front().details["violations"].size() == 1);
}

TEST_CASE("single-die verifier at the uniform-prior threshold") {
  const auto N = theorem1_markov_uniform(0.2).N;  // 250
  RunOptions opts;
  opts.seed = 5;
  const auto results = verify_theorem1(
      kUniform, 0, 0.2, N, {{N * 10, SimplexPoint::binary(0.1)}, {N * 2, SimplexPoint::binary(0.5)}},
      2000, opts);
  for (const auto& r : results) {
    CHECK(r.pass);
    CHECK(r.theorem_check);
    CHECK(r.event == "failure");
  }
}

TEST_CASE("random-choice verifier with Dirichlet dice beats the wrong comparison") {
  GammaCertificate cert;
  cert.gamma = 2.0;
  cert.method = GammaMethod::kDirichletExact;
  cert.alpha = vec({1, 1});
  const auto threshold = corollary1_threshold(1.0, 0.5, 0.2, 0.5, cert);
  const double p1 = 0.02;
  const auto n = static_cast<std::int64_t>(std::ceil(threshold.N / p1));
  RunOptions opts;
  opts.seed = 9;
  opts.jobs = 2;
  const TwoDiceParams params{SimplexPoint::binary(p1), SimplexPoint::binary(p1), 0, 1.0};
  const auto r = verify_corollary1(kUniform, kUniform, params, 0.5, 0.5, 0.2, n, threshold.N, 1000,
                                   opts);
  CHECK(r.pass);
  CHECK(r.empirical_rate >= 0.8);
}

TEST_CASE("boundary-prior witness") {
  const auto w = example1_witness(1, 0.5);
  CHECK(w.n == 257);
  CHECK(w.p1 == doctest::Approx(std::pow(257.0, -1.0)));
  CHECK(w.p1 == doctest::Approx(0.00390).epsilon(1e-2));
  CHECK(w.certificate_holds);
  CHECK(w.lower_bound > w.two_p1);
  CHECK(w.quadrature_converged);
  CHECK(w.mean_all_failures > 2.0 * w.p1);
  CHECK(w.confirmed);

  // Linear scan for the least n with n > N^2 and n^delta > 16 N.
  std::int64_t least = 1;
  while (!(least > 1 && std::pow(static_cast<double>(least), 0.5) > 16.0)) ++least;
  CHECK(w.n == least);

  const auto wider = example1_witness(1, 0.75);
  CHECK(wider.n <= w.n);
  CHECK(example1_witness(3, 0.5).n > w.n);
}

TEST_CASE("Condition-P witness") {
  const PowerLaw square{1.0, 2.0, 0.0};
  const auto w = example2_witness(kUniform, square, 10);
  CHECK(w.n == 80);
  CHECK(w.gamma == 2.0);
  CHECK(w.alpha1 == 1.0);
  CHECK(w.p1 == doctest::Approx(1.0 / 640.0));
  CHECK(w.zeta_times_p1 >= 10.0);
  CHECK(w.certificate_holds);
  REQUIRE(w.mean_all_failures.has_value());
  CHECK(*w.mean_all_failures == doctest::Approx(1.0 / 82.0));
  CHECK(*w.mean_all_failures >= 1.0 / 164.0);
  CHECK(w.confirmed);
  // n/8 >= 10 first holds at 80, and 4n > 2(n + 2) once n > 2.
  CHECK(79.0 / 8.0 < 10.0);

  const PowerLaw slow{1.0, 1.0, 0.0};
  CHECK_THROWS_AS(example2_witness(kUniform, slow, 10, 10000), ConvergenceError);
}

TEST_CASE("zeta functions") {
  CHECK(PowerLaw{2.0, 1.5, 0.0}(4.0) == doctest::Approx(16.0));
  CHECK(PowerLaw{1.0, 1.0, 1.0}(std::exp(2.0)) == doctest::Approx(2.0 * std::exp(2.0)));
}

TEST_CASE("red boundary prior defeats the comparison along the shrinking family") {
  RunOptions opts;
  opts.seed = 2;
  const auto report = example3_demo(kUniform, 1.0, 0.5, 5, 100000, 400, opts);
  REQUIRE(report.crossing_n.has_value());
  CHECK(*report.crossing_n <= 100000);
  CHECK(report.results.back().wilson_ci_95.lo > 0.5);
  CHECK(report.unconverged_quadratures == 0);
}

TEST_CASE("wrong-comparison rate along p_1 = c/n stays away from zero") {
  RunOptions opts;
  opts.seed = 4;
  const auto report = example4_demo(kUniform, kUniform, 1.0, 0.5, PowerLaw{1.0, 0.5, 0.0}, 10,
                                    {1000, 10000, 100000}, 2000, opts);
  REQUIRE(report.results.size() == 3);
  CHECK(report.floor > 0.0);
  for (const auto& r : report.results) {
    CHECK(r.details["decomposition_without_wrong_comparison"] == 0);
    CHECK(r.details["no_blue_hit_lower_limit"].get<double>() == doctest::Approx(std::exp(-1.0)));
  }
}

TEST_CASE("random-choice frequencies agree with a triple enumeration") {
  const std::int64_t n = 15;
  const double mu = 0.3, p = 0.25, q = 0.1, eps = 0.2;
  double exact_c1 = 0.0, exact_c2 = 0.0;
  for (int b = 0; b <= n; ++b) {
    const double wb = oracle::binomial_pmf(n, mu, b);
    for (int s = 0; s <= b; ++s) {
      for (int t = 0; t <= n - b; ++t) {
        const double w = wb * oracle::binomial_pmf(b, p, s) * oracle::binomial_pmf(n - b, q, t);
        const double p_hat = (s + 1.0) / (b + 2.0);
        const double q_hat = (t + 1.0) / (n - b + 2.0);
        if (p_hat >= 0.5 * q_hat) exact_c1 += w;
        if (mu * p_hat / ((1.0 - mu) * q_hat) > (1.0 - eps) * mu / (1.0 - mu)) exact_c2 += w;
      }
    }
  }
  const TwoDiceParams params{SimplexPoint::binary(p), SimplexPoint::binary(q), 0, 1.0};
  int inside_c1 = 0, inside_c2 = 0;
  const int trials = 100;
  for (int trial = 0; trial < trials; ++trial) {
    const auto r1 = verify_corollary1(kUniform, kUniform, params, mu, 0.5, eps, n, 1, 1000,
                                      exploratory(700 + trial));
    const auto ci1 = wilson_interval(r1.successes, r1.replications, kZ99);
    inside_c1 += (exact_c1 >= ci1.lo && exact_c1 <= ci1.hi) ? 1 : 0;
    const auto r2 = verify_corollary2(kUniform, kUniform, 0, mu, eps, n, SimplexPoint::binary(p),
                                      SimplexPoint::binary(q), 1, 1000, exploratory(900 + trial));
    const auto ci2 = wilson_interval(r2.successes, r2.replications, kZ99);
    inside_c2 += (exact_c2 >= ci2.lo && exact_c2 <= ci2.hi) ? 1 : 0;
  }
  CHECK(inside_c1 >= 0.95 * trials);
  CHECK(inside_c2 >= 0.95 * trials);
}

TEST_CASE("degenerate dice") {
  RunOptions opts;
  opts.seed = 1;
  const auto sure = verify_theorem1(kUniform, 0, 0.1, 2000, {{5000, SimplexPoint::binary(1.0)}},
                                    500, opts);
  CHECK(sure.front().successes == 0);

  const TwoDiceParams params{SimplexPoint::binary(1.0), SimplexPoint::binary(0.5), 0, 2.0};
  const auto r = verify_theorem2(kUniform, kUniform, params, ChoiceSchedule::alternating(), 0.5,
                                 0.2, 0.5, 4000, 1000, 500, opts);
  CHECK(r.successes == 500);
}
