#include "rarebayes/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rarebayes/error.hpp"
#include "rarebayes/special.hpp"

namespace rarebayes {
namespace {

constexpr double kFeasibilityMargin = 1e-9;

void check_unit_open(double x, const char* name) {
  if (!(x > 0.0 && x < 1.0)) {
    throw ConfigError(std::string(name) + " must lie in (0, 1)");
  }
}

}  // namespace

double poisson_cdf(std::int64_t k, double nu) {
  if (k < 0) return 0.0;
  if (nu <= 0.0) return 1.0;
  double log_term = -nu;
  double log_sum = log_term;
  const double log_nu = std::log(nu);
  for (std::int64_t j = 1; j <= k; ++j) {
    log_term += log_nu - std::log(static_cast<double>(j));
    log_sum = log_add_exp(log_sum, log_term);
  }
  return std::min(1.0, std::exp(log_sum));
}

double binomial_cdf(std::int64_t k, std::int64_t n, double p) {
  if (k < 0) return 0.0;
  if (k >= n) return 1.0;
  if (p <= 0.0) return 1.0;
  if (p >= 1.0) return 0.0;
  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  double log_sum = -std::numeric_limits<double>::infinity();
  for (std::int64_t j = 0; j <= k; ++j) {
    const double lt = log_binomial_coefficient(static_cast<double>(n), static_cast<double>(j)) +
                      static_cast<double>(j) * log_p + static_cast<double>(n - j) * log_q;
    log_sum = log_add_exp(log_sum, lt);
  }
  return std::min(1.0, std::exp(log_sum));
}

double chernoff_bound(double c, double d) {
  if (!(c > 1.0 && c < 2.0)) {
    throw ConfigError("chernoff_bound needs 1 < c < 2");
  }
  if (!(d > 0.0)) throw ConfigError("chernoff_bound needs d > 0");
  return std::exp((1.0 - c) * d);
}

double lemma3_bound(double c, double c_prime, double d) {
  if (!(c_prime > 0.0 && c_prime < c)) {
    throw ConfigError("lemma3_bound needs 0 < c' < c");
  }
  if (!(d > 0.0)) throw ConfigError("lemma3_bound needs d > 0");
  return std::pow(c_prime / c, c_prime * d / (c_prime + 1.0));
}

std::int64_t lemma4_threshold(double M, double epsilon) {
  check_unit_open(epsilon, "epsilon");
  if (!std::isfinite(M)) throw ConfigError("M must be finite");
  const auto k = static_cast<std::int64_t>(std::floor(M));
  const double target = epsilon / 2.0;
  auto passes = [&](std::int64_t nu) { return poisson_cdf(k, static_cast<double>(nu)) < target; };
  std::int64_t n0 = 1;
  if (!passes(1)) {
    std::int64_t lo = 1;
    std::int64_t hi = 2;
    while (!passes(hi)) {
      lo = hi;
      hi *= 2;
    }
    while (hi - lo > 1) {
      const std::int64_t mid = lo + (hi - lo) / 2;
      if (passes(mid)) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    n0 = hi;
  }
  return ceil_snapped(2.0 * static_cast<double>(n0) / epsilon);
}

std::string to_string(Theorem1Method method) {
  return method == Theorem1Method::kRemark3pp ? "remark3pp" : "markov_uniform";
}

Theorem1Threshold theorem1_threshold(double epsilon, const GammaCertificate& certificate) {
  check_unit_open(epsilon, "epsilon");
  if (!certificate.certifies(epsilon / 5.0)) {
    throw PreconditionError("the threshold needs a gamma certificate at epsilon/5 = " +
                            std::to_string(epsilon / 5.0) + "; got one at " +
                            std::to_string(certificate.epsilon));
  }
  Theorem1Threshold out;
  out.epsilon = epsilon;
  out.gamma = certificate.gamma;
  out.method = Theorem1Method::kRemark3pp;
  out.c = 1.0 + epsilon / 4.0;
  out.delta = epsilon / 5.0;
  out.d = 3.0 / (epsilon * epsilon);
  out.N = ceil_snapped(8.0 / (epsilon * epsilon * epsilon) + 3.0 * certificate.gamma / epsilon);
  return out;
}

Theorem1Threshold theorem1_threshold(double epsilon, const Prior& prior,
                                     const GammaSearchOptions& options) {
  check_unit_open(epsilon, "epsilon");
  return theorem1_threshold(epsilon, gamma_for_epsilon(prior, epsilon / 5.0, options));
}

Theorem1Threshold theorem1_markov_uniform(double epsilon) {
  check_unit_open(epsilon, "epsilon");
  Theorem1Threshold out;
  out.epsilon = epsilon;
  out.method = Theorem1Method::kMarkovUniform;
  out.N = ceil_snapped(2.0 / (epsilon * epsilon * epsilon));
  return out;
}

double mse_uniform(std::int64_t n, double p) {
  if (n < 0) throw ConfigError("n must be nonnegative");
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p must lie in [0, 1]");
  const double nn = static_cast<double>(n);
  const double bias = 1.0 - 2.0 * p;
  return (nn * p * (1.0 - p) + bias * bias) / ((nn + 2.0) * (nn + 2.0));
}

double Theorem2Constants::feasibility_margin() const {
  return (1.0 - beta) / ((1.0 + beta) * (1.0 - delta)) - (c / c_prime + delta);
}

namespace {

bool try_grid(double c, double delta, double eta, double epsilon,
              const GammaCertificate& certificate, int steps, Theorem2Constants& best) {
  const double step = 1.0 / steps;
  const double g = certificate.gamma;
  // Smaller beta only relaxes the feasibility constraint, so the least
  // admissible beta on the grid is optimal.
  double beta = -1.0;
  for (int i = 1; i < steps; ++i) {
    const double b = step * i;
    if (certificate.certifies(b)) {
      beta = b;
      break;
    }
  }
  if (beta < 0.0) return false;
  bool found = false;
  for (int j = 1; j < steps; ++j) {
    Theorem2Constants t;
    t.c = c;
    t.delta = delta;
    t.eta = eta;
    t.epsilon = epsilon;
    t.gamma = g;
    t.beta = beta;
    t.c_prime = c * (1.0 - step * j);
    if (t.feasibility_margin() < kFeasibilityMargin) continue;
    t.d = (t.c_prime + 1.0) * std::log(2.0 / epsilon) / (t.c_prime * std::log(c / t.c_prime));
    while (lemma3_bound(c, t.c_prime, t.d) > epsilon / 2.0) {
      t.d = std::nextafter(t.d, std::numeric_limits<double>::infinity());
    }
    t.M = 3.0 * c * (t.d + g) / (delta * eta);
    t.N1 = ceil_snapped(2.0 * c * g / (t.c_prime * delta));
    t.N2 = lemma4_threshold(t.M, epsilon / 2.0);
    t.N = std::max(t.N1, t.N2);
    if (!found || t.N < best.N) {
      best = t;
      found = true;
    }
  }
  return found;
}

}  // namespace

Theorem2Constants theorem2_constants(double c, double delta, double eta, double epsilon,
                                     const GammaCertificate& certificate) {
  if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("c must be positive");
  check_unit_open(delta, "delta");
  check_unit_open(eta, "eta");
  check_unit_open(epsilon, "epsilon");
  Theorem2Constants best;
  if (!try_grid(c, delta, eta, epsilon, certificate, 100, best) &&
      !try_grid(c, delta, eta, epsilon, certificate, 1000, best)) {
    throw PreconditionError("no feasible (beta, c') pair: delta too large for the certificate at "
                            "epsilon = " + std::to_string(certificate.epsilon));
  }
  if (!(best.feasibility_margin() >= kFeasibilityMargin) ||
      !(lemma3_bound(c, best.c_prime, best.d) <= epsilon / 2.0) || best.N != std::max(best.N1, best.N2)) {
    throw Error("internal: threshold constants violate their invariants");
  }
  return best;
}

Corollary1Threshold corollary1_threshold(double c, double delta, double epsilon, double mu_b,
                                         const GammaCertificate& certificate) {
  check_unit_open(mu_b, "mu_B");
  check_unit_open(epsilon, "epsilon");
  Corollary1Threshold out;
  out.mu_b = mu_b;
  out.eta = std::min(mu_b, 1.0 - mu_b) / 2.0;
  out.N1 = ceil_snapped(2.0 * mu_b * (1.0 - mu_b) / (epsilon * out.eta * out.eta));
  out.inner = theorem2_constants(c, delta, out.eta, epsilon / 2.0, certificate);
  out.N = std::max(out.N1, ceil_snapped(static_cast<double>(out.inner.N) / out.eta));
  return out;
}

}  // namespace rarebayes
