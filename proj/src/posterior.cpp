#include "rarebayes/posterior.hpp"

#include <algorithm>
#include <cmath>

#include "rarebayes/special.hpp"

namespace rarebayes {
namespace {

void check_side(const Counts& counts, Index dim, Index k) {
  if (counts.size() != dim) {
    throw ConfigError("counts have " + std::to_string(counts.size()) + " sides, prior has " +
                      std::to_string(dim));
  }
  if (k < 0 || k >= dim) {
    throw ConfigError("side index out of range");
  }
}

PosteriorMean from_moments(const KernelMoments& moments, Index k, const QuadratureSpec& spec) {
  PosteriorMean out;
  const double total = moments.total();
  if (!(total > 0.0) || !std::isfinite(total)) {
    out.value = std::numeric_limits<double>::quiet_NaN();
    out.error = std::numeric_limits<double>::infinity();
    out.converged = false;
    out.method = "quadrature";
    return out;
  }
  out.value = (k == 0 ? moments.mass_x : moments.mass_one_minus_x) / total;
  out.error = moments.mean_error();
  out.converged = moments.converged && out.error <= spec.abs_tol;
  out.method = "quadrature";
  return out;
}

}  // namespace

Vector mixture_posterior_weights(const DirichletMixturePrior& prior, const Counts& counts) {
  check_side(counts, prior.dimension(), 0);
  const Vector n = counts.tallies().cast<double>();
  Vector log_w(prior.components());
  for (Index j = 0; j < prior.components(); ++j) {
    const Vector& beta = prior.params()[static_cast<std::size_t>(j)];
    log_w[j] = std::log(prior.weights()[j]) + log_multivariate_beta(beta + n) -
               log_multivariate_beta(beta);
  }
  const double top = log_w.maxCoeff();
  Vector w = (log_w.array() - top).exp().matrix();
  return w / w.sum();
}

double mean_mixture(const DirichletMixturePrior& prior, const Counts& counts, Index k) {
  check_side(counts, prior.dimension(), k);
  const Vector w = mixture_posterior_weights(prior, counts);
  double out = 0.0;
  for (Index j = 0; j < prior.components(); ++j) {
    out += w[j] * mean_dirichlet(prior.params()[static_cast<std::size_t>(j)], counts, k);
  }
  return out;
}

PosteriorMean mean_quadrature(const ConditionPPrior& prior, const Counts& counts, Index k,
                              const QuadratureSpec& spec) {
  if (prior.dimension() != 2) {
    throw ConfigError("quadrature posterior means need K = 2; reduce the prior with "
                      "induce_two_sided first");
  }
  check_side(counts, 2, k);
  LogKernel kernel;
  const TildePiFunction& tilde = prior.tilde_pi_function();
  kernel.log_factor = [&tilde](double x) { return std::log(tilde(SimplexPoint::binary(x))); };
  kernel.a = static_cast<double>(counts[0]) + prior.alpha()[0] - 1.0;
  kernel.b = static_cast<double>(counts[1]) + prior.alpha()[1] - 1.0;
  kernel.knots = prior.knots();
  return from_moments(integrate_kernel_moments(kernel, spec), k, spec);
}

PosteriorMean mean_quadrature(const BoundaryFailurePrior&, const Counts& counts, Index k,
                              const QuadratureSpec& spec) {
  check_side(counts, 2, k);
  LogKernel kernel;
  kernel.log_factor = [](double x) {
    return x > 0.0 ? -1.0 / x : -std::numeric_limits<double>::infinity();
  };
  kernel.a = static_cast<double>(counts[0]);
  kernel.b = static_cast<double>(counts[1]);
  return from_moments(integrate_kernel_moments(kernel, spec), k, spec);
}

PosteriorMean posterior_mean(const Prior& prior, const Counts& counts, Index k,
                             const QuadratureSpec& spec) {
  struct Visitor {
    const Counts& counts;
    Index k;
    const QuadratureSpec& spec;
    PosteriorMean operator()(const ConditionPPrior& p) const {
      if (p.is_dirichlet()) {
        check_side(counts, p.dimension(), k);
        return {mean_dirichlet(p.alpha(), counts, k), 0.0, true, "dirichlet_closed_form"};
      }
      return mean_quadrature(p, counts, k, spec);
    }
    PosteriorMean operator()(const DirichletMixturePrior& p) const {
      return {mean_mixture(p, counts, k), 0.0, true, "mixture_closed_form"};
    }
    PosteriorMean operator()(const BoundaryFailurePrior& p) const {
      return mean_quadrature(p, counts, k, spec);
    }
  };
  return std::visit(Visitor{counts, k, spec}, prior);
}

PosteriorBracket bracket(const GammaCertificate& certificate, const Counts& counts, Index k) {
  return bracket(certificate, counts, k, certificate.valid_for_all_epsilon() ? 0.0
                                                                             : certificate.epsilon);
}

PosteriorBracket bracket(const GammaCertificate& certificate, const Counts& counts, Index k,
                         double epsilon) {
  check_side(counts, certificate.alpha.size(), k);
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw ConfigError("epsilon must lie in [0, 1)");
  }
  if (!certificate.certifies(epsilon)) {
    throw PreconditionError("certificate was computed for epsilon = " +
                            std::to_string(certificate.epsilon) +
                            " and does not cover a smaller epsilon");
  }
  const double n = static_cast<double>(counts.total());
  const double nk = static_cast<double>(counts[k]);
  const double g = certificate.gamma;
  return {(1.0 - epsilon) * (nk + certificate.alpha[k]) / (n + g),
          (1.0 + epsilon) * (nk + g) / (n + g), g, epsilon, k};
}

std::pair<double, double> mixture_bracket(double a, double A, const Counts& counts, Index k) {
  if (!(a >= 0.0 && a <= A && std::isfinite(A))) {
    throw ConfigError("mixture box needs 0 <= a <= A < infinity");
  }
  check_side(counts, counts.size(), k);
  const double n = static_cast<double>(counts.total());
  const double nk = static_cast<double>(counts[k]);
  const double dim = static_cast<double>(counts.size());
  return {(nk + a) / (n + dim * A), (nk + A) / (n + dim * a)};
}

double lemma2_lower_bound(std::int64_t n) {
  if (n < 0) throw ConfigError("n must be nonnegative");
  return 1.0 / (8.0 * std::sqrt(static_cast<double>(std::max<std::int64_t>(1, n))));
}

double odds_ratio(double mu_b, double p_hat, double q_hat) {
  if (!(mu_b > 0.0 && mu_b < 1.0)) {
    throw ConfigError("mu_B must lie in (0, 1)");
  }
  if (!(q_hat > 0.0)) {
    throw ConfigError("odds ratio needs a positive red posterior mean");
  }
  return mu_b * p_hat / ((1.0 - mu_b) * q_hat);
}

PosteriorEvaluator::PosteriorEvaluator(Prior prior, QuadratureSpec spec)
    : prior_(std::move(prior)), spec_(spec) {
  closed_form_ = std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ConditionPPrior>) {
          return p.is_dirichlet();
        } else {
          return std::is_same_v<T, DirichletMixturePrior>;
        }
      },
      prior_);
}

PosteriorMean PosteriorEvaluator::mean(const Counts& counts, Index k) {
  if (closed_form_) return posterior_mean(prior_, counts, k, spec_);
  std::vector<std::int64_t> key(counts.tallies().begin(), counts.tallies().end());
  key.push_back(k);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  PosteriorMean out = posterior_mean(prior_, counts, k, spec_);
  std::lock_guard<std::mutex> lock(mutex_);
  cache_.emplace(std::move(key), out);
  return out;
}

std::size_t PosteriorEvaluator::cache_size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return cache_.size();
}

std::size_t PosteriorEvaluator::unconverged() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return static_cast<std::size_t>(std::count_if(
      cache_.begin(), cache_.end(), [](const auto& entry) { return !entry.second.converged; }));
}

}  // namespace rarebayes
