#pragma once

#include <map>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "rarebayes/bernstein.hpp"
#include "rarebayes/error.hpp"
#include "rarebayes/priors.hpp"
#include "rarebayes/quadrature.hpp"
#include "rarebayes/simplex.hpp"

namespace rarebayes {

/// (n_k + alpha_k) / (n + sum alpha) for a Dirichlet(alpha) prior.
template <typename Scalar, typename Derived>
Scalar mean_dirichlet(const Eigen::MatrixBase<Derived>& alpha, const Counts& counts, Index k) {
  if (alpha.size() != counts.size() || k < 0 || k >= alpha.size()) {
    throw ConfigError("alpha, counts and side index disagree in dimension");
  }
  if ((alpha.array() <= 0).any()) {
    throw ConfigError("Dirichlet parameters must be positive");
  }
  const Scalar n(static_cast<double>(counts.total()));
  const Scalar nk(static_cast<double>(counts[k]));
  return (nk + Scalar(alpha[k])) / (n + Scalar(alpha.sum()));
}

inline double mean_dirichlet(const Vector& alpha, const Counts& counts, Index k) {
  return mean_dirichlet<double>(alpha, counts, k);
}

/// Exact posterior mean under a Dirichlet mixture: components are reweighted by
/// their marginal likelihoods B(beta_j + n) / B(beta_j).
double mean_mixture(const DirichletMixturePrior& prior, const Counts& counts, Index k);

/// Posterior weights of the mixture components after observing `counts`.
Vector mixture_posterior_weights(const DirichletMixturePrior& prior, const Counts& counts);

struct PosteriorMean {
  double value = 0.0;
  /// Absolute error estimate; zero for closed forms.
  double error = 0.0;
  /// False when the quadrature did not reach its tolerance.
  bool converged = true;
  std::string method;
};

/// Ratio of integrals by one-dimensional adaptive quadrature (K = 2 only).
PosteriorMean mean_quadrature(const ConditionPPrior& prior, const Counts& counts, Index k,
                              const QuadratureSpec& spec = {});
PosteriorMean mean_quadrature(const BoundaryFailurePrior& prior, const Counts& counts, Index k,
                              const QuadratureSpec& spec = {});

/// Dispatches to the closed form where one exists and to quadrature otherwise.
/// Generic priors with K > 2 are rejected; reduce them with induce_two_sided.
PosteriorMean posterior_mean(const Prior& prior, const Counts& counts, Index k,
                             const QuadratureSpec& spec = {});

struct PosteriorBracket {
  double lower;
  double upper;
  double gamma;
  double epsilon;
  Index k;

  bool contains(double value, double slack = 0.0) const {
    return value >= lower - slack && value <= upper + slack;
  }
};

/// (1 - eps)(n_k + alpha_k)/(n + gamma) and (1 + eps)(n_k + gamma)/(n + gamma)
/// with eps = certificate.epsilon.
PosteriorBracket bracket(const GammaCertificate& certificate, const Counts& counts, Index k);

/// The same bounds at a tolerance `epsilon` the certificate covers.
PosteriorBracket bracket(const GammaCertificate& certificate, const Counts& counts, Index k,
                         double epsilon);

/// (n_k + a)/(n + K A) and (n_k + A)/(n + K a) for mixtures with parameters in [a, A].
/// The upper bound is not clipped to 1.
std::pair<double, double> mixture_bracket(double a, double A, const Counts& counts, Index k);

/// 1 / (8 sqrt(max(1, n))), a lower bound on either posterior mean under the
/// boundary-failure prior.
double lemma2_lower_bound(std::int64_t n);

/// mu_B p_hat / ((1 - mu_B) q_hat).
double odds_ratio(double mu_b, double p_hat, double q_hat);

/// Thread-safe memo of posterior means of one prior, keyed by counts.
class PosteriorEvaluator {
 public:
  explicit PosteriorEvaluator(Prior prior, QuadratureSpec spec = {});

  const Prior& prior() const { return prior_; }

  /// Posterior mean of side k; converged == false results are cached as well.
  PosteriorMean mean(const Counts& counts, Index k);

  std::size_t cache_size() const;
  /// Number of cached results whose quadrature did not converge.
  std::size_t unconverged() const;

 private:
  Prior prior_;
  QuadratureSpec spec_;
  bool closed_form_;
  mutable std::mutex mutex_;
  std::map<std::vector<std::int64_t>, PosteriorMean> cache_;
};

}  // namespace rarebayes
