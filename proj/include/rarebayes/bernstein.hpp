#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rarebayes/priors.hpp"
#include "rarebayes/simplex.hpp"

namespace rarebayes {

/// Degree-m Bernstein polynomial of tilde_pi on the simplex,
///
///     h_m(p) = sum_{|nu| = m} tilde_pi(nu / m) * m! / (nu_1! ... nu_K!) * prod_i p_i^nu_i.
///
/// Coefficients are held in log space. Evaluation sums only the multinomial
/// terms within exp(-45) of the largest one, which keeps degrees up to 2^16
/// tractable without changing the value beyond double precision.
class BernsteinApprox {
 public:
  BernsteinApprox(Index dimension, std::int64_t degree, std::vector<double> log_node_values);

  Index dimension() const { return dimension_; }
  std::int64_t degree() const { return degree_; }

  /// log c_nu = log tilde_pi(nu / m) + log multinomial(m; nu).
  double log_coefficient(const CountVector& nu) const;

  double operator()(const SimplexPoint& p) const;

 private:
  double log_factorial(std::int64_t k) const { return log_factorial_[static_cast<std::size_t>(k)]; }
  std::size_t rank(const CountVector& nu) const;
  double accumulate(const SimplexPoint& p, Index coordinate, std::int64_t remaining,
                    double remaining_mass, std::size_t offset, double log_weight,
                    double shift) const;

  Index dimension_;
  std::int64_t degree_;
  std::vector<double> log_node_values_;
  std::vector<double> log_factorial_;
  double max_log_node_ = 0.0;
};

struct BernsteinOptions {
  /// Largest coefficient table (number of lattice points) that may be built.
  double max_table_entries = 4194304.0;
};

/// Builds h_m for the continuous factor of `prior`. Throws ConfigError when the
/// table C(m+K-1, K-1) exceeds the budget.
BernsteinApprox bernstein_fit(const ConditionPPrior& prior, std::int64_t degree,
                              const BernsteinOptions& options = {});

/// max |h_m - tilde_pi| over the lattice of the given resolution (>= 256).
double sup_error(const ConditionPPrior& prior, const BernsteinApprox& approx,
                 std::int64_t grid_resolution);

enum class GammaMethod {
  kBernsteinSearch,
  kRemark3Prime,
  kDirichletExact,
  kMixtureBox,
  /// A gamma supplied by the caller together with the epsilon it is claimed for.
  kUserSupplied
};

std::string to_string(GammaMethod method);

/// A value of gamma for which, for all counts,
///   (1 - eps)(n_k + alpha_k)/(n + gamma) <= posterior mean_k <= (1 + eps)(n_k + gamma)/(n + gamma).
struct GammaCertificate {
  double gamma = 0.0;
  double epsilon = 0.0;
  std::int64_t m_used = 0;
  /// Grid estimate of max |h_m - tilde_pi|; empty for closed-form methods that do not fit h_m.
  std::optional<double> sup_error_estimate;
  GammaMethod method = GammaMethod::kDirichletExact;
  /// Boundary exponents entering the lower bracket.
  Vector alpha;

  /// Dirichlet and mixture certificates hold with epsilon = 0, hence for every epsilon.
  bool valid_for_all_epsilon() const {
    return method == GammaMethod::kDirichletExact || method == GammaMethod::kMixtureBox;
  }
  /// True when the bracket is guaranteed at tolerance `eps`.
  bool certifies(double eps) const { return valid_for_all_epsilon() || epsilon <= eps; }
};

struct GammaSearchOptions {
  /// Lattice resolution for the sup-norm; 0 picks 1024 for K = 2 and 256 otherwise.
  std::int64_t grid_resolution = 0;
  std::int64_t max_degree = std::int64_t{1} << 16;
  /// Multiplies lattice-estimated minima of tilde_pi.
  double safety_factor = 0.9;
  BernsteinOptions bernstein;
};

/// Least degree m (doubling, then bisection) with
///     max |h_m - tilde_pi| <= min tilde_pi / (1 + 2 / eps),
/// returning gamma = m + sum alpha. Dirichlet priors short-circuit to
/// gamma = sum alpha, mixtures to gamma = max_j sum_i params_j[i]. Throws
/// ConfigError for priors outside Condition P and ConvergenceError when the
/// degree cap is reached.
GammaCertificate gamma_for_epsilon(const Prior& prior, double epsilon,
                                   const GammaSearchOptions& options = {});

/// Closed-form gamma for K = 2 with continuously differentiable
/// phi(p_1) = tilde_pi(p_1, 1 - p_1):
///     gamma = alpha_1 + alpha_2 + ceil(5/4 (1 + 2/eps) max|phi'| / min phi)^2.
GammaCertificate gamma_remark3prime(const Vector& alpha, double epsilon, double max_abs_phi_prime,
                                    double min_phi);

}  // namespace rarebayes
