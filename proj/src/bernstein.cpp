#include "rarebayes/bernstein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "rarebayes/error.hpp"
#include "rarebayes/special.hpp"

namespace rarebayes {
namespace {

constexpr double kWindowLogDrop = 45.0;

// Exact C(n, k) for the small k used in lattice ranking.
std::int64_t small_binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return 0;
  std::int64_t out = 1;
  for (std::int64_t i = 1; i <= k; ++i) {
    out = out * (n - k + i) / i;
  }
  return out;
}

}  // namespace

BernsteinApprox::BernsteinApprox(Index dimension, std::int64_t degree,
                                 std::vector<double> log_node_values)
    : dimension_(dimension), degree_(degree), log_node_values_(std::move(log_node_values)) {
  if (dimension_ < 2 || degree_ < 0) {
    throw ConfigError("Bernstein approximation needs K >= 2 and m >= 0");
  }
  const std::size_t expected =
      degree_ == 0 ? 1 : static_cast<std::size_t>(composition_count(dimension_, degree_));
  if (log_node_values_.size() != expected) {
    throw ConfigError("Bernstein coefficient table has the wrong size");
  }
  log_factorial_.resize(static_cast<std::size_t>(degree_) + 1);
  for (std::int64_t k = 0; k <= degree_; ++k) {
    log_factorial_[static_cast<std::size_t>(k)] = std::lgamma(static_cast<double>(k) + 1.0);
  }
  max_log_node_ = *std::max_element(log_node_values_.begin(), log_node_values_.end());
}

std::size_t BernsteinApprox::rank(const CountVector& nu) const {
  std::int64_t remaining = degree_;
  std::int64_t offset = 0;
  for (Index i = 0; i + 1 < dimension_; ++i) {
    const std::int64_t q = dimension_ - i - 1;
    offset += small_binomial(remaining + q, q) - small_binomial(remaining - nu[i] + q, q);
    remaining -= nu[i];
  }
  return static_cast<std::size_t>(offset);
}

double BernsteinApprox::log_coefficient(const CountVector& nu) const {
  if (nu.size() != dimension_ || nu.sum() != degree_ || (nu.array() < 0).any()) {
    throw ConfigError("multi-index does not match the Bernstein degree");
  }
  if (degree_ == 0) return log_node_values_.front();
  double log_multinomial = log_factorial(degree_);
  for (Index i = 0; i < nu.size(); ++i) log_multinomial -= log_factorial(nu[i]);
  return log_node_values_[rank(nu)] + log_multinomial;
}

double BernsteinApprox::operator()(const SimplexPoint& p) const {
  if (p.size() != dimension_) {
    throw ConfigError("point dimension does not match the Bernstein approximation");
  }
  if (degree_ == 0) return std::exp(log_node_values_.front());
  return std::exp(max_log_node_) * accumulate(p, 0, degree_, 1.0, 0, 0.0, max_log_node_);
}

// The multinomial weight factorizes into binomial weights of each coordinate
// conditional on the earlier ones; each level sums over the window of its
// binomial that lies within exp(-45) of the mode.
double BernsteinApprox::accumulate(const SimplexPoint& p, Index coordinate, std::int64_t remaining,
                                   double remaining_mass, std::size_t offset, double log_weight,
                                   double shift) const {
  if (coordinate == dimension_ - 1) {
    return std::exp(log_node_values_[offset] + log_weight - shift);
  }
  const double prob =
      remaining_mass > 0.0 ? std::clamp(p[coordinate] / remaining_mass, 0.0, 1.0) : 0.0;
  const double log_p = std::log(prob);
  const double log_q = std::log1p(-prob);
  auto log_pmf = [&](std::int64_t v) {
    double out = log_factorial(remaining) - log_factorial(v) - log_factorial(remaining - v);
    if (v > 0) out += static_cast<double>(v) * log_p;
    if (remaining - v > 0) out += static_cast<double>(remaining - v) * log_q;
    return out;
  };
  const std::int64_t q = dimension_ - coordinate - 1;
  const std::int64_t block_base = small_binomial(remaining + q, q);
  const double next_mass = std::max(remaining_mass - p[coordinate], 0.0);
  auto term = [&](std::int64_t v, double lp) {
    const auto child_offset =
        offset + static_cast<std::size_t>(block_base - small_binomial(remaining - v + q, q));
    return accumulate(p, coordinate + 1, remaining - v, next_mass, child_offset, log_weight + lp,
                      shift);
  };

  if (prob == 0.0) return term(0, 0.0);
  if (prob == 1.0) return term(remaining, 0.0);

  const auto mode = std::clamp<std::int64_t>(
      static_cast<std::int64_t>(std::floor(static_cast<double>(remaining + 1) * prob)), 0,
      remaining);
  const double peak = log_pmf(mode);
  double sum = term(mode, peak);
  for (std::int64_t v = mode + 1; v <= remaining; ++v) {
    const double lp = log_pmf(v);
    if (lp < peak - kWindowLogDrop) break;
    sum += term(v, lp);
  }
  for (std::int64_t v = mode - 1; v >= 0; --v) {
    const double lp = log_pmf(v);
    if (lp < peak - kWindowLogDrop) break;
    sum += term(v, lp);
  }
  return sum;
}

BernsteinApprox bernstein_fit(const ConditionPPrior& prior, std::int64_t degree,
                              const BernsteinOptions& options) {
  const Index dim = prior.dimension();
  if (degree < 0) {
    throw ConfigError("Bernstein degree must be nonnegative");
  }
  std::vector<double> log_values;
  if (degree == 0) {
    const SimplexPoint centroid(Vector::Constant(dim, 1.0 / static_cast<double>(dim)));
    log_values.push_back(std::log(prior.tilde_pi(centroid)));
    return BernsteinApprox(dim, 0, std::move(log_values));
  }
  const double entries = composition_count(dim, degree);
  if (entries > options.max_table_entries) {
    throw ConfigError("Bernstein table of degree " + std::to_string(degree) + " for K = " +
                      std::to_string(dim) + " exceeds the memory budget; reduce the prior with "
                      "induce_two_sided first");
  }
  log_values.reserve(static_cast<std::size_t>(entries));
  const double scale = 1.0 / static_cast<double>(degree);
  for_each_composition(dim, degree, [&](const CountVector& nu) {
    log_values.push_back(std::log(prior.tilde_pi(SimplexPoint(nu.cast<double>() * scale))));
  });
  return BernsteinApprox(dim, degree, std::move(log_values));
}

double sup_error(const ConditionPPrior& prior, const BernsteinApprox& approx,
                 std::int64_t grid_resolution) {
  if (grid_resolution < 256) {
    throw ConfigError("sup_error needs a grid resolution of at least 256");
  }
  if (approx.dimension() != prior.dimension()) {
    throw ConfigError("approximation and prior dimensions differ");
  }
  double worst = 0.0;
  for (const auto& p : simplex_grid(prior.dimension(), grid_resolution)) {
    worst = std::max(worst, std::abs(approx(p) - prior.tilde_pi(p)));
  }
  return worst;
}

std::string to_string(GammaMethod method) {
  switch (method) {
    case GammaMethod::kBernsteinSearch:
      return "bernstein_search";
    case GammaMethod::kRemark3Prime:
      return "remark3prime";
    case GammaMethod::kDirichletExact:
      return "dirichlet_exact";
    case GammaMethod::kMixtureBox:
      return "mixture_box";
    case GammaMethod::kUserSupplied:
      return "user_supplied";
  }
  return "unknown";
}

namespace {

void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw ConfigError("epsilon must lie in (0, 1)");
  }
}

GammaCertificate search_degree(const ConditionPPrior& prior, double epsilon,
                               const GammaSearchOptions& options) {
  const Index dim = prior.dimension();
  const std::int64_t resolution =
      options.grid_resolution > 0 ? options.grid_resolution : (dim == 2 ? 1024 : 256);
  const std::vector<SimplexPoint> grid = simplex_grid(dim, resolution);
  std::vector<double> values;
  values.reserve(grid.size());
  for (const auto& p : grid) values.push_back(prior.tilde_pi(p));

  double floor_value = prior.tilde_pi_min();
  if (!prior.tilde_pi_is_exact()) {
    floor_value = options.safety_factor *
                  std::min(floor_value, *std::min_element(values.begin(), values.end()));
  }
  if (!(floor_value > 0.0)) {
    throw ConfigError("tilde_pi is not bounded away from zero; prior is not Condition P");
  }
  const double threshold = floor_value / (1.0 + 2.0 / epsilon);

  std::map<std::int64_t, double> errors;
  auto error_at = [&](std::int64_t m) {
    if (auto it = errors.find(m); it != errors.end()) return it->second;
    const BernsteinApprox approx = bernstein_fit(prior, m, options.bernstein);
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      worst = std::max(worst, std::abs(approx(grid[i]) - values[i]));
    }
    errors.emplace(m, worst);
    return worst;
  };

  std::int64_t hi = 0;
  if (error_at(0) > threshold) {
    std::int64_t lo = 0;
    hi = 1;
    while (error_at(hi) > threshold) {
      lo = hi;
      hi *= 2;
      if (hi > options.max_degree) {
        throw ConvergenceError("prior too rough for requested epsilon: Bernstein degree would "
                               "exceed " + std::to_string(options.max_degree));
      }
    }
    while (hi - lo > 1) {
      const std::int64_t mid = lo + (hi - lo) / 2;
      if (error_at(mid) <= threshold) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
  }
  GammaCertificate cert;
  cert.gamma = static_cast<double>(hi) + prior.alpha_sum();
  cert.epsilon = epsilon;
  cert.m_used = hi;
  cert.sup_error_estimate = error_at(hi);
  cert.method = GammaMethod::kBernsteinSearch;
  cert.alpha = prior.alpha();
  return cert;
}

}  // namespace

GammaCertificate gamma_for_epsilon(const Prior& prior, double epsilon,
                                   const GammaSearchOptions& options) {
  check_epsilon(epsilon);
  struct Visitor {
    double epsilon;
    const GammaSearchOptions& options;
    GammaCertificate operator()(const ConditionPPrior& p) const {
      if (p.is_dirichlet()) {
        GammaCertificate cert;
        cert.gamma = p.alpha_sum();
        cert.epsilon = epsilon;
        cert.m_used = 0;
        cert.sup_error_estimate = 0.0;
        cert.method = GammaMethod::kDirichletExact;
        cert.alpha = p.alpha();
        return cert;
      }
      return search_degree(p, epsilon, options);
    }
    GammaCertificate operator()(const DirichletMixturePrior& p) const {
      GammaCertificate cert;
      cert.gamma = p.max_concentration();
      cert.epsilon = epsilon;
      cert.m_used = 0;
      cert.method = GammaMethod::kMixtureBox;
      cert.alpha = p.min_params();
      return cert;
    }
    GammaCertificate operator()(const BoundaryFailurePrior&) const {
      throw ConfigError("exp_boundary prior is not Condition P: no finite gamma exists");
    }
  };
  return std::visit(Visitor{epsilon, options}, prior);
}

GammaCertificate gamma_remark3prime(const Vector& alpha, double epsilon, double max_abs_phi_prime,
                                    double min_phi) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    throw ConfigError("epsilon must lie in (0, 1]");
  }
  if (alpha.size() != 2 || (alpha.array() <= 0.0).any()) {
    throw ConfigError("the closed-form gamma needs K = 2 and positive alpha");
  }
  if (!(min_phi > 0.0)) {
    throw ConfigError("min phi must be positive");
  }
  if (!(max_abs_phi_prime >= 0.0) || !std::isfinite(max_abs_phi_prime)) {
    throw ConfigError("max |phi'| must be finite and nonnegative");
  }
  const std::int64_t root =
      ceil_snapped(1.25 * (1.0 + 2.0 / epsilon) * max_abs_phi_prime / min_phi);
  GammaCertificate cert;
  cert.m_used = root * root;
  cert.gamma = alpha.sum() + static_cast<double>(cert.m_used);
  cert.epsilon = epsilon;
  cert.method = GammaMethod::kRemark3Prime;
  cert.alpha = alpha;
  return cert;
}

}  // namespace rarebayes
