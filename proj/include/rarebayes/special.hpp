#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include <Eigen/Core>

namespace rarebayes {

/// log B(beta) = sum_i lgamma(beta_i) - lgamma(sum_i beta_i).
template <typename Derived>
typename Derived::Scalar log_multivariate_beta(const Eigen::DenseBase<Derived>& beta) {
  using std::lgamma;
  typename Derived::Scalar out(0);
  for (Eigen::Index i = 0; i < beta.size(); ++i) out += lgamma(beta[i]);
  return out - lgamma(beta.sum());
}

/// log C(n, k) via log-gamma; valid for real n >= k >= 0.
inline double log_binomial_coefficient(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

/// log(exp(a) + exp(b)) without overflow.
inline double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

/// Ceiling of a quantity that is mathematically an exact formula value:
/// results within 1e-9 relative of an integer snap to that integer, so that
/// e.g. 2 / 0.1^3 evaluates to 2000 rather than 2001.
inline std::int64_t ceil_snapped(double x) {
  const double nearest = std::round(x);
  if (std::abs(x - nearest) <= 1e-9 * std::max(1.0, std::abs(x))) {
    return static_cast<std::int64_t>(nearest);
  }
  return static_cast<std::int64_t>(std::ceil(x));
}

}  // namespace rarebayes
