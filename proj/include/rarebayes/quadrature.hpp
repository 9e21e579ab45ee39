#pragma once

#include <functional>
#include <vector>

namespace rarebayes {

/// Tolerances for the one-dimensional posterior integrals.
struct QuadratureSpec {
  /// Target absolute error on a posterior mean (a ratio of two integrals).
  double abs_tol = 1e-9;
  /// Maximum number of Gauss-Kronrod intervals before giving up.
  int max_subdivisions = 10000;
};

/// Integrand on (0, 1) of the form
///
///     exp(log_factor(x)) * x^a * (1 - x)^b,     a, b > -1,
///
/// where log_factor is continuous on [0, 1] (it may tend to -inf at an
/// endpoint). Interior points where log_factor has a kink go in `knots`.
struct LogKernel {
  std::function<double(double)> log_factor;
  double a = 0.0;
  double b = 0.0;
  std::vector<double> knots;
  /// Samples used to locate the maximum before golden-section refinement.
  int peak_grid = 2048;
  /// Add breakpoints where the kernel falls below the peak by fixed log-levels.
  bool bracket_peak = true;
};

/// The two first moments int x f(x) dx and int (1 - x) f(x) dx, both scaled by
/// exp(-log_scale) so that the largest value of the smooth part is one.
struct KernelMoments {
  double mass_x = 0.0;
  double mass_one_minus_x = 0.0;
  double log_scale = 0.0;
  /// Estimated absolute error of mass_x + mass_one_minus_x (same scaling).
  double error = 0.0;
  int intervals = 0;
  bool converged = false;

  double total() const { return mass_x + mass_one_minus_x; }
  /// Ratio mass_x / total, i.e. the mean of x under the normalized kernel.
  double mean() const { return mass_x / total(); }
  /// Absolute error estimate of mean().
  double mean_error() const { return error / total(); }
};

/// Adaptive 15-point Gauss-Kronrod integration of both moments of `kernel`.
///
/// The kernel is normalized by its (numerically located) maximum before
/// integration, the initial partition brackets the peak at several
/// log-levels, and a power substitution u = x^(a+1) (or the mirror image at
/// x = 1) removes integrable endpoint singularities.
KernelMoments integrate_kernel_moments(const LogKernel& kernel, const QuadratureSpec& spec);

}  // namespace rarebayes
