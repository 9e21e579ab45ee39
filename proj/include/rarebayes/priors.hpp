#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rarebayes/quadrature.hpp"
#include "rarebayes/simplex.hpp"

namespace rarebayes {

/// Continuous positive factor of a prior density, evaluated on the closed simplex.
using TildePiFunction = std::function<double(const SimplexPoint&)>;

/// Tabulated values of a function on the lattice {nu / resolution} of the
/// 2- or 3-simplex, interpolated linearly (on the triangulated lattice for K = 3).
class TildePiGrid {
 public:
  TildePiGrid(Index dimension, std::int64_t resolution, std::vector<double> values);

  /// Reads a CSV file with a header row and columns p_1, ..., p_{K-1}, value.
  static TildePiGrid from_csv(const std::string& path, Index dimension);

  Index dimension() const { return dimension_; }
  std::int64_t resolution() const { return resolution_; }
  const std::vector<double>& values() const { return values_; }

  double operator()(const SimplexPoint& p) const;

 private:
  std::size_t lattice_index(std::int64_t i, std::int64_t j) const;

  Index dimension_;
  std::int64_t resolution_;
  std::vector<double> values_;
};

/// A prior whose density is tilde_pi(p) * prod_k p_k^(alpha_k - 1) with
/// tilde_pi continuous and positive on the closed simplex.
///
/// Dirichlet priors are the special case tilde_pi == 1. Instances are
/// immutable; copies share the underlying callable.
class ConditionPPrior {
 public:
  /// Grid resolution used to estimate min tilde_pi when no analytic value is known.
  static constexpr std::int64_t kDefaultMinResolution = 1024;

  static ConditionPPrior dirichlet(const Vector& alpha);

  /// Generic prior with a callable tilde_pi. When `exact_min` is given it is
  /// taken as the analytic minimum; otherwise the minimum is estimated on a
  /// lattice (labelled as an estimate). `knots` lists interior values of p_1
  /// where tilde_pi is not smooth (K = 2 only; used to seed quadrature).
  ConditionPPrior(Vector alpha, TildePiFunction tilde_pi, std::string description,
                  std::optional<double> exact_min = std::nullopt,
                  std::vector<double> knots = {});

  /// Prior whose tilde_pi is a tabulated grid.
  static ConditionPPrior from_grid(const Vector& alpha, TildePiGrid grid);

  Index dimension() const { return alpha_.size(); }
  const Vector& alpha() const { return alpha_; }
  double alpha_sum() const { return alpha_.sum(); }
  double tilde_pi(const SimplexPoint& p) const { return (*tilde_pi_)(p); }
  const TildePiFunction& tilde_pi_function() const { return *tilde_pi_; }

  bool is_dirichlet() const { return dirichlet_; }
  /// Minimum of tilde_pi over the simplex (analytic or grid estimate).
  double tilde_pi_min() const { return tilde_pi_min_; }
  bool tilde_pi_is_exact() const { return tilde_pi_is_exact_; }
  const std::vector<double>& knots() const { return knots_; }
  const std::string& description() const { return description_; }

 private:
  ConditionPPrior() = default;

  Vector alpha_;
  std::shared_ptr<const TildePiFunction> tilde_pi_;
  std::string description_;
  double tilde_pi_min_ = 1.0;
  bool tilde_pi_is_exact_ = true;
  bool dirichlet_ = false;
  std::vector<double> knots_;
};

/// Finite mixture sum_j w_j Dirichlet(params_j).
class DirichletMixturePrior {
 public:
  DirichletMixturePrior(Vector weights, std::vector<Vector> params,
                        std::optional<std::pair<double, double>> support_box = std::nullopt);

  Index dimension() const { return params_.front().size(); }
  Index components() const { return weights_.size(); }
  const Vector& weights() const { return weights_; }
  const std::vector<Vector>& params() const { return params_; }
  const std::optional<std::pair<double, double>>& support_box() const { return support_box_; }

  /// Componentwise minimum of the parameters: the boundary exponents of the mixture.
  Vector min_params() const;
  /// Largest total concentration sum_i params_j[i] over components.
  double max_concentration() const;

 private:
  Vector weights_;
  std::vector<Vector> params_;
  std::optional<std::pair<double, double>> support_box_;
};

/// The density proportional to exp(-1/p_1) on the 2-simplex, which decays
/// faster than any power at p_1 = 0.
struct BoundaryFailurePrior {
  Index dimension() const { return 2; }
};

using Prior = std::variant<ConditionPPrior, DirichletMixturePrior, BoundaryFailurePrior>;

Index prior_dimension(const Prior& prior);
std::string prior_name(const Prior& prior);

struct DensityValue {
  double value;
  /// False when `value` is an unnormalized kernel.
  bool normalized;
};

/// Prior density (or its unnormalized kernel) at p. Throws ConfigError for a
/// boundary point where the density is unbounded.
DensityValue eval_density(const Prior& prior, const SimplexPoint& p);

enum class ConditionVerdict { kYes, kNo, kNumericOnly };

std::string to_string(ConditionVerdict verdict);

struct ConditionReport {
  ConditionVerdict verdict;
  /// Boundary exponents (empty for a "no" verdict without a natural candidate).
  Vector alpha;
  /// Minimum of tilde_pi found on the lattice (or analytic when exact).
  double tilde_pi_min_estimate;
  /// Largest change of tilde_pi between neighbouring lattice points.
  double modulus_estimate;
  std::string note;
};

ConditionReport classify_condition_p(const Prior& prior, std::int64_t grid_resolution);

/// Continuous extension of the mixture density divided by prod p_k^(alpha_k-1),
/// alpha = min_params(), including boundary points.
double mixture_tilde_pi(const DirichletMixturePrior& prior, const SimplexPoint& p);

struct InduceSpec {
  /// Lattice resolution of the tabulated induced tilde_pi.
  std::int64_t resolution = 1024;
  QuadratureSpec quadrature{1e-10, 2000};
};

struct InducedPrior {
  ConditionPPrior prior;
  /// Largest relative error estimate over the tabulated nodes.
  double max_relative_error;
  bool converged;
};

/// Prior on (p_kbar, sum_{k != kbar} p_k) induced by the map from the K-simplex.
///
/// The result satisfies Condition P(alpha_kbar, sum_{k != kbar} alpha_k); its
/// tilde_pi is tabulated by nested quadrature over the remaining coordinates.
InducedPrior induce_two_sided(const ConditionPPrior& prior, Index kbar, const InduceSpec& spec = {});

}  // namespace rarebayes
