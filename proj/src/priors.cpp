#include "rarebayes/priors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "rarebayes/error.hpp"
#include "rarebayes/special.hpp"

namespace rarebayes {

// ---------------------------------------------------------------------------
// TildePiGrid

TildePiGrid::TildePiGrid(Index dimension, std::int64_t resolution, std::vector<double> values)
    : dimension_(dimension), resolution_(resolution), values_(std::move(values)) {
  if (dimension_ != 2 && dimension_ != 3) {
    throw ConfigError("tabulated tilde_pi supports K = 2 or K = 3");
  }
  if (resolution_ < 1) {
    throw ConfigError("grid resolution must be positive");
  }
  const auto expected = static_cast<std::size_t>(composition_count(dimension_, resolution_));
  if (values_.size() != expected) {
    throw ConfigError("grid has " + std::to_string(values_.size()) + " values, expected " +
                      std::to_string(expected));
  }
  for (const double v : values_) {
    if (!std::isfinite(v) || v < 0.0) {
      throw ConfigError("grid values must be finite and nonnegative");
    }
  }
}

std::size_t TildePiGrid::lattice_index(std::int64_t i, std::int64_t j) const {
  // Row i of the triangular table holds j = 0..R-i.
  const std::int64_t offset = i * (resolution_ + 1) - i * (i - 1) / 2;
  return static_cast<std::size_t>(offset + j);
}

double TildePiGrid::operator()(const SimplexPoint& p) const {
  if (p.size() != dimension_) {
    throw ConfigError("grid dimension mismatch");
  }
  const auto r = static_cast<double>(resolution_);
  if (dimension_ == 2) {
    const double x = p[0] * r;
    const auto i = std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(x)), resolution_ - 1);
    const double f = x - static_cast<double>(i);
    // Values are stored by nu_1 = 0..R (for_each_composition order).
    return (1.0 - f) * values_[static_cast<std::size_t>(i)] +
           f * values_[static_cast<std::size_t>(i + 1)];
  }
  const double x = p[0] * r;
  const double y = p[1] * r;
  auto i = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(x)), 0, resolution_);
  auto j = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(y)), 0, resolution_ - i);
  if (i + j == resolution_) {
    // On the outer edge: step back into the last full cell.
    if (j > 0) {
      --j;
    } else {
      --i;
    }
  }
  const double fx = x - static_cast<double>(i);
  const double fy = y - static_cast<double>(j);
  const double v00 = values_[lattice_index(i, j)];
  const double v10 = values_[lattice_index(i + 1, j)];
  const double v01 = values_[lattice_index(i, j + 1)];
  if (fx + fy <= 1.0 || i + j + 2 > resolution_) {
    return v00 + fx * (v10 - v00) + fy * (v01 - v00);
  }
  const double v11 = values_[lattice_index(i + 1, j + 1)];
  return v11 + (1.0 - fx) * (v01 - v11) + (1.0 - fy) * (v10 - v11);
}

TildePiGrid TildePiGrid::from_csv(const std::string& path, Index dimension) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open grid file " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw ConfigError("grid file " + path + " is empty");
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError("grid file " + path + ": bad number '" + cell + "'");
      }
    }
    if (static_cast<Index>(row.size()) != dimension) {
      throw ConfigError("grid file " + path + ": expected " + std::to_string(dimension) +
                        " columns");
    }
    rows.push_back(std::move(row));
  }
  std::int64_t resolution = 0;
  if (dimension == 2) {
    resolution = static_cast<std::int64_t>(rows.size()) - 1;
  } else if (dimension == 3) {
    const double r = (-3.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(rows.size()))) / 2.0;
    resolution = std::llround(r);
  } else {
    throw ConfigError("grid files support K = 2 or K = 3");
  }
  if (resolution < 1 ||
      static_cast<double>(rows.size()) != composition_count(dimension, resolution)) {
    throw ConfigError("grid file " + path + " does not hold a full lattice");
  }
  // A zero-filled grid supplies the lattice indexing; values are validated on construction.
  const TildePiGrid layout(dimension, resolution, std::vector<double>(rows.size(), 0.0));
  std::vector<double> values(rows.size(), std::numeric_limits<double>::quiet_NaN());
  const auto r = static_cast<double>(resolution);
  for (const auto& row : rows) {
    std::vector<std::int64_t> idx;
    for (Index d = 0; d + 1 < dimension; ++d) {
      const double scaled = row[static_cast<std::size_t>(d)] * r;
      const std::int64_t k = std::llround(scaled);
      if (std::abs(scaled - static_cast<double>(k)) > 1e-6 || k < 0) {
        throw ConfigError("grid file " + path + ": point off the lattice");
      }
      idx.push_back(k);
    }
    std::size_t at;
    if (dimension == 2) {
      at = static_cast<std::size_t>(idx[0]);
    } else {
      if (idx[0] + idx[1] > resolution) {
        throw ConfigError("grid file " + path + ": point outside the simplex");
      }
      at = layout.lattice_index(idx[0], idx[1]);
    }
    const double v = row.back();
    if (!std::isfinite(v) || v < 0.0) {
      throw ConfigError("grid file " + path + ": values must be finite and nonnegative");
    }
    if (!std::isnan(values[at])) {
      throw ConfigError("grid file " + path + ": duplicate lattice point");
    }
    values[at] = v;
  }
  return TildePiGrid(dimension, resolution, std::move(values));
}

// ---------------------------------------------------------------------------
// ConditionPPrior

namespace {

void check_alpha(const Vector& alpha) {
  if (alpha.size() < 2) {
    throw ConfigError("alpha needs at least two entries");
  }
  for (Index i = 0; i < alpha.size(); ++i) {
    if (!std::isfinite(alpha[i]) || alpha[i] <= 0.0) {
      throw ConfigError("alpha entries must be positive");
    }
  }
}

std::int64_t default_resolution(Index dimension) {
  if (dimension == 2) return ConditionPPrior::kDefaultMinResolution;
  if (dimension == 3) return 256;
  std::int64_t r = 4;
  while (composition_count(dimension, r + 1) <= 2e5) ++r;
  return r;
}

double lattice_min(const TildePiFunction& f, Index dimension, std::int64_t resolution) {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& p : simplex_grid(dimension, resolution)) {
    lo = std::min(lo, f(p));
  }
  return lo;
}

}  // namespace

ConditionPPrior ConditionPPrior::dirichlet(const Vector& alpha) {
  check_alpha(alpha);
  ConditionPPrior prior;
  prior.alpha_ = alpha;
  prior.tilde_pi_ = std::make_shared<const TildePiFunction>([](const SimplexPoint&) { return 1.0; });
  std::ostringstream name;
  name << "dirichlet(" << alpha.transpose() << ")";
  prior.description_ = name.str();
  prior.tilde_pi_min_ = 1.0;
  prior.tilde_pi_is_exact_ = true;
  prior.dirichlet_ = true;
  return prior;
}

ConditionPPrior::ConditionPPrior(Vector alpha, TildePiFunction tilde_pi, std::string description,
                                 std::optional<double> exact_min, std::vector<double> knots)
    : alpha_(std::move(alpha)),
      tilde_pi_(std::make_shared<const TildePiFunction>(std::move(tilde_pi))),
      description_(std::move(description)),
      knots_(std::move(knots)) {
  check_alpha(alpha_);
  if (!knots_.empty() && alpha_.size() != 2) {
    throw ConfigError("quadrature knots are only meaningful for K = 2");
  }
  if (exact_min) {
    tilde_pi_min_ = *exact_min;
    tilde_pi_is_exact_ = true;
  } else {
    tilde_pi_min_ = lattice_min(*tilde_pi_, alpha_.size(), default_resolution(alpha_.size()));
    tilde_pi_is_exact_ = false;
  }
}

ConditionPPrior ConditionPPrior::from_grid(const Vector& alpha, TildePiGrid grid) {
  if (alpha.size() != grid.dimension()) {
    throw ConfigError("alpha and grid dimensions differ");
  }
  std::vector<double> knots;
  if (grid.dimension() == 2) {
    for (std::int64_t i = 1; i < grid.resolution(); ++i) {
      knots.push_back(static_cast<double>(i) / static_cast<double>(grid.resolution()));
    }
  }
  const double min_value = *std::min_element(grid.values().begin(), grid.values().end());
  std::ostringstream name;
  name << "grid(K=" << grid.dimension() << ", R=" << grid.resolution() << ")";
  auto shared = std::make_shared<const TildePiGrid>(std::move(grid));
  ConditionPPrior prior(alpha, [shared](const SimplexPoint& p) { return (*shared)(p); }, name.str(),
                        min_value, std::move(knots));
  // The node minimum of a sampled function is an estimate of the true infimum.
  prior.tilde_pi_is_exact_ = false;
  return prior;
}

// ---------------------------------------------------------------------------
// DirichletMixturePrior

DirichletMixturePrior::DirichletMixturePrior(Vector weights, std::vector<Vector> params,
                                             std::optional<std::pair<double, double>> support_box)
    : weights_(std::move(weights)), params_(std::move(params)), support_box_(support_box) {
  if (weights_.size() == 0 || static_cast<std::size_t>(weights_.size()) != params_.size()) {
    throw ConfigError("mixture needs one parameter vector per weight");
  }
  if ((weights_.array() <= 0.0).any() || !weights_.allFinite()) {
    throw ConfigError("mixture weights must be positive");
  }
  const double total = weights_.sum();
  if (std::abs(total - 1.0) > SimplexPoint::kRenormalizeTolerance) {
    throw ConfigError("mixture weights must sum to one");
  }
  weights_ /= total;
  for (const auto& beta : params_) {
    check_alpha(beta);
    if (beta.size() != params_.front().size()) {
      throw ConfigError("mixture components must share the dimension");
    }
  }
  if (support_box_) {
    const auto [a, big_a] = *support_box_;
    if (!(a >= 0.0) || !(big_a >= a) || !std::isfinite(big_a)) {
      throw ConfigError("support box must satisfy 0 <= a <= A < inf");
    }
    for (const auto& beta : params_) {
      if ((beta.array() < a).any() || (beta.array() > big_a).any()) {
        throw ConfigError("mixture parameter outside the support box");
      }
    }
  }
}

Vector DirichletMixturePrior::min_params() const {
  Vector out = params_.front();
  for (const auto& beta : params_) out = out.cwiseMin(beta);
  return out;
}

double DirichletMixturePrior::max_concentration() const {
  double out = 0.0;
  for (const auto& beta : params_) out = std::max(out, beta.sum());
  return out;
}

double mixture_tilde_pi(const DirichletMixturePrior& prior, const SimplexPoint& p) {
  if (p.size() != prior.dimension()) {
    throw ConfigError("point dimension does not match the prior");
  }
  const Vector alpha = prior.min_params();
  double total = 0.0;
  for (Index j = 0; j < prior.components(); ++j) {
    const Vector& beta = prior.params()[static_cast<std::size_t>(j)];
    double log_term = std::log(prior.weights()[j]) - log_multivariate_beta(beta);
    for (Index k = 0; k < beta.size(); ++k) {
      const double e = beta[k] - alpha[k];
      if (e != 0.0) log_term += e * std::log(p[k]);
    }
    total += std::exp(log_term);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Free functions

Index prior_dimension(const Prior& prior) {
  return std::visit([](const auto& p) { return p.dimension(); }, prior);
}

std::string prior_name(const Prior& prior) {
  struct Visitor {
    std::string operator()(const ConditionPPrior& p) const { return p.description(); }
    std::string operator()(const DirichletMixturePrior& p) const {
      return "dirichlet_mixture(" + std::to_string(p.components()) + " components)";
    }
    std::string operator()(const BoundaryFailurePrior&) const { return "exp_boundary"; }
  };
  return std::visit(Visitor{}, prior);
}

namespace {

void check_point(const SimplexPoint& p, Index dimension) {
  if (p.size() != dimension) {
    throw ConfigError("point dimension does not match the prior");
  }
}

// log prod p_k^(e_k) with the convention 0^0 = 1; throws when unbounded.
double log_power_product(const SimplexPoint& p, const Vector& exponents) {
  double out = 0.0;
  for (Index k = 0; k < exponents.size(); ++k) {
    if (exponents[k] == 0.0) continue;
    if (p[k] == 0.0 && exponents[k] < 0.0) {
      throw ConfigError("density is unbounded at this boundary point");
    }
    out += exponents[k] * std::log(p[k]);
  }
  return out;
}

}  // namespace

DensityValue eval_density(const Prior& prior, const SimplexPoint& p) {
  struct Visitor {
    const SimplexPoint& p;
    DensityValue operator()(const ConditionPPrior& prior) const {
      check_point(p, prior.dimension());
      const double log_power = log_power_product(p, prior.alpha().array() - 1.0);
      const double factor = prior.tilde_pi(p);
      if (!std::isfinite(factor) || factor < 0.0) {
        throw ConfigError("tilde_pi returned a negative or non-finite value");
      }
      return {factor * std::exp(log_power), false};
    }
    DensityValue operator()(const DirichletMixturePrior& prior) const {
      check_point(p, prior.dimension());
      double total = 0.0;
      for (Index j = 0; j < prior.components(); ++j) {
        const Vector& beta = prior.params()[static_cast<std::size_t>(j)];
        total += prior.weights()[j] *
                 std::exp(log_power_product(p, beta.array() - 1.0) - log_multivariate_beta(beta));
      }
      return {total, true};
    }
    DensityValue operator()(const BoundaryFailurePrior&) const {
      check_point(p, 2);
      if (!p.interior()) {
        throw ConfigError("exp_boundary density is evaluated on the open simplex only");
      }
      return {std::exp(-1.0 / p[0]), false};
    }
  };
  return std::visit(Visitor{p}, prior);
}

std::string to_string(ConditionVerdict verdict) {
  switch (verdict) {
    case ConditionVerdict::kYes:
      return "yes";
    case ConditionVerdict::kNo:
      return "no";
    case ConditionVerdict::kNumericOnly:
      return "numeric-only";
  }
  return "unknown";
}

namespace {

struct LatticeScan {
  double min = std::numeric_limits<double>::infinity();
  double modulus = 0.0;
  bool finite = true;
};

// Minimum and largest neighbour difference of f on the lattice nu / resolution.
LatticeScan scan_lattice(const TildePiFunction& f, Index dimension, std::int64_t resolution) {
  std::map<std::vector<std::int64_t>, double> values;
  const double scale = 1.0 / static_cast<double>(resolution);
  LatticeScan scan;
  for_each_composition(dimension, resolution, [&](const CountVector& nu) {
    const double v = f(SimplexPoint(nu.cast<double>() * scale));
    if (!std::isfinite(v)) scan.finite = false;
    scan.min = std::min(scan.min, v);
    values.emplace(std::vector<std::int64_t>(nu.data(), nu.data() + nu.size()), v);
  });
  // Neighbours differ by moving one unit of mass from coordinate l to coordinate k.
  for (const auto& [nu, v] : values) {
    for (Index k = 0; k < dimension; ++k) {
      for (Index l = 0; l < dimension; ++l) {
        if (k == l || nu[static_cast<std::size_t>(l)] == 0) continue;
        auto other = nu;
        ++other[static_cast<std::size_t>(k)];
        --other[static_cast<std::size_t>(l)];
        const auto it = values.find(other);
        if (it != values.end()) scan.modulus = std::max(scan.modulus, std::abs(it->second - v));
      }
    }
  }
  return scan;
}

}  // namespace

ConditionReport classify_condition_p(const Prior& prior, std::int64_t grid_resolution) {
  if (grid_resolution < 1) {
    throw ConfigError("grid resolution must be positive");
  }
  struct Visitor {
    std::int64_t resolution;
    ConditionReport operator()(const ConditionPPrior& p) const {
      if (p.is_dirichlet()) {
        return {ConditionVerdict::kYes, p.alpha(), p.tilde_pi_min(), 0.0,
                "Dirichlet density: tilde_pi is constant"};
      }
      const auto scan = scan_lattice(p.tilde_pi_function(), p.dimension(), resolution);
      if (!scan.finite || !(scan.min > 0.0)) {
        return {ConditionVerdict::kNo, p.alpha(), scan.min, scan.modulus,
                "tilde_pi is not bounded away from zero on the lattice"};
      }
      return {ConditionVerdict::kNumericOnly, p.alpha(), scan.min, scan.modulus,
              "lattice estimate only; positivity and continuity are not certified"};
    }
    ConditionReport operator()(const DirichletMixturePrior& p) const {
      const auto scan = scan_lattice(
          [&p](const SimplexPoint& x) { return mixture_tilde_pi(p, x); }, p.dimension(),
          resolution);
      return {ConditionVerdict::kYes, p.min_params(), scan.min, scan.modulus,
              "finite Dirichlet mixture with positive parameters"};
    }
    ConditionReport operator()(const BoundaryFailurePrior&) const {
      return {ConditionVerdict::kNo, Vector(), 0.0, 0.0,
              "exponential boundary decay: exp(-1/p_1) vanishes faster than any power of p_1"};
    }
  };
  return std::visit(Visitor{grid_resolution}, prior);
}

// ---------------------------------------------------------------------------
// induce_two_sided

namespace {

// log of int_{simplex} g(w) prod_j w_j^(beta_j - 1) dw (Lebesgue measure on the
// first m-1 coordinates), by nested stick-breaking quadrature.
double log_simplex_integral(const std::function<double(const Vector&)>& g, const Vector& beta,
                            const QuadratureSpec& spec, double& worst_relative_error) {
  const Index m = beta.size();
  LogKernel kernel;
  kernel.peak_grid = 32;
  kernel.bracket_peak = false;
  kernel.a = beta[0] - 1.0;
  if (m == 2) {
    kernel.b = beta[1] - 1.0;
    kernel.log_factor = [&g](double s) {
      Vector w(2);
      w << s, 1.0 - s;
      return std::log(g(w));
    };
  } else {
    const Vector tail = beta.tail(m - 1);
    kernel.b = tail.sum() - 1.0;
    kernel.log_factor = [&g, tail, &spec, &worst_relative_error](double s) {
      auto inner = [&g, s](const Vector& w_tail) {
        Vector w(w_tail.size() + 1);
        w[0] = s;
        w.tail(w_tail.size()) = (1.0 - s) * w_tail;
        return g(w);
      };
      return log_simplex_integral(inner, tail, spec, worst_relative_error);
    };
  }
  const KernelMoments moments = integrate_kernel_moments(kernel, spec);
  const double total = moments.total();
  if (!(total > 0.0)) {
    return -std::numeric_limits<double>::infinity();
  }
  worst_relative_error = std::max(worst_relative_error, moments.error / total);
  return std::log(total) + moments.log_scale;
}

}  // namespace

InducedPrior induce_two_sided(const ConditionPPrior& prior, Index kbar, const InduceSpec& spec) {
  const Index dim = prior.dimension();
  if (dim <= 2) {
    throw ConfigError("induce_two_sided needs K > 2");
  }
  if (kbar < 0 || kbar >= dim) {
    throw ConfigError("side index out of range");
  }
  if (spec.resolution < 2) {
    throw ConfigError("induced grid resolution must be at least 2");
  }
  Vector rest_alpha(dim - 1);
  for (Index k = 0, r = 0; k < dim; ++k) {
    if (k != kbar) rest_alpha[r++] = prior.alpha()[k];
  }

  std::vector<double> log_values;
  log_values.reserve(static_cast<std::size_t>(spec.resolution + 1));
  double worst_error = 0.0;
  for (std::int64_t i = 0; i <= spec.resolution; ++i) {
    const double q1 = static_cast<double>(i) / static_cast<double>(spec.resolution);
    const double q2 = 1.0 - q1;
    auto g = [&](const Vector& w) {
      Vector p(dim);
      for (Index k = 0, r = 0; k < dim; ++k) {
        p[k] = (k == kbar) ? q1 : q2 * w[r++];
      }
      return prior.tilde_pi(SimplexPoint(p));
    };
    log_values.push_back(log_simplex_integral(g, rest_alpha, spec.quadrature, worst_error));
  }
  const double top = *std::max_element(log_values.begin(), log_values.end());
  std::vector<double> values;
  values.reserve(log_values.size());
  for (const double v : log_values) values.push_back(std::exp(v - top));

  Vector alpha2(2);
  alpha2 << prior.alpha()[kbar], rest_alpha.sum();
  InducedPrior out{ConditionPPrior::from_grid(alpha2, TildePiGrid(2, spec.resolution, values)),
                   worst_error, worst_error <= spec.quadrature.abs_tol};
  return out;
}

}  // namespace rarebayes
