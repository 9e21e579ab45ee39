#include "rarebayes/simplex.hpp"

#include <cmath>
#include <string>

#include "rarebayes/error.hpp"

namespace rarebayes {

SimplexPoint::SimplexPoint(const Vector& coords) : coords_(coords) {
  if (coords_.size() < 2) {
    throw ConfigError("simplex point needs at least two coordinates");
  }
  for (Index i = 0; i < coords_.size(); ++i) {
    if (!std::isfinite(coords_[i]) || coords_[i] < 0.0 || coords_[i] > 1.0) {
      throw ConfigError("simplex coordinate " + std::to_string(i) +
                        " outside [0, 1]");
    }
  }
  const double sum = coords_.sum();
  if (std::abs(sum - 1.0) > kRenormalizeTolerance) {
    throw ConfigError("simplex coordinates sum to " + std::to_string(sum));
  }
  coords_ /= sum;
}

SimplexPoint::SimplexPoint(std::initializer_list<double> coords)
    : SimplexPoint(Eigen::Map<const Vector>(coords.begin(),
                                            static_cast<Index>(coords.size()))) {}

SimplexPoint SimplexPoint::binary(double p1) {
  Vector v(2);
  v << p1, 1.0 - p1;
  return SimplexPoint(v);
}

bool SimplexPoint::interior() const { return (coords_.array() > 0.0).all(); }

Counts::Counts(const CountVector& tallies) : tallies_(tallies) {
  if (tallies_.size() < 2) {
    throw ConfigError("counts need at least two sides");
  }
  if ((tallies_.array() < 0).any()) {
    throw ConfigError("counts must be nonnegative");
  }
  total_ = tallies_.sum();
}

Counts::Counts(std::initializer_list<std::int64_t> tallies)
    : Counts(Eigen::Map<const CountVector>(tallies.begin(),
                                           static_cast<Index>(tallies.size()))) {}

namespace {

void compose(CountVector& nu, Index pos, std::int64_t remaining,
             const std::function<void(const CountVector&)>& visit) {
  if (pos == nu.size() - 1) {
    nu[pos] = remaining;
    visit(nu);
    return;
  }
  for (std::int64_t v = 0; v <= remaining; ++v) {
    nu[pos] = v;
    compose(nu, pos + 1, remaining - v, visit);
  }
}

}  // namespace

void for_each_composition(Index parts, std::int64_t total,
                          const std::function<void(const CountVector&)>& visit) {
  if (parts < 1 || total < 0) {
    throw ConfigError("composition needs parts >= 1 and total >= 0");
  }
  CountVector nu = CountVector::Zero(parts);
  compose(nu, 0, total, visit);
}

double composition_count(Index parts, std::int64_t total) {
  const double n = static_cast<double>(total + parts - 1);
  const double k = static_cast<double>(parts - 1);
  return std::round(std::exp(std::lgamma(n + 1) - std::lgamma(k + 1) -
                             std::lgamma(n - k + 1)));
}

std::vector<SimplexPoint> simplex_grid(Index dimension, std::int64_t resolution) {
  if (resolution < 1) {
    throw ConfigError("grid resolution must be positive");
  }
  std::vector<SimplexPoint> points;
  points.reserve(static_cast<std::size_t>(composition_count(dimension, resolution)));
  const double scale = 1.0 / static_cast<double>(resolution);
  for_each_composition(dimension, resolution, [&](const CountVector& nu) {
    points.emplace_back(nu.cast<double>() * scale);
  });
  return points;
}

}  // namespace rarebayes
