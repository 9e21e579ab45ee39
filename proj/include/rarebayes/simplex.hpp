#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <vector>

#include <Eigen/Core>

namespace rarebayes {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using CountVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

/// A probability vector on the closed (K-1)-simplex, K >= 2.
///
/// All K coordinates are stored. Inputs whose sum is within 1e-9 of one are
/// renormalized; anything further off, negative, or non-finite is rejected.
class SimplexPoint {
 public:
  static constexpr double kRenormalizeTolerance = 1e-9;

  explicit SimplexPoint(const Vector& coords);
  SimplexPoint(std::initializer_list<double> coords);

  /// The point (p, 1 - p) of the 2-simplex.
  static SimplexPoint binary(double p1);

  Index size() const { return coords_.size(); }
  double operator[](Index i) const { return coords_[i]; }
  const Vector& coords() const { return coords_; }

  /// True when every coordinate is strictly positive.
  bool interior() const;

 private:
  Vector coords_;
};

/// Outcome tallies (n_1, ..., n_K) of n tosses.
class Counts {
 public:
  explicit Counts(const CountVector& tallies);
  Counts(std::initializer_list<std::int64_t> tallies);

  Index size() const { return tallies_.size(); }
  std::int64_t operator[](Index i) const { return tallies_[i]; }
  std::int64_t total() const { return total_; }
  const CountVector& tallies() const { return tallies_; }

  friend bool operator==(const Counts& a, const Counts& b) {
    return a.tallies_ == b.tallies_;
  }

 private:
  CountVector tallies_;
  std::int64_t total_ = 0;
};

/// Visits every lattice point nu / resolution of the (K-1)-simplex, i.e. every
/// nonnegative integer K-vector nu with sum equal to `resolution`, in
/// lexicographic order of (nu_1, ..., nu_{K-1}).
void for_each_composition(Index parts, std::int64_t total,
                          const std::function<void(const CountVector&)>& visit);

/// Number of compositions of `total` into `parts` nonnegative parts, C(total+parts-1, parts-1).
double composition_count(Index parts, std::int64_t total);

/// Lattice points nu / resolution as simplex points, in for_each_composition order.
std::vector<SimplexPoint> simplex_grid(Index dimension, std::int64_t resolution);

}  // namespace rarebayes
