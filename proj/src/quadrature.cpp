#include "rarebayes/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "rarebayes/error.hpp"

namespace rarebayes {
namespace {

using Pair = Eigen::Array2d;

// QUADPACK qk15 abscissae and weights.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

enum class Mapping { kPlain, kLeftPower, kRightPower };

struct Interval {
  double lo;
  double hi;
  Mapping mapping;
  Pair value;
  double error;

  bool operator<(const Interval& other) const { return error < other.error; }
};

class KernelIntegrator {
 public:
  KernelIntegrator(const LogKernel& kernel)
      : kernel_(kernel),
        pos_a_(std::max(kernel.a, 0.0)),
        pos_b_(std::max(kernel.b, 0.0)),
        neg_a_(std::min(kernel.a, 0.0)),
        neg_b_(std::min(kernel.b, 0.0)) {}

  // Smooth (non-singular) part of the log integrand.
  double regular(double x, double omx) const {
    double v = kernel_.log_factor(x);
    if (pos_a_ > 0.0) v += pos_a_ * std::log(x);
    if (pos_b_ > 0.0) v += pos_b_ * std::log(omx);
    return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
  }
  double regular(double x) const { return regular(x, 1.0 - x); }

  void locate_peak() {
    std::vector<double> xs;
    const int grid = std::max(kernel_.peak_grid, 2);
    for (int i = 0; i <= grid; ++i) xs.push_back(static_cast<double>(i) / grid);
    for (int j = 3; j <= 15; ++j) {
      xs.push_back(std::pow(10.0, -j));
      xs.push_back(1.0 - std::pow(10.0, -j));
    }
    if (pos_a_ > 0.0 && pos_b_ > 0.0) xs.push_back(pos_a_ / (pos_a_ + pos_b_));
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

    std::size_t best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double v = regular(xs[i]);
      if (v > best_value) {
        best_value = v;
        best = i;
      }
    }
    if (!std::isfinite(best_value)) {
      throw ConvergenceError("kernel vanishes on the whole sampling grid");
    }
    // Golden-section refinement between the neighbouring samples.
    double lo = xs[best == 0 ? 0 : best - 1];
    double hi = xs[std::min(best + 1, xs.size() - 1)];
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - ratio * (hi - lo);
    double x2 = lo + ratio * (hi - lo);
    double f1 = regular(x1);
    double f2 = regular(x2);
    for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(hi, 1e-300); ++it) {
      if (f1 < f2) {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + ratio * (hi - lo);
        f2 = regular(x2);
      } else {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - ratio * (hi - lo);
        f1 = regular(x1);
      }
    }
    peak_ = xs[best];
    log_scale_ = best_value;
    for (const double x : {x1, x2}) {
      const double v = regular(x);
      if (v > log_scale_) {
        log_scale_ = v;
        peak_ = x;
      }
    }
  }

  // Point on [from, peak] (from = 0 or 1) where regular() - log_scale == level.
  std::optional<double> crossing(double from, double level) const {
    const double edge = regular(from) - log_scale_;
    if (edge >= level) return std::nullopt;
    double outside = from;
    double inside = peak_;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (outside + inside);
      if (mid == outside || mid == inside) break;
      if (regular(mid) - log_scale_ >= level) {
        inside = mid;
      } else {
        outside = mid;
      }
    }
    return inside;
  }

  std::vector<double> breakpoints() const {
    std::vector<double> pts = {0.0, 0.5, 1.0, peak_};
    if (kernel_.bracket_peak) {
      for (const double level : {-1.0, -4.0, -10.0, -25.0, -50.0, -80.0}) {
        if (auto x = crossing(0.0, level)) pts.push_back(*x);
        if (auto x = crossing(1.0, level)) pts.push_back(*x);
      }
    }
    for (const double k : kernel_.knots) {
      if (k > 0.0 && k < 1.0) pts.push_back(k);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
  }

  // (x, 1 - x) weighted integrand in the integration variable t of `mapping`.
  Pair integrand(double t, Mapping mapping) const {
    double x = t;
    double omx = 1.0 - t;
    double jac = 1.0;
    double singular = 0.0;  // log of the non-substituted singular power
    switch (mapping) {
      case Mapping::kPlain:
        if (neg_a_ < 0.0) singular += neg_a_ * std::log(x);
        if (neg_b_ < 0.0) singular += neg_b_ * std::log(omx);
        break;
      case Mapping::kLeftPower: {
        const double s = kernel_.a + 1.0;
        x = std::pow(t, 1.0 / s);
        omx = 1.0 - x;
        jac = 1.0 / s;
        if (neg_b_ < 0.0) singular += neg_b_ * std::log(omx);
        break;
      }
      case Mapping::kRightPower: {
        const double s = kernel_.b + 1.0;
        omx = std::pow(t, 1.0 / s);
        x = 1.0 - omx;
        jac = 1.0 / s;
        if (neg_a_ < 0.0) singular += neg_a_ * std::log(x);
        break;
      }
    }
    const double w = jac * std::exp(regular(x, omx) - log_scale_ + singular);
    if (!std::isfinite(w)) return Pair::Zero();
    return Pair(x * w, omx * w);
  }

  Interval rule(double lo, double hi, Mapping mapping) const {
    const double center = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    Pair kronrod = kWgk[7] * integrand(center, mapping);
    Pair gauss = kWg[3] * integrand(center, mapping);
    for (int j = 0; j < 7; ++j) {
      const double dx = half * kXgk[j];
      const Pair sum = integrand(center - dx, mapping) + integrand(center + dx, mapping);
      kronrod += kWgk[j] * sum;
      if (j % 2 == 1) gauss += kWg[j / 2] * sum;
    }
    kronrod *= half;
    gauss *= half;
    return Interval{lo, hi, mapping, kronrod, (kronrod - gauss).abs().sum()};
  }

  KernelMoments run(const QuadratureSpec& spec) {
    locate_peak();
    const std::vector<double> pts = breakpoints();
    std::priority_queue<Interval> queue;
    const std::size_t last = pts.size() - 2;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      double lo = pts[i];
      double hi = pts[i + 1];
      Mapping mapping = Mapping::kPlain;
      if (i == 0 && kernel_.a < 0.0) {
        mapping = Mapping::kLeftPower;
        hi = std::pow(hi, kernel_.a + 1.0);
      } else if (i == last && kernel_.b < 0.0) {
        mapping = Mapping::kRightPower;
        lo = 0.0;
        hi = std::pow(1.0 - pts[i], kernel_.b + 1.0);
      }
      queue.push(rule(lo, hi, mapping));
    }

    auto totals = [&queue]() {
      Pair value = Pair::Zero();
      double error = 0.0;
      auto copy = queue;
      while (!copy.empty()) {
        value += copy.top().value;
        error += copy.top().error;
        copy.pop();
      }
      return std::pair{value, error};
    };

    auto [value, error] = totals();
    int intervals = static_cast<int>(queue.size());
    const double target = 0.1 * spec.abs_tol;
    while (error > target * value.sum() && intervals < spec.max_subdivisions) {
      const Interval worst = queue.top();
      const double mid = 0.5 * (worst.lo + worst.hi);
      if (mid <= worst.lo || mid >= worst.hi) break;  // at floating-point resolution
      queue.pop();
      const Interval left = rule(worst.lo, mid, worst.mapping);
      const Interval right = rule(mid, worst.hi, worst.mapping);
      value += left.value + right.value - worst.value;
      error += left.error + right.error - worst.error;
      queue.push(left);
      queue.push(right);
      ++intervals;
    }
    std::tie(value, error) = totals();

    KernelMoments out;
    out.mass_x = value[0];
    out.mass_one_minus_x = value[1];
    out.log_scale = log_scale_;
    out.error = error;
    out.intervals = intervals;
    out.converged = out.total() > 0.0 && out.mean_error() <= spec.abs_tol;
    return out;
  }

 private:
  const LogKernel& kernel_;
  double pos_a_;
  double pos_b_;
  double neg_a_;
  double neg_b_;
  double peak_ = 0.5;
  double log_scale_ = 0.0;
};

}  // namespace

KernelMoments integrate_kernel_moments(const LogKernel& kernel, const QuadratureSpec& spec) {
  if (!(kernel.a > -1.0) || !(kernel.b > -1.0)) {
    throw ConfigError("kernel exponents must exceed -1 for integrability");
  }
  KernelIntegrator integrator(kernel);
  return integrator.run(spec);
}

}  // namespace rarebayes
