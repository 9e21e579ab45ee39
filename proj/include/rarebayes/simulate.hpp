#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rarebayes/bernstein.hpp"
#include "rarebayes/posterior.hpp"
#include "rarebayes/priors.hpp"
#include "rarebayes/simplex.hpp"

namespace rarebayes {

using Json = nlohmann::ordered_json;
using Rng = std::mt19937_64;

/// Seed of replication `rep` of work stream `stream` under master seed `seed`.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t rep);

/// Multinomial draw of n tosses, by sequential conditional binomials.
Counts sample_counts(const SimplexPoint& p, std::int64_t n, Rng& rng);

inline constexpr double kZ95 = 1.959963984540054;
inline constexpr double kZ99 = 2.5758293035489004;

struct WilsonInterval {
  double lo;
  double hi;
};

WilsonInterval wilson_interval(std::int64_t successes, std::int64_t trials, double z = kZ95);

struct RunOptions {
  std::uint64_t seed = 0;
  /// Worker threads; results do not depend on it.
  int jobs = 1;
  /// Run even when a theorem precondition fails, labelling the result exploratory.
  bool exploratory = false;
};

/// Runs body(rep, rng) for rep = 0..reps-1 on `jobs` threads, each with its own
/// stream, and returns the outcomes in replication order.
std::vector<std::uint8_t> run_replications(
    std::int64_t reps, const RunOptions& options, std::uint64_t stream,
    const std::function<std::uint8_t(std::int64_t, Rng&)>& body);

struct ExperimentResult {
  std::string label;
  std::int64_t replications = 0;
  /// Count of the event named by `event`.
  std::int64_t successes = 0;
  double empirical_rate = 0.0;
  WilsonInterval wilson_ci_95{0.0, 1.0};
  std::uint64_t seed = 0;
  /// Wall time; reported in the run manifest only, never in result files.
  std::int64_t runtime_ms = 0;
  /// Event whose frequency is counted, e.g. "failure" or "success".
  std::string event;
  /// False when run outside the theorem's preconditions.
  bool theorem_check = true;
  bool pass = false;
  Json details = Json::object();
};

ExperimentResult make_result(std::string label, std::string event, std::int64_t successes,
                             std::int64_t replications, std::uint64_t seed);

struct Theorem1Point {
  std::int64_t n;
  SimplexPoint p;
};

/// Failure event |p_hat_k - p_k| >= eps p_k at each grid point. A point passes
/// when the Wilson lower bound of the failure rate is at most eps.
std::vector<ExperimentResult> verify_theorem1(const Prior& prior, Index k, double epsilon,
                                              std::int64_t N,
                                              const std::vector<Theorem1Point>& grid,
                                              std::int64_t reps, const RunOptions& options);

struct TwoDiceParams {
  SimplexPoint p;
  SimplexPoint q;
  Index kbar = 0;
  double c = 1.0;
};

class ChoiceSchedule {
 public:
  enum class Kind { kAlternating, kSequence, kIid };

  /// Red first, then blue, repeating: b_n = floor(n / 2).
  static ChoiceSchedule alternating();
  /// Explicit blue (true) / red (false) sequence of length at least n.
  static ChoiceSchedule sequence(std::vector<bool> blue);
  static ChoiceSchedule iid(double mu_b);

  Kind kind() const { return kind_; }
  bool deterministic() const { return kind_ != Kind::kIid; }
  double mu_b() const { return mu_b_; }
  std::int64_t blue_count(std::int64_t n) const;
  std::string describe() const;

 private:
  Kind kind_ = Kind::kAlternating;
  std::vector<bool> blue_;
  double mu_b_ = 0.5;
};

/// Gamma valid for both priors at once: the larger gamma and the weaker epsilon.
GammaCertificate combine_certificates(const GammaCertificate& a, const GammaCertificate& b);

/// Success event p_hat_kbar >= c (1 - delta) q_hat_kbar under a deterministic schedule.
/// Passes when the Wilson lower bound of the success rate is at least 1 - eps.
ExperimentResult verify_theorem2(const Prior& pi, const Prior& rho, const TwoDiceParams& params,
                                 const ChoiceSchedule& schedule, double delta, double epsilon,
                                 double eta, std::int64_t n, std::int64_t N, std::int64_t reps,
                                 const RunOptions& options);

/// As verify_theorem2 with the die chosen i.i.d. with blue probability mu_b.
ExperimentResult verify_corollary1(const Prior& pi, const Prior& rho, const TwoDiceParams& params,
                                   double mu_b, double delta, double epsilon, std::int64_t n,
                                   std::int64_t N, std::int64_t reps, const RunOptions& options);

/// Success event: posterior odds of blue exceed (1 - eps) mu_b / (1 - mu_b).
ExperimentResult verify_corollary2(const Prior& pi, const Prior& rho, Index kbar, double mu_b,
                                   double epsilon, std::int64_t n, const SimplexPoint& p,
                                   const SimplexPoint& q, std::int64_t N, std::int64_t reps,
                                   const RunOptions& options);

struct Example1Witness {
  std::int64_t N = 0;
  double delta = 0.0;
  std::int64_t n = 0;
  double p1 = 0.0;
  double lower_bound = 0.0;
  double two_p1 = 0.0;
  /// n^{-1/2} (1/8 - 2 N n^{-delta}).
  double margin = 0.0;
  bool certificate_holds = false;
  double mean_all_failures = 0.0;
  std::int64_t typical_successes = 0;
  double mean_typical = 0.0;
  bool quadrature_converged = false;
  bool confirmed = false;
};

/// Least n > N^2 with n^delta > 16 N, located by doubling and bisection, with
/// p_1 = N n^{-1/2-delta} and quadrature confirmation under the boundary prior.
Example1Witness example1_witness(std::int64_t N, double delta, const QuadratureSpec& spec = {});

/// zeta(x) = scale * x^power * log(x)^log_power; the log factor is omitted when
/// log_power is zero and otherwise needs x > 1.
struct PowerLaw {
  double scale = 1.0;
  double power = 1.0;
  double log_power = 0.0;

  double operator()(double x) const;
  std::string describe() const;
};

struct Example2Witness {
  std::int64_t n = 0;
  double p1 = 0.0;
  double gamma = 0.0;
  double alpha1 = 0.0;
  double zeta_n = 0.0;
  double zeta_times_p1 = 0.0;
  double lower_bound = 0.0;
  double two_p1 = 0.0;
  bool certificate_holds = false;
  /// Posterior mean at the all-failure count, when a closed form or K = 2 quadrature applies.
  std::optional<double> mean_all_failures;
  bool confirmed = false;
};

/// Least integer n > max(alpha_1/8, gamma) with zeta(n) alpha_1/(8 n) >= N, where
/// gamma comes from a certificate at eps = 1/2. Throws ConvergenceError past `max_n`.
Example2Witness example2_witness(const Prior& prior, const PowerLaw& zeta, std::int64_t N,
                                 std::int64_t max_n = 100000000,
                                 const GammaSearchOptions& gamma_options = {});

struct ScanReport {
  std::vector<ExperimentResult> results;
  /// First n whose Wilson lower bound of the wrong-comparison rate exceeds 1/2.
  std::optional<std::int64_t> crossing_n;
  /// Least Wilson lower bound of the wrong-comparison rate over the last `floor_window` points.
  double floor = 0.0;
  std::size_t unconverged_quadratures = 0;
};

/// Wrong-comparison event p_hat_1 < (c/2) q_hat_1 along p_1 = N/n, q_1 = N/(c n),
/// with the red prior proportional to exp(-1/q_1) and i.i.d. die choice.
/// n runs over a doubling grid up to n_max and stops at the crossing.
ScanReport example3_demo(const Prior& pi, double c, double mu_b, std::int64_t N,
                         std::int64_t n_max, std::int64_t reps, const RunOptions& options);

/// Wrong-comparison event along p_1 = c/n, q_1 = 1/n. Also counts the event
/// {Y_n = 0, 6 gamma/c < (B_n/n) Z_n}, which should imply the wrong comparison.
ScanReport example4_demo(const Prior& pi, const Prior& rho, double c, double mu_b,
                         const PowerLaw& zeta, std::int64_t N,
                         const std::vector<std::int64_t>& n_values, std::int64_t reps,
                         const RunOptions& options, std::size_t floor_window = 3);

}  // namespace rarebayes
