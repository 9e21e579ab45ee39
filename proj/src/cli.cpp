#include "rarebayes/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "rarebayes/bounds.hpp"
#include "rarebayes/config.hpp"
#include "rarebayes/error.hpp"
#include "rarebayes/special.hpp"

namespace rarebayes {
namespace {

namespace fs = std::filesystem;

struct Flags {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int jobs = 1;
  std::string out;
  std::string format = "json";
  bool exploratory = false;
};

struct Loaded {
  Json config;
  fs::path base_dir;
};

Loaded load(const Flags& flags) {
  if (flags.config.empty()) throw ConfigError("--config is required");
  Loaded l{read_json_file(flags.config), fs::path(flags.config).parent_path()};
  if (!l.config.is_object()) throw ConfigError("config must be a JSON object");
  return l;
}

const Json& field(const Json& config, const char* key) {
  if (!config.contains(key)) throw ConfigError(std::string("config is missing \"") + key + "\"");
  return config.at(key);
}

double number(const Json& config, const char* key) {
  const Json& v = field(config, key);
  if (!v.is_number()) throw ConfigError(std::string("\"") + key + "\" must be a number");
  return v.get<double>();
}

double number_or(const Json& config, const char* key, double fallback) {
  return config.contains(key) ? number(config, key) : fallback;
}

std::int64_t integer(const Json& config, const char* key) {
  const Json& v = field(config, key);
  if (!v.is_number_integer()) throw ConfigError(std::string("\"") + key + "\" must be an integer");
  return v.get<std::int64_t>();
}

std::int64_t integer_or(const Json& config, const char* key, std::int64_t fallback) {
  return config.contains(key) ? integer(config, key) : fallback;
}

Index side_of(const Json& config) {
  const std::int64_t side = integer_or(config, "side", 1);
  if (side < 1) throw ConfigError("\"side\" is 1-based");
  return static_cast<Index>(side - 1);
}

SimplexPoint point(const Json& config, const char* key) {
  const Json& v = field(config, key);
  if (!v.is_array()) throw ConfigError(std::string("\"") + key + "\" must be an array");
  Vector coords(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) coords[static_cast<Index>(i)] = v[i].get<double>();
  try {
    return SimplexPoint(coords);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

Prior prior_field(const Loaded& l, const char* key) {
  return prior_from_json(field(l.config, key), l.base_dir);
}

// A certificate for a generic prior is searched at `certificate_epsilon`.
GammaCertificate certificate_for(const Prior& prior, double epsilon) {
  return gamma_for_epsilon(prior, epsilon);
}

GammaCertificate user_certificate(const Json& config, Index dim) {
  GammaCertificate cert;
  cert.gamma = number(config, "gamma");
  if (!(cert.gamma > 0.0)) throw ConfigError("\"gamma\" must be positive");
  cert.epsilon = number_or(config, "gamma_epsilon", 0.0);
  cert.method = GammaMethod::kUserSupplied;
  cert.alpha = Vector::Ones(dim);
  return cert;
}

// Certificate covering both dice, from "gamma" or from the two prior configs.
GammaCertificate two_dice_certificate(const Loaded& l) {
  if (l.config.contains("gamma")) return user_certificate(l.config, 2);
  const double eps = number_or(l.config, "certificate_epsilon", 0.05);
  return combine_certificates(certificate_for(prior_field(l, "pi"), eps),
                              certificate_for(prior_field(l, "rho"), eps));
}

// Deterministic subcommands still record the seed so every record has one.
void emit(Json value, const Flags& flags, std::ostream& out) {
  value["seed"] = flags.seed;
  const std::string text = dump_precise(value) + "\n";
  if (flags.out.empty()) {
    out << text;
    return;
  }
  std::ofstream file(flags.out, std::ios::binary);
  if (!file) throw ConfigError("cannot write " + flags.out);
  file << text;
}

Json json_object(std::initializer_list<std::pair<const char*, Json>> items) {
  Json out = Json::object();
  for (const auto& [k, v] : items) out[k] = v;
  return out;
}

// ---------------------------------------------------------------------------
// gamma

int cmd_gamma(const Flags& flags, std::ostream& out) {
  const Loaded l = load(flags);
  const double epsilon = number(l.config, "epsilon");
  const Json& prior_config = field(l.config, "prior");
  const std::string method = l.config.value("method", "auto");
  GammaCertificate cert;
  if (method == "remark3prime") {
    const Vector alpha = [&] {
      const Json& a = field(prior_config, "alpha");
      Vector v(static_cast<Index>(a.size()));
      for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Index>(i)] = a[i].get<double>();
      return v;
    }();
    double max_derivative = 0.0;
    double min_phi = 0.0;
    if (l.config.contains("max_abs_phi_prime")) {
      max_derivative = number(l.config, "max_abs_phi_prime");
      min_phi = number(l.config, "min_phi");
    } else {
      const SineShape shape = sine_shape(prior_config);
      max_derivative = shape.max_abs_derivative;
      min_phi = shape.min_value;
    }
    cert = gamma_remark3prime(alpha, epsilon, max_derivative, min_phi);
  } else if (method == "auto") {
    cert = gamma_for_epsilon(prior_from_json(prior_config, l.base_dir), epsilon);
  } else {
    throw ConfigError("unknown gamma method \"" + method + "\"");
  }
  Json result = to_json(cert);
  result["prior"] = prior_name(prior_from_json(prior_config, l.base_dir));
  result["spec_hash"] = spec_hash(l.config);
  emit(result, flags, out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// bounds

Json theorem1_json(const Theorem1Threshold& t) {
  return json_object({{"mode", "theorem1"},
                      {"method", to_string(t.method)},
                      {"N", t.N},
                      {"epsilon", t.epsilon},
                      {"gamma", t.gamma},
                      {"c", t.c},
                      {"delta", t.delta},
                      {"d", t.d}});
}

Json theorem2_json(const Theorem2Constants& t) {
  return json_object({{"c", t.c},
                      {"delta", t.delta},
                      {"eta", t.eta},
                      {"epsilon", t.epsilon},
                      {"gamma", t.gamma},
                      {"beta", t.beta},
                      {"c_prime", t.c_prime},
                      {"d", t.d},
                      {"M", t.M},
                      {"N1", t.N1},
                      {"N2", t.N2},
                      {"N", t.N},
                      {"feasibility_margin", t.feasibility_margin()}});
}

int cmd_bounds(const Flags& flags, std::ostream& out) {
  const Loaded l = load(flags);
  const Json& c = l.config;
  const std::string mode = c.value("mode", "theorem1");
  Json result;
  if (mode == "theorem1") {
    const double eps = number(c, "epsilon");
    Theorem1Threshold t;
    if (c.contains("gamma")) {
      GammaCertificate cert = user_certificate(c, 2);
      if (!c.contains("gamma_epsilon")) cert.epsilon = eps / 5.0;
      t = theorem1_threshold(eps, cert);
    } else {
      t = theorem1_threshold(eps, prior_field(l, "prior"));
    }
    result = theorem1_json(t);
  } else if (mode == "markov_uniform") {
    result = theorem1_json(theorem1_markov_uniform(number(c, "epsilon")));
  } else if (mode == "theorem2") {
    result = theorem2_json(theorem2_constants(number(c, "c"), number(c, "delta"), number(c, "eta"),
                                              number(c, "epsilon"), two_dice_certificate(l)));
    result["mode"] = "theorem2";
  } else if (mode == "corollary1") {
    const Corollary1Threshold t =
        corollary1_threshold(number(c, "c"), number(c, "delta"), number(c, "epsilon"),
                             number(c, "mu_B"), two_dice_certificate(l));
    result = json_object({{"mode", "corollary1"},
                          {"mu_B", t.mu_b},
                          {"eta", t.eta},
                          {"N1", t.N1},
                          {"inner", theorem2_json(t.inner)},
                          {"N", t.N}});
  } else if (mode == "lemma4") {
    const double M = number(c, "M");
    const double eps = number(c, "epsilon");
    result = json_object({{"mode", "lemma4"}, {"M", M}, {"epsilon", eps},
                          {"N", lemma4_threshold(M, eps)}});
  } else if (mode == "chernoff") {
    result = json_object({{"mode", "chernoff"},
                          {"bound", chernoff_bound(number(c, "c"), number(c, "d"))}});
  } else if (mode == "lemma3") {
    result = json_object(
        {{"mode", "lemma3"},
         {"bound", lemma3_bound(number(c, "c"), number(c, "c_prime"), number(c, "d"))}});
  } else {
    throw ConfigError("unknown bounds mode \"" + mode + "\"");
  }
  result["spec_hash"] = spec_hash(c);
  emit(result, flags, out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// posterior

int cmd_posterior(const Flags& flags, std::ostream& out) {
  const Loaded l = load(flags);
  const Prior prior = prior_field(l, "prior");
  const Json& counts_json = field(l.config, "counts");
  if (!counts_json.is_array()) throw ConfigError("\"counts\" must be an array");
  CountVector tallies(static_cast<Index>(counts_json.size()));
  for (std::size_t i = 0; i < counts_json.size(); ++i) {
    if (!counts_json[i].is_number_integer()) throw ConfigError("counts must be integers");
    tallies[static_cast<Index>(i)] = counts_json[i].get<std::int64_t>();
  }
  const Counts counts = [&] {
    try {
      return Counts(tallies);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }();
  const Index k = side_of(l.config);
  const PosteriorMean mean = posterior_mean(prior, counts, k);
  Json result = json_object({{"prior", prior_name(prior)},
                             {"side", k + 1},
                             {"mean", mean.value},
                             {"error_estimate", mean.error},
                             {"converged", mean.converged},
                             {"method", mean.method}});
  if (const auto* mixture = std::get_if<DirichletMixturePrior>(&prior);
      mixture != nullptr && mixture->support_box().has_value()) {
    const auto [a, A] = *mixture->support_box();
    const auto [lo, hi] = mixture_bracket(a, A, counts, k);
    result["bracket"] = json_object({{"lower", lo}, {"upper", hi}, {"a", a}, {"A", A},
                                     {"method", "mixture_box_bounds"}});
  } else if (std::holds_alternative<BoundaryFailurePrior>(prior)) {
    result["bracket"] = json_object({{"lower", lemma2_lower_bound(counts.total())},
                                     {"upper", nullptr},
                                     {"method", "boundary_prior_lower_bound"}});
  } else {
    const GammaCertificate cert = gamma_for_epsilon(prior, number_or(l.config, "epsilon", 0.5));
    Json b = to_json(bracket(cert, counts, k));
    b["method"] = to_string(cert.method);
    result["bracket"] = b;
  }
  result["spec_hash"] = spec_hash(l.config);
  emit(result, flags, out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// experiment

struct ExperimentOutput {
  std::vector<Json> records;
  std::vector<std::int64_t> runtimes;
};

void add(ExperimentOutput& o, const ExperimentResult& r) {
  o.records.push_back(to_json(r));
  o.runtimes.push_back(r.runtime_ms);
}

std::int64_t reps_of(const Json& c) {
  const std::int64_t reps = integer_or(c, "reps", 10000);
  if (reps < 1) throw ConfigError("\"reps\" must be positive");
  return reps;
}

ExperimentOutput run_theorem1(const Loaded& l, Json& resolved, const RunOptions& options) {
  const Json& c = l.config;
  const Prior prior = prior_field(l, "prior");
  const double eps = number(c, "epsilon");
  const Index k = side_of(c);
  std::int64_t N = 0;
  const std::string threshold = c.value("threshold", "remark3pp");
  if (c.contains("N")) {
    N = integer(c, "N");
  } else if (threshold == "markov_uniform") {
    const auto* cp = std::get_if<ConditionPPrior>(&prior);
    if (cp == nullptr || !cp->is_dirichlet() || cp->dimension() != 2 ||
        (cp->alpha().array() != 1.0).any()) {
      throw ConfigError("the markov_uniform threshold needs the uniform prior on two sides");
    }
    N = theorem1_markov_uniform(eps).N;
  } else if (threshold == "remark3pp") {
    N = theorem1_threshold(eps, prior).N;
  } else {
    throw ConfigError("unknown threshold \"" + threshold + "\"");
  }
  resolved["N"] = N;
  std::vector<Theorem1Point> grid;
  const Json& g = field(c, "grid");
  if (g.is_array()) {
    for (const auto& item : g) {
      grid.push_back({integer(item, "n"), point(item, "p")});
    }
  } else {
    const Index dim = prior_dimension(prior);
    if (dim != 2) throw ConfigError("the product grid form needs K = 2; list points explicitly");
    for (const auto& np : field(g, "n_p")) {
      for (const auto& pv : field(g, "p")) {
        const double p = pv.get<double>();
        if (!(p > 0.0 && p <= 1.0)) throw ConfigError("grid probabilities must lie in (0, 1]");
        const std::int64_t n = ceil_snapped(np.get<double>() / p);
        Vector coords(2);
        coords[k] = p;
        coords[1 - k] = 1.0 - p;
        grid.push_back({n, SimplexPoint(coords)});
      }
    }
  }
  ExperimentOutput o;
  for (const auto& r : verify_theorem1(prior, k, eps, N, grid, reps_of(c), options)) add(o, r);
  return o;
}

TwoDiceParams two_dice(const Json& c) {
  return {point(c, "p"), point(c, "q"), side_of(c), number_or(c, "c", 1.0)};
}

ExperimentOutput run_theorem2(const Loaded& l, Json& resolved, const RunOptions& options) {
  const Json& c = l.config;
  const TwoDiceParams params = two_dice(c);
  const double delta = number(c, "delta");
  const double eta = number(c, "eta");
  const double eps = number(c, "epsilon");
  ChoiceSchedule schedule = ChoiceSchedule::alternating();
  if (c.contains("schedule") && c.at("schedule").is_object()) {
    std::vector<bool> blue;
    for (const auto& b : field(c.at("schedule"), "sequence")) blue.push_back(b.get<bool>());
    schedule = ChoiceSchedule::sequence(std::move(blue));
  } else if (c.contains("schedule") && c.value("schedule", "") != "alternating") {
    throw ConfigError("\"schedule\" must be \"alternating\" or {\"sequence\": [...]}");
  }
  std::int64_t N = 0;
  if (c.contains("N")) {
    N = integer(c, "N");
  } else {
    const Theorem2Constants t = theorem2_constants(params.c, delta, eta, eps,
                                                   two_dice_certificate(l));
    N = t.N;
    resolved["constants"] = theorem2_json(t);
  }
  resolved["N"] = N;
  std::int64_t n = 0;
  if (c.contains("n")) {
    n = integer(c, "n");
  } else {
    if (schedule.kind() != ChoiceSchedule::Kind::kAlternating) {
      throw ConfigError("give \"n\" explicitly for a sequence schedule");
    }
    n = 2 * ceil_snapped(static_cast<double>(N) / params.p[params.kbar]);
  }
  resolved["n"] = n;
  ExperimentOutput o;
  add(o, verify_theorem2(prior_field(l, "pi"), prior_field(l, "rho"), params, schedule, delta,
                         eps, eta, n, N, reps_of(c), options));
  return o;
}

ExperimentOutput run_corollary1(const Loaded& l, Json& resolved, const RunOptions& options) {
  const Json& c = l.config;
  const TwoDiceParams params = two_dice(c);
  const double delta = number(c, "delta");
  const double eps = number(c, "epsilon");
  const double mu = number(c, "mu_B");
  std::int64_t N = 0;
  if (c.contains("N")) {
    N = integer(c, "N");
  } else {
    N = corollary1_threshold(params.c, delta, eps, mu, two_dice_certificate(l)).N;
  }
  resolved["N"] = N;
  const std::int64_t n = c.contains("n")
                             ? integer(c, "n")
                             : ceil_snapped(static_cast<double>(N) / params.p[params.kbar]);
  resolved["n"] = n;
  ExperimentOutput o;
  add(o, verify_corollary1(prior_field(l, "pi"), prior_field(l, "rho"), params, mu, delta, eps,
                           n, N, reps_of(c), options));
  return o;
}

ExperimentOutput run_corollary2(const Loaded& l, Json& resolved, const RunOptions& options) {
  const Json& c = l.config;
  const SimplexPoint p = point(c, "p");
  const SimplexPoint q = point(c, "q");
  const Index k = side_of(c);
  const double eps = number(c, "epsilon");
  const double mu = number(c, "mu_B");
  std::int64_t N = 0;
  if (c.contains("N")) {
    N = integer(c, "N");
  } else {
    N = corollary1_threshold(1.0, eps, eps, mu, two_dice_certificate(l)).N;
  }
  resolved["N"] = N;
  const std::int64_t n = c.contains("n") ? integer(c, "n")
                                         : ceil_snapped(static_cast<double>(N) / p[k]);
  resolved["n"] = n;
  ExperimentOutput o;
  add(o, verify_corollary2(prior_field(l, "pi"), prior_field(l, "rho"), k, mu, eps, n, p, q, N,
                           reps_of(c), options));
  return o;
}

PowerLaw power_law(const Json& c) {
  const Json& z = field(c, "zeta");
  return {number_or(z, "scale", 1.0), number_or(z, "power", 1.0), number_or(z, "log_power", 0.0)};
}

ExperimentOutput run_example1(const Loaded& l, Json&, const RunOptions& options) {
  const Example1Witness w = example1_witness(integer(l.config, "N"), number(l.config, "delta"));
  Json record = json_object({{"label", "example1"},
                             {"N", w.N},
                             {"delta", w.delta},
                             {"n", w.n},
                             {"p1", w.p1},
                             {"lower_bound", w.lower_bound},
                             {"two_p1", w.two_p1},
                             {"margin", w.margin},
                             {"certificate_holds", w.certificate_holds},
                             {"mean_all_failures", w.mean_all_failures},
                             {"typical_successes", w.typical_successes},
                             {"mean_typical", w.mean_typical},
                             {"quadrature_converged", w.quadrature_converged},
                             {"pass", w.confirmed},
                             {"seed", options.seed}});
  return {{record}, {0}};
}

ExperimentOutput run_example2(const Loaded& l, Json&, const RunOptions& options) {
  const Example2Witness w =
      example2_witness(prior_field(l, "prior"), power_law(l.config), integer(l.config, "N"),
                       integer_or(l.config, "max_n", 100000000));
  Json record = json_object({{"label", "example2"},
                             {"n", w.n},
                             {"p1", w.p1},
                             {"gamma", w.gamma},
                             {"alpha1", w.alpha1},
                             {"zeta_n", w.zeta_n},
                             {"zeta_times_p1", w.zeta_times_p1},
                             {"lower_bound", w.lower_bound},
                             {"two_p1", w.two_p1},
                             {"certificate_holds", w.certificate_holds},
                             {"mean_all_failures", w.mean_all_failures.has_value()
                                                       ? Json(*w.mean_all_failures)
                                                       : Json(nullptr)},
                             {"pass", w.confirmed},
                             {"seed", options.seed}});
  return {{record}, {0}};
}

void add_scan(ExperimentOutput& o, const ScanReport& report, const char* label,
              const RunOptions& options) {
  for (const auto& r : report.results) add(o, r);
  Json summary = json_object({{"label", label},
                              {"crossing_n", report.crossing_n.has_value()
                                                 ? Json(*report.crossing_n)
                                                 : Json(nullptr)},
                              {"floor_wilson_lo", report.floor},
                              {"unconverged_quadratures", report.unconverged_quadratures},
                              {"seed", options.seed}});
  o.records.push_back(summary);
  o.runtimes.push_back(0);
}

ExperimentOutput run_example3(const Loaded& l, Json&, const RunOptions& options) {
  const Json& c = l.config;
  const ScanReport report =
      example3_demo(prior_field(l, "pi"), number_or(c, "c", 1.0), number_or(c, "mu_B", 0.5),
                    integer(c, "N"), integer_or(c, "n_max", 100000), reps_of(c), options);
  ExperimentOutput o;
  add_scan(o, report, "example3_summary", options);
  o.records.back()["pass"] = report.crossing_n.has_value();
  return o;
}

ExperimentOutput run_example4(const Loaded& l, Json&, const RunOptions& options) {
  const Json& c = l.config;
  std::vector<std::int64_t> ns;
  if (c.contains("n_values")) {
    for (const auto& v : c.at("n_values")) ns.push_back(v.get<std::int64_t>());
  } else {
    ns = {1000, 10000, 100000};
  }
  const ScanReport report = example4_demo(
      prior_field(l, "pi"), prior_field(l, "rho"), number_or(c, "c", 1.0),
      number_or(c, "mu_B", 0.5), power_law(c), integer_or(c, "N", 1), ns, reps_of(c), options,
      static_cast<std::size_t>(integer_or(c, "floor_window", 3)));
  ExperimentOutput o;
  add_scan(o, report, "example4_summary", options);
  o.records.back()["pass"] = report.floor > 0.0;
  return o;
}

std::string csv_field(const Json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  return dump_precise(v);
}

std::string to_csv(const std::vector<Json>& records) {
  static const char* kColumns[] = {"label",   "event", "replications", "successes",
                                   "empirical_rate", "wilson_lo", "wilson_hi", "pass",
                                   "theorem_check", "n", "seed", "spec_hash"};
  std::ostringstream s;
  for (std::size_t i = 0; i < std::size(kColumns); ++i) s << (i ? "," : "") << kColumns[i];
  s << "\n";
  for (const auto& r : records) {
    Json row = r;
    if (r.contains("wilson_ci_95")) {
      row["wilson_lo"] = r["wilson_ci_95"][0];
      row["wilson_hi"] = r["wilson_ci_95"][1];
    }
    if (r.contains("details") && r["details"].contains("n")) row["n"] = r["details"]["n"];
    for (std::size_t i = 0; i < std::size(kColumns); ++i) {
      s << (i ? "," : "") << (row.contains(kColumns[i]) ? csv_field(row[kColumns[i]]) : "");
    }
    s << "\n";
  }
  return s.str();
}

int cmd_experiment(const Flags& flags, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const Loaded l = load(flags);
  if (flags.format != "json" && flags.format != "csv") {
    throw ConfigError("--format must be json or csv");
  }
  const std::string kind = field(l.config, "experiment").get<std::string>();
  RunOptions options;
  options.seed = flags.seed_given ? flags.seed
                                  : static_cast<std::uint64_t>(integer_or(l.config, "seed", 0));
  options.jobs = flags.jobs;
  options.exploratory = flags.exploratory;
  Json resolved = l.config;
  resolved.erase("seed");
  ExperimentOutput o;
  if (kind == "theorem1") {
    o = run_theorem1(l, resolved, options);
  } else if (kind == "theorem2") {
    o = run_theorem2(l, resolved, options);
  } else if (kind == "corollary1") {
    o = run_corollary1(l, resolved, options);
  } else if (kind == "corollary2") {
    o = run_corollary2(l, resolved, options);
  } else if (kind == "example1") {
    o = run_example1(l, resolved, options);
  } else if (kind == "example2") {
    o = run_example2(l, resolved, options);
  } else if (kind == "example3") {
    o = run_example3(l, resolved, options);
  } else if (kind == "example4") {
    o = run_example4(l, resolved, options);
  } else {
    throw ConfigError("unknown experiment \"" + kind + "\"");
  }
  const std::string hash = spec_hash(resolved);
  std::string text;
  for (auto& r : o.records) {
    r["spec_hash"] = hash;
    if (flags.format == "json") text += dump_precise(r) + "\n";
  }
  if (flags.format == "csv") text = to_csv(o.records);
  if (flags.out.empty()) {
    out << text;
  } else {
    std::ofstream file(flags.out, std::ios::binary);
    if (!file) throw ConfigError("cannot write " + flags.out);
    file << text;
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - start)
                             .count();
    Json manifest = json_object({{"subcommand", "experiment"},
                                 {"config_path", flags.config},
                                 {"seed", options.seed},
                                 {"jobs", options.jobs},
                                 {"output_path", flags.out},
                                 {"format", flags.format},
                                 {"exploratory", options.exploratory},
                                 {"spec_hash", hash},
                                 {"resolved_config", resolved},
                                 {"runtime_ms", elapsed},
                                 {"record_runtime_ms", o.runtimes}});
    std::ofstream mf(flags.out + ".manifest.json", std::ios::binary);
    if (!mf) throw ConfigError("cannot write manifest next to " + flags.out);
    mf << dump_precise(manifest) << "\n";
  }
  return kExitOk;
}

void add_common(CLI::App* sub, Flags& flags) {
  sub->add_option("--config", flags.config, "JSON config file")->required();
  sub->add_option("--seed", flags.seed, "master seed (U64)")
      ->each([&flags](const std::string&) { flags.seed_given = true; });
  sub->add_option("--jobs", flags.jobs, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--out", flags.out, "output file (default stdout)");
  sub->add_option("--format", flags.format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  sub->add_flag("--exploratory", flags.exploratory, "run despite failed theorem preconditions");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Posterior means, bracketing constants and thresholds for rare-event estimation",
               "rarebayes"};
  app.require_subcommand(1);
  Flags flags;
  CLI::App* gamma = app.add_subcommand("gamma", "bracketing constant for a prior");
  CLI::App* bounds = app.add_subcommand("bounds", "tail bounds and sample-size thresholds");
  CLI::App* posterior = app.add_subcommand("posterior", "posterior mean and bracket");
  CLI::App* experiment = app.add_subcommand("experiment", "seeded Monte Carlo checks");
  for (CLI::App* sub : {gamma, bounds, posterior, experiment}) add_common(sub, flags);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (gamma->parsed()) return cmd_gamma(flags, out);
    if (bounds->parsed()) return cmd_bounds(flags, out);
    if (posterior->parsed()) return cmd_posterior(flags, out);
    return cmd_experiment(flags, out);
  } catch (const PreconditionError& e) {
    err << "precondition violated: " << e.what() << "\n";
    return kExitPrecondition;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ConvergenceError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace rarebayes
