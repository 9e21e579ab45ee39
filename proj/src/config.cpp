#include "rarebayes/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <openssl/sha.h>

#include "rarebayes/error.hpp"

namespace rarebayes {
namespace {

Vector vector_field(const Json& config, const char* key) {
  if (!config.contains(key) || !config.at(key).is_array()) {
    throw ConfigError(std::string("prior config needs an array \"") + key + "\"");
  }
  const auto& arr = config.at(key);
  Vector out(static_cast<Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw ConfigError(std::string("\"") + key + "\" must hold numbers");
    out[static_cast<Index>(i)] = arr[i].get<double>();
  }
  return out;
}

double number_field(const Json& config, const char* key, double fallback) {
  if (!config.contains(key)) return fallback;
  if (!config.at(key).is_number()) {
    throw ConfigError(std::string("\"") + key + "\" must be a number");
  }
  return config.at(key).get<double>();
}

void dump_into(const Json& value, std::string& out) {
  switch (value.type()) {
    case Json::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = value.begin(); it != value.end(); ++it) {
        if (!first) out += ',';
        first = false;
        out += Json(it.key()).dump();
        out += ':';
        dump_into(it.value(), out);
      }
      out += '}';
      return;
    }
    case Json::value_t::array: {
      out += '[';
      bool first = true;
      for (const auto& item : value) {
        if (!first) out += ',';
        first = false;
        dump_into(item, out);
      }
      out += ']';
      return;
    }
    case Json::value_t::number_float: {
      const double x = value.get<double>();
      if (!std::isfinite(x)) {
        out += "null";
        return;
      }
      char buffer[40];
      std::snprintf(buffer, sizeof buffer, "%.17g", x);
      std::string text(buffer);
      if (text.find_first_of(".e") == std::string::npos) text += ".0";
      out += text;
      return;
    }
    default:
      out += value.dump();
      return;
  }
}

}  // namespace

Prior prior_from_json(const Json& config, const std::filesystem::path& base_dir) {
  if (!config.is_object() || !config.contains("type") || !config.at("type").is_string()) {
    throw ConfigError("prior config needs a string \"type\"");
  }
  const std::string type = config.at("type").get<std::string>();
  if (type == "dirichlet") {
    return ConditionPPrior::dirichlet(vector_field(config, "alpha"));
  }
  if (type == "dirichlet_mixture") {
    const Vector weights = vector_field(config, "weights");
    if (!config.contains("params") || !config.at("params").is_array()) {
      throw ConfigError("mixture config needs \"params\"");
    }
    std::vector<Vector> params;
    for (const auto& row : config.at("params")) {
      Json wrapper = {{"row", row}};
      params.push_back(vector_field(wrapper, "row"));
    }
    std::optional<std::pair<double, double>> box;
    if (config.contains("support_box")) {
      const Vector b = vector_field(config, "support_box");
      if (b.size() != 2) throw ConfigError("\"support_box\" must be [a, A]");
      box = std::make_pair(b[0], b[1]);
    }
    return DirichletMixturePrior(weights, std::move(params), box);
  }
  if (type == "exp_boundary") {
    return BoundaryFailurePrior{};
  }
  if (type == "sine") {
    const Vector alpha = vector_field(config, "alpha");
    if (alpha.size() != 2) throw ConfigError("the sine prior lives on the 2-simplex");
    const double offset = number_field(config, "offset", 2.0);
    const double amplitude = number_field(config, "amplitude", 1.0);
    const double min_value = std::min(offset, offset + amplitude);
    if (!(min_value > 0.0)) throw ConfigError("sine prior must stay positive");
    std::ostringstream name;
    name.precision(17);
    name << offset << " + " << amplitude << " sin(pi p_1)";
    return ConditionPPrior(
        alpha,
        [offset, amplitude](const SimplexPoint& p) {
          return offset + amplitude * std::sin(std::numbers::pi * p[0]);
        },
        name.str(), min_value);
  }
  if (type == "grid") {
    const Vector alpha = vector_field(config, "alpha");
    if (!config.contains("tilde_pi_grid_file") || !config.at("tilde_pi_grid_file").is_string()) {
      throw ConfigError("grid prior needs \"tilde_pi_grid_file\"");
    }
    std::filesystem::path file = config.at("tilde_pi_grid_file").get<std::string>();
    if (file.is_relative() && !base_dir.empty()) file = base_dir / file;
    return ConditionPPrior::from_grid(alpha, TildePiGrid::from_csv(file.string(), alpha.size()));
  }
  throw ConfigError("unknown prior type \"" + type + "\"");
}

SineShape sine_shape(const Json& config) {
  if (config.value("type", "") != "sine") {
    throw ConfigError("the closed-form gamma needs a \"sine\" prior config");
  }
  const double offset = number_field(config, "offset", 2.0);
  const double amplitude = number_field(config, "amplitude", 1.0);
  return {std::abs(amplitude) * std::numbers::pi, std::min(offset, offset + amplitude)};
}

Json to_json(const GammaCertificate& certificate) {
  Json out;
  out["gamma"] = certificate.gamma;
  out["epsilon"] = certificate.epsilon;
  out["m_used"] = certificate.m_used;
  out["sup_error_estimate"] = certificate.sup_error_estimate.has_value()
                                  ? Json(*certificate.sup_error_estimate)
                                  : Json(nullptr);
  out["method"] = to_string(certificate.method);
  out["alpha"] = std::vector<double>(certificate.alpha.begin(), certificate.alpha.end());
  out["valid_for_all_epsilon"] = certificate.valid_for_all_epsilon();
  return out;
}

Json to_json(const PosteriorBracket& bracket) {
  Json out;
  out["lower"] = bracket.lower;
  out["upper"] = bracket.upper;
  out["gamma"] = bracket.gamma;
  out["epsilon"] = bracket.epsilon;
  out["side"] = bracket.k + 1;
  return out;
}

Json to_json(const ExperimentResult& result) {
  Json out;
  out["label"] = result.label;
  out["event"] = result.event;
  out["replications"] = result.replications;
  out["successes"] = result.successes;
  out["empirical_rate"] = result.empirical_rate;
  out["wilson_ci_95"] = {result.wilson_ci_95.lo, result.wilson_ci_95.hi};
  out["pass"] = result.pass;
  out["theorem_check"] = result.theorem_check;
  out["seed"] = result.seed;
  out["details"] = result.details;
  return out;
}

std::string dump_precise(const Json& value) {
  std::string out;
  dump_into(value, out);
  return out;
}

std::string git_blob_hash(const std::string& content) {
  std::string object = "blob " + std::to_string(content.size());
  object.push_back('\0');
  object += content;
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(object.data()), object.size(), digest);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned char byte : digest) {
    hex.push_back(kHex[byte >> 4]);
    hex.push_back(kHex[byte & 0xf]);
  }
  return hex;
}

std::string spec_hash(const Json& resolved_config) {
  // nlohmann::json (unlike ordered_json) keeps object keys sorted.
  const nlohmann::json canonical = nlohmann::json::parse(resolved_config.dump());
  return git_blob_hash(dump_precise(Json::parse(canonical.dump())));
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
}

}  // namespace rarebayes
