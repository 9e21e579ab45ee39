#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "rarebayes/bernstein.hpp"
#include "rarebayes/posterior.hpp"
#include "rarebayes/priors.hpp"
#include "rarebayes/simulate.hpp"

namespace rarebayes {

/// Builds a prior from its JSON description. Recognized types:
///
///     {"type": "dirichlet", "alpha": [..]}
///     {"type": "dirichlet_mixture", "weights": [..], "params": [[..], ..], "support_box": [a, A]}
///     {"type": "exp_boundary"}
///     {"type": "sine", "alpha": [a1, a2], "offset": 2, "amplitude": 1}
///     {"type": "grid", "alpha": [..], "tilde_pi_grid_file": "file.csv"}
///
/// "sine" is tilde_pi(p) = offset + amplitude sin(pi p_1) on the 2-simplex.
/// Relative grid paths resolve against `base_dir`.
Prior prior_from_json(const Json& config, const std::filesystem::path& base_dir = {});

/// max |phi'| and min phi of a "sine" prior, for the closed-form gamma.
struct SineShape {
  double max_abs_derivative;
  double min_value;
};
SineShape sine_shape(const Json& config);

Json to_json(const GammaCertificate& certificate);
Json to_json(const PosteriorBracket& bracket);
Json to_json(const ExperimentResult& result);

/// Compact JSON with doubles printed as %.17g (integral doubles keep a ".0").
std::string dump_precise(const Json& value);

/// SHA-1 of the git blob object wrapping `content`, as lowercase hex.
std::string git_blob_hash(const std::string& content);

/// Hash of the canonical (key-sorted) serialization of a resolved config.
std::string spec_hash(const Json& resolved_config);

Json read_json_file(const std::filesystem::path& path);

}  // namespace rarebayes
