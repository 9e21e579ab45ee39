#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "rarebayes/cli.hpp"
#include "rarebayes/config.hpp"

using namespace rarebayes;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "rarebayes_cli_tests";
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const std::string& name, const std::string& body) {
  const fs::path path = scratch() / name;
  std::ofstream(path) << body;
  return path;
}

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Json first_record(const std::string& text) {
  return Json::parse(text.substr(0, text.find('\n')));
}

}  // namespace

TEST_CASE("hashing and number formatting") {
  CHECK(git_blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
  CHECK(git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(dump_precise(Json{{"a", 0.1}, {"b", 2.0}, {"c", 3}}) ==
        R"({"a":0.10000000000000001,"b":2.0,"c":3})");
  Json x;
  x["z"] = 1;
  x["a"] = 2;
  Json y;
  y["a"] = 2;
  y["z"] = 1;
  CHECK(spec_hash(x) == spec_hash(y));
}

TEST_CASE("prior configs") {
  CHECK(std::holds_alternative<BoundaryFailurePrior>(prior_from_json(Json::parse(R"({"type":"exp_boundary"})"))));
  const auto sine = std::get<ConditionPPrior>(
      prior_from_json(Json::parse(R"({"type":"sine","alpha":[1,1],"offset":1,"amplitude":0.5})")));
  CHECK(sine.tilde_pi_min() == 1.0);
  CHECK(sine.tilde_pi(SimplexPoint::binary(0.5)) == doctest::Approx(1.5));
  CHECK_THROWS_AS(prior_from_json(Json::parse(R"({"type":"nope"})")), ConfigError);
  CHECK_THROWS_AS(prior_from_json(Json::parse(R"({"type":"dirichlet"})")), ConfigError);
}

TEST_CASE("gamma subcommand") {
  const auto uniform = write_config("g_uniform.json", R"({"prior":{"type":"dirichlet","alpha":[1,1]},"epsilon":0.2})");
  auto r = run({"gamma", "--config", uniform.string()});
  REQUIRE(r.code == 0);
  auto rec = first_record(r.out);
  CHECK(rec["gamma"] == 2.0);
  CHECK(rec["method"] == "dirichlet_exact");
  CHECK(rec.contains("spec_hash"));
  CHECK(rec.contains("seed"));

  const auto closed = write_config(
      "g_closed.json",
      R"({"prior":{"type":"sine","alpha":[1,1]},"epsilon":0.2,"method":"remark3prime","max_abs_phi_prime":1,"min_phi":1})");
  r = run({"gamma", "--config", closed.string()});
  REQUIRE(r.code == 0);
  CHECK(first_record(r.out)["gamma"] == 198.0);

  const auto boundary = write_config("g_boundary.json", R"({"prior":{"type":"exp_boundary"},"epsilon":0.2})");
  CHECK(run({"gamma", "--config", boundary.string()}).code == 2);
}

TEST_CASE("configuration errors exit with code 2") {
  CHECK(run({"gamma", "--config", (scratch() / "missing.json").string()}).code == 2);
  CHECK(run({"gamma"}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  const auto broken = write_config("broken.json", "{not json");
  CHECK(run({"gamma", "--config", broken.string()}).code == 2);
  const auto bad_format = write_config("g_ok.json", R"({"prior":{"type":"dirichlet","alpha":[1,1]},"epsilon":0.2})");
  CHECK(run({"gamma", "--config", bad_format.string(), "--format", "xml"}).code == 2);
  const auto bad_delta = write_config("b_delta.json", R"({"mode":"theorem2","c":1,"delta":1.0,"eta":0.5,"epsilon":0.2,"gamma":2})");
  CHECK(run({"bounds", "--config", bad_delta.string()}).code == 2);
}

TEST_CASE("bounds subcommand") {
  const auto t1 = write_config("b_t1.json", R"({"mode":"theorem1","epsilon":0.1,"gamma":2})");
  auto r = run({"bounds", "--config", t1.string()});
  REQUIRE(r.code == 0);
  CHECK(first_record(r.out)["N"] == 8060);

  const auto t2 = write_config(
      "b_t2.json",
      R"({"mode":"theorem2","c":1,"delta":0.5,"eta":0.5,"epsilon":0.2,"pi":{"type":"dirichlet","alpha":[1,1]},"rho":{"type":"dirichlet","alpha":[1,1]}})");
  r = run({"bounds", "--config", t2.string()});
  REQUIRE(r.code == 0);
  const auto rec = first_record(r.out);
  CHECK(rec["N"] == 4640);
  CHECK(rec["beta"] == doctest::Approx(0.01));
}

TEST_CASE("posterior subcommand") {
  const auto cfg = write_config("p_box.json",
                                R"({"prior":{"type":"dirichlet_mixture","weights":[0.5,0.5],"params":[[1,1],[3,1]],"support_box":[1,3]},"counts":[2,0]})");
  const auto r = run({"posterior", "--config", cfg.string()});
  REQUIRE(r.code == 0);
  const auto rec = first_record(r.out);
  CHECK(rec["bracket"]["lower"] == doctest::Approx(0.375));
  CHECK(rec["bracket"]["upper"] == doctest::Approx(1.25));
  CHECK(rec["mean"].get<double>() >= 0.375);
}

TEST_CASE("experiment preconditions and exploratory mode") {
  const auto cfg = write_config(
      "e_below.json",
      R"({"experiment":"theorem1","prior":{"type":"dirichlet","alpha":[1,1]},"epsilon":0.1,"threshold":"markov_uniform","grid":[{"n":100,"p":[0.5,0.5]}],"reps":50})");
  CHECK(run({"experiment", "--config", cfg.string()}).code == 3);
  const auto r = run({"experiment", "--config", cfg.string(), "--exploratory"});
  REQUIRE(r.code == 0);
  CHECK(first_record(r.out)["details"]["mode"] == "exploratory");
}

TEST_CASE("experiment output is reproducible and independent of the worker count") {
  const auto cfg = write_config(
      "e_det.json",
      R"({"experiment":"theorem1","prior":{"type":"dirichlet","alpha":[1,1]},"epsilon":0.2,"threshold":"markov_uniform","grid":{"n_p":[250],"p":[0.1,0.5]},"reps":3000})");
  const auto a = scratch() / "a.jsonl";
  const auto b = scratch() / "b.jsonl";
  const auto c = scratch() / "c.jsonl";
  REQUIRE(run({"experiment", "--config", cfg.string(), "--seed", "42", "--jobs", "1", "--out", a.string()}).code == 0);
  REQUIRE(run({"experiment", "--config", cfg.string(), "--seed", "42", "--jobs", "8", "--out", b.string()}).code == 0);
  REQUIRE(run({"experiment", "--config", cfg.string(), "--seed", "43", "--out", c.string()}).code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a).find("runtime_ms") == std::string::npos);

  const auto ra = first_record(slurp(a));
  const auto rc = first_record(slurp(c));
  CHECK(ra["empirical_rate"] != rc["empirical_rate"]);
  CHECK(ra["spec_hash"] == rc["spec_hash"]);
  CHECK(ra["seed"] == 42);
  std::vector<std::string> keys_a, keys_c;
  for (auto it = ra.begin(); it != ra.end(); ++it) keys_a.push_back(it.key());
  for (auto it = rc.begin(); it != rc.end(); ++it) keys_c.push_back(it.key());
  CHECK(keys_a == keys_c);

  const auto manifest = Json::parse(slurp(a.string() + ".manifest.json"));
  CHECK(manifest.contains("runtime_ms"));
  CHECK(manifest.contains("resolved_config"));
}

TEST_CASE("csv output") {
  const auto cfg = write_config(
      "e_csv.json",
      R"({"experiment":"theorem1","prior":{"type":"dirichlet","alpha":[1,1]},"epsilon":0.2,"threshold":"markov_uniform","grid":{"n_p":[250],"p":[0.5]},"reps":100})");
  const auto r = run({"experiment", "--config", cfg.string(), "--format", "csv"});
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  CHECK(header.find("empirical_rate") != std::string::npos);
  CHECK(header.find("spec_hash") != std::string::npos);
  CHECK(std::count(header.begin(), header.end(), ',') == std::count(row.begin(), row.end(), ','));
}
