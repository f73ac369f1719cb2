#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hmmifs/cli.hpp"
#include "hmmifs/io.hpp"
#include "test_support.hpp"

using namespace hmmifs;
using namespace hmmifs::testing;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hmmifs_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("loglik of the reference pair") {
  const Run r = run({"loglik", "--model", data_path("m2.json"), "--obs", data_path("obs00.csv")});
  CHECK(r.code == cli::kOk);
  CHECK(contains(r.out, "# log_lik=-2.19091443488180"));
  CHECK(contains(r.out, "t,log_c,log_mass\n0,-1.1036185296515"));
}

TEST_CASE("simulate writes a seeded CSV and a manifest") {
  const fs::path dir = scratch("simulate");
  const fs::path csv = dir / "nested" / "obs.csv";
  const Run r = run({"simulate", "--model", data_path("m2.json"), "--n", "10", "--seed", "3", "--out", csv.string()});
  REQUIRE(r.code == cli::kOk);
  const ObservationSequence obs = io::load_observations(csv);
  CHECK(obs.size() == 11);
  CHECK(obs.seed == 3u);
  CHECK(obs.obs == simulate(m2(), 10, 3).obs);
  CHECK(fs::exists(csv.parent_path() / "manifest.json"));
  fs::remove_all(dir);
}

TEST_CASE("score with fd check passes") {
  const fs::path dir = scratch("score");
  const fs::path csv = dir / "obs.csv";
  REQUIRE(run({"simulate", "--model", data_path("m2_family.json"), "--n", "40", "--out", csv.string()}).code == 0);
  const Run r = run({"score", "--model", data_path("m2_family.json"), "--obs", csv.string(), "--fd-check"});
  CHECK(r.code == cli::kOk);
  CHECK(contains(r.out, "name,theta,score,fd_score,residual\na01,"));
  CHECK(contains(r.out, "# PASS max |score - fd|"));
  fs::remove_all(dir);
}

TEST_CASE("check-c5 reports exp(B^2)") {
  const Run r = run({"check-c5", "--xi0", "0", "--xi1", "0", "--bounds", "1,2,3,4", "--step", "0.1"});
  CHECK(r.code == cli::kOk);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  CHECK(line == "bound,y,z,xi0,xi1,log_ratio,supremum");
  for (int b = 1; b <= 4; ++b) {
    std::getline(in, line);
    CHECK(line.substr(line.rfind(',') + 1) == io::format_double(std::exp(double(b * b))));
  }
  std::getline(in, line);
  CHECK(contains(line, "# PASS suprema strictly increasing, equal exp(B^2)"));
}

TEST_CASE("diagnostic subcommands pass on the reference fixtures") {
  CHECK(run({"check-operators", "--model", data_path("m2.json")}).code == cli::kOk);
  const Run deg = run({"check-degeneracy", "--model", data_path("m2.json"), "--n", "200", "--seed", "7"});
  CHECK(deg.code == cli::kOk);
  CHECK(contains(deg.out, "# PASS slope"));
  CHECK(run({"check-score-system", "--model", data_path("score_system.json")}).code == cli::kOk);
}

TEST_CASE("profile over an explicit grid and a range") {
  const fs::path dir = scratch("profile");
  const fs::path csv = dir / "obs.csv";
  REQUIRE(run({"simulate", "--model", data_path("m2_family.json"), "--n", "30", "--out", csv.string()}).code == 0);
  const Run a = run({"profile", "--model", data_path("m2_family.json"), "--obs", csv.string(), "--component", "mu",
                     "--values", "-0.5,0,0.5"});
  CHECK(a.code == cli::kOk);
  CHECK(std::count(a.out.begin(), a.out.end(), '\n') == 4);
  const Run b = run({"profile", "--model", data_path("m2_family.json"), "--obs", csv.string(), "--component", "mu",
                     "--from", "-0.5", "--to", "0.5", "--points", "3"});
  CHECK(b.out == a.out);
  const Run bad = run({"profile", "--model", data_path("m2_family.json"), "--obs", csv.string(), "--component",
                       "nope", "--values", "0"});
  CHECK(bad.code == cli::kValidation);
  fs::remove_all(dir);
}

TEST_CASE("validation failures exit with 1") {
  CHECK(run({}).code == cli::kValidation);
  CHECK(run({"frobnicate"}).code == cli::kValidation);
  CHECK(run({"loglik", "--model", data_path("m2.json"), "--obs", data_path("obs00.csv"), "--bogus"}).code ==
        cli::kValidation);
  CHECK(run({"loglik", "--model", "/nonexistent.json", "--obs", data_path("obs00.csv")}).code == cli::kValidation);
  CHECK(run({"loglik", "--model", data_path("m2.json")}).code == cli::kValidation);
  CHECK(run({"check-degeneracy", "--model", data_path("m2.json"), "--n", "5"}).code == cli::kValidation);
  CHECK(run({"check-c5", "--bounds", "2,1"}).code == cli::kValidation);

  const fs::path dir = scratch("invalid");
  std::ofstream(dir / "bad.csv") << "t,x\n0,1\n";
  const Run r = run({"loglik", "--model", data_path("m2.json"), "--obs", (dir / "bad.csv").string()});
  CHECK(r.code == cli::kValidation);
  CHECK(contains(r.err, "bad.csv:1:"));
  fs::remove_all(dir);
}

TEST_CASE("numerical failures exit with 2") {
  const fs::path dir = scratch("numerical");
  std::ofstream(dir / "table.json") << R"({
    "grid": {"points": [0, 1]},
    "transition": {"matrix": [[0.5, 0.5], [0.5, 0.5]]},
    "emission": {"family": "table", "params": {"symbols": [0, 1], "table": [[1, 0], [1, 0]]}}
  })";
  std::ofstream(dir / "obs.csv") << "xi\n0\n1\n";
  const Run r = run({"loglik", "--model", (dir / "table.json").string(), "--obs", (dir / "obs.csv").string()});
  CHECK(r.code == cli::kNumerical);
  CHECK(contains(r.err, "impossible observation at step 1"));

  // An iteration cap too small to converge.
  REQUIRE(run({"simulate", "--model", data_path("m2_family.json"), "--n", "200", "--out", (dir / "s.csv").string()})
              .code == 0);
  const Run fit = run({"fit", "--model", data_path("m2_family.json"), "--obs", (dir / "s.csv").string(),
                       "--perturb", "0.5", "--max-iter", "1"});
  CHECK(fit.code == cli::kNumerical);
  CHECK(contains(fit.out, "\"converged\": false"));
  fs::remove_all(dir);
}

TEST_CASE("fit converges from a perturbed start and writes a trace") {
  const fs::path dir = scratch("fit");
  REQUIRE(run({"simulate", "--model", data_path("m2_family.json"), "--n", "500", "--seed", "11", "--out",
               (dir / "s.csv").string()})
              .code == 0);
  const Run fit = run({"fit", "--model", data_path("m2_family.json"), "--obs", (dir / "s.csv").string(), "--perturb",
                       "0.3", "--trace", (dir / "trace.csv").string(), "--out", (dir / "fit.json").string()});
  CHECK(fit.code == cli::kOk);
  const auto doc = nlohmann::json::parse(slurp(dir / "fit.json"));
  CHECK(doc.at("converged") == true);
  CHECK(doc.at("theta_hat").at("names") == nlohmann::json({"a01", "a10", "mu"}));
  CHECK(contains(slurp(dir / "trace.csv"), "iteration,log_lik,score_norm,a01,a10,mu\n0,"));
  fs::remove_all(dir);
}

TEST_CASE("version flag") {
  const Run r = run({"--version"});
  CHECK(r.code == cli::kOk);
  CHECK(contains(r.out, "0.1.0"));
}
