#include "cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "hoinf");
  std::ostringstream out, err;
  const int code = hoinf::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("fit with a missing dataset is a validation error with no output") {
  const Result r = run({"fit", "--data", "no_such_file.csv"});
  CHECK(r.code == 1);
  CHECK(r.out.empty());
  CHECK(r.err.find("dataset not found") != std::string::npos);
}

TEST_CASE("infer is byte-identical across runs and carries the config") {
  const Result a = run({"infer", "--value", "1"});
  const Result b = run({"infer", "--value", "1"});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  const auto j = nlohmann::json::parse(a.out);
  CHECK(j["config"]["df"] == 7.0);
  CHECK(j["config"]["prior"] == "flat-log-sigma");
  CHECK(j["result"]["points"][0]["frequentist"]["tail"] == 0.1052548);
}

TEST_CASE("fit leaves its input file untouched") {
  const char* fixture = std::getenv("HOINF_DATA_FIXTURE");
  REQUIRE(fixture != nullptr);
  const std::string before = read_file(fixture);
  const auto mtime = std::filesystem::last_write_time(fixture);
  const Result r = run({"fit", "--data", fixture, "--value", "1"});
  CHECK(r.code == 0);
  CHECK(read_file(fixture) == before);
  CHECK(std::filesystem::last_write_time(fixture) == mtime);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["result"]["full"]["theta_hat"]["beta"] == 0.650402);
  CHECK(j["result"]["constrained"][0]["theta_hat"]["alpha"] == -1.366699);
}

TEST_CASE("PAPER_DATA overrides the bundled dataset") {
  const std::string path = "hoinf_cli_alt.csv";
  {
    std::ofstream f(path);
    f << "x,y\n0,0.1\n1,1.3\n2,1.8\n3,3.4\n4,3.9\n";
  }
  setenv("PAPER_DATA", path.c_str(), 1);
  const Result r = run({"bootstrap", "--exact", "--value", "1"});
  unsetenv("PAPER_DATA");
  std::filesystem::remove(path);
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["config"]["data_source"] == "PAPER_DATA");
  CHECK(j["result"]["rows"][0]["count"] == 3125);
}

TEST_CASE("stochastic commands require a seed and echo it") {
  CHECK(run({"mcmc", "--N", "2000"}).code == 1);
  CHECK(run({"bootstrap", "--mc", "2000"}).code == 1);
  const Result r = run({"mcmc", "--N", "2000", "--seed", "4", "--proposal", "student:7"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["config"]["seed"] == 4);
  CHECK(j["result"]["seed"] == 4);
  CHECK(j["result"]["proposal"] == "student:7");
}

TEST_CASE("invalid settings are validation errors") {
  CHECK(run({"mcmc", "--seed", "1", "--proposal", "gibbs"}).code == 1);
  CHECK(run({"mcmc", "--seed", "1", "--target", "prior"}).code == 1);
  CHECK(run({"bootstrap", "--exact", "--mc", "5000", "--seed", "1"}).code == 1);
  CHECK(run({"infer"}).code == 1);
  CHECK(run({"infer", "--value", "1", "--prior", "uniform"}).code == 1);
  CHECK(run({"curve", "--kind", "quartic"}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({}).code == 1);
}

TEST_CASE("numerical failures exit 2 and name the module") {
  const Result r = run({"moments", "--halfwidth", "0.05"});
  CHECK(r.code == 2);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["status"] == "failed");
  CHECK(j["result"]["module"] == "moments");
}

TEST_CASE("key=value configuration file") {
  const std::string path = "hoinf_cli_test.cfg";
  {
    std::ofstream f(path);
    f << "# example configuration\ndf=7\nvalue=1.5\nprior=flat-log-sigma\n";
  }
  const Result r = run({"--config", path, "infer"});
  std::filesystem::remove(path);
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["config"]["values"][0] == 1.5);
  CHECK(j["result"]["points"][0]["frequentist"]["tail"] == 0.007251316);
}

TEST_CASE("curve emits CSV with a config header and seven significant digits") {
  const Result r = run({"curve", "--kind", "slr", "--lo", "0", "--hi", "2", "--steps", "3"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("# command=curve\n") != std::string::npos);
  CHECK(r.out.find("psi,tail\n0,") != std::string::npos);
  CHECK(r.out.find("\n1,0.05773768\n") != std::string::npos);
}

TEST_CASE("paper-tables passes every deterministic cell") {
  const Result r = run({"paper-tables"});
  CHECK(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["result"]["failed"] == 0);
  CHECK(j["result"]["passed"].get<int>() >= 40);
}

TEST_CASE("embedded expectations are valid JSON") {
  const auto j = nlohmann::json::parse(hoinf::cli::embedded_expectations());
  CHECK(j.contains("deterministic"));
  CHECK(j["behrens_fisher"]["cells"].size() == 12);
}
