#include "doctest.h"
#include "hbbm/cli.hpp"
#include "hbbm/engine.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace hbbm::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("hbbm_cli_test_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Invocation parse_line(std::vector<std::string> args) { return parse(args); }

int run_line(std::vector<std::string> args) {
  std::ostringstream log;
  return execute(parse(args), log);
}

}  // namespace

TEST_CASE("simulate defaults") {
  const auto inv = parse_line({"simulate", "--beta", "1", "--horizon", "6", "--seed", "7"});
  CHECK(inv.subcommand == "simulate");
  CHECK(inv.config["beta"] == 1.0);
  CHECK(inv.config["horizon"] == 6.0);
  CHECK(inv.config["dt"] == 0.01);
  CHECK(inv.config["lambda"] == 0.0);
  CHECK(inv.config["seed"] == 7);
  CHECK(inv.threads == 0);
  CHECK_FALSE(inv.strict);
}

TEST_CASE("usage errors") {
  CHECK_THROWS_AS(parse_line({"simulate", "--horizon", "2"}), UsageError);
  CHECK_THROWS_AS(parse_line({"simulate", "--beta", "1", "--horizon", "2", "--nope", "3"}), UsageError);
  CHECK_THROWS_AS(parse_line({"simulate", "--beta", "one", "--horizon", "2"}), UsageError);
  CHECK_THROWS_AS(parse_line({}), UsageError);
  CHECK_THROWS_AS(parse_line({"simulate", "exitlaw"}), UsageError);
  CHECK_THROWS_AS(parse_line({"exitlaw", "--samples", "-5"}), UsageError);
}

TEST_CASE("range errors name the field") {
  TempDir dir;
  auto inv = parse_line({"simulate", "--beta", "-1", "--horizon", "2", "--out", dir.path.string()});
  std::ostringstream log;
  try {
    execute(inv, log);
    FAIL("expected a validation error");
  } catch (const hbbm::ConfigError& e) {
    CHECK(e.field() == "beta");
    CHECK(std::string(e.what()).find("beta") != std::string::npos);
  }
  inv = parse_line({"simulate", "--beta", "1", "--horizon", "2", "--dt", "0", "--out", dir.path.string()});
  CHECK_THROWS_WITH_AS(execute(inv, log), doctest::Contains("dt"), hbbm::ConfigError);
}

TEST_CASE("flags override the config file") {
  TempDir dir;
  const auto file = dir.path / "c.json";
  std::ofstream(file) << R"({"beta": 0.5, "horizon": 2, "seed": 11})";
  const auto inv = parse_line({"simulate", "--config", file.string(), "--beta", "0.25"});
  CHECK(inv.config["beta"] == 0.25);
  CHECK(inv.config["horizon"] == 2.0);
  CHECK(inv.config["seed"] == 11);

  std::ofstream(dir.path / "bad.json") << R"({"beta": 0.5, "horizon": 2, "betta": 1})";
  CHECK_THROWS_AS(parse_line({"simulate", "--config", (dir.path / "bad.json").string()}), UsageError);
  std::ofstream(dir.path / "other.json") << R"({"subcommand": "exitlaw", "t": 1})";
  CHECK_THROWS_AS(parse_line({"simulate", "--config", (dir.path / "other.json").string()}),
                  UsageError);
  CHECK_THROWS_AS(parse_line({"simulate", "--config", (dir.path / "missing.json").string()}),
                  UsageError);
}

TEST_CASE("random seeds are drawn and recorded") {
  const auto inv = parse_line({"exitlaw", "--seed", "random"});
  CHECK(inv.seed_drawn);
  CHECK(inv.config["seed"].is_number_unsigned());
}

TEST_CASE("help lists every flag") {
  const auto inv = parse_line({"dimension", "--help"});
  CHECK(inv.help);
  for (const char* flag : {"--beta", "--mode", "--mass_floor", "--replicates", "--atoms", "--dt",
                           "--seed", "--threads", "--out", "--config", "--strict"}) {
    CHECK(inv.help_text.find(flag) != std::string::npos);
  }
  CHECK(inv.help_text.find("(radians)") != std::string::npos);
}

TEST_CASE("outputs are self-describing and reproducible") {
  TempDir dir;
  const auto a = dir.path / "a";
  const auto b = dir.path / "b";
  REQUIRE(run_line({"simulate", "--beta", "1", "--horizon", "3", "--seed", "5", "--threads", "1",
                    "--out", a.string()}) == kExitOk);
  for (const char* f : {"particles.csv", "measure.csv", "cdf.csv", "population.csv", "simulate.json",
                        "config.json", "meta.json"}) {
    CHECK(fs::exists(a / f));
  }
  CHECK(slurp(a / "particles.csv").rfind("id,parent,birth_time,x,logY,typical_ok,first_violation\n", 0) == 0);
  CHECK(slurp(a / "measure.csv").rfind("angle,weight,typical\n", 0) == 0);
  CHECK(slurp(a / "cdf.csv").rfind("angle,F\n", 0) == 0);
  CHECK(slurp(a / "meta.json").find("\"cap_hit\": false") != std::string::npos);

  // Re-run from the recorded config with a different thread count.
  REQUIRE(run_line({"simulate", "--config", (a / "config.json").string(), "--threads", "3", "--out",
                    b.string()}) == kExitOk);
  for (const char* f : {"particles.csv", "measure.csv", "cdf.csv", "population.csv", "simulate.json",
                        "config.json"}) {
    CHECK(slurp(a / f) == slurp(b / f));
  }
}

TEST_CASE("population cap is a warning") {
  TempDir dir;
  CHECK(run_line({"simulate", "--beta", "1", "--horizon", "6", "--max_particles", "50", "--out",
                  dir.path.string()}) == kExitOk);
  CHECK(slurp(dir.path / "meta.json").find("\"cap_hit\": true") != std::string::npos);
}

TEST_CASE("strict mode") {
  TempDir dir;
  // A step of 2.5 time units biases the exit law far beyond KS noise.
  const std::vector<std::string> coarse = {"exitlaw", "--t",   "5",   "--dt", "2.5", "--samples",
                                           "10000",   "--out", dir.path.string()};
  CHECK(run_line(coarse) == kExitOk);
  auto strict = coarse;
  strict.push_back("--strict");
  CHECK(run_line(strict) == kExitStrict);
  CHECK(slurp(dir.path / "meta.json").find("\"check_failed\": true") != std::string::npos);
  CHECK(run_line({"exitlaw", "--t", "0", "--samples", "10000", "--strict", "--out",
                  dir.path.string()}) == kExitOk);
  CHECK(run_line({"validate", "--identity", "many-to-two", "--interval", "empty", "--runs", "10",
                  "--strict", "--out", dir.path.string()}) == kExitOk);
}

TEST_CASE("main maps failures to exit statuses") {
  TempDir dir;
  auto call = [](std::vector<std::string> args) {
    std::vector<char*> argv;
    std::string prog = "hbbm";
    argv.push_back(prog.data());
    for (auto& a : args) argv.push_back(a.data());
    return hbbm::cli::main(static_cast<int>(argv.size()), argv.data());
  };
  CHECK(call({"simulate", "--horizon", "1"}) == kExitUsage);
  CHECK(call({"simulate", "--beta", "0", "--horizon", "1", "--out", dir.path.string()}) == kExitUsage);
  CHECK(call({"exitlaw", "--help"}) == kExitOk);
  // An output path below a regular file cannot be created.
  std::ofstream(dir.path / "file") << "x";
  CHECK(call({"exitlaw", "--samples", "10000", "--out", (dir.path / "file" / "sub").string()}) ==
        kExitRuntime);
}
