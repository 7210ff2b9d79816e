#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "doctest.h"

#include "ctrw/cli.hpp"
#include "ctrw/errors.hpp"

using namespace ctrw;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& tag) {
  fs::path d = fs::temp_directory_path() / ("ctrw_cli_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  return d;
}

std::string read(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "ctrw");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

const char* kMinimal = R"(# minimal run
subcommand = simulate
[problem]
name = cubic_oscillator
[scheme]
id = c1d
h = 0.25
[run]
seed = 1
T = 0.5
n_paths = 3
)";

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("minimal config validates") {
    RunConfig cfg = parse_config_text(kMinimal);
    CHECK(cfg.subcommand == "simulate");
    CHECK(cfg.get("problem.name") == "cubic_oscillator");
    CHECK_NOTHROW(validate_config(cfg));
    CHECK(cfg.section("scheme").num("h") == doctest::Approx(0.25));
  }

  TEST_CASE("shorthands map to canonical keys") {
    CHECK(canonical_key("h") == "scheme.h");
    CHECK(canonical_key("seed") == "run.seed");
    CHECK(canonical_key("out") == "output.dir");
    CHECK(canonical_key("run.T") == "run.T");
  }

  TEST_CASE("overrides win and are echoed") {
    RunConfig cfg = parse_config_text(kMinimal);
    apply_override(cfg, "h", "0.125");
    validate_config(cfg);
    CHECK(cfg.get("scheme.h") == "0.125");
    CHECK(cfg.echo().find("h = 0.125") != std::string::npos);
  }

  TEST_CASE("parse errors carry the line number") {
    try {
      parse_config_text("[problem]\nname = cubic_oscillator\nthis line is bad\n");
      FAIL("expected ParseError");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ParseError);
      CHECK(std::string(e.what()).find("3") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config_text("[problem]\nname = a\nname = b\n"), Error);
  }

  TEST_CASE("unknown scheme lists the valid ids") {
    RunConfig cfg = parse_config_text(kMinimal);
    apply_override(cfg, "scheme", "c9d");
    try {
      validate_config(cfg);
      FAIL("expected ValidationError");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ValidationError);
      std::string msg = e.what();
      CHECK(msg.find("c1d") != std::string::npos);
      CHECK(msg.find("gridless") != std::string::npos);
    }
  }

  TEST_CASE("missing seed is rejected") {
    RunConfig cfg = parse_config_text("subcommand = simulate\nproblem = cubic_oscillator\nscheme = c1d\n");
    CHECK_THROWS_AS(validate_config(cfg), Error);
  }

  TEST_CASE("simulate writes outputs and the resolved config") {
    fs::path dir = scratch("sim");
    RunConfig cfg = parse_config_text(kMinimal);
    apply_override(cfg, "out", dir.string());
    validate_config(cfg);
    std::ostringstream log;
    CHECK(dispatch(cfg, log) == 0);
    CHECK(fs::exists(dir / "endpoints.csv"));
    CHECK(fs::exists(dir / "trajectory.csv"));
    std::string echoed = read(dir / "config.txt");
    CHECK(echoed.find("id = c1d") != std::string::npos);
    CHECK(echoed.find("seed = 1") != std::string::npos);

    // Same seed, same bytes.
    std::string first = read(dir / "endpoints.csv");
    CHECK(dispatch(cfg, log) == 0);
    CHECK(read(dir / "endpoints.csv") == first);
    fs::remove_all(dir);
  }

  TEST_CASE("convergence and spectrum subcommands") {
    fs::path dir = scratch("conv");
    CHECK(run({"convergence", "--study", "committor", "--problem", "cubic_oscillator", "--scheme", "c1d", "--seed", "1",
               "--set", "scheme.h=0.1", "--out", dir.string()}) == 0);
    CHECK(fs::exists(dir / "committor.csv"));
    CHECK(fs::exists(dir / "committor_summary.json"));
    fs::path sdir = scratch("spec");
    CHECK(run({"spectrum", "--problem", "planar_flow", "--scheme", "c2d", "--h", "0.4", "--seed", "1", "--out",
               sdir.string()}) == 0);
    CHECK(fs::exists(sdir / "spectrum.csv"));
    fs::remove_all(dir);
    fs::remove_all(sdir);
  }

  TEST_CASE("output formats") {
    fs::path dir = scratch("fmt");
    std::vector<std::string> base{"committor", "--problem", "cubic_oscillator", "--scheme", "c1d", "--seed", "1",
                                  "--h", "0.25", "--set", "run.a=0", "--set", "run.b=2", "--out", dir.string()};
    auto with = [&base](const std::string& f) {
      auto a = base;
      a.push_back("--set");
      a.push_back("output.formats=" + f);
      return a;
    };
    CHECK(run(with("json")) == 0);
    CHECK(fs::exists(dir / "committor.json"));
    CHECK_FALSE(fs::exists(dir / "committor.csv"));
    CHECK(read(dir / "committor.json").find("\"columns\"") != std::string::npos);
    CHECK(run(with("csv,json")) == 0);
    CHECK(fs::exists(dir / "committor.csv"));
    CHECK(run(with("xml")) == 2);
    fs::remove_all(dir);
  }

  TEST_CASE("exit codes follow the error category") {
    fs::path dir = scratch("codes");
    CHECK(run({"simulate", "--problem", "cubic_oscillator", "--scheme", "c9d", "--seed", "1", "--out", dir.string()}) == 2);
    CHECK(run({"simulate", "--problem", "nope", "--scheme", "c1d", "--seed", "1", "--out", dir.string()}) == 2);
    CHECK(run({"simulate", "--problem", "cubic_oscillator", "--scheme", "c1d", "--seed", "1", "--T", "10", "--h", "0.01",
               "--set", "run.step_budget=5", "--out", dir.string()}) == 5);
    CHECK(run({"mfpt", "--problem", "cubic_oscillator", "--scheme", "c1d", "--seed", "1", "--set", "run.a=0", "--set",
               "run.b=2", "--out", dir.string()}) == 2);  // scheme.h missing
    CHECK(run({"mfpt", "--problem", "cubic_oscillator", "--scheme", "c1d", "--seed", "1", "--h", "0.1", "--set",
               "run.a=0", "--set", "run.b=2", "--out", dir.string()}) == 0);
    CHECK(fs::exists(dir / "mfpt.csv"));
    fs::remove_all(dir);
  }
}
