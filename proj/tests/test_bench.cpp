#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "json.hpp"

#include "ctrw/bench.hpp"
#include "ctrw/errors.hpp"

using namespace ctrw;

namespace {

StudySpec spec(const std::string& study, const std::string& problem, SchemeId s, std::vector<double> h) {
  StudySpec sp;
  sp.study = study;
  sp.problem = problem;
  sp.scheme = s;
  sp.h = std::move(h);
  sp.seed = 1;
  return sp;
}

}  // namespace

TEST_SUITE("bench") {
  TEST_CASE("log-log fit recovers an exact power law") {
    std::vector<double> x{0.4, 0.2, 0.1, 0.05}, y;
    for (double v : x) y.push_back(3.0 * v * v);
    SlopeFit f = fit_loglog(x, y);
    CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(f.intercept == doctest::Approx(std::log10(3.0)).epsilon(1e-12));
    CHECK(f.residual < 1e-12);
    CHECK(f.points == 4);
  }

  TEST_CASE("judge applies the slope and residual rule") {
    StudyResult r;
    r.has_fit = true;
    r.fit = {1.9, 0.0, 0.01, 3};
    r.judge(2.0, 0.3);
    CHECK(r.pass);
    r.fit.residual = 0.2;
    r.judge(2.0, 0.3);
    CHECK_FALSE(r.pass);
    r.fit = {1.5, 0.0, 0.01, 3};
    r.judge(2.0, 0.3);
    CHECK_FALSE(r.pass);
  }

  TEST_CASE("spec validation") {
    CHECK_THROWS_AS(validate_spec(spec("density", "cubic_oscillator", SchemeId::c1d, {0.1, 0.2})), Error);
    CHECK_THROWS_AS(validate_spec(spec("density", "cubic_oscillator", SchemeId::c1d, {})), Error);
    CHECK_THROWS_AS(run_study(spec("nope", "cubic_oscillator", SchemeId::c1d, {0.2, 0.1, 0.05})), Error);
    CHECK_NOTHROW(validate_spec(spec("density", "cubic_oscillator", SchemeId::c1d, {0.2, 0.1, 0.05})));
  }

  TEST_CASE("committor study for the central scheme") {
    StudyResult r = run_bvp_study(spec("committor", "cubic_oscillator", SchemeId::c1d, {0.1, 0.05, 0.025}), "committor");
    CHECK(r.has_fit);
    CHECK(r.fit.slope == doctest::Approx(2.0).epsilon(0.1));
    CHECK(r.pass);
  }

  TEST_CASE("density study orders") {
    StudyResult c = run_density_study(spec("density", "cubic_oscillator", SchemeId::c1d, {0.2, 0.1, 0.05}));
    CHECK(c.fit.slope == doctest::Approx(2.0).epsilon(0.15));
    StudyResult u = run_density_study(spec("density", "cubic_oscillator", SchemeId::u1d, {0.2, 0.1, 0.05}));
    CHECK(u.fit.slope == doctest::Approx(1.0).epsilon(0.2));
  }

  TEST_CASE("consistency study") {
    StudySpec sp = spec("consistency", "cubic_oscillator", SchemeId::c1d, {0.2, 0.1, 0.05, 0.025});
    StudyResult r = run_consistency_study(sp);
    CHECK(r.pass);
    sp.scheme = SchemeId::u1d;
    CHECK(run_consistency_study(sp).pass);
  }

  TEST_CASE("log-mesh realizability") {
    StudyResult r = run_log_mesh_realizability(3, 10, 5, 200);
    CHECK(r.pass);
    CHECK(r.rows.size() == 15);
  }

  TEST_CASE("run_study writes csv and summary") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / ("ctrw_bench_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    StudySpec sp = spec("mfpt", "cubic_oscillator", SchemeId::c1d, {0.1, 0.05, 0.025});
    sp.out_dir = dir.string();
    StudyResult r = run_study(sp);
    REQUIRE(fs::exists(dir / "mfpt.csv"));
    REQUIRE(fs::exists(dir / "mfpt_summary.json"));
    std::ifstream in(dir / "mfpt_summary.json");
    nlohmann::json j = nlohmann::json::parse(in);
    CHECK(j.at("pass").get<bool>() == r.pass);
    CHECK(j.contains("slope"));
    fs::remove_all(dir);
    for (const auto& name : study_names()) CHECK_FALSE(name.empty());
  }
}
