// Acceptance runner: one PASS/FAIL line per criterion with indented sub-checks.
//
//   ctrw_acceptance [--criterion N]... [--expect-fail ID[,ID...]]
//
// Without --expect-fail the exit status is 0 iff every sub-check passes. With
// it, the exit status is 0 iff the failing sub-checks are exactly the listed
// ones.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>

#include "ctrw/bench.hpp"
#include "ctrw/cli.hpp"
#include "ctrw/errors.hpp"
#include "ctrw/generator.hpp"
#include "ctrw/mesh.hpp"
#include "ctrw/ssa.hpp"
#include "ctrw/tridiag.hpp"

using namespace ctrw;
namespace fs = std::filesystem;

namespace {

struct Check {
  std::string id;
  bool pass;
  std::string detail;
};

struct Criterion {
  int number;
  std::string name;
  double budget_s;
  std::function<void(std::vector<Check>&)> run;
};

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

std::string slope_detail(const StudyResult& r, double expected, double tol) {
  return fmt("slope %.4f (target %.1f +- %.1f), fit residual %.3f (<= %.2f)", r.fit.slope, expected, tol,
             r.fit.residual, kMaxFitResidual);
}

bool slope_ok(const StudyResult& r, double expected, double tol) {
  return r.has_fit && std::abs(r.fit.slope - expected) <= tol && r.fit.residual <= kMaxFitResidual;
}

StudySpec spec_for(const std::string& study, const std::string& problem, SchemeId scheme, std::vector<double> h) {
  StudySpec s;
  s.study = study;
  s.problem = problem;
  s.scheme = scheme;
  s.h = std::move(h);
  return s;
}

const std::vector<double> kH1D{0.4, 0.2, 0.1, 0.05};
const std::vector<double> kH2D{0.4, 0.3, 0.2, 0.15};
const std::vector<double> kHConsistency{0.2, 0.1, 0.05, 0.025};

// ---------------------------------------------------------------- 1

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double scale = std::abs(b[i]);
    if (scale == 0.0) {
      m = std::max(m, std::abs(a[i]) == 0.0 ? 0.0 : kInf);
      continue;
    }
    m = std::max(m, std::abs(a[i] - b[i]) / scale);
  }
  return m;
}

void oracle_equivalence(std::vector<Check>& out) {
  struct Case {
    std::string problem;
    Mesh1D mesh;
  };
  const std::vector<Case> cases{{"cubic_oscillator", Mesh1D::uniform(0.0, 0.02, -100, 100)},
                                {"lognormal_1d", Mesh1D::log(0.01, 0.0, -100, 100)},
                                {"cir", Mesh1D::log(0.02, 0.0, -100, 100)}};
  for (const auto& c : cases) {
    SdeProblem p = make_problem(c.problem);
    for (SchemeId s : {SchemeId::u1d, SchemeId::c1d, SchemeId::fv1d}) {
      Generator1D gen(p, c.mesh, s);
      Tridiag1D tri = build_tridiag(gen);
      InvariantDensity d = invariant_density(tri);
      std::vector<double> nu(d.log_nu.size());
      for (size_t i = 0; i < nu.size(); ++i) nu[i] = std::exp(d.log_nu[i]);
      double e_nu = max_rel(nu, invariant_density_direct(tri));
      double e_q = max_rel(committor(tri), committor_direct(tri));
      double e_u = max_rel(mfpt(tri), mfpt_direct(tri));
      double worst = std::max({e_nu, e_q, e_u});
      out.push_back({"c1." + scheme_name(s) + "." + c.problem, worst <= 1e-10,
                     fmt("N = %zu, max pointwise rel error: density %.2e, committor %.2e, mfpt %.2e (<= 1e-10)",
                         tri.size() - 1, e_nu, e_q, e_u)});
    }
  }
}

// ---------------------------------------------------------------- 2

void convergence_orders(std::vector<Check>& out) {
  for (SchemeId s : {SchemeId::u1d, SchemeId::c1d}) {
    double expected = s == SchemeId::u1d ? 1.0 : 2.0;
    for (const std::string study : {"density", "mfpt", "committor"}) {
      StudySpec spec = spec_for(study, "cubic_oscillator", s, kH1D);
      if (study != "density") {
        spec.options.set("a", 0.0);
        spec.options.set("b", 2.0);
      }
      StudyResult r = run_study(spec);
      out.push_back({"c2." + study + "." + scheme_name(s), slope_ok(r, expected, 0.3), slope_detail(r, expected, 0.3)});
    }
  }
}

// ---------------------------------------------------------------- 3

void consistency(std::vector<Check>& out) {
  struct Case {
    SchemeId scheme;
    std::string problem;
    Params params;
    Params options;
  };
  const Params none;
  const Params rotational{{"flow", "rotational"}, {"gamma", "0.5"}};
  const Params box{{"lo", "0.5"}, {"hi", "2"}};
  const std::vector<Case> cases{
      {SchemeId::u1d, "cubic_oscillator", none, none},   {SchemeId::c1d, "cubic_oscillator", none, none},
      {SchemeId::fv1d, "cubic_oscillator", none, none},  {SchemeId::u2d, "planar_flow", rotational, none},
      {SchemeId::c2d, "planar_flow", rotational, none},  {SchemeId::c_nd, "lognormal_2d", none, box},
      {SchemeId::u_nd, "lognormal_2d", none, box},       {SchemeId::uu_nd, "lognormal_2d", none, box},
      {SchemeId::generalized, "lognormal_2d", none, box}, {SchemeId::diagdom, "lognormal_2d", none, box}};
  for (const auto& c : cases) {
    StudySpec spec = spec_for("consistency", c.problem, c.scheme, kHConsistency);
    spec.problem_params = c.params;
    spec.options = c.options;
    spec.seed = 1;
    StudyResult r = run_study(spec);
    double thr = scheme_second_order(c.scheme) ? 1.7 : 0.8;
    out.push_back({"c3." + scheme_name(c.scheme), r.metrics.at("sup_slope") >= thr,
                   fmt("%s, 20 states: sup-error Richardson slope %.3f (>= %.1f); per-state median %.3f, min %.3f",
                       c.problem.c_str(), r.metrics.at("sup_slope"), thr, r.metrics.at("median_slope"),
                       r.metrics.at("min_slope"))});
  }
}

// ---------------------------------------------------------------- 4

void cir(std::vector<Check>& out) {
  const std::vector<std::pair<std::string, double>> regimes{{"natural", 1.0}, {"regular", 0.25}};
  for (const auto& [name, alpha] : regimes) {
    StudySpec spec = spec_for("density", "cir", SchemeId::c1d, kH1D);
    spec.problem_params.set("alpha", alpha);
    spec.options.set("mesh", "log");
    SdeProblem p = make_problem("cir", spec.problem_params);
    StudyResult r = run_study(spec);
    out.push_back({"c4.density." + name, slope_ok(r, 2.0, 0.3) && p.info.at("boundary") == name,
                   "boundary " + p.info.at("boundary") + ", " + slope_detail(r, 2.0, 0.3)});

    Generator1D gen(p, Mesh1D::log(0.1, 0.0, -2, 2), SchemeId::c1d);
    RngStream rng(1, 0);
    long i = 0;
    double min_x = kInf;
    const long steps = 100000;
    for (long k = 0; k < steps; ++k) {
      ChannelSet cs = gen.channels(i);
      StepResult st = ssa_step(cs, rng);
      if (st.absorbed()) break;
      i = gen.mesh().nearest_index(cs.targets[st.channel][0]);
      min_x = std::min(min_x, gen.mesh().point(i));
    }
    out.push_back({"c4.positivity." + name, min_x > 0.0 && std::isfinite(min_x),
                   fmt("%ld SSA steps on the log mesh: min state %.3e (> 0)", steps, min_x)});
  }
}

// ---------------------------------------------------------------- 5

void weak(std::vector<Check>& out) {
  StudySpec spec = spec_for("weak", "lognormal_1d", SchemeId::c1d, {0.4, 0.2, 0.1});
  spec.T = 1.0;
  spec.n_paths = 1000000;
  spec.seed = 7;
  spec.options.set("x0", 2.0);
  StudyResult r = run_study(spec);
  const double ref = std::exp(2.0 * std::exp(-1.0) * std::log(2.0) + 2.0 * (1.0 - std::exp(-2.0)));
  double got = r.metrics.at("reference");
  out.push_back({"c5.reference", std::abs(got - ref) <= 1e-12 * ref,
                 fmt("closed-form E_2[X(1)^2] = %.12f, independent evaluation %.12f", got, ref)});
  std::string rows;
  for (const auto& row : r.rows) rows += fmt(" h=%.2f bias %.3e se %.1e;", row[0], row[3], row[2]);
  out.push_back({"c5.resolved", r.metrics.at("resolved_points") >= 2.0,
                 fmt("%.0f of 3 h values with bias > 3 standard errors:", r.metrics.at("resolved_points")) + rows});
  out.push_back({"c5.slope", slope_ok(r, 2.0, 0.5), "10^6 paths, " + slope_detail(r, 2.0, 0.5)});
}

// ---------------------------------------------------------------- 6

void complexity(std::vector<Check>& out) {
  StudySpec spec = spec_for("complexity", "lognormal_1d", SchemeId::c1d, kH1D);
  spec.T = 10.0;
  spec.n_paths = 100;
  spec.seed = 3;
  spec.options.set("x0", 1.0);
  spec.options.set("mesh", "log");
  StudyResult r = run_study(spec);
  out.push_back({"c6.jumps", slope_ok(r, -2.0, 0.1), "mean jump count " + slope_detail(r, -2.0, 0.1)});
  double hs = r.metrics.at("holding_slope"), hr = r.metrics.at("holding_residual");
  out.push_back({"c6.holding", std::abs(hs - 2.0) <= 0.1 && hr <= kMaxFitResidual,
                 fmt("mean holding time slope %.4f (target 2.0 +- 0.1), fit residual %.3f", hs, hr)});
}

// ---------------------------------------------------------------- 7

void holding(std::vector<Check>& out) {
  StudyResult r = run_holding_time_study(make_problem("cubic_oscillator"), 0.25, {10.0});
  const auto& row = r.rows.at(0);  // x, t_star, t_e, t_u, t_c, rel_e, rel_u, rel_c
  out.push_back({"c7.t_u", row[6] < 0.01, fmt("|t^u - t*|/t* = %.4e (< 0.01)", row[6])});
  out.push_back({"c7.t_c", row[7] > 0.99, fmt("|t^c - t*|/t* = %.6f (> 0.99)", row[7])});
  out.push_back({"c7.t_e", row[5] < 0.02, fmt("|t^e - t*|/t* = %.4e (< 0.02)", row[5])});
}

// ---------------------------------------------------------------- 8

void spectrum(std::vector<Check>& out) {
  for (const std::string flow : {"none", "rotational", "extensional", "shear"}) {
    StudySpec spec = spec_for("spectrum", "planar_flow", SchemeId::c2d, kH2D);
    spec.problem_params.set("flow", flow);
    spec.problem_params.set("gamma", 0.5);
    spec.seed = 1;
    SdeProblem p = make_problem("planar_flow", spec.problem_params);
    Window2D w = spectral_window(p, kH2D.back(), 6.0);
    auto cand = window_indices_2d(w.mx, w.my);
    PrunedWindow win = prune(
        cand, [&](const GridIndex& g) { return Vec((Vec(2) << w.mx.point(g[0]), w.my.point(g[1])).finished()); },
        p, w.e_star, 2);
    long missing = 0, inside = 0;
    for (long i = w.mx.lo(); i <= w.mx.hi(); ++i)
      for (long j = w.my.lo(); j <= w.my.hi(); ++j)
        if (std::hypot(w.mx.point(i), w.my.point(j)) <= 4.0) {
          ++inside;
          missing += !win.find({i, j});
        }
    bool ring = std::abs(w.mx.point(w.mx.lo())) > 4.0 && std::abs(w.mx.point(w.mx.hi())) > 4.0;
    out.push_back({"c8.covers." + flow, missing == 0 && ring,
                   fmt("h = 0.15: %ld grid points with |x| <= 4, %ld missing from the pruned window", inside, missing)});

    StudyResult r = run_study(spec);
    const auto& m = r.metrics;
    std::string errs;
    for (double h : kH2D) errs += fmt(" %.3e", m.at("error@" + format_double(h)));
    out.push_back({"c8.decreasing." + flow, m.at("strictly_decreasing") == 1.0,
                   "relative l2 error of top 20 over h = 0.4, 0.3, 0.2, 0.15:" + errs});
    out.push_back({"c8.lambda0." + flow, m.at("lambda0_abs") <= 1e-8 && m.at("max_residual") <= 1e-8,
                   fmt("|lambda_0| = %.2e (<= 1e-8), max eigen-residual %.2e", m.at("lambda0_abs"),
                       m.at("max_residual"))});
    if (flow == "none")
      out.push_back({"c8.lambda1.none", m.at("lambda1_rel_error") <= 0.05,
                     fmt("lambda_1 = %.5f, relative deviation from -1: %.4f (<= 0.05)", m.at("lambda1_re"),
                         m.at("lambda1_rel_error"))});
    out.push_back({"c8.estar." + flow, m.at("estar_doubling_error_change") < 1e-4,
                   fmt("doubling E*: error change %.2e (< 1e-4); raw eigenvalue change %.2e",
                       m.at("estar_doubling_error_change"), m.at("estar_doubling_change"))});
  }
}

// ---------------------------------------------------------------- 9

void realizability(std::vector<Check>& out) {
  StudyResult r = run_log_mesh_realizability(1, 50, 10, 1000);
  out.push_back({"c9.admissible", r.metrics.at("admissible_realizable") == 50.0,
                 fmt("%.0f of 50 admissible M give nonnegative c2d rates at 1000 points", r.metrics.at("admissible_realizable"))});
  out.push_back({"c9.inadmissible", r.metrics.at("inadmissible_rejected") == 10.0,
                 fmt("%.0f of 10 inadmissible M rejected", r.metrics.at("inadmissible_rejected"))});
}

// ---------------------------------------------------------------- 10

void lyapunov(std::vector<Check>& out) {
  SdeProblem p = make_problem("cubic_oscillator");
  auto log_v = polynomial_log_lyapunov(0.2, 1);
  for (double h : {0.25, 0.1}) {
    long n = std::lround(10.0 / h) + 1;
    Generator1D gen(p, Mesh1D::uniform(0.0, h, -n, n), SchemeId::c1d);
    double worst = -kInf;
    long points = 0;
    for (long i = -n; i <= n; ++i) {
      double x = std::abs(gen.mesh().point(i));
      if (x < 3.0 - 1e-12 || x > 10.0 + 1e-12) continue;
      ++points;
      worst = std::max(worst, lyapunov_drift_ratio(gen.channels(i), log_v));
    }
    out.push_back({"c10.h=" + format_double(h), worst < 0.0,
                   fmt("c1d, a = 0.2: max QV/V over %ld grid points with 3 <= |x| <= 10 is %.4g (< 0)", points, worst)});
  }
}

// ---------------------------------------------------------------- 11

void lotka_volterra(std::vector<Check>& out) {
  StudySpec spec = spec_for("lv", "lotka_volterra", SchemeId::c2d, {0.1});
  spec.T = 100.0;
  spec.n_paths = 100;
  spec.seed = 1;
  StudyResult in = run_study(spec);
  out.push_back({"c11.interior", in.metrics.count("regime_interior") != 0 && in.metrics.at("interior_fraction") > 0.95,
                 fmt("k1 = 3, k2 = 1: mass with both coordinates >= 1e-3 is %.5f (> 0.95)",
                     in.metrics.at("interior_fraction"))});
  spec.problem_params.set("k1", 1.0);
  spec.problem_params.set("k2", 2.0);
  StudyResult ex = run_study(spec);
  bool regime = ex.metrics.count("regime_extinction") != 0;
  out.push_back({"c11.marginal", regime && ex.metrics.at("x1_marginal_l1") < 0.1,
                 fmt("k1 = 1, k2 = 2: x1 marginal l1 error %.4f (< 0.1)", ex.metrics.at("x1_marginal_l1"))});
  std::string frac;
  for (double t : {12.5, 25.0, 50.0, 100.0}) frac += fmt(" %.4f", ex.metrics.at("x2_above_floor@" + format_double(t)));
  out.push_back({"c11.x2_decays", ex.metrics.at("x2_decays") == 1.0,
                 "fraction of time with x2 above the floor on (T/2, T] for T = 12.5, 25, 50, 100:" + frac});
  bool positive = in.metrics.at("min_coordinate") > 0.0 && ex.metrics.at("min_coordinate") > 0.0;
  out.push_back({"c11.positive", positive,
                 fmt("min visited coordinate %.3e / %.3e (> 0)", in.metrics.at("min_coordinate"),
                     ex.metrics.at("min_coordinate"))});
}

// ---------------------------------------------------------------- 12

void colloid(std::vector<Check>& out) {
  for (int hydro : {1, 0}) {
    StudySpec spec = spec_for("colloid", "colloid_cluster", SchemeId::c_nd, {0.64, 0.32, 0.16});
    spec.problem_params.set("hydro", std::to_string(hydro));
    spec.n_paths = 8;
    spec.seed = 1;
    StudyResult r = run_study(spec);
    const std::string tag = hydro ? "hydro" : "nohydro";
    const auto& m = r.metrics;
    out.push_back({"c12.finite." + tag, m.at("finite") == 1.0, "8 paths at h = 0.64, 0.32, 0.16: all states finite"});
    out.push_back({"c12.rg." + tag, m.at("final_mean_rg") < 7.68,
                   fmt("mean Rg at 20 t_B = %.3f (< 7.68); initial %.3f", m.at("final_mean_rg"), m.at("initial_rg"))});
    out.push_back({"c12.jump_slope." + tag, slope_ok(r, -2.0, 0.3),
                   fmt("mean jumps %.0f / %.0f / %.0f, ", m.at("mean_jumps@0.64"), m.at("mean_jumps@0.32"),
                       m.at("mean_jumps@0.16")) +
                       slope_detail(r, -2.0, 0.3)});
  }
}

// ---------------------------------------------------------------- 13

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void determinism(std::vector<Check>& out) {
  struct Run {
    std::string name;
    std::string subcommand;
    std::map<std::string, std::string> values;
  };
  const std::vector<Run> runs{
      {"simulate", "simulate",
       {{"problem.name", "cubic_oscillator"}, {"scheme.id", "c1d"}, {"scheme.h", "0.25"}, {"run.T", "20"},
        {"run.n_paths", "16"}, {"run.seed", "5"}}},
      {"density", "convergence",
       {{"problem.name", "cubic_oscillator"}, {"scheme.id", "c1d"}, {"study.name", "density"}, {"run.seed", "1"}}},
      {"weak", "convergence",
       {{"problem.name", "lognormal_1d"}, {"scheme.id", "c1d"}, {"study.name", "weak"}, {"run.seed", "3"},
        {"run.n_paths", "2000"}, {"study.h_list", "0.4,0.2,0.1"}}},
      {"complexity", "convergence",
       {{"problem.name", "lognormal_1d"}, {"scheme.id", "c1d"}, {"study.name", "complexity"}, {"run.seed", "2"},
        {"run.n_paths", "20"}, {"run.T", "2"}}},
      {"spectrum", "spectrum",
       {{"problem.name", "planar_flow"}, {"problem.flow", "rotational"}, {"scheme.id", "c2d"}, {"scheme.h", "0.4"},
        {"run.seed", "1"}}},
      {"lv", "convergence",
       {{"problem.name", "lotka_volterra"}, {"scheme.id", "c2d"}, {"study.name", "lv"}, {"study.h_list", "0.2"},
        {"run.T", "10"}, {"run.n_paths", "12"}, {"run.seed", "4"}}},
      {"colloid", "colloid",
       {{"run.seed", "6"}, {"run.n_paths", "3"}, {"study.horizon", "0.5"}, {"study.h_list", "0.64,0.32,0.16"}}}};
  const fs::path root = fs::temp_directory_path() / ("ctrw_acceptance_" + std::to_string(::getpid()));
  const char* saved = std::getenv("CTRW_THREADS");
  const std::string saved_value = saved ? saved : "";
  for (const auto& run : runs) {
    const fs::path dir = root / run.name;
    std::vector<std::map<std::string, std::string>> snapshots;
    for (const char* threads : {"1", "3"}) {
      ::setenv("CTRW_THREADS", threads, 1);
      std::error_code ec;
      fs::remove_all(dir, ec);
      RunConfig cfg;
      cfg.subcommand = run.subcommand;
      cfg.values = run.values;
      cfg.values["output.dir"] = dir.string();
      std::ostringstream log;
      dispatch(cfg, log);
      std::map<std::string, std::string> snap;
      for (const auto& e : fs::directory_iterator(dir)) snap[e.path().filename().string()] = read_file(e.path());
      snapshots.push_back(std::move(snap));
    }
    size_t differing = 0;
    for (const auto& [name, bytes] : snapshots[0]) {
      auto it = snapshots[1].find(name);
      differing += it == snapshots[1].end() || it->second != bytes;
    }
    differing += snapshots[1].size() > snapshots[0].size() ? snapshots[1].size() - snapshots[0].size() : 0;
    const size_t files = snapshots[0].size();
    out.push_back({"c13." + run.name, differing == 0 && files >= 2,
                   fmt("%zu output files, %zu differ between runs (CTRW_THREADS = 1 vs 3)", files, differing)});
  }
  if (saved)
    ::setenv("CTRW_THREADS", saved_value.c_str(), 1);
  else
    ::unsetenv("CTRW_THREADS");
  std::error_code ec;
  fs::remove_all(root, ec);
}

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {1, "oracle_equivalence", 5, oracle_equivalence},
      {2, "convergence_orders", 30, convergence_orders},
      {3, "generator_consistency", 10, consistency},
      {4, "cir", 60, cir},
      {5, "weak_accuracy", 600, weak},
      {6, "complexity", 300, complexity},
      {7, "holding_time_asymptotics", 1, holding},
      {8, "ou_spectrum", 120, spectrum},
      {9, "log_mesh_realizability", 10, realizability},
      {10, "lyapunov_drift", 1, lyapunov},
      {11, "lotka_volterra", 600, lotka_volterra},
      {12, "colloid", 1800, colloid},
      {13, "determinism", kInf, determinism},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria runner"};
  std::vector<int> selected;
  std::vector<std::string> expected_fail;
  app.add_option("--criterion", selected, "criterion number (repeatable; default all)")->check(CLI::Range(1, 13));
  app.add_option("--expect-fail", expected_fail, "sub-check ids expected to fail")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  std::set<std::string> failed;
  for (const auto& c : criteria()) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.number) == selected.end()) continue;
    std::vector<Check> checks;
    auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(checks);
    } catch (const Error& e) {
      checks.push_back({"c" + std::to_string(c.number) + ".error", false,
                        std::string(kind_name(e.kind())) + ": " + e.what()});
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (std::isfinite(c.budget_s))
      checks.push_back({"c" + std::to_string(c.number) + ".runtime", secs < c.budget_s,
                        fmt("%.2f s (< %.0f s)", secs, c.budget_s)});
    size_t passed = 0;
    for (const auto& ch : checks) {
      passed += ch.pass;
      if (!ch.pass) failed.insert(ch.id);
    }
    std::cout << (passed == checks.size() ? "PASS" : "FAIL") << " criterion " << c.number << " " << c.name << ": "
              << passed << "/" << checks.size() << " sub-checks, " << fmt("%.2f s", secs) << "\n";
    for (const auto& ch : checks)
      std::cout << "    " << (ch.pass ? "pass " : "FAIL ") << ch.id << "  " << ch.detail << "\n";
    std::cout.flush();
  }
  if (expected_fail.empty()) return failed.empty() ? 0 : 1;
  std::set<std::string> expected(expected_fail.begin(), expected_fail.end());
  if (failed == expected) {
    std::cout << "failures match the expected set:";
    for (const auto& id : expected) std::cout << " " << id;
    std::cout << "\n";
    return 0;
  }
  std::cout << "failures differ from the expected set\n";
  for (const auto& id : failed)
    if (!expected.count(id)) std::cout << "    unexpected failure " << id << "\n";
  for (const auto& id : expected)
    if (!failed.count(id)) std::cout << "    expected failure did not occur " << id << "\n";
  return 1;
}
