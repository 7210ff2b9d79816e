#include <cmath>

#include "doctest.h"

#include "ctrw/bench.hpp"
#include "ctrw/errors.hpp"
#include "ctrw/generator.hpp"
#include "ctrw/tridiag.hpp"

using namespace ctrw;

namespace {

Vec vec1(double a) { return Vec::Constant(1, a); }

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// 2D problem with cubic drift and constant diffusion M.
SdeProblem constant_diffusion_2d(const Mat& M) {
  SdeProblem p;
  p.name = "test_2d";
  p.dim = 2;
  p.domain = DomainSpec::all_space(2);
  p.drift = [](const Vec& x) { return Vec(vec2(-x[0] * x[0] * x[0], -x[1] * x[1] * x[1])); };
  p.diffusion = [M](const Vec&) { return M; };
  p.noise_columns = [M](const Vec&) { return noise_factor(M); };
  p.growth_m = 1;
  return p;
}

}  // namespace

TEST_SUITE("generator") {
  TEST_CASE("scheme names round-trip") {
    for (const auto& name : scheme_names()) CHECK(scheme_name(parse_scheme(name)) == name);
    CHECK_THROWS_AS(parse_scheme("c3d"), Error);
  }

  TEST_CASE("1D rates of the cubic oscillator") {
    SdeProblem p = make_problem("cubic_oscillator");
    Mesh1D m = Mesh1D::uniform(0.0, 0.25, -20, 20);
    Generator1D c1(p, m, SchemeId::c1d), u1(p, m, SchemeId::u1d);
    CHECK(c1.rates(0).up == doctest::Approx(16.0));
    CHECK(c1.rates(0).down == doctest::Approx(16.0));
    // x = 2: mu = -8.
    CHECK(u1.rates(8).up == doctest::Approx(16.0));
    CHECK(u1.rates(8).down == doctest::Approx(48.0));
    CHECK(c1.rates(8).up == doctest::Approx(16.0 * std::exp(-1.0)));
    CHECK(c1.rates(8).down == doctest::Approx(16.0 * std::exp(1.0)));
    // Odd drift: rates mirror.
    for (long i = 1; i < 10; ++i) {
      CHECK(c1.rates(i).up == doctest::Approx(c1.rates(-i).down));
      CHECK(u1.rates(i).down == doctest::Approx(u1.rates(-i).up));
    }
  }

  TEST_CASE("zero drift: upwind and central agree") {
    SdeProblem p;
    p.dim = 1;
    p.domain = DomainSpec::all_space(1);
    p.drift_scalar = [](double) { return 0.0; };
    p.diffusion_scalar = [](double x) { return 1.0 + 0.5 * std::sin(x); };
    p.drift = [](const Vec&) { return Vec(Vec::Zero(1)); };
    p.diffusion = [](const Vec& x) { return Mat(Mat::Constant(1, 1, 1.0 + 0.5 * std::sin(x[0]))); };
    Mesh1D m = Mesh1D::uniform(0.0, 0.1, -10, 10);
    Generator1D c1(p, m, SchemeId::c1d), u1(p, m, SchemeId::u1d);
    for (long i = -10; i <= 10; ++i) {
      CHECK(c1.rates(i).up == doctest::Approx(u1.rates(i).up));
      CHECK(c1.rates(i).down == doctest::Approx(u1.rates(i).down));
    }
  }

  TEST_CASE("fv1d rates satisfy detailed balance with the exact density") {
    SdeProblem p = make_problem("cubic_oscillator");
    Mesh1D m = Mesh1D::uniform(0.0, 0.2, -10, 10);
    Generator1D g(p, m, SchemeId::fv1d);
    auto nu = [](double x) { return std::exp(-std::pow(x, 4) / 4.0); };
    for (long i = -10; i < 10; ++i) {
      double lhs = nu(m.point(i)) * g.rates(i).up;
      double rhs = nu(m.point(i + 1)) * g.rates(i + 1).down;
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
    }
  }

  TEST_CASE("c1d detailed balance on a log mesh") {
    SdeProblem p = make_problem("lognormal_1d");
    Mesh1D m = Mesh1D::log(0.1, 0.0, -30, 30);
    Generator1D g(p, m, SchemeId::c1d);
    for (long i = -30; i < 30; ++i) {
      CHECK(g.rates(i).up > 0.0);
      CHECK(g.rates(i).down > 0.0);
    }
    ChannelSet cs = g.channels(3);
    REQUIRE(cs.targets.size() == 2);
    CHECK(cs.total_rate == doctest::Approx(g.rates(3).total()));
  }

  TEST_CASE("milestone rates reproduce local exit statistics") {
    SdeProblem p = make_problem("cubic_oscillator");
    Mesh1D m = Mesh1D::uniform(0.0, 0.25, -8, 8);
    Generator1D g(p, m, SchemeId::milestone1d);
    Rates1D r = g.rates(4);
    double q = exact_committor_quadrature(p, 0.75, 1.25, 1.0);
    double t = exact_mfpt_quadrature(p, 0.75, 1.25, 1.0);
    CHECK(1.0 / r.total() == doctest::Approx(t).epsilon(1e-9));
    CHECK(r.up / r.total() == doctest::Approx(q).epsilon(1e-9));
  }

  TEST_CASE("2D decoupled problem reduces to two 1D chains") {
    SdeProblem p2 = constant_diffusion_2d(Mat::Identity(2, 2));
    SdeProblem p1 = make_problem("cubic_oscillator");
    Mesh1D m = Mesh1D::uniform(0.0, 0.25, -8, 8);
    Generator2D g2(p2, m, m, SchemeId::c2d);
    Generator1D g1(p1, m, SchemeId::c1d);
    for (long i : {-3L, 0L, 2L})
      for (long j : {-1L, 4L}) {
        Rates2D r = g2.rates(i, j);
        CHECK(r.rate[0] == doctest::Approx(g1.rates(i).up));
        CHECK(r.rate[1] == doctest::Approx(g1.rates(i).down));
        CHECK(r.rate[2] == doctest::Approx(g1.rates(j).up));
        CHECK(r.rate[3] == doctest::Approx(g1.rates(j).down));
        for (int k = 4; k < 8; ++k) CHECK(r.rate[k] == 0.0);
      }
  }

  TEST_CASE("positive correlation uses only the main diagonals") {
    Mat M(2, 2);
    M << 1.0, 0.3, 0.3, 1.0;
    SdeProblem p = constant_diffusion_2d(M);
    Mesh1D m = Mesh1D::uniform(0.0, 0.2, -5, 5);
    for (SchemeId s : {SchemeId::c2d, SchemeId::u2d}) {
      Generator2D g(p, m, m, s);
      for (long i = -3; i <= 3; ++i) {
        Rates2D r = g.rates(i, -i);
        CHECK(r.rate[4] > 0.0);
        CHECK(r.rate[5] > 0.0);
        CHECK(r.rate[6] == 0.0);
        CHECK(r.rate[7] == 0.0);
        for (double v : r.rate) CHECK(v >= 0.0);
      }
    }
  }

  TEST_CASE("central 2D scheme is consistent to second order") {
    Mat M(2, 2);
    M << 1.0, 0.3, 0.3, 1.0;
    SdeProblem p = constant_diffusion_2d(M);
    auto f = [](const Vec& x) { return std::sin(x[0]) * std::cos(0.5 * x[1]) + x[0] * x[1]; };
    Vec x0 = vec2(0.4, -0.3);
    // Lf at x0 by hand.
    double s0 = std::sin(0.4), c0 = std::cos(0.4), sh = std::sin(-0.15), ch = std::cos(-0.15);
    double fx = c0 * ch + x0[1], fy = -0.5 * s0 * sh + x0[0];
    double fxx = -s0 * ch, fyy = -0.25 * s0 * ch, fxy = -0.5 * c0 * sh + 1.0;
    double Lf = -std::pow(x0[0], 3) * fx - std::pow(x0[1], 3) * fy + fxx + 2 * 0.3 * fxy + fyy;
    double prev = 0.0;
    for (double h : {0.02, 0.01}) {
      long n = 10;
      Mesh1D mx = Mesh1D::uniform(x0[0], h, -n, n), my = Mesh1D::uniform(x0[1], h, -n, n);
      Generator2D g(p, mx, my, SchemeId::c2d);
      double err = std::abs(apply(g.channels(0, 0), f) - Lf);
      if (prev > 0.0) CHECK(std::log2(prev / err) > 1.7);
      prev = err;
    }
  }

  TEST_CASE("c_nd steps along the noise columns") {
    Mat M(2, 2);
    M << 2.0, 1.0, 1.0, 2.0;
    SdeProblem p = constant_diffusion_2d(M);
    GeneratorND g(p, SchemeId::c_nd, StepField::uniform(0.1));
    Vec x = vec2(0.3, -0.2);
    ChannelSet cs = g.channels(x);
    REQUIRE(cs.targets.size() == 4);
    Mat L = noise_factor(M);
    CHECK((cs.targets[0] - (x + 0.1 * L.col(0))).norm() < 1e-14);
    CHECK((cs.targets[1] - (x - 0.1 * L.col(0))).norm() < 1e-14);
    Vec mt = transformed_drift(M, p.drift(x));
    CHECK(cs.rates[0] == doctest::Approx(100.0 * std::exp(0.05 * mt.dot(L.col(0)))));
    // Zero drift at the origin: all four rates equal 1/h^2.
    for (double r : g.channels(vec2(0.0, 0.0)).rates) CHECK(r == doctest::Approx(100.0));
  }

  TEST_CASE("generalized with the noise columns equals c_nd") {
    Mat M(2, 2);
    M << 1.5, -0.4, -0.4, 0.8;
    SdeProblem p = constant_diffusion_2d(M);
    GeneratorND a(p, SchemeId::c_nd, StepField::uniform(0.05));
    GeneratorND b(p, SchemeId::generalized, StepField::uniform(0.05));
    for (Vec x : {vec2(0.1, 0.2), vec2(-1.0, 0.5)}) {
      ChannelSet ca = a.channels(x), cb = b.channels(x);
      REQUIRE(ca.rates.size() == cb.rates.size());
      for (size_t k = 0; k < ca.rates.size(); ++k) {
        CHECK(ca.rates[k] == doctest::Approx(cb.rates[k]).epsilon(1e-13));
        CHECK((ca.targets[k] - cb.targets[k]).norm() < 1e-14);
      }
    }
  }

  TEST_CASE("generalized rejects a decomposition that does not reconstruct M") {
    SdeProblem p = constant_diffusion_2d(Mat::Identity(2, 2));
    GeneratorND g(p, SchemeId::generalized, StepField::uniform(0.1));
    g.set_decomposition([](const Vec&, const Mat&) {
      Decomposition d;
      d.w = Vec::Ones(1);
      d.eta = Mat::Identity(2, 1);
      return d;
    });
    try {
      g.channels(vec2(0.0, 0.0));
      FAIL("expected DecompositionMismatch");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DecompositionMismatch);
    }
  }

  TEST_CASE("diagonally dominant decomposition") {
    Mat M(2, 2);
    M << 2.0, 1.0, 1.0, 2.0;
    Decomposition d = diagdom_decomposition(M);
    REQUIRE(d.w.size() == 3);
    CHECK(d.w[0] == doctest::Approx(1.0));
    CHECK(d.w[1] == doctest::Approx(1.0));
    CHECK(d.w[2] == doctest::Approx(1.0));
    CHECK(d.eta.col(2) == vec2(1.0, 1.0));

    uint64_t s = 9;
    auto u = [&s] {
      s = s * 6364136223846793005ULL + 1442695040888963407ULL;
      return double(s >> 11) * 0x1.0p-53;
    };
    for (int k = 0; k < 100; ++k) {
      Mat A = Mat::Zero(3, 3);
      for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) A(i, j) = A(j, i) = 2 * u() - 1;
      for (int i = 0; i < 3; ++i) A(i, i) = A.row(i).cwiseAbs().sum() + u();
      Decomposition dd = diagdom_decomposition(A);
      Mat R = Mat::Zero(3, 3);
      for (Eigen::Index c = 0; c < dd.w.size(); ++c) {
        CHECK(dd.w[c] >= 0.0);
        R += dd.w[c] * dd.eta.col(c) * dd.eta.col(c).transpose();
      }
      CHECK((R - A).norm() < 1e-12);
    }
  }

  TEST_CASE("diagdom axis steps and the dominance check") {
    Mat M(2, 2);
    M << 4.0, 1.0, 1.0, 1.0;
    Vec d = diagdom_axis_steps(M, 0.1);
    CHECK(d[0] == doctest::Approx(0.2));
    CHECK(d[1] == doctest::Approx(0.1));
    Mat bad(2, 2);
    bad << 1.0, 0.9, 0.9, 0.5;
    try {
      diagdom_axis_steps(bad, 0.1);
      FAIL("expected NotDiagonallyDominant");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NotDiagonallyDominant);
      CHECK(e.exit_code() == 3);
    }
    SdeProblem p = constant_diffusion_2d(M);
    GeneratorND g(p, SchemeId::diagdom, StepField::uniform(0.1));
    for (double r : g.channels(vec2(0.2, 0.1)).rates) CHECK(r > 0.0);
  }

  TEST_CASE("gridless step field stays in [1/2, 1]") {
    LatticeNoise xi(5, 0.1);
    uint64_t s = 3;
    auto u = [&s] {
      s = s * 6364136223846793005ULL + 1442695040888963407ULL;
      return double(s >> 11) * 0x1.0p-53;
    };
    for (int k = 0; k < 2000; ++k) {
      double v = xi(vec2(20 * u() - 10, 20 * u() - 10));
      CHECK(v >= 0.5);
      CHECK(v <= 1.0);
    }
    CHECK(LatticeNoise(5, 0.1, true)(vec2(0.3, 0.7)) == 1.0);
    // Deterministic in (seed, x).
    CHECK(LatticeNoise(5, 0.1)(vec2(0.31, -2.0)) == xi(vec2(0.31, -2.0)));
  }

  TEST_CASE("gridless rates are damped at large |x|") {
    SdeProblem p = constant_diffusion_2d(Mat::Identity(2, 2));
    GeneratorND g(p, SchemeId::gridless, StepField::uniform(0.1));
    double near = g.channels(vec2(0.5, 0.0)).total_rate;
    double far = g.channels(vec2(30.0, 0.0)).total_rate;
    CHECK(std::isfinite(far));
    CHECK(far < near);
    Mat M(2, 2);
    M << 1.0, 0.2, 0.2, 1.0;
    GeneratorND bad(constant_diffusion_2d(M), SchemeId::gridless, StepField::uniform(0.1));
    CHECK_THROWS_AS(bad.channels(vec2(0.0, 0.0)), Error);
  }

  TEST_CASE("Lyapunov drift ratio") {
    SdeProblem p = make_problem("cubic_oscillator");
    Mesh1D m = Mesh1D::uniform(0.0, 0.1, -100, 100);
    Generator1D g(p, m, SchemeId::c1d);
    auto logv = polynomial_log_lyapunov(0.2, 1);
    CHECK(logv(vec1(2.0)) == doctest::Approx(0.2 * 16.0));
    for (long i : {40L, 60L, -80L}) CHECK(lyapunov_drift_ratio(g.channels(i), logv) < 0.0);
    // Constant V gives zero.
    CHECK(lyapunov_drift_ratio(g.channels(5), [](const Vec&) { return 0.0; }) == doctest::Approx(0.0));
  }

  TEST_CASE("apply on constants and linear functions") {
    SdeProblem p = make_problem("cubic_oscillator");
    Mesh1D m = Mesh1D::uniform(0.0, 0.05, -50, 50);
    Generator1D g(p, m, SchemeId::c1d);
    ChannelSet cs = g.channels(10);
    CHECK(apply(cs, [](const Vec&) { return 3.0; }) == doctest::Approx(0.0));
    // Q x approximates mu(x) = -0.125 at x = 0.5.
    CHECK(apply(cs, [](const Vec& x) { return x[0]; }) == doctest::Approx(-0.125).epsilon(1e-2));
  }

  TEST_CASE("rate clamping") {
    CHECK(clamp_rate(-1e-14, 1.0, ErrorKind::RealizabilityViolation, "t") == 0.0);
    CHECK(clamp_rate(2.0, 1.0, ErrorKind::RealizabilityViolation, "t") == 2.0);
    CHECK_THROWS_AS(clamp_rate(-1e-6, 1.0, ErrorKind::RealizabilityViolation, "t"), Error);
  }

  TEST_CASE("holding times decrease away from the origin") {
    SdeProblem p = make_problem("cubic_oscillator");
    StudyResult r = run_holding_time_study(p, 0.25, {2.5, 5.0, 10.0});
    REQUIRE(r.rows.size() == 3);
    for (size_t c = 1; c <= 4; ++c) {
      CHECK(r.rows[0][c] > r.rows[1][c]);
      CHECK(r.rows[1][c] > r.rows[2][c]);
    }
    // t* = h / |mu|.
    CHECK(r.rows[2][1] == doctest::Approx(0.25 / 1000.0));
    // At x = 20 the central rate exp(h mu / 2) overflows and is reported, not returned.
    CHECK_THROWS_AS(run_holding_time_study(p, 0.25, {20.0}), Error);
  }
}
