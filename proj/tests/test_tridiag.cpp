#include <cmath>
#include <numeric>

#include "doctest.h"

#include "ctrw/errors.hpp"
#include "ctrw/tridiag.hpp"

using namespace ctrw;

namespace {

SdeProblem zero_drift() {
  SdeProblem p;
  p.dim = 1;
  p.domain = DomainSpec::all_space(1);
  p.drift_scalar = [](double) { return 0.0; };
  p.diffusion_scalar = [](double) { return 1.0; };
  p.drift = [](const Vec&) { return Vec(Vec::Zero(1)); };
  p.diffusion = [](const Vec&) { return Mat(Mat::Identity(1, 1)); };
  return p;
}

// Reference values for the cubic oscillator on (0, 2) at x = 1, from an
// independent arbitrary-precision quadrature of the closed forms.
constexpr double kCubicCommittor = 0.1061750761723796;
constexpr double kCubicMfpt = 0.70420944289808596;

}  // namespace

TEST_SUITE("tridiag") {
  TEST_CASE("exact quadrature oracles") {
    SdeProblem p = make_problem("cubic_oscillator");
    CHECK(exact_committor_quadrature(p, 0.0, 2.0, 1.0) == doctest::Approx(kCubicCommittor).epsilon(1e-10));
    CHECK(exact_mfpt_quadrature(p, 0.0, 2.0, 1.0) == doctest::Approx(kCubicMfpt).epsilon(1e-10));
    CHECK(exact_committor_quadrature(p, 0.0, 2.0, 0.0) == doctest::Approx(0.0));
    CHECK(exact_committor_quadrature(p, 0.0, 2.0, 2.0) == doctest::Approx(1.0));
    auto prof = exact_mfpt_profile(p, 0.0, 2.0, {0.5, 1.0, 1.5});
    CHECK(prof[1] == doctest::Approx(kCubicMfpt).epsilon(1e-10));
    auto cp = exact_committor_profile(p, 0.0, 2.0, {0.5, 1.0, 1.5});
    CHECK(cp[0] < cp[1]);
    CHECK(cp[1] < cp[2]);
  }

  TEST_CASE("zero drift: discrete solutions are exact") {
    SdeProblem p = zero_drift();
    Mesh1D m = Mesh1D::uniform(0.0, 0.1, 0, 20);
    Generator1D g(p, m, SchemeId::c1d);
    Tridiag1D tri = build_tridiag(g);
    auto q = committor(tri);
    auto u = mfpt(tri);
    for (size_t k = 0; k < tri.size(); ++k) {
      double x = tri.x[k];
      CHECK(q[k] == doctest::Approx(x / 2.0).epsilon(1e-12));
      CHECK(u[k] == doctest::Approx(x * (2.0 - x) / 2.0).epsilon(1e-12));
    }
  }

  TEST_CASE("stable solves agree with Thomas solves") {
    SdeProblem p = make_problem("cubic_oscillator");
    for (SchemeId s : {SchemeId::c1d, SchemeId::u1d, SchemeId::fv1d}) {
      Mesh1D m = Mesh1D::uniform(0.0, 0.05, -20, 40);
      Generator1D g(p, m, s);
      Tridiag1D tri = build_tridiag(g);
      auto a = committor(tri), b = committor_direct(tri);
      auto c = mfpt(tri), d = mfpt_direct(tri);
      for (size_t k = 0; k < tri.size(); ++k) {
        CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-9));
        CHECK(c[k] == doctest::Approx(d[k]).epsilon(1e-9));
      }
      auto nu = invariant_density(tri).pinned(0, 1.0);
      auto nd = invariant_density_direct(tri);
      for (size_t k = 0; k < tri.size(); ++k) CHECK(nu[k] == doctest::Approx(nd[k]).epsilon(1e-9));
    }
  }

  TEST_CASE("invariant density telescopes the rate ratios") {
    SdeProblem p = make_problem("lognormal_1d");
    Mesh1D m = Mesh1D::log(0.1, 0.0, -30, 30);
    Generator1D g(p, m, SchemeId::c1d);
    Tridiag1D tri = build_tridiag(g);
    InvariantDensity inv = invariant_density(tri);
    CHECK(inv.log_nu[0] == doctest::Approx(0.0));
    for (size_t k = 0; k + 1 < tri.size(); ++k)
      CHECK(inv.log_nu[k + 1] - inv.log_nu[k] == doctest::Approx(std::log(tri.up[k] / tri.down[k + 1])).epsilon(1e-12));
    auto n = inv.normalized();
    CHECK(std::accumulate(n.begin(), n.end(), 0.0) == doctest::Approx(1.0));
    for (double v : n) CHECK(v > 0.0);
  }

  TEST_CASE("second-order convergence of the central committor and MFPT") {
    SdeProblem p = make_problem("cubic_oscillator");
    std::vector<double> eq, eu;
    for (double h : {0.1, 0.05, 0.025}) {
      long n = std::lround(2.0 / h);
      Generator1D g(p, Mesh1D::uniform(0.0, h, 0, n), SchemeId::c1d);
      Tridiag1D tri = build_tridiag(g);
      eq.push_back(std::abs(committor(tri)[n / 2] - kCubicCommittor));
      eu.push_back(std::abs(mfpt(tri)[n / 2] - kCubicMfpt));
    }
    CHECK(std::log2(eq[1] / eq[2]) == doctest::Approx(2.0).epsilon(0.15));
    CHECK(std::log2(eu[1] / eu[2]) == doctest::Approx(2.0).epsilon(0.15));
  }

  TEST_CASE("stationary window grows to capture the mass") {
    SdeProblem p = make_problem("cubic_oscillator");
    Generator1D g(p, Mesh1D::uniform(0.0, 0.1, -5, 5), SchemeId::c1d);
    Tridiag1D tri = stationary_window(g, -5, 5);
    CHECK(tri.x.front() < -3.0);
    CHECK(tri.x.back() > 3.0);
    auto nu = invariant_density(tri);
    CHECK(nu.normalizable);
    auto n = nu.normalized();
    Mesh1D m = g.mesh().with_window(tri.lo, tri.lo + tri.last());
    auto ref = cell_average_density(p, m);
    double l1 = 0.0;
    for (size_t k = 0; k < n.size(); ++k) l1 += std::abs(n[k] - ref[k]);
    CHECK(l1 < 1e-2);
    CHECK(std::accumulate(ref.begin(), ref.end(), 0.0) == doctest::Approx(1.0));
  }
}
