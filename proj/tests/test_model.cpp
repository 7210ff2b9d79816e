#include <cmath>
#include <numbers>

#include "doctest.h"

#include "ctrw/errors.hpp"
#include "ctrw/model.hpp"

using namespace ctrw;

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec vec1(double a) { return Vec::Constant(1, a); }

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("transformed drift solves M mu_tilde = mu") {
    Vec r = transformed_drift(Mat::Identity(2, 2), vec2(3.0, -1.0));
    CHECK(r[0] == doctest::Approx(3.0));
    CHECK(r[1] == doctest::Approx(-1.0));

    Mat M(2, 2);
    M << 2.0, 1.0, 1.0, 2.0;
    Vec t = transformed_drift(M, vec2(1.0, 0.0));
    CHECK(t[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(t[1] == doctest::Approx(-1.0 / 3.0).epsilon(1e-14));

    SdeProblem cubic = make_problem("cubic_oscillator");
    CHECK(transformed_drift(cubic, vec1(2.0))[0] == doctest::Approx(-8.0));
  }

  TEST_CASE("singular diffusion is rejected") {
    Mat M(2, 2);
    M << 1.0, 1.0, 1.0, 1.0;
    CHECK_THROWS_AS(transformed_drift(M, vec2(1.0, 0.0)), Error);
    try {
      transformed_drift(Mat::Zero(1, 1), vec1(1.0));
      FAIL("expected SingularDiffusion");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::SingularDiffusion);
      CHECK(e.exit_code() == 4);
    }
  }

  TEST_CASE("conservative form of the 1D examples") {
    SdeProblem cubic = make_problem("cubic_oscillator");
    CHECK(conservative_form_1d(cubic, 0.0, 1.0).nu == doctest::Approx(std::exp(-0.25)).epsilon(1e-9));
    CHECK(conservative_form_1d(cubic, 0.0, 0.0).U == doctest::Approx(0.0));

    // CIR with beta = alpha = sigma = 1: nu(x) = x^2 exp(-2x) / M(x), M(x) = x / 2.
    SdeProblem c = make_problem("cir");
    double r = conservative_form_1d(c, 1.0, 2.0).nu / conservative_form_1d(c, 1.0, 0.5).nu;
    auto oracle = [](double x) { return std::exp(2.0 * std::log(x) - 2.0 * x) / (0.5 * x); };
    CHECK(r == doctest::Approx(oracle(2.0) / oracle(0.5)).epsilon(1e-8));
  }

  TEST_CASE("zero drift gives nu = 1 / M") {
    SdeProblem p;
    p.dim = 1;
    p.drift_scalar = [](double) { return 0.0; };
    p.diffusion_scalar = [](double x) { return 1.0 + x * x; };
    for (double x : {-2.0, 0.0, 0.5, 3.0})
      CHECK(conservative_form_1d(p, 0.0, x).nu == doctest::Approx(1.0 / (1.0 + x * x)).epsilon(1e-12));
  }

  TEST_CASE("problem catalog") {
    CHECK(make_problem("cir").info.at("boundary") == "natural");
    CHECK(make_problem("cir", {{"alpha", "0.25"}}).info.at("boundary") == "regular");
    CHECK(make_problem("lotka_volterra", {{"k1", "0.25"}}).info.at("regime") == "atomic_at_origin");
    CHECK(make_problem("lotka_volterra").info.at("regime") == "interior");
    CHECK(make_problem("lotka_volterra", {{"k1", "1"}, {"k2", "2"}}).info.at("regime") == "extinction");
    for (const auto& name : problem_names()) CHECK_NOTHROW(make_problem(name));
    try {
      make_problem("no_such_problem");
      FAIL("expected UnknownProblem");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::UnknownProblem);
      CHECK(e.exit_code() == 2);
    }
    CHECK_THROWS_AS(make_problem("cir", {{"sigma", "0"}}), Error);
    CHECK_THROWS_AS(make_problem("lognormal_2d", {{"m12", "2"}}), Error);
  }

  TEST_CASE("lognormal moment closed form") {
    SdeProblem p = make_problem("lognormal_1d");
    // exp(2 e^{-1} log 2 + 2 (1 - e^{-2})), evaluated independently.
    CHECK(*p.reference.moment("x^2", vec1(2.0), 1.0) == doctest::Approx(9.3869331182371187).epsilon(1e-13));
    CHECK(*p.reference.moment("x^2", vec1(3.0), 0.0) == doctest::Approx(9.0));
  }

  TEST_CASE("Lyapunov solve") {
    Mat A(2, 2);
    A << -1.0, 0.5, -0.5, -1.0;
    Mat Q = Mat::Identity(2, 2) * 2.0;
    Mat X = solve_lyapunov(A, Q);
    CHECK((A * X + X * A.transpose() + Q).norm() < 1e-12);
    CHECK((X - X.transpose()).norm() < 1e-14);
    // A = -I gives X = Q / 2.
    CHECK((solve_lyapunov(-Mat::Identity(2, 2), Q) - Mat::Identity(2, 2)).norm() < 1e-12);
  }

  TEST_CASE("linear OU spectrum of a rotation") {
    Mat C(2, 2);
    C << -1.0, 0.5, -0.5, -1.0;
    auto s = linear_ou_spectrum(C, 4);
    REQUIRE(s.size() == 4);
    CHECK(std::abs(s[0]) < 1e-14);
    CHECK(s[1].real() == doctest::Approx(-1.0));
    CHECK(s[2].real() == doctest::Approx(-1.0));
    CHECK(std::abs(s[1].imag()) == doctest::Approx(0.5));
    CHECK(s[3].real() == doctest::Approx(-2.0));
  }
}

TEST_SUITE("colloid") {
  TEST_CASE("pair energy at contact") {
    ColloidParams p;
    // Independent quadrature-free evaluation: 10 - 61.790908101 at r = 2a.
    CHECK(colloid_pair_energy(2.0 * p.a, p) == doctest::Approx(-51.790908101).epsilon(1e-8));
    CHECK(std::abs(colloid_pair_energy(2.0 * p.a, p) - (-51.82)) < 0.05);
    // Beyond D2 only the soft core remains.
    double r = p.D2 + 0.1;
    CHECK(colloid_pair_energy(r, p) == doctest::Approx(p.eps_sc * std::pow(2.0 * p.a / r, 24)).epsilon(1e-14));
    CHECK(colloid_pair_derivative(r, p) < 0.0);
  }

  TEST_CASE("pair derivative matches finite differences") {
    ColloidParams p;
    for (double r : {6.5, 7.0, 7.5, 8.0, 8.5}) {
      double d = 1e-6;
      double fd = (colloid_pair_energy(r + d, p) - colloid_pair_energy(r - d, p)) / (2 * d);
      CHECK(colloid_pair_derivative(r, p) == doctest::Approx(fd).epsilon(1e-5));
    }
  }

  TEST_CASE("cluster force is minus the gradient and sums to zero") {
    ColloidParams p;
    Vec q = icosahedron_cluster(7.5);
    REQUIRE(q.size() == 39);
    for (Eigen::Index i = 0; i < q.size(); ++i) q[i] += 0.05 * std::sin(1.7 * double(i));
    EnergyForce ef = colloid_energy_force(q, p);
    Vec total = Vec::Zero(3);
    for (int k = 0; k < 13; ++k) total += ef.force.segment(3 * k, 3);
    CHECK(total.norm() < 1e-9 * ef.force.norm() + 1e-12);
    for (Eigen::Index i : {0, 5, 17, 38}) {
      Vec qp = q, qm = q;
      double d = 1e-6;
      qp[i] += d;
      qm[i] -= d;
      double fd = -(colloid_energy_force(qp, p).energy - colloid_energy_force(qm, p).energy) / (2 * d);
      CHECK(ef.force[i] == doctest::Approx(fd).epsilon(1e-5));
    }
  }

  TEST_CASE("RPY mobility") {
    ColloidParams p;
    p.n_particles = 1;
    Vec one = Vec::Zero(3);
    Mat M1 = rpy_mobility(one, p).M;
    CHECK((M1 - Mat::Identity(3, 3) / p.zeta()).norm() < 1e-14);

    p.n_particles = 2;
    Vec q = Vec::Zero(6);
    double r = 4.0 * p.R_hydro;
    q[3] = r;
    Mobility mob = rpy_mobility(q, p);
    // Pair block for r >= 2R: (1 + 2R^2/3r^2) I + (1 - 2R^2/r^2) e e^T, over 8 pi eta r.
    double R = p.R_hydro, eta = p.eta_s;
    double par = (1.0 / (8 * std::numbers::pi * eta * r)) * (2.0 - 4.0 * R * R / (3.0 * r * r));
    double perp = (1.0 / (8 * std::numbers::pi * eta * r)) * (1.0 + 2.0 * R * R / (3.0 * r * r));
    CHECK(mob.M(0, 3) == doctest::Approx(par).epsilon(1e-12));
    CHECK(mob.M(1, 4) == doctest::Approx(perp).epsilon(1e-12));
    CHECK((mob.M - mob.M.transpose()).norm() < 1e-15);
    CHECK((mob.sigma * mob.sigma.transpose() - mob.M).norm() < 1e-12 * mob.M.norm());

    p.hydro = false;
    Mat off = rpy_mobility(q, p).M;
    CHECK((off - Mat::Identity(6, 6) / p.zeta()).norm() < 1e-14);
    CHECK(p.zeta() == doctest::Approx(6 * std::numbers::pi * p.eta_s * p.a));
  }

  TEST_CASE("RPY mobility is positive definite for the cluster") {
    ColloidParams p;
    Mat M = rpy_mobility(icosahedron_cluster(2.0 * p.a), p).M;
    Eigen::SelfAdjointEigenSolver<Mat> es(M);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }

  TEST_CASE("icosahedron geometry") {
    Vec q = icosahedron_cluster(1.0);
    // Circumradius of a unit-edge icosahedron: sin(2 pi / 5).
    double rc = std::sin(2 * std::numbers::pi / 5);
    for (int k = 1; k < 13; ++k) CHECK(q.segment(3 * k, 3).norm() == doctest::Approx(rc).epsilon(1e-12));
    CHECK(q.segment(0, 3).norm() == doctest::Approx(0.0));
    int edges = 0;
    for (int i = 1; i < 13; ++i)
      for (int j = i + 1; j < 13; ++j)
        if (std::abs((q.segment(3 * i, 3) - q.segment(3 * j, 3)).norm() - 1.0) < 1e-9) ++edges;
    CHECK(edges == 30);
    // Rg of the 13-particle cluster: sqrt(12 rc^2 / 13).
    CHECK(radius_of_gyration(q) == doctest::Approx(std::sqrt(12.0 / 13.0) * rc).epsilon(1e-12));
  }
}
