#include <cmath>

#include "doctest.h"

#include "ctrw/bench.hpp"
#include "ctrw/errors.hpp"
#include "ctrw/spectral.hpp"
#include "ctrw/tridiag.hpp"

using namespace ctrw;

namespace {

double dense(const SparseRM& Q, Eigen::Index i, Eigen::Index j) { return Q.coeff(i, j); }

}  // namespace

TEST_SUITE("spectral") {
  TEST_CASE("1D assembly matches the tridiagonal generator") {
    SdeProblem p = make_problem("cubic_oscillator");
    Generator1D g(p, Mesh1D::uniform(0.0, 0.1, -15, 15), SchemeId::c1d);
    TruncatedQMatrix m = assemble(g);
    Tridiag1D tri = build_tridiag(g);
    REQUIRE(m.size() == tri.size());
    for (size_t k = 0; k + 1 < tri.size(); ++k) {
      Eigen::Index r = m.row_of({tri.lo + long(k), 0}), s = m.row_of({tri.lo + long(k) + 1, 0});
      CHECK(dense(m.Q, r, s) == doctest::Approx(tri.up[k]));
      CHECK(dense(m.Q, s, r) == doctest::Approx(tri.down[k + 1]));
    }
    CHECK(is_irreducible(m.Q));
  }

  TEST_CASE("rows of the truncated generator sum to zero") {
    SdeProblem p = make_problem("planar_flow", {{"flow", "rotational"}});
    Window2D w = spectral_window(p, 0.4, 3.0);
    Generator2D g(p, w.mx, w.my, SchemeId::c2d);
    TruncatedQMatrix m = assemble(g, w.e_star);
    Vec ones = Vec::Ones(Eigen::Index(m.size()));
    CHECK((m.Q * ones).cwiseAbs().maxCoeff() < 1e-9 * m.max_rate);
    for (Eigen::Index r = 0; r < m.Q.outerSize(); ++r)
      for (SparseRM::InnerIterator it(m.Q, r); it; ++it)
        if (it.col() != r) CHECK(it.value() >= 0.0);
    CHECK(is_irreducible(m.Q));
  }

  TEST_CASE("symmetric periodic walk has a uniform stationary density") {
    SdeProblem p;
    p.dim = 1;
    p.domain = DomainSpec::box({Interval{0.0, 1.0, true, false}}, true);
    p.drift_scalar = [](double) { return 0.0; };
    p.diffusion_scalar = [](double) { return 1.0; };
    p.drift = [](const Vec&) { return Vec(Vec::Zero(1)); };
    p.diffusion = [](const Vec&) { return Mat(Mat::Identity(1, 1)); };
    Generator1D g(p, Mesh1D::periodic(0.0, 1.0, 16), SchemeId::c1d);
    TruncatedQMatrix m = assemble(g);
    REQUIRE(m.size() == 16);
    Vec pi = stationary_density(m);
    for (Eigen::Index k = 0; k < pi.size(); ++k) CHECK(pi[k] == doctest::Approx(1.0 / 16.0).epsilon(1e-9));
    // Circulant spectrum: -(4/h^2) sin^2(pi j / n).
    EigenResult e = leading_eigenvalues(m, 3);
    double h = 1.0 / 16.0, s = std::sin(std::numbers::pi / 16.0);
    CHECK(std::abs(e.values[0]) < 1e-8);
    CHECK(e.values[1].real() == doctest::Approx(-4.0 / (h * h) * s * s).epsilon(1e-8));
    CHECK(e.values[2].real() == doctest::Approx(-4.0 / (h * h) * s * s).epsilon(1e-8));
  }

  TEST_CASE("reducible matrices are detected") {
    SparseRM Q(3, 3);
    Q.insert(0, 1) = 1.0;
    Q.insert(0, 0) = -1.0;
    Q.insert(1, 0) = 1.0;
    Q.insert(1, 1) = -1.0;
    Q.makeCompressed();
    CHECK_FALSE(is_irreducible(Q));
  }

  TEST_CASE("OU reference") {
    OuReference ref = ou_reference(-Mat::Identity(2, 2), Mat::Identity(2, 2));
    CHECK((ref.stationary_covariance() - Mat::Identity(2, 2)).norm() < 1e-12);
    CHECK((ref.covariance(50.0) - Mat::Identity(2, 2)).norm() < 1e-12);
    CHECK(ref.covariance(0.0).norm() < 1e-14);
    Vec x0 = Vec::Ones(2);
    CHECK(ref.mean(x0, 1.0)[0] == doctest::Approx(std::exp(-1.0)));
    Mat unstable = Mat::Identity(2, 2);
    CHECK_THROWS_AS(ou_reference(unstable, Mat::Identity(2, 2)).stationary_covariance(), Error);

    Mat C(2, 2);
    C << -1.0, 0.5, -0.5, -1.0;
    auto s = ou_spectrum(C, 6);
    CHECK(std::abs(s[0]) < 1e-14);
    CHECK(s[1].real() == doctest::Approx(-1.0));
    CHECK(s[1].imag() == doctest::Approx(0.5));
    CHECK(s[2].imag() == doctest::Approx(-0.5));
  }

  TEST_CASE("greedy matching") {
    std::vector<Complex> ref{{0, 0}, {-1, 1}, {-1, -1}, {-2, 0}};
    std::vector<Complex> got{{-1.01, -1}, {0, 0}, {-2.02, 0}, {-0.99, 1}};
    auto idx = greedy_match(got, ref);
    CHECK(idx == std::vector<size_t>{2, 0, 3, 1});
    double err = matched_relative_error(got, ref);
    double oracle = std::sqrt((0.01 * 0.01 + 0.02 * 0.02 + 0.01 * 0.01) / 8.0);
    CHECK(err == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(matched_relative_error(ref, ref) == 0.0);
  }

  TEST_CASE("Schur swap preserves the product") {
    Eigen::MatrixXcd T(3, 3);
    T << Complex(1, 0), Complex(2, 1), Complex(0, 1), 0, Complex(-1, 2), Complex(3, 0), 0, 0, Complex(0.5, -1);
    Eigen::MatrixXcd Z = Eigen::MatrixXcd::Identity(3, 3);
    Eigen::MatrixXcd A = Z * T * Z.adjoint();
    swap_schur(T, Z, 0);
    CHECK((Z * T * Z.adjoint() - A).norm() < 1e-12);
    CHECK(std::abs(T(0, 0) - Complex(-1, 2)) < 1e-12);
    CHECK(std::abs(T(1, 1) - Complex(1, 0)) < 1e-12);
    CHECK(std::abs(T(1, 0)) < 1e-12);
    CHECK((Z.adjoint() * Z - Eigen::MatrixXcd::Identity(3, 3)).norm() < 1e-12);
  }

  TEST_CASE("rotational OU spectrum converges at second order") {
    SdeProblem p = make_problem("planar_flow", {{"flow", "rotational"}, {"gamma", "0.5"}});
    auto ref = p.reference.spectrum(6);
    std::vector<double> err;
    for (double h : {0.3, 0.15}) {
      Window2D w = spectral_window(p, h, 6.0);
      Generator2D g(p, w.mx, w.my, SchemeId::c2d);
      EigenResult e = leading_eigenvalues(assemble(g, w.e_star), 6);
      for (double r : e.residuals) CHECK(r < 1e-6);
      err.push_back(matched_relative_error(e.values, ref));
    }
    CHECK(err[0] < 0.05);
    CHECK(std::log2(err[0] / err[1]) == doctest::Approx(2.0).epsilon(0.15));
  }

  TEST_CASE("stationary density of the 2D chain approaches the Gaussian") {
    SdeProblem p = make_problem("planar_flow", {{"flow", "none"}});
    Window2D w = spectral_window(p, 0.25, 6.0);
    Generator2D g(p, w.mx, w.my, SchemeId::c2d);
    TruncatedQMatrix m = assemble(g, w.e_star);
    Vec pi = stationary_density(m);
    auto ref = cell_average_density_2d(p, g, m);
    double l1 = 0.0;
    for (Eigen::Index k = 0; k < pi.size(); ++k) {
      CHECK(pi[k] >= 0.0);
      l1 += std::abs(pi[k] - ref[size_t(k)]);
    }
    CHECK(pi.sum() == doctest::Approx(1.0));
    CHECK(l1 < 0.02);
  }
}
