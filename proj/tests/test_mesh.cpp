#include <cmath>

#include "doctest.h"

#include "ctrw/errors.hpp"
#include "ctrw/mesh.hpp"

using namespace ctrw;

TEST_SUITE("mesh") {
  TEST_CASE("uniform mesh") {
    Mesh1D m = Mesh1D::uniform(1.0, 0.25, -4, 4);
    CHECK(m.point(0) == doctest::Approx(1.0));
    CHECK(m.point(-4) == doctest::Approx(0.0));
    CHECK(m.point(4) == doctest::Approx(2.0));
    CHECK(m.size() == 9);
    CHECK(m.dx_plus(2) == doctest::Approx(0.25));
    CHECK(m.dx_minus(2) == doctest::Approx(0.25));
    CHECK(m.nearest_index(1.6) == 2);
    // Uniform meshes are unbounded: indices outside the window still resolve.
    CHECK(m.point(100) == doctest::Approx(26.0));
  }

  TEST_CASE("log mesh spacings") {
    Mesh1D m = Mesh1D::log(0.25, 0.0, -10, 10);
    CHECK(m.point(0) == doctest::Approx(1.0));
    CHECK(m.dx_plus(0) == doctest::Approx(0.2840254166877415).epsilon(1e-12));
    CHECK(m.dx_minus(0) == doctest::Approx(0.2211992169285951).epsilon(1e-12));
    CHECK(m.dx(0) == doctest::Approx(std::sinh(0.25)).epsilon(1e-12));
    for (long i = -10; i < 10; ++i) {
      CHECK(m.point(i) > 0.0);
      CHECK(m.point(i + 1) / m.point(i) == doctest::Approx(std::exp(0.25)));
      CHECK(m.nearest_index(m.point(i)) == i);
    }
  }

  TEST_CASE("periodic mesh wraps") {
    Mesh1D m = Mesh1D::periodic(0.0, 1.0, 10);
    CHECK(m.periodic());
    CHECK(m.point(0) == doctest::Approx(0.05));
    CHECK(m.wrap(10) == 0);
    CHECK(m.wrap(-1) == 9);
    CHECK(m.dx_plus(9) == doctest::Approx(0.1));
  }

  TEST_CASE("2D log mesh for constant log-normal diffusion") {
    LogMesh2D lm = log_mesh_2d(2.0, 1.0, 2.0, 0.1, 1.0, 1.0, 5, 5);
    CHECK(lm.alpha == doctest::Approx(1.25));
    CHECK(log_mesh_2d_conditions(2.0, 1.0, 2.0, lm.alpha, lm.eps));
    CHECK(lm.x.step() == doctest::Approx(lm.alpha * lm.eps));
    CHECK(lm.y.step() == doctest::Approx(lm.eps));

    LogMesh2D diag = log_mesh_2d(1.0, 0.0, 3.0, 0.2, 1.0, 1.0, 3, 3);
    CHECK(diag.alpha == doctest::Approx(1.0));

    try {
      log_mesh_2d(1.0, 2.0, 1.0, 0.1, 1.0, 1.0, 3, 3);
      FAIL("expected InadmissibleDiffusion");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InadmissibleDiffusion);
      CHECK(e.exit_code() == 3);
    }
  }

  TEST_CASE("the chosen eps satisfies the conditions for random admissible M") {
    uint64_t s = 42;
    auto u = [&s] {
      s = s * 6364136223846793005ULL + 1442695040888963407ULL;
      return double(s >> 11) * 0x1.0p-53;
    };
    for (int k = 0; k < 200; ++k) {
      double m11 = 0.1 + 3 * u(), m22 = 0.1 + 3 * u();
      double m12 = (2 * u() - 1) * 0.99 * std::sqrt(m11 * m22);
      LogMesh2D lm = log_mesh_2d(m11, m12, m22, 0.5, 1.0, 1.0, 2, 2);
      CHECK(log_mesh_2d_conditions(m11, m12, m22, lm.alpha, lm.eps));
      CHECK(lm.eps <= 0.5);
    }
  }

  TEST_CASE("pruning keeps exactly the points with |mu| <= E*") {
    SdeProblem p = make_problem("cubic_oscillator");
    Mesh1D m = Mesh1D::uniform(0.0, 0.1, -40, 40);
    auto point = [&m](const GridIndex& g) { return Vec(Vec::Constant(1, m.point(g[0]))); };
    PrunedWindow w = prune(window_indices_1d(m), point, p, 8.0, 1);
    for (long i = m.lo(); i <= m.hi(); ++i) {
      bool keep = std::abs(m.point(i)) <= 2.0 + 1e-12;
      CHECK(w.find({i, 0}).has_value() == keep);
    }
    // Larger E* retains a superset; pruning twice changes nothing.
    PrunedWindow wide = prune(window_indices_1d(m), point, p, 27.0, 1);
    for (const auto& g : w.states) CHECK(wide.find(g).has_value());
    PrunedWindow again = prune(w.states, point, p, 8.0, 1);
    CHECK(again.states == w.states);
    for (size_t k = 0; k < w.size(); ++k) CHECK(*w.find(w.states[k]) == k);
    CHECK_THROWS_AS(prune(window_indices_1d(m), point, p, 0.0, 1), Error);
  }

  TEST_CASE("window indices") {
    Mesh1D a = Mesh1D::uniform(0.0, 1.0, -1, 1), b = Mesh1D::uniform(0.0, 1.0, 0, 3);
    CHECK(window_indices_1d(a).size() == 3);
    CHECK(window_indices_2d(a, b).size() == 12);
  }
}
