#pragma once

#include <vector>

#include "ctrw/generator.hpp"
#include "ctrw/mesh.hpp"
#include "ctrw/model.hpp"

namespace ctrw {

// Birth-death generator on window indices k = 0..N; up[k] = Q_{k,k+1},
// down[k] = Q_{k,k-1}. up[N] and down[0] are the rates leaving the window.
struct Tridiag1D {
  long lo = 0;  // mesh index of k = 0
  std::vector<double> x;
  std::vector<double> up;
  std::vector<double> down;

  size_t size() const { return x.size(); }
  long last() const { return static_cast<long>(x.size()) - 1; }
};

Tridiag1D build_tridiag(const Generator1D& gen, long lo, long hi);
Tridiag1D build_tridiag(const Generator1D& gen);  // mesh window

struct InvariantDensity {
  std::vector<double> log_nu;  // log nu_d with nu_d(x_0) = 1
  bool normalizable = false;   // both edge ratio tests pass
  double right_ratio = 0.0;
  double left_ratio = 0.0;

  // nu_d scaled to sum 1 over the window.
  std::vector<double> normalized() const;
  // nu_d scaled so entry k equals `value`.
  std::vector<double> pinned(size_t k, double value) const;
};

InvariantDensity invariant_density(const Tridiag1D& tri);
std::vector<double> committor(const Tridiag1D& tri);
std::vector<double> mfpt(const Tridiag1D& tri);

// Thomas-algorithm solves used as oracles.
std::vector<double> committor_direct(const Tridiag1D& tri);
std::vector<double> mfpt_direct(const Tridiag1D& tri);
// Solves nu^T Q = 0 on the window with reflecting edges, nu_0 = 1.
std::vector<double> invariant_density_direct(const Tridiag1D& tri);

// Grows the window symmetrically from [lo, hi] until each appended tail block
// carries less than tail_tol of the running mass. Returns the final tridiag.
Tridiag1D stationary_window(const Generator1D& gen, long lo, long hi, double tail_tol = 1e-12,
                            long max_points = 200000);

// Exact continuous quantities on [a, b] by nested adaptive quadrature.
double exact_committor_quadrature(const SdeProblem& problem, double a, double b, double x);
double exact_mfpt_quadrature(const SdeProblem& problem, double a, double b, double x);
std::vector<double> exact_mfpt_profile(const SdeProblem& problem, double a, double b,
                                       const std::vector<double>& xs);
std::vector<double> exact_committor_profile(const SdeProblem& problem, double a, double b,
                                            const std::vector<double>& xs);

// Cell masses of the reference stationary density over the mesh window,
// normalized to sum 1. Cells are bounded by neighbour midpoints.
std::vector<double> cell_average_density(const SdeProblem& problem, const Mesh1D& mesh);

}  // namespace ctrw
