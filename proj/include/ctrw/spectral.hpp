#pragma once

#include <complex>
#include <vector>

#include <Eigen/Sparse>

#include "ctrw/generator.hpp"
#include "ctrw/mesh.hpp"
#include "ctrw/model.hpp"

namespace ctrw {

using Complex = std::complex<double>;
using SparseRM = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Generator restricted to a pruned window. Rates to states outside the
// window are dropped and the diagonal is the negated off-diagonal row sum.
struct TruncatedQMatrix {
  PrunedWindow window;
  std::vector<Vec> points;
  SparseRM Q;
  double max_rate = 0.0;  // largest |diagonal|

  size_t size() const { return window.size(); }
  Eigen::Index row_of(const GridIndex& g) const;
};

// 1D: candidates are the mesh window. 2D: candidates are the product of the
// two mesh windows (all cells for periodic meshes).
TruncatedQMatrix assemble(const Generator1D& gen, double e_star = kInf);
TruncatedQMatrix assemble(const Generator2D& gen, double e_star = kInf);

// Both forward and backward reachability from row 0 cover the window.
bool is_irreducible(const SparseRM& Q);

struct StationaryOptions {
  int max_iterations = 50;
  double tolerance = 1e-10;
};

// Left null vector of Q, nonnegative and summing to 1.
Vec stationary_density(const TruncatedQMatrix& m, const StationaryOptions& opt = {});

struct EigenOptions {
  double shift = 0.01;  // real shift slightly right of 0
  int max_restarts = 400;
  double residual_tol = 1e-8;
  int extra = 10;  // additional eigenvalues computed before selecting by real part
  uint64_t seed = 12345;
};

struct EigenResult {
  std::vector<Complex> values;  // sorted by descending real part
  std::vector<double> residuals;  // ||Q v - lambda v|| / ||v||
  int restarts = 0;
};

// k eigenvalues of largest real part via Krylov-Schur on (Q - shift I)^{-1}.
EigenResult leading_eigenvalues(const SparseRM& Q, int k, const EigenOptions& opt = {});
EigenResult leading_eigenvalues(const TruncatedQMatrix& m, int k, const EigenOptions& opt = {});

// Reference for dY = C Y dt + sqrt(2) sigma dW with sigma sigma^T = M.
struct OuReference {
  Mat C;
  Mat M;
  Vec mean(const Vec& x0, double t) const;
  Mat covariance(double t) const;  // Sigma(t) starting from a point mass
  Mat stationary_covariance() const;  // throws UnstableDrift
  std::vector<Complex> spectrum(int k) const;  // throws UnstableDrift
};

OuReference ou_reference(const Mat& C, const Mat& M);

// First k generator eigenvalues n1 l1 + n2 l2 for a 2x2 stable C,
// sorted by descending real part (ties by imaginary part).
std::vector<Complex> ou_spectrum(const Mat& C, int k);

// Greedy nearest pairing: entry i is the index of the reference value paired
// with computed[i]; each reference value is used at most once.
std::vector<size_t> greedy_match(const std::vector<Complex>& computed, const std::vector<Complex>& reference);

// Greedy nearest pairing of `computed` against `reference`; returns the
// relative l2 error sqrt(sum |c - r|^2 / sum |r|^2).
double matched_relative_error(const std::vector<Complex>& computed, const std::vector<Complex>& reference);

// Schur reordering primitive: swaps diagonal entries k, k+1 of the upper
// triangular T and updates Z so Z T Z^* is preserved.
void swap_schur(Eigen::MatrixXcd& T, Eigen::MatrixXcd& Z, Eigen::Index k);

}  // namespace ctrw
