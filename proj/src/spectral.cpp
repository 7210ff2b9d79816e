#include "ctrw/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/MatrixFunctions>

#include "ctrw/errors.hpp"

namespace ctrw {

Eigen::Index TruncatedQMatrix::row_of(const GridIndex& g) const {
  auto r = window.find(g);
  return r ? static_cast<Eigen::Index>(*r) : -1;
}

namespace {

void finish(TruncatedQMatrix& m, std::vector<Eigen::Triplet<double>>& trip, const std::vector<double>& diag) {
  const auto n = static_cast<Eigen::Index>(m.size());
  for (Eigen::Index r = 0; r < n; ++r) {
    trip.emplace_back(r, r, diag[r]);
    m.max_rate = std::max(m.max_rate, std::abs(diag[r]));
  }
  m.Q.resize(n, n);
  m.Q.setFromTriplets(trip.begin(), trip.end());
  m.Q.makeCompressed();
}

}  // namespace

TruncatedQMatrix assemble(const Generator1D& gen, double e_star) {
  const Mesh1D& mesh = gen.mesh();
  TruncatedQMatrix m;
  m.window = prune(
      window_indices_1d(mesh), [&](const GridIndex& g) { return Vec::Constant(1, mesh.point(g[0])); },
      gen.problem(), e_star, 1);
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<double> diag(m.size(), 0.0);
  for (size_t r = 0; r < m.size(); ++r) {
    long i = m.window.states[r][0];
    m.points.push_back(Vec::Constant(1, mesh.point(i)));
    Rates1D q = gen.rates(i);
    auto link = [&](long j, double rate) {
      if (!(rate > 0.0)) return;
      auto c = m.window.find({mesh.wrap(j), 0});
      if (!c) return;
      trip.emplace_back(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(*c), rate);
      diag[r] -= rate;
    };
    link(i + 1, q.up);
    link(i - 1, q.down);
  }
  finish(m, trip, diag);
  return m;
}

TruncatedQMatrix assemble(const Generator2D& gen, double e_star) {
  TruncatedQMatrix m;
  m.window = prune(
      window_indices_2d(gen.mesh_x(), gen.mesh_y()), [&](const GridIndex& g) { return gen.point(g[0], g[1]); },
      gen.problem(), e_star, 2);
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<double> diag(m.size(), 0.0);
  for (size_t r = 0; r < m.size(); ++r) {
    const GridIndex& s = m.window.states[r];
    m.points.push_back(gen.point(s[0], s[1]));
    Rates2D q = gen.rates(s[0], s[1]);
    for (size_t ch = 0; ch < 8; ++ch) {
      if (!(q.rate[ch] > 0.0)) continue;
      GridIndex t{gen.mesh_x().wrap(s[0] + kOffsets2D[ch][0]), gen.mesh_y().wrap(s[1] + kOffsets2D[ch][1])};
      auto c = m.window.find(t);
      if (!c) continue;
      trip.emplace_back(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(*c), q.rate[ch]);
      diag[r] -= q.rate[ch];
    }
  }
  finish(m, trip, diag);
  return m;
}

bool is_irreducible(const SparseRM& Q) {
  const Eigen::Index n = Q.rows();
  if (n == 0) return false;
  SparseRM Qt = Q.transpose();
  auto reach_all = [n](const SparseRM& A) {
    std::vector<char> seen(n, 0);
    std::deque<Eigen::Index> queue{0};
    seen[0] = 1;
    Eigen::Index count = 1;
    while (!queue.empty()) {
      Eigen::Index r = queue.front();
      queue.pop_front();
      for (SparseRM::InnerIterator it(A, r); it; ++it) {
        if (it.col() == r || !(it.value() > 0.0) || seen[it.col()]) continue;
        seen[it.col()] = 1;
        ++count;
        queue.push_back(it.col());
      }
    }
    return count == n;
  };
  return reach_all(Q) && reach_all(Qt);
}

Vec stationary_density(const TruncatedQMatrix& m, const StationaryOptions& opt) {
  const Eigen::Index n = static_cast<Eigen::Index>(m.size());
  if (n == 1) return Vec::Ones(1);
  if (!is_irreducible(m.Q)) raise(ErrorKind::NotIrreducible, "truncated generator is not irreducible");
  Eigen::SparseMatrix<double> A = m.Q.transpose();
  const double shift = -1e-10 * std::max(m.max_rate, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) A.coeffRef(i, i) -= shift;
  A.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) raise(ErrorKind::FactorizationFailure, "sparse LU failed: " + lu.lastErrorMessage());
  Eigen::SparseMatrix<double> Qt = m.Q.transpose();
  Vec nu = Vec::Constant(n, 1.0 / double(n));
  for (int it = 0; it < opt.max_iterations; ++it) {
    Vec next = lu.solve(nu);
    double s = next.sum();
    if (!std::isfinite(s) || s == 0.0) raise(ErrorKind::NoConvergence, "inverse iteration broke down");
    nu = (next / s).cwiseAbs();
    nu /= nu.sum();
    double res = (Qt * nu).lpNorm<1>();
    if (res <= opt.tolerance * nu.lpNorm<1>()) return nu;
  }
  raise(ErrorKind::NoConvergence, "stationary density did not converge");
}

// ---------------------------------------------------------------- eigensolver

namespace {

// Returns (c, s, r) with [c s; -conj(s) c] [f; g] = [r; 0].
void givens(Complex f, Complex g, double& c, Complex& s) {
  if (g == Complex(0.0)) {
    c = 1.0;
    s = 0.0;
    return;
  }
  if (f == Complex(0.0)) {
    c = 0.0;
    s = std::conj(g) / std::abs(g);
    return;
  }
  double af = std::abs(f), ag = std::abs(g);
  double norm = std::hypot(af, ag);
  c = af / norm;
  s = (f / af) * std::conj(g) / norm;
}

// x <- c x + s y, y <- c y - conj(s) x
template <class X, class Y>
void rotate(X&& x, Y&& y, double c, Complex s) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Complex xi = x(i), yi = y(i);
    x(i) = c * xi + s * yi;
    y(i) = c * yi - std::conj(s) * xi;
  }
}

}  // namespace

void swap_schur(Eigen::MatrixXcd& T, Eigen::MatrixXcd& Z, Eigen::Index k) {
  const Eigen::Index n = T.rows();
  Complex t11 = T(k, k), t22 = T(k + 1, k + 1);
  double c;
  Complex s;
  givens(T(k, k + 1), t22 - t11, c, s);
  if (k + 2 < n) rotate(T.row(k).tail(n - k - 2), T.row(k + 1).tail(n - k - 2), c, s);
  if (k > 0) rotate(T.col(k).head(k), T.col(k + 1).head(k), c, std::conj(s));
  T(k, k) = t22;
  T(k + 1, k + 1) = t11;
  rotate(Z.col(k), Z.col(k + 1), c, std::conj(s));
}

EigenResult leading_eigenvalues(const SparseRM& Q, int k, const EigenOptions& opt) {
  const Eigen::Index n = Q.rows();
  if (k < 1 || k > n) raise(ErrorKind::ValidationError, "eigenvalue count must be in [1, window size]");
  EigenResult out;
  if (n <= 400) {
    // Small windows: dense QR is exact enough and cheaper than restarting.
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(Eigen::MatrixXcd(Eigen::MatrixXd(Q).cast<Complex>()));
    std::vector<Complex> all(es.eigenvalues().data(), es.eigenvalues().data() + n);
    std::vector<Eigen::Index> order(n);
    for (Eigen::Index i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return all[a].real() > all[b].real(); });
    Eigen::MatrixXd Qd(Q);
    for (int i = 0; i < k; ++i) {
      Eigen::VectorXcd v = es.eigenvectors().col(order[i]);
      out.values.push_back(all[order[i]]);
      out.residuals.push_back((Qd.cast<Complex>() * v - all[order[i]] * v).norm() / v.norm());
    }
    return out;
  }

  Eigen::SparseMatrix<double> A = Q;
  for (Eigen::Index i = 0; i < n; ++i) A.coeffRef(i, i) -= opt.shift;
  A.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) raise(ErrorKind::FactorizationFailure, "sparse LU failed: " + lu.lastErrorMessage());
  auto op = [&](const Eigen::VectorXcd& v) {
    Vec re = lu.solve(Vec(v.real()));
    Vec im = lu.solve(Vec(v.imag()));
    Eigen::VectorXcd w(n);
    w.real() = re;
    w.imag() = im;
    return w;
  };

  const int nev = static_cast<int>(std::min<Eigen::Index>(n, 2 * k + opt.extra));
  const int m = static_cast<int>(std::min<Eigen::Index>(n - 1, std::max(2 * nev + 10, nev + 30)));
  if (m <= nev) raise(ErrorKind::ValidationError, "window too small for the requested eigenvalue count");
  Eigen::MatrixXcd V = Eigen::MatrixXcd::Zero(n, m + 1);
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(m + 1, m);
  std::mt19937_64 gen(opt.seed);
  std::normal_distribution<double> normal;
  for (Eigen::Index i = 0; i < n; ++i) V(i, 0) = Complex(normal(gen), 0.0);
  V.col(0).normalize();

  int start = 0;
  Eigen::MatrixXcd T, Z;
  int converged = 0;
  const double tol = 1e-12;
  for (int restart = 0; restart < opt.max_restarts; ++restart) {
    out.restarts = restart;
    for (int j = start; j < m; ++j) {
      Eigen::VectorXcd w = op(V.col(j));
      Eigen::VectorXcd h = Eigen::VectorXcd::Zero(j + 1);
      for (int pass = 0; pass < 2; ++pass) {
        Eigen::VectorXcd c = V.leftCols(j + 1).adjoint() * w;
        w -= V.leftCols(j + 1) * c;
        h += c;
      }
      double beta = w.norm();
      H.col(j).head(j + 1) = h;
      H(j + 1, j) = beta;
      if (beta < 1e-300) raise(ErrorKind::NoConvergence, "Krylov space became invariant");
      V.col(j + 1) = w / beta;
    }
    Eigen::ComplexSchur<Eigen::MatrixXcd> schur(H.topRows(m));
    T = schur.matrixT();
    Z = schur.matrixU();
    // Selection sort by |theta|, largest first.
    for (int i = 0; i < m; ++i) {
      int best = i;
      for (int j = i + 1; j < m; ++j)
        if (std::abs(T(j, j)) > std::abs(T(best, best))) best = j;
      for (int j = best; j > i; --j) swap_schur(T, Z, j - 1);
    }
    Eigen::RowVectorXcd b = H.row(m) * Z;
    converged = 0;
    while (converged < nev && std::abs(b(converged)) <= tol * std::abs(T(converged, converged))) ++converged;
    if (converged >= nev) break;
    int keep = std::min(m - 1, nev + (m - nev) / 2);
    Eigen::MatrixXcd Vk = V.leftCols(m) * Z.leftCols(keep);
    V.leftCols(keep) = Vk;
    V.col(keep) = V.col(m);
    H.setZero();
    H.topLeftCorner(keep, keep) = T.topLeftCorner(keep, keep);
    H.row(keep).head(keep) = b.head(keep);
    start = keep;
  }
  if (converged < nev) raise(ErrorKind::NoConvergence, "Krylov-Schur did not converge");

  // Ritz vectors from the eigenvectors of the triangular factor.
  std::vector<std::pair<Complex, Eigen::VectorXcd>> pairs;
  for (int i = 0; i < nev; ++i) {
    Eigen::VectorXcd y = Eigen::VectorXcd::Zero(m);
    y(i) = 1.0;
    for (int r = i - 1; r >= 0; --r) {
      Complex acc = 0.0;
      for (int c = r + 1; c <= i; ++c) acc += T(r, c) * y(c);
      Complex d = T(r, r) - T(i, i);
      if (std::abs(d) < 1e-14 * std::abs(T(i, i))) d = 1e-14 * std::abs(T(i, i));
      y(r) = -acc / d;
    }
    Eigen::VectorXcd x = V.leftCols(m) * (Z * y);
    pairs.emplace_back(opt.shift + 1.0 / T(i, i), x);
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const auto& a, const auto& b) { return a.first.real() > b.first.real(); });
  Eigen::SparseMatrix<Complex> Qc = Q.cast<Complex>();
  for (int i = 0; i < k; ++i) {
    const auto& [lam, x] = pairs[i];
    Eigen::VectorXcd r = Qc * x - lam * x;
    double res = r.norm() / x.norm();
    out.values.push_back(lam);
    out.residuals.push_back(res);
  }
  return out;
}

EigenResult leading_eigenvalues(const TruncatedQMatrix& m, int k, const EigenOptions& opt) {
  return leading_eigenvalues(m.Q, k, opt);
}

// ---------------------------------------------------------------- OU reference

Vec OuReference::mean(const Vec& x0, double t) const { return (C * t).exp() * x0; }

Mat OuReference::covariance(double t) const {
  const Eigen::Index d = C.rows();
  // Block exponential: Sigma(t) = F22^T G12 for exp(t [[-C, 2M], [0, C^T]]).
  Mat F = Mat::Zero(2 * d, 2 * d);
  F.topLeftCorner(d, d) = -C;
  F.topRightCorner(d, d) = 2.0 * M;
  F.bottomRightCorner(d, d) = C.transpose();
  Mat E = (F * t).exp();
  Mat S = E.bottomRightCorner(d, d).transpose() * E.topRightCorner(d, d);
  return 0.5 * (S + S.transpose());
}

namespace {
void require_stable(const Mat& C) {
  Eigen::EigenSolver<Mat> es(C);
  if (es.eigenvalues().real().maxCoeff() >= 0.0)
    raise(ErrorKind::UnstableDrift, "drift matrix has an eigenvalue with nonnegative real part");
}
}  // namespace

Mat OuReference::stationary_covariance() const {
  require_stable(C);
  return solve_lyapunov(C, 2.0 * M);
}

std::vector<Complex> OuReference::spectrum(int k) const { return ou_spectrum(C, k); }

OuReference ou_reference(const Mat& C, const Mat& M) {
  if (C.rows() != C.cols() || M.rows() != C.rows() || M.cols() != C.cols())
    raise(ErrorKind::ValidationError, "C and M must be square and of equal size");
  return OuReference{C, M};
}

std::vector<Complex> ou_spectrum(const Mat& C, int k) {
  if (C.rows() != 2 || C.cols() != 2) raise(ErrorKind::ValidationError, "OU spectrum needs a 2x2 drift matrix");
  require_stable(C);
  return linear_ou_spectrum(C, k);
}

std::vector<size_t> greedy_match(const std::vector<Complex>& computed, const std::vector<Complex>& reference) {
  if (reference.size() < computed.size()) raise(ErrorKind::ValidationError, "reference set is too small");
  std::vector<char> used(reference.size(), 0);
  std::vector<size_t> out;
  for (const Complex& c : computed) {
    size_t best = reference.size();
    double dist = kInf;
    for (size_t j = 0; j < reference.size(); ++j) {
      if (used[j]) continue;
      double d = std::abs(c - reference[j]);
      if (d < dist) {
        dist = d;
        best = j;
      }
    }
    used[best] = 1;
    out.push_back(best);
  }
  return out;
}

double matched_relative_error(const std::vector<Complex>& computed, const std::vector<Complex>& reference) {
  auto match = greedy_match(computed, reference);
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < computed.size(); ++i) {
    num += std::norm(computed[i] - reference[match[i]]);
    den += std::norm(reference[match[i]]);
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace ctrw
