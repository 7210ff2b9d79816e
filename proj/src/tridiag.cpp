#include "ctrw/tridiag.hpp"

#include <algorithm>
#include <array>

#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <numeric>

#include "ctrw/errors.hpp"
#include "ctrw/quadrature.hpp"

namespace ctrw {

using ld = long double;

Tridiag1D build_tridiag(const Generator1D& gen, long lo, long hi) {
  if (hi - lo < 2) raise(ErrorKind::InvalidParams, "tridiagonal window needs at least 3 points");
  Tridiag1D t;
  t.lo = lo;
  const size_t n = static_cast<size_t>(hi - lo + 1);
  t.x.resize(n);
  t.up.resize(n);
  t.down.resize(n);
  for (size_t k = 0; k < n; ++k) {
    long i = lo + static_cast<long>(k);
    Rates1D r = gen.rates(i);
    t.x[k] = gen.mesh().point(i);
    t.up[k] = r.up;
    t.down[k] = r.down;
  }
  return t;
}

Tridiag1D build_tridiag(const Generator1D& gen) { return build_tridiag(gen, gen.mesh().lo(), gen.mesh().hi()); }

namespace {

void require_c1(const Tridiag1D& tri) {
  const size_t N = tri.size() - 1;
  for (size_t k = 0; k < N; ++k)
    if (!(tri.up[k] > 0.0)) raise(ErrorKind::ZeroRate, "Q_{k,k+1} = 0 at window index " + std::to_string(k));
  for (size_t k = 1; k <= N; ++k)
    if (!(tri.down[k] > 0.0)) raise(ErrorKind::ZeroRate, "Q_{k,k-1} = 0 at window index " + std::to_string(k));
}

std::vector<ld> log_nu(const Tridiag1D& tri) {
  std::vector<ld> l(tri.size());
  l[0] = 0.0L;
  for (size_t k = 0; k + 1 < tri.size(); ++k)
    l[k + 1] = l[k] + std::log(static_cast<ld>(tri.up[k])) - std::log(static_cast<ld>(tri.down[k + 1]));
  return l;
}

// log w_j = -log(nu_j Q_{j,j+1}), j = 0..N-1
std::vector<ld> log_w(const Tridiag1D& tri, const std::vector<ld>& ln) {
  std::vector<ld> lw(tri.size() - 1);
  for (size_t j = 0; j + 1 < tri.size(); ++j) lw[j] = -ln[j] - std::log(static_cast<ld>(tri.up[j]));
  return lw;
}

std::vector<double> thomas(std::vector<ld> a, std::vector<ld> b, std::vector<ld> c, std::vector<ld> d) {
  // a: sub, b: diag, c: super
  const size_t n = b.size();
  for (size_t i = 1; i < n; ++i) {
    ld m = a[i] / b[i - 1];
    b[i] -= m * c[i - 1];
    d[i] -= m * d[i - 1];
  }
  std::vector<double> x(n);
  std::vector<ld> xl(n);
  xl[n - 1] = d[n - 1] / b[n - 1];
  for (size_t i = n - 1; i-- > 0;) xl[i] = (d[i] - c[i] * xl[i + 1]) / b[i];
  for (size_t i = 0; i < n; ++i) x[i] = static_cast<double>(xl[i]);
  return x;
}

std::vector<double> interior_solve(const Tridiag1D& tri, ld rhs, ld right_value) {
  const size_t N = tri.size() - 1;
  const size_t n = N - 1;
  std::vector<ld> a(n), b(n), c(n), d(n);
  for (size_t k = 0; k < n; ++k) {
    size_t i = k + 1;
    a[k] = tri.down[i];
    c[k] = tri.up[i];
    b[k] = -(static_cast<ld>(tri.up[i]) + tri.down[i]);
    d[k] = rhs;
  }
  d[n - 1] -= static_cast<ld>(tri.up[N - 1]) * right_value;
  auto inner = thomas(a, b, c, d);
  std::vector<double> out(N + 1, 0.0);
  out[N] = static_cast<double>(right_value);
  for (size_t k = 0; k < n; ++k) out[k + 1] = inner[k];
  return out;
}

}  // namespace

std::vector<double> InvariantDensity::normalized() const {
  ld m = *std::max_element(log_nu.begin(), log_nu.end());
  ld s = 0.0L;
  for (double l : log_nu) s += std::exp(static_cast<ld>(l) - m);
  std::vector<double> out(log_nu.size());
  for (size_t k = 0; k < log_nu.size(); ++k) out[k] = static_cast<double>(std::exp(static_cast<ld>(log_nu[k]) - m) / s);
  return out;
}

std::vector<double> InvariantDensity::pinned(size_t k, double value) const {
  std::vector<double> out(log_nu.size());
  for (size_t j = 0; j < log_nu.size(); ++j)
    out[j] = value * static_cast<double>(std::exp(static_cast<ld>(log_nu[j]) - log_nu[k]));
  return out;
}

InvariantDensity invariant_density(const Tridiag1D& tri) {
  require_c1(tri);
  auto l = log_nu(tri);
  InvariantDensity out;
  out.log_nu.assign(l.begin(), l.end());
  const size_t N = tri.size() - 1;
  out.right_ratio = tri.up[N - 1] / tri.down[N];
  out.left_ratio = tri.down[1] / tri.up[0];
  out.normalizable = out.right_ratio < 1.0 && out.left_ratio < 1.0;
  return out;
}

std::vector<double> committor(const Tridiag1D& tri) {
  require_c1(tri);
  auto ln = log_nu(tri);
  auto lw = log_w(tri, ln);
  const size_t N = tri.size() - 1;
  ld m = *std::max_element(lw.begin(), lw.end());
  std::vector<ld> w(N);
  for (size_t j = 0; j < N; ++j) w[j] = std::exp(lw[j] - m);
  std::vector<ld> left(N + 1, 0.0L), right(N + 1, 0.0L);
  for (size_t j = 0; j < N; ++j) left[j + 1] = left[j] + w[j];
  for (size_t j = N; j-- > 0;) right[j] = right[j + 1] + w[j];
  ld total = left[N];
  std::vector<double> q(N + 1);
  for (size_t i = 0; i <= N; ++i)
    q[i] = static_cast<double>(left[i] <= right[i] ? left[i] / total : 1.0L - right[i] / total);
  q[0] = 0.0;
  q[N] = 1.0;
  return q;
}

std::vector<double> mfpt(const Tridiag1D& tri) {
  require_c1(tri);
  auto ln = log_nu(tri);
  auto lw = log_w(tri, ln);
  const size_t N = tri.size() - 1;
  // Rescaling nu by a constant leaves w_j S_j invariant; pick max nu = 1.
  ld mn = *std::max_element(ln.begin(), ln.end());
  std::vector<ld> nu(N + 1), w(N), S(N + 1, 0.0L);
  for (size_t j = 0; j <= N; ++j) nu[j] = std::exp(ln[j] - mn);
  for (size_t j = 0; j < N; ++j) w[j] = std::exp(lw[j] + mn);
  for (size_t j = 1; j <= N; ++j) S[j] = S[j - 1] + nu[j];
  ld num = 0.0L, den = 0.0L;
  for (size_t j = 0; j < N; ++j) {
    num += w[j] * S[j];
    den += w[j];
  }
  ld F0 = num / den;
  std::vector<ld> d(N);
  for (size_t j = 0; j < N; ++j) d[j] = w[j] * (F0 - S[j]);
  std::vector<ld> left(N + 1, 0.0L), right(N + 1, 0.0L);
  for (size_t j = 0; j < N; ++j) left[j + 1] = left[j] + d[j];
  for (size_t j = N; j-- > 0;) right[j] = right[j + 1] - d[j];
  std::vector<double> u(N + 1);
  for (size_t i = 0; i <= N; ++i) u[i] = static_cast<double>(2 * i <= N ? left[i] : right[i]);
  u[0] = 0.0;
  u[N] = 0.0;
  return u;
}

std::vector<double> committor_direct(const Tridiag1D& tri) {
  require_c1(tri);
  return interior_solve(tri, 0.0L, 1.0L);
}

std::vector<double> mfpt_direct(const Tridiag1D& tri) {
  require_c1(tri);
  return interior_solve(tri, -1.0L, 0.0L);
}

std::vector<double> invariant_density_direct(const Tridiag1D& tri) {
  require_c1(tri);
  const size_t n = tri.size();
  const size_t N = n - 1;
  // Column k of nu^T Q = 0 with reflecting edges; row 0 replaced by nu_0 = 1.
  std::vector<ld> a(n, 0.0L), b(n, 0.0L), c(n, 0.0L), d(n, 0.0L);
  b[0] = 1.0L;
  d[0] = 1.0L;
  for (size_t k = 1; k <= N; ++k) {
    ld out_up = k < N ? static_cast<ld>(tri.up[k]) : 0.0L;
    a[k] = tri.up[k - 1];
    b[k] = -(out_up + tri.down[k]);
    if (k < N) c[k] = tri.down[k + 1];
  }
  return thomas(a, b, c, d);
}

Tridiag1D stationary_window(const Generator1D& gen, long lo, long hi, double tail_tol, long max_points) {
  for (;;) {
    Tridiag1D tri = build_tridiag(gen, lo, hi);
    auto nu = invariant_density(tri).normalized();
    const long n = static_cast<long>(nu.size());
    const long edge = std::max(2L, n / 32);
    const long block = std::max(2L, n / 16);
    double left = 0.0, right = 0.0;
    for (long k = 0; k < std::min(edge, n); ++k) left += nu[k];
    for (long k = std::max(0L, n - edge); k < n; ++k) right += nu[k];
    bool grow_left = left > tail_tol, grow_right = right > tail_tol;
    if (!grow_left && !grow_right) return tri;
    if (n + 2 * block > max_points) raise(ErrorKind::NoConvergence, "stationary window exceeds point budget");
    if (grow_left) lo -= block;
    if (grow_right) hi += block;
  }
}

namespace {

// Integrates y = (G, N, F, H) from a with G' = mu/M, N' = exp(G)/M,
// F' = exp(-G), H' = N exp(-G) and records F, H at the query points.
struct BvpSweep {
  std::vector<double> F, H;  // at the query points, input order
  double Fb = 0.0, Hb = 0.0;
};

using BvpState = std::array<double, 4>;

BvpSweep sweep_bvp(const SdeProblem& p, double a, double b, const std::vector<double>& xs) {
  if (p.dim != 1) raise(ErrorKind::InvalidParams, "exact quadrature needs a 1D problem");
  if (!(b > a)) raise(ErrorKind::InvalidParams, "need a < b");
  for (double x : xs)
    if (!(x >= a && x <= b)) raise(ErrorKind::InvalidParams, "query point outside [a, b]");
  std::vector<size_t> order(xs.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t i, size_t j) { return xs[i] < xs[j]; });

  auto rhs = [&](const BvpState& y, BvpState& dy, double s) {
    double m = p.m1(s);
    double e = std::exp(-y[0]);
    dy = {p.mu1(s) / m, 1.0 / (e * m), e, y[1] * e};
  };
  namespace ode = boost::numeric::odeint;
  auto stepper = ode::make_controlled(1e-13, 1e-13, ode::runge_kutta_fehlberg78<BvpState>());
  double dt0 = (b - a) * 1e-3;
  BvpSweep out;
  out.F.resize(xs.size());
  out.H.resize(xs.size());
  BvpState y{0.0, 0.0, 0.0, 0.0};
  double s = a;
  auto advance = [&](double to) {
    if (to > s) ode::integrate_adaptive(stepper, rhs, y, s, to, std::min(dt0, to - s));
    s = std::max(s, to);
    for (double v : y)
      if (!std::isfinite(v)) raise(ErrorKind::QuadratureFailure, "non-finite BVP integral");
  };
  for (size_t i : order) {
    advance(xs[i]);
    out.F[i] = y[2];
    out.H[i] = y[3];
  }
  advance(b);
  out.Fb = y[2];
  out.Hb = y[3];
  return out;
}

}  // namespace

std::vector<double> exact_committor_profile(const SdeProblem& problem, double a, double b,
                                            const std::vector<double>& xs) {
  BvpSweep w = sweep_bvp(problem, a, b, xs);
  std::vector<double> out;
  for (size_t i = 0; i < xs.size(); ++i) out.push_back(xs[i] == b ? 1.0 : w.F[i] / w.Fb);
  return out;
}

std::vector<double> exact_mfpt_profile(const SdeProblem& problem, double a, double b,
                                       const std::vector<double>& xs) {
  BvpSweep w = sweep_bvp(problem, a, b, xs);
  double C = w.Hb / w.Fb;
  std::vector<double> out;
  for (size_t i = 0; i < xs.size(); ++i)
    out.push_back(xs[i] == a || xs[i] == b ? 0.0 : C * w.F[i] - w.H[i]);
  return out;
}

double exact_committor_quadrature(const SdeProblem& problem, double a, double b, double x) {
  return exact_committor_profile(problem, a, b, {x})[0];
}

double exact_mfpt_quadrature(const SdeProblem& problem, double a, double b, double x) {
  return exact_mfpt_profile(problem, a, b, {x})[0];
}

std::vector<double> cell_average_density(const SdeProblem& problem, const Mesh1D& mesh) {
  const auto& rho = problem.reference.stationary_density;
  if (!rho) raise(ErrorKind::InvalidParams, "problem has no reference stationary density");
  std::vector<double> out;
  ld total = 0.0L;
  for (long i = mesh.lo(); i <= mesh.hi(); ++i) {
    double x = mesh.point(i);
    double left = 0.5 * (mesh.point(i - 1) + x);
    double right = 0.5 * (x + mesh.point(i + 1));
    double m = integrate([&](double s) { return rho(Vec::Constant(1, s)); }, left, right, 1e-11);
    out.push_back(m);
    total += m;
  }
  for (double& v : out) v = static_cast<double>(v / total);
  return out;
}

}  // namespace ctrw
