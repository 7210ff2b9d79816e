#include "ctrw/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ctrw/errors.hpp"
#include "ctrw/quadrature.hpp"

namespace ctrw {

bool Interval::contains(double x) const {
  bool above = lo_closed ? x >= lo : x > lo;
  bool below = hi_closed ? x <= hi : x < hi;
  return above && below;
}

DomainSpec DomainSpec::all_space(int n) {
  DomainSpec d;
  d.kind = DomainKind::all_space;
  d.bounds.assign(n, Interval{});
  return d;
}

DomainSpec DomainSpec::positive_orthant(int n) {
  DomainSpec d;
  d.kind = DomainKind::positive_orthant;
  d.bounds.assign(n, Interval{0.0, kInf, false, false});
  return d;
}

DomainSpec DomainSpec::box(std::vector<Interval> bounds, bool periodic) {
  DomainSpec d;
  d.kind = DomainKind::box;
  d.bounds = std::move(bounds);
  d.periodic = periodic;
  return d;
}

bool DomainSpec::contains(const Vec& x) const {
  if (static_cast<size_t>(x.size()) != bounds.size()) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) return false;
    if (periodic) continue;
    if (!bounds[i].contains(x[i])) return false;
  }
  return true;
}

Flow parse_flow(const std::string& name) {
  if (name == "none") return Flow::none;
  if (name == "rotational") return Flow::rotational;
  if (name == "extensional") return Flow::extensional;
  if (name == "shear") return Flow::shear;
  if (name == "nonlinear") return Flow::nonlinear;
  raise(ErrorKind::InvalidParams,
        "unknown flow '" + name + "' (valid: none, rotational, extensional, shear, nonlinear)");
}

std::string flow_name(Flow f) {
  switch (f) {
    case Flow::none: return "none";
    case Flow::rotational: return "rotational";
    case Flow::extensional: return "extensional";
    case Flow::shear: return "shear";
    case Flow::nonlinear: return "nonlinear";
  }
  return "none";
}

double SdeProblem::mu1(double x) const {
  if (drift_scalar) return drift_scalar(x);
  Vec v(1);
  v[0] = x;
  return drift(v)[0];
}

double SdeProblem::m1(double x) const {
  if (diffusion_scalar) return diffusion_scalar(x);
  Vec v(1);
  v[0] = x;
  return diffusion(v)(0, 0);
}

void SdeProblem::local(const Vec& x, LocalCoeffs& out) const {
  if (local_override) {
    local_override(x, out);
    return;
  }
  out.mu = drift(x);
  out.M = diffusion(x);
  out.sigma = noise_columns ? noise_columns(x) : noise_factor(out.M);
  out.has_mu_tilde = false;
}

Vec transformed_drift(const Mat& M, const Vec& mu) {
  if (M.rows() == 1) {
    if (!(M(0, 0) > 0.0)) raise(ErrorKind::SingularDiffusion, "M <= 0");
    Vec out(1);
    out[0] = mu[0] / M(0, 0);
    return out;
  }
  Eigen::LLT<Mat> llt(M);
  if (llt.info() != Eigen::Success) raise(ErrorKind::SingularDiffusion, "M is not positive definite");
  double rcond = llt.rcond();
  if (!(rcond > 1e-12)) raise(ErrorKind::SingularDiffusion, "condition estimate above 1e12");
  return llt.solve(mu);
}

Vec transformed_drift(const SdeProblem& problem, const Vec& x) {
  LocalCoeffs c;
  problem.local(x, c);
  if (c.has_mu_tilde) return c.mu_tilde;
  return transformed_drift(c.M, c.mu);
}

Mat noise_factor(const Mat& M) {
  if (M.rows() == 1) {
    Mat s(1, 1);
    s(0, 0) = std::sqrt(std::max(M(0, 0), 0.0));
    return s;
  }
  Eigen::LLT<Mat> llt(M);
  if (llt.info() != Eigen::Success) raise(ErrorKind::FactorizationFailure, "Cholesky factorization failed");
  return llt.matrixL();
}

ConservativeForm conservative_form_1d(const SdeProblem& problem, double anchor, double x) {
  if (problem.dim != 1) raise(ErrorKind::InvalidParams, "conservative form needs dim = 1");
  double g = integrate([&](double s) { return problem.mu1(s) / problem.m1(s); }, anchor, x, 1e-10);
  double m = problem.m1(x);
  if (!(m > 0.0)) raise(ErrorKind::QuadratureFailure, "M(x) <= 0");
  double U = -g + std::log(m);
  return {std::exp(-U), U};
}

Mat solve_lyapunov(const Mat& A, const Mat& Q) {
  const Eigen::Index n = A.rows();
  Mat I = Mat::Identity(n, n);
  // vec(A X + X A^T) = (I kron A + A kron I) vec(X).
  Mat K = Mat::Zero(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      K.block(i * n, j * n, n, n) += I(i, j) * A;
      K.block(i * n, j * n, n, n) += A(i, j) * I;
    }
  Vec rhs = -Eigen::Map<const Vec>(Q.data(), n * n);
  Vec sol = K.fullPivLu().solve(rhs);
  Mat X = Eigen::Map<Mat>(sol.data(), n, n);
  return 0.5 * (X + X.transpose());
}

std::vector<std::complex<double>> linear_ou_spectrum(const Mat& C, int k) {
  Eigen::EigenSolver<Mat> es(C);
  auto lam = es.eigenvalues();
  std::vector<std::complex<double>> all;
  int top = 4;
  while ((top + 1) * (top + 2) / 2 < 4 * k) ++top;
  for (int n1 = 0; n1 <= top; ++n1)
    for (int n2 = 0; n1 + n2 <= top; ++n2) all.push_back(double(n1) * lam[0] + double(n2) * lam[1]);
  std::stable_sort(all.begin(), all.end(), [](auto a, auto b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  if (static_cast<int>(all.size()) > k) all.resize(k);
  return all;
}

namespace {

constexpr double kPi = std::numbers::pi;

Mat flow_matrix(Flow f, double gamma) {
  Mat B = Mat::Zero(2, 2);
  switch (f) {
    case Flow::rotational:
      B(0, 1) = gamma;
      B(1, 0) = -gamma;
      break;
    case Flow::extensional:
      B(0, 1) = gamma;
      B(1, 0) = gamma;
      break;
    case Flow::shear:
      B(0, 1) = gamma;
      break;
    default:
      break;
  }
  return B;
}

std::function<Vec(const Vec&)> make_flow(Flow f, double gamma) {
  if (f == Flow::nonlinear)
    return [gamma](const Vec& x) {
      Vec b(2);
      b << -gamma * x[0] * x[1] * x[1], 0.0;
      return b;
    };
  Mat B = flow_matrix(f, gamma);
  return [B](const Vec& x) { return Vec(B * x); };
}

double gaussian_density(const Vec& y, const Mat& S) {
  Eigen::LLT<Mat> llt(S);
  Vec z = llt.matrixL().solve(y);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < S.rows(); ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  return std::exp(-0.5 * z.squaredNorm() - 0.5 * logdet - 0.5 * double(S.rows()) * std::log(2 * kPi));
}

// Planar problem dY = b dt - grad U dt + sqrt(2/beta) dW.
SdeProblem planar(const std::string& name, Flow flow, double gamma, double beta,
                  std::function<double(const Vec&)> U, std::function<Vec(const Vec&)> gradU) {
  if (!(beta > 0.0)) raise(ErrorKind::InvalidParams, "beta must be positive");
  SdeProblem p;
  p.name = name;
  p.dim = 2;
  p.domain = DomainSpec::all_space(2);
  p.beta = beta;
  p.potential = U;
  p.flow = make_flow(flow, gamma);
  auto b = p.flow;
  p.drift = [b, gradU](const Vec& x) { return Vec(b(x) - gradU(x)); };
  Mat M = Mat::Identity(2, 2) / beta;
  Mat S = Mat::Identity(2, 2) / std::sqrt(beta);
  p.diffusion = [M](const Vec&) { return M; };
  p.noise_columns = [S](const Vec&) { return S; };
  if (flow == Flow::none || gamma == 0.0)
    p.reference.stationary_density = [U, beta](const Vec& x) { return std::exp(-beta * U(x)); };
  p.info["flow"] = flow_name(flow);
  return p;
}

SdeProblem cubic_oscillator(const Params&) {
  SdeProblem p;
  p.name = "cubic_oscillator";
  p.dim = 1;
  p.domain = DomainSpec::all_space(1);
  p.drift_scalar = [](double x) { return -x * x * x; };
  p.diffusion_scalar = [](double) { return 1.0; };
  p.drift = [](const Vec& x) { return Vec(Vec::Constant(1, -x[0] * x[0] * x[0])); };
  p.diffusion = [](const Vec&) { return Mat(Mat::Identity(1, 1)); };
  p.noise_columns = p.diffusion;
  p.growth_m = 1;
  p.reference.stationary_density = [](const Vec& x) { return std::exp(-std::pow(x[0], 4) / 4.0); };
  return p;
}

SdeProblem lognormal_1d(const Params&) {
  SdeProblem p;
  p.name = "lognormal_1d";
  p.dim = 1;
  p.domain = DomainSpec::positive_orthant(1);
  p.drift_scalar = [](double x) { return -x * std::log(x) + x; };
  p.diffusion_scalar = [](double x) { return x * x; };
  p.drift = [](const Vec& x) { return Vec(Vec::Constant(1, -x[0] * std::log(x[0]) + x[0])); };
  p.diffusion = [](const Vec& x) { return Mat(Mat::Constant(1, 1, x[0] * x[0])); };
  p.noise_columns = [](const Vec& x) { return Mat(Mat::Constant(1, 1, x[0])); };
  p.reference.stationary_density = [](const Vec& x) {
    double l = std::log(x[0]);
    return std::exp(-0.5 * l * l - l) / std::sqrt(2 * kPi);
  };
  p.reference.moment = [](const std::string& obs, const Vec& x0, double t) -> std::optional<double> {
    if (obs != "x^2") return std::nullopt;
    return std::exp(2.0 * std::exp(-t) * std::log(x0[0]) + 2.0 * (1.0 - std::exp(-2.0 * t)));
  };
  return p;
}

SdeProblem cir(const Params& params) {
  double beta = params.num("beta", 1.0);
  double alpha = params.num("alpha", 1.0);
  double sigma = params.num("sigma", 1.0);
  if (!(sigma > 0.0)) raise(ErrorKind::InvalidParams, "CIR requires sigma > 0");
  SdeProblem p;
  p.name = "cir";
  p.dim = 1;
  p.domain = DomainSpec::positive_orthant(1);
  double s2 = sigma * sigma;
  p.drift_scalar = [beta, alpha](double x) { return beta * (alpha - x); };
  p.diffusion_scalar = [s2](double x) { return 0.5 * s2 * x; };
  p.drift = [beta, alpha](const Vec& x) { return Vec(Vec::Constant(1, beta * (alpha - x[0]))); };
  p.diffusion = [s2](const Vec& x) { return Mat(Mat::Constant(1, 1, 0.5 * s2 * x[0])); };
  p.noise_columns = [s2](const Vec& x) { return Mat(Mat::Constant(1, 1, std::sqrt(0.5 * s2 * x[0]))); };
  double c = 2.0 * beta * alpha / s2;
  if (beta * alpha < 0.0)
    p.info["boundary"] = "absorbing";
  else if (c >= 1.0)
    p.info["boundary"] = "natural";
  else if (c > 0.0)
    p.info["boundary"] = "regular";
  else
    p.info["boundary"] = "degenerate";
  if (beta > 0.0 && alpha > 0.0) {
    double rate = 2.0 * beta / s2;
    p.reference.stationary_density = [c, rate](const Vec& x) {
      return std::exp((c - 1.0) * std::log(x[0]) - rate * x[0]);
    };
  }
  return p;
}

SdeProblem planar_flow(const Params& params) {
  Flow flow = parse_flow(params.get("flow", "none"));
  if (flow == Flow::nonlinear) raise(ErrorKind::InvalidParams, "planar_flow takes a linear flow");
  double gamma = params.num("gamma", 0.5);
  double beta = params.num("beta", 2.0);
  auto U = [](const Vec& x) { return 0.5 * x.squaredNorm(); };
  auto gradU = [](const Vec& x) { return x; };
  SdeProblem p = planar("planar_flow", flow, gamma, beta, U, gradU);
  Mat C = flow_matrix(flow, gamma) - Mat::Identity(2, 2);
  p.linear_drift = C;
  Mat M = Mat::Identity(2, 2) / beta;
  Eigen::EigenSolver<Mat> es(C);
  bool stable = es.eigenvalues().real().maxCoeff() < 0.0;
  if (stable) {
    Mat S = solve_lyapunov(C, 2.0 * M);
    p.reference.stationary_density = [S](const Vec& x) { return gaussian_density(x, S); };
    p.reference.spectrum = [C](int k) { return linear_ou_spectrum(C, k); };
  }
  return p;
}

SdeProblem maier_stein(const Params& params) {
  Flow flow = parse_flow(params.get("flow", "nonlinear"));
  double gamma = params.num("gamma", 0.0);
  double beta = params.num("beta", 1.0);
  double m = params.num("mu", 2.0);
  auto U = [m](const Vec& x) {
    double a = x[0] * x[0];
    return a * a / 4.0 - a / 2.0 + m * (1.0 + a) * x[1] * x[1] / 2.0;
  };
  auto gradU = [m](const Vec& x) {
    Vec g(2);
    g << x[0] * x[0] * x[0] - x[0] + m * x[0] * x[1] * x[1], m * (1.0 + x[0] * x[0]) * x[1];
    return g;
  };
  SdeProblem p = planar("maier_stein", flow, gamma, beta, U, gradU);
  p.growth_m = 1;
  return p;
}

SdeProblem square_well(const Params& params) {
  Flow flow = parse_flow(params.get("flow", "none"));
  double gamma = params.num("gamma", 0.0);
  double beta = params.num("beta", 1.0);
  double d1 = params.num("d1", 0.4);
  double d2 = params.num("d2", -0.4);
  double eps = params.num("eps", 0.001);
  if (!(eps > 0.0)) raise(ErrorKind::InvalidParams, "eps must be positive");
  auto U = [d1, d2, eps](const Vec& x) {
    double m = std::max(x[0], x[1]);
    return std::tanh((m - d1) / eps) - std::tanh((m - d2) / eps);
  };
  auto gradU = [d1, d2, eps](const Vec& x) {
    double m = std::max(x[0], x[1]);
    auto sech2 = [](double z) {
      double c = std::cosh(std::min(std::abs(z), 350.0));
      return 1.0 / (c * c);
    };
    double dm = (sech2((m - d1) / eps) - sech2((m - d2) / eps)) / eps;
    Vec g = Vec::Zero(2);
    g[x[0] >= x[1] ? 0 : 1] = dm;
    return g;
  };
  SdeProblem p = planar("square_well", flow, gamma, beta, U, gradU);
  p.domain = DomainSpec::box({Interval{-1.0, 1.0, true, true}, Interval{-1.0, 1.0, true, true}}, true);
  p.potential_rates = true;
  return p;
}

SdeProblem worm_like_chain(const Params& params) {
  Flow flow = parse_flow(params.get("flow", "none"));
  double gamma = params.num("gamma", 0.0);
  double beta = params.num("beta", 1.0);
  auto U = [](const Vec& x) {
    double a = std::abs(x[0]);
    return 0.5 * x[1] * x[1] + 1.0 / (1.0 - a) - a + 2.0 * x[0] * x[0];
  };
  auto gradU = [](const Vec& x) {
    double a = std::abs(x[0]);
    // The |x1| kink cancels against 1/(1-|x1|) at the origin; 0 is the subgradient there.
    double s = x[0] > 0.0 ? 1.0 : (x[0] < 0.0 ? -1.0 : 0.0);
    Vec g(2);
    g << s * (1.0 / ((1.0 - a) * (1.0 - a)) - 1.0) + 4.0 * x[0], x[1];
    return g;
  };
  SdeProblem p = planar("worm_like_chain", flow, gamma, beta, U, gradU);
  p.domain = DomainSpec::box({Interval{-1.0, 1.0, false, false}, Interval{}});
  return p;
}

// Fills LocalCoeffs for M(x) = diag(x) Mc diag(x), solving for mu_tilde in
// log coordinates so it stays well conditioned when x1 and x2 differ widely.
void log_type_override(SdeProblem& p, const Mat& Mc) {
  Mat L = noise_factor(Mc);
  Mat Minv = Mc.inverse();
  auto drift = p.drift;
  p.local_override = [drift, Mc, L, Minv](const Vec& x, LocalCoeffs& out) {
    out.mu = drift(x);
    out.M = x.asDiagonal() * Mc * x.asDiagonal();
    out.sigma = x.asDiagonal() * L;
    Vec scaled = out.mu.cwiseQuotient(x);
    out.mu_tilde = (Minv * scaled).cwiseQuotient(x);
    out.has_mu_tilde = true;
  };
}

SdeProblem lognormal_2d(const Params& params) {
  Mat Mc(2, 2);
  Mc << params.num("m11", 1.0), params.num("m12", 0.5), params.num("m12", 0.5), params.num("m22", 1.0);
  Mat A(2, 2);
  A << params.num("a11", -1.0), params.num("a12", 0.5), params.num("a21", -0.5), params.num("a22", -1.0);
  if (!(Mc.determinant() > 0.0 && Mc.trace() > 0.0))
    raise(ErrorKind::InvalidParams, "lognormal_2d needs a positive definite M");
  SdeProblem p;
  p.name = "lognormal_2d";
  p.dim = 2;
  p.domain = DomainSpec::positive_orthant(2);
  p.drift = [Mc, A](const Vec& x) {
    Vec l(2);
    l << std::log(x[0]), std::log(x[1]);
    Vec Al = A * l;
    Vec mu(2);
    mu << Mc(0, 0) * x[0] + x[0] * Al[0], Mc(1, 1) * x[1] + x[1] * Al[1];
    return mu;
  };
  p.diffusion = [Mc](const Vec& x) { return Mat(x.asDiagonal() * Mc * x.asDiagonal()); };
  Mat L = noise_factor(Mc);
  p.noise_columns = [L](const Vec& x) { return Mat(x.asDiagonal() * L); };
  log_type_override(p, Mc);
  Eigen::EigenSolver<Mat> es(A);
  if (es.eigenvalues().real().maxCoeff() < 0.0) {
    Mat S = solve_lyapunov(A, 2.0 * Mc);
    p.reference.stationary_density = [S](const Vec& x) {
      Vec l(2);
      l << std::log(x[0]), std::log(x[1]);
      return gaussian_density(l, S) / (x[0] * x[1]);
    };
  }
  p.info["m11"] = format_double(Mc(0, 0));
  p.info["m12"] = format_double(Mc(0, 1));
  p.info["m22"] = format_double(Mc(1, 1));
  return p;
}

SdeProblem lotka_volterra(const Params& params) {
  double k1 = params.num("k1", 3.0), k2 = params.num("k2", 1.0);
  double g1 = params.num("g1", 0.5), g2 = params.num("g2", 0.5);
  Mat Mc(2, 2);
  Mc << params.num("m11", 1.0), params.num("m12", 0.5), params.num("m12", 0.5), params.num("m22", 1.0);
  if (!(Mc.determinant() > 0.0 && Mc.trace() > 0.0))
    raise(ErrorKind::InvalidParams, "lotka_volterra needs a positive definite M");
  SdeProblem p;
  p.name = "lotka_volterra";
  p.dim = 2;
  p.domain = DomainSpec::positive_orthant(2);
  p.drift = [=](const Vec& x) {
    Vec mu(2);
    mu << k1 * x[0] - x[0] * x[1] - g1 * x[0] * x[0], -k2 * x[1] + x[0] * x[1] - g2 * x[1] * x[1];
    return mu;
  };
  // The population model is written with unit-variance Brownian increments,
  // so its diffusion in the sqrt(2) convention carries a factor 1/2.
  Mat Mh = 0.5 * Mc;
  p.diffusion = [Mh](const Vec& x) { return Mat(x.asDiagonal() * Mh * x.asDiagonal()); };
  Mat L = noise_factor(Mh);
  p.noise_columns = [L](const Vec& x) { return Mat(x.asDiagonal() * L); };
  log_type_override(p, Mh);
  double c1 = k1 - 0.5 * Mc(0, 0);
  double c2 = k2 + 0.5 * Mc(1, 1);
  p.info["c1"] = format_double(c1);
  p.info["c2"] = format_double(c2);
  if (c1 < 0.0)
    p.info["regime"] = "atomic_at_origin";
  else if (c1 > g1 * c2)
    p.info["regime"] = "interior";
  else if (c1 > 0.0 && g1 * c2 > c1)
    p.info["regime"] = "extinction";
  else
    p.info["regime"] = "borderline";
  if (p.info["regime"] == "extinction" && g1 > 0.0) {
    double shape = 2.0 * c1 / Mc(0, 0);
    double scale = Mc(0, 0) / (2.0 * g1);
    double logZ = shape * std::log(scale) + std::lgamma(shape);
    p.reference.marginal_density = [shape, scale, logZ](int coord, double x) {
      if (coord != 0 || x <= 0.0) return 0.0;
      return std::exp((shape - 1.0) * std::log(x) - x / scale - logZ);
    };
  }
  p.info["m11"] = format_double(Mh(0, 0));
  p.info["m12"] = format_double(Mh(0, 1));
  p.info["m22"] = format_double(Mh(1, 1));
  return p;
}

SdeProblem colloid_cluster(const Params& params) {
  ColloidParams cp = ColloidParams::from(params);
  SdeProblem p;
  p.name = "colloid_cluster";
  p.dim = 3 * cp.n_particles;
  p.domain = DomainSpec::all_space(p.dim);
  p.drift = [cp](const Vec& q) {
    auto ef = colloid_energy_force(q, cp);
    return Vec(rpy_mobility(q, cp).M * ef.force);
  };
  p.diffusion = [cp](const Vec& q) { return Mat(cp.kT * rpy_mobility(q, cp).M); };
  p.noise_columns = [cp](const Vec& q) { return Mat(std::sqrt(cp.kT) * rpy_mobility(q, cp).sigma); };
  p.local_override = [cp](const Vec& q, LocalCoeffs& out) {
    auto ef = colloid_energy_force(q, cp);
    auto mob = rpy_mobility(q, cp);
    out.mu = mob.M * ef.force;
    out.M = cp.kT * mob.M;
    out.sigma = std::sqrt(cp.kT) * mob.sigma;
    out.mu_tilde = ef.force / cp.kT;
    out.has_mu_tilde = true;
  };
  p.beta = 1.0 / cp.kT;
  p.info["hydro"] = cp.hydro ? "1" : "0";
  p.info["t_B"] = format_double(cp.brownian_time());
  return p;
}

}  // namespace

SdeProblem make_problem(const std::string& name, const Params& params) {
  SdeProblem p;
  if (name == "cubic_oscillator")
    p = cubic_oscillator(params);
  else if (name == "lognormal_1d")
    p = lognormal_1d(params);
  else if (name == "cir")
    p = cir(params);
  else if (name == "planar_flow")
    p = planar_flow(params);
  else if (name == "maier_stein")
    p = maier_stein(params);
  else if (name == "square_well")
    p = square_well(params);
  else if (name == "worm_like_chain")
    p = worm_like_chain(params);
  else if (name == "lognormal_2d")
    p = lognormal_2d(params);
  else if (name == "lotka_volterra")
    p = lotka_volterra(params);
  else if (name == "colloid_cluster")
    p = colloid_cluster(params);
  else {
    std::string valid;
    for (const auto& n : problem_names()) valid += (valid.empty() ? "" : ", ") + n;
    raise(ErrorKind::UnknownProblem, "'" + name + "' (valid: " + valid + ")");
  }
  p.params = params;
  return p;
}

std::vector<std::string> problem_names() {
  return {"cubic_oscillator", "lognormal_1d",    "cir",          "planar_flow",    "maier_stein",
          "square_well",      "worm_like_chain", "lognormal_2d", "lotka_volterra", "colloid_cluster"};
}

ColloidParams ColloidParams::from(const Params& p) {
  ColloidParams c;
  c.n_particles = static_cast<int>(p.integer("n_particles", 13));
  c.eta_s = p.num("eta_s", 1.0);
  c.kT = p.num("kT", 12.3);
  c.a = p.num("a", 3.2);
  c.hydro = p.integer("hydro", 1) != 0;
  c.R_hydro = p.num("R_hydro", c.a);
  c.eps_sc = p.num("eps_sc", 10.0);
  c.D1 = p.num("D1", 2.245 * c.a);
  c.D2 = p.num("D2", 2.694 * c.a);
  c.c_ao = p.num("c_ao", 58.5 / (c.a * c.a * c.a));
  c.zeta0 = p.num("zeta0", 6.0 * kPi * c.eta_s * c.a);
  if (c.n_particles < 1) raise(ErrorKind::InvalidParams, "n_particles must be >= 1");
  if (!(c.kT > 0.0 && c.a > 0.0 && c.eta_s > 0.0 && c.zeta0 > 0.0))
    raise(ErrorKind::InvalidParams, "colloid parameters must be positive");
  if (c.hydro && !(c.R_hydro > 0.0)) raise(ErrorKind::InvalidParams, "R_hydro must be positive with hydro");
  if (!(c.D2 > c.D1)) raise(ErrorKind::InvalidParams, "D2 must exceed D1");
  return c;
}

double ColloidParams::zeta() const {
  if (hydro) return 6.0 * kPi * eta_s * R_hydro;
  return zeta0 > 0.0 ? zeta0 : 6.0 * kPi * eta_s * a;
}

double colloid_pair_energy(double r, const ColloidParams& p) {
  double sc = p.eps_sc * std::pow(2.0 * p.a / r, 24);
  const double D1 = p.D1, D2 = p.D2, c = p.c_ao;
  auto tail = [&](double s) { return -c * (2.0 / 3.0 * D2 * D2 * D2 - D2 * D2 * s + s * s * s / 3.0); };
  double ao = 0.0;
  if (r >= D2)
    ao = 0.0;
  else if (r >= D1)
    ao = tail(r);
  else
    ao = tail(D1) - c * (D2 * D2 - D1 * D1) * (D1 - r);
  return sc + ao;
}

double colloid_pair_derivative(double r, const ColloidParams& p) {
  double dsc = -24.0 * p.eps_sc * std::pow(2.0 * p.a / r, 24) / r;
  double f = 0.0;
  if (r < p.D1)
    f = p.c_ao * (p.D2 * p.D2 - p.D1 * p.D1);
  else if (r < p.D2)
    f = p.c_ao * (p.D2 * p.D2 - r * r);
  return dsc + f;
}

EnergyForce colloid_energy_force(const Vec& q, const ColloidParams& p) {
  const int N = static_cast<int>(q.size() / 3);
  EnergyForce out{0.0, Vec::Zero(q.size())};
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      Eigen::Vector3d d = q.segment<3>(3 * i) - q.segment<3>(3 * j);
      double r = d.norm();
      if (!(r > 1e-12 * p.a)) raise(ErrorKind::Overlap, "particles " + std::to_string(i) + " and " +
                                                             std::to_string(j) + " overlap");
      out.energy += colloid_pair_energy(r, p);
      Eigen::Vector3d f = -colloid_pair_derivative(r, p) * d / r;
      out.force.segment<3>(3 * i) += f;
      out.force.segment<3>(3 * j) -= f;
    }
  return out;
}

Mobility rpy_mobility(const Vec& q, const ColloidParams& p) {
  const Eigen::Index n = q.size();
  const int N = static_cast<int>(n / 3);
  const double zinv = 1.0 / p.zeta();
  Mobility out;
  if (!p.hydro) {
    out.M = zinv * Mat::Identity(n, n);
    out.sigma = std::sqrt(zinv) * Mat::Identity(n, n);
    return out;
  }
  const double R = p.R_hydro;
  out.M = zinv * Mat::Identity(n, n);
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      Eigen::Vector3d d = q.segment<3>(3 * i) - q.segment<3>(3 * j);
      double r = d.norm();
      double c1, c2;
      if (r > 2.0 * R) {
        double s = R / r;
        c1 = 0.75 * s + 0.5 * s * s * s;
        c2 = 0.75 * s - 1.5 * s * s * s;
      } else {
        c1 = 1.0 - 9.0 / 32.0 * r / R;
        c2 = 3.0 / 32.0 * r / R;
      }
      Eigen::Matrix3d block = c1 * Eigen::Matrix3d::Identity();
      if (r > 0.0) block += c2 * (d / r) * (d / r).transpose();
      block *= zinv;
      out.M.block<3, 3>(3 * i, 3 * j) = block;
      out.M.block<3, 3>(3 * j, 3 * i) = block;
    }
  Eigen::LLT<Mat> llt(out.M);
  if (llt.info() != Eigen::Success)
    raise(ErrorKind::FactorizationFailure, "RPY mobility is not numerically positive definite");
  out.sigma = llt.matrixL();
  return out;
}

Vec icosahedron_cluster(double edge) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> v;
  for (double s1 : {-1.0, 1.0})
    for (double s2 : {-1.0, 1.0}) {
      v.emplace_back(0.0, s1, s2 * phi);
      v.emplace_back(s1, s2 * phi, 0.0);
      v.emplace_back(s2 * phi, 0.0, s1);
    }
  // Unit construction has edge length 2.
  Vec q = Vec::Zero(3 * 13);
  for (int i = 0; i < 12; ++i) q.segment<3>(3 * (i + 1)) = v[i] * (edge / 2.0);
  return q;
}

double radius_of_gyration(const Vec& q) {
  const Eigen::Index N = q.size() / 3;
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (Eigen::Index i = 0; i < N; ++i) c += q.segment<3>(3 * i);
  c /= double(N);
  double s = 0.0;
  for (Eigen::Index i = 0; i < N; ++i) s += (q.segment<3>(3 * i) - c).squaredNorm();
  return std::sqrt(s / double(N));
}

}  // namespace ctrw
