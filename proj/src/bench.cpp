#include "ctrw/bench.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include <Eigen/SVD>
#include <json.hpp>

#include "ctrw/errors.hpp"
#include "ctrw/quadrature.hpp"
#include "ctrw/tridiag.hpp"

namespace ctrw {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string csv_value(double v) {
  if (std::isnan(v)) return "nan";
  return format_double(v);
}

Params study_params(const StudySpec& spec) {
  Params p;
  p.set("problem", spec.problem);
  p.set("scheme", scheme_name(spec.scheme));
  std::string hs;
  for (size_t i = 0; i < spec.h.size(); ++i) hs += (i ? "," : "") + format_double(spec.h[i]);
  p.set("h", hs);
  p.set("T", spec.T);
  p.set("n_paths", double(spec.n_paths));
  p.set("seed", std::to_string(spec.seed));
  for (const auto& [k, v] : spec.problem_params.values()) p.set("problem." + k, v);
  for (const auto& [k, v] : spec.options.values()) p.set("option." + k, v);
  return p;
}

StudyResult start(const StudySpec& spec, std::string name, std::vector<std::string> columns) {
  StudyResult r;
  r.study = std::move(name);
  r.params = study_params(spec);
  r.columns = std::move(columns);
  return r;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// 5-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 5> kGLx{-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                     0.9061798459386640};
constexpr std::array<double, 5> kGLw{0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                     0.4786286704993665, 0.2369268850561891};

}  // namespace

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) raise(ErrorKind::ValidationError, "slope fit needs two or more points");
  const size_t n = x.size();
  std::vector<double> lx(n), ly(n);
  for (size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) raise(ErrorKind::ValidationError, "slope fit needs positive data");
    lx[i] = std::log10(x[i]);
    ly[i] = std::log10(y[i]);
  }
  double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  SlopeFit f;
  f.points = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double e = ly[i] - (f.intercept + f.slope * lx[i]);
    ss += e * e;
  }
  f.residual = std::sqrt(ss / n);
  return f;
}

void StudyResult::judge(double expected, double tol) {
  expected_slope = expected;
  tolerance = tol;
  pass = has_fit && std::abs(fit.slope - expected) <= tol && fit.residual <= kMaxFitResidual;
  if (has_fit && fit.residual > kMaxFitResidual) notes.push_back("fit residual above 0.15: non-asymptotic regime");
}

void write_study(const StudyResult& r, const std::string& dir, const std::string& name) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream csv(fs::path(dir) / (name + ".csv"), std::ios::binary);
    for (size_t i = 0; i < r.columns.size(); ++i) csv << (i ? "," : "") << r.columns[i];
    csv << "\n";
    for (const auto& row : r.rows) {
      for (size_t i = 0; i < row.size(); ++i) csv << (i ? "," : "") << csv_value(row[i]);
      csv << "\n";
    }
  }
  nlohmann::ordered_json j;
  j["study"] = r.study;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.params.values()) params[k] = v;
  j["params"] = params;
  j["slope"] = r.has_fit ? nlohmann::ordered_json(r.fit.slope) : nlohmann::ordered_json(nullptr);
  j["residual"] = r.has_fit ? nlohmann::ordered_json(r.fit.residual) : nlohmann::ordered_json(nullptr);
  j["expected_slope"] = r.expected_slope;
  j["tolerance"] = r.tolerance;
  j["pass"] = r.pass;
  nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.metrics) metrics[k] = std::isfinite(v) ? nlohmann::ordered_json(v) : nullptr;
  j["metrics"] = metrics;
  j["notes"] = r.notes;
  std::ofstream out(fs::path(dir) / (name + "_summary.json"), std::ios::binary);
  out << j.dump(2) << "\n";
}

void validate_spec(const StudySpec& spec) {
  if (spec.h.empty()) raise(ErrorKind::ValidationError, "h list is empty");
  for (double h : spec.h)
    if (!(h > 0.0)) raise(ErrorKind::ValidationError, "h values must be positive");
  for (size_t i = 1; i < spec.h.size(); ++i)
    if (!(spec.h[i] < spec.h[i - 1])) raise(ErrorKind::ValidationError, "h list must be strictly decreasing");
}

namespace {

void require_fit_list(const StudySpec& spec) {
  validate_spec(spec);
  if (spec.h.size() < 3) raise(ErrorKind::ValidationError, "slope fits need at least three h values");
}

double default_expected(SchemeId s) { return scheme_second_order(s) ? 2.0 : 1.0; }

}  // namespace

Window2D spectral_window(const SdeProblem& problem, double h, double radius) {
  double e_star, half;
  if (problem.linear_drift) {
    Eigen::JacobiSVD<Mat> svd(*problem.linear_drift);
    double smax = svd.singularValues()(0), smin = svd.singularValues()(svd.singularValues().size() - 1);
    if (!(smin > 0.0)) raise(ErrorKind::UnstableDrift, "singular drift matrix");
    e_star = radius * smax;
    half = e_star / smin + h;
  } else {
    e_star = kInf;
    half = radius;
  }
  long n = static_cast<long>(std::ceil(half / h));
  return {Mesh1D::uniform(0.0, h, -n, n), Mesh1D::uniform(0.0, h, -n, n), e_star};
}

std::vector<double> cell_average_density_2d(const SdeProblem& problem, const Generator2D& gen,
                                            const TruncatedQMatrix& m) {
  const auto& rho = problem.reference.stationary_density;
  if (!rho) raise(ErrorKind::InvalidParams, "problem has no reference stationary density");
  std::vector<double> out(m.size());
  long double total = 0.0L;
  Vec y(2);
  for (size_t r = 0; r < m.size(); ++r) {
    const GridIndex& g = m.window.states[r];
    double x0 = gen.mesh_x().point(g[0]), y0 = gen.mesh_y().point(g[1]);
    double ax = x0 - 0.5 * gen.mesh_x().dx_minus(g[0]), bx = x0 + 0.5 * gen.mesh_x().dx_plus(g[0]);
    double ay = y0 - 0.5 * gen.mesh_y().dx_minus(g[1]), by = y0 + 0.5 * gen.mesh_y().dx_plus(g[1]);
    double s = 0.0;
    for (size_t i = 0; i < 5; ++i)
      for (size_t j = 0; j < 5; ++j) {
        y[0] = 0.5 * (ax + bx) + 0.5 * (bx - ax) * kGLx[i];
        y[1] = 0.5 * (ay + by) + 0.5 * (by - ay) * kGLx[j];
        s += kGLw[i] * kGLw[j] * rho(y);
      }
    out[r] = s * 0.25 * (bx - ax) * (by - ay);
    total += out[r];
  }
  for (double& v : out) v = static_cast<double>(v / total);
  return out;
}

// ---------------------------------------------------------------- density

StudyResult run_density_study(const StudySpec& spec) {
  require_fit_list(spec);
  SdeProblem p = make_problem(spec.problem, spec.problem_params);
  if (!p.reference.stationary_density) raise(ErrorKind::InvalidParams, spec.problem + " has no reference density");
  StudyResult r = start(spec, "density", {"h", "l1_error", "n_states"});
  std::vector<double> err;
  for (double h : spec.h) {
    double l1 = 0.0;
    size_t n = 0;
    if (p.dim == 1) {
      std::string kind = spec.options.get("mesh", "uniform");
      double anchor = spec.options.num("anchor", kind == "log" ? 1.0 : 0.0);
      long n0 = std::max(8L, static_cast<long>(std::ceil(spec.options.num("half_width", 2.0) / h)));
      Mesh1D mesh = kind == "log" ? Mesh1D::log(h, std::log(anchor), -n0, n0) : Mesh1D::uniform(anchor, h, -n0, n0);
      Generator1D gen(p, mesh, spec.scheme, spec.options.integer("averaged", 0) != 0);
      Tridiag1D tri = stationary_window(gen, -n0, n0, spec.options.num("tail_tol", 1e-13));
      auto nu = invariant_density(tri).normalized();
      auto ref = cell_average_density(p, mesh.with_window(tri.lo, tri.lo + tri.last()));
      for (size_t i = 0; i < nu.size(); ++i) l1 += std::abs(nu[i] - ref[i]);
      n = nu.size();
    } else if (p.dim == 2) {
      Window2D w = spectral_window(p, h, spec.options.num("radius", 6.0));
      Generator2D gen(p, w.mx, w.my, spec.scheme);
      TruncatedQMatrix m = assemble(gen, w.e_star);
      Vec nu = stationary_density(m);
      auto ref = cell_average_density_2d(p, gen, m);
      for (size_t i = 0; i < ref.size(); ++i) l1 += std::abs(nu[static_cast<Eigen::Index>(i)] - ref[i]);
      n = ref.size();
    } else {
      raise(ErrorKind::ValidationError, "density study needs a 1D or 2D problem");
    }
    r.add_row({h, l1, double(n)});
    err.push_back(l1);
  }
  r.fit = fit_loglog(spec.h, err);
  r.has_fit = true;
  r.judge(spec.options.num("expected", default_expected(spec.scheme)), spec.options.num("tolerance", 0.3));
  return r;
}

// ---------------------------------------------------------------- BVP

StudyResult run_bvp_study(const StudySpec& spec, const std::string& kind) {
  require_fit_list(spec);
  if (kind != "mfpt" && kind != "committor") raise(ErrorKind::ValidationError, "bvp kind must be mfpt or committor");
  SdeProblem p = make_problem(spec.problem, spec.problem_params);
  if (p.dim != 1) raise(ErrorKind::ValidationError, "bvp study needs a 1D problem");
  double a = spec.options.num("a", 0.0), b = spec.options.num("b", 2.0);
  if (!(b > a)) raise(ErrorKind::ValidationError, "need a < b");
  StudyResult r = start(spec, kind, {"h", "h_eff", "sup_error", "endpoint_error"});
  std::vector<double> hs, err;
  for (double h : spec.h) {
    long N = std::max(2L, std::lround((b - a) / h));
    double he = (b - a) / double(N);
    Mesh1D mesh = Mesh1D::uniform(a, he, 0, N);
    Generator1D gen(p, mesh, spec.scheme, spec.options.integer("averaged", 0) != 0);
    Tridiag1D tri = build_tridiag(gen, 0, N);
    std::vector<double> u = kind == "mfpt" ? mfpt(tri) : committor(tri);
    std::vector<double> ex =
        kind == "mfpt" ? exact_mfpt_profile(p, a, b, tri.x) : exact_committor_profile(p, a, b, tri.x);
    double sup = 0.0;
    for (size_t i = 0; i < u.size(); ++i) sup = std::max(sup, std::abs(u[i] - ex[i]));
    double endpoint = kind == "committor" ? std::max(std::abs(u.front()), std::abs(u.back() - 1.0))
                                          : std::max(std::abs(u.front()), std::abs(u.back()));
    r.add_row({h, he, sup, endpoint});
    hs.push_back(he);
    err.push_back(sup);
    r.metrics["endpoint_error_max"] = std::max(r.metrics["endpoint_error_max"], endpoint);
  }
  r.fit = fit_loglog(hs, err);
  r.has_fit = true;
  r.judge(spec.options.num("expected", default_expected(spec.scheme)), spec.options.num("tolerance", 0.3));
  return r;
}

// ---------------------------------------------------------------- weak

namespace {

// Dynkin estimator of E f(X(T)) for the chain, with u(s, x) = E_x f(Y(T - s))
// of the SDE: f(X(T)) = u(0, x0) + int_0^T (d/ds + Q) u(s, X(s)) ds + martingale.
// Since (d/ds + L) u = 0 the integrand is (Q - L) u, so the variance is small.
struct DynkinSample {
  double dynkin = 0.0;
  double plain = 0.0;
};

DynkinSample dynkin_path(const Simulator& sim, const std::function<double(double, double)>& u, const Vec& x0,
                         double T, RngStream& rng, long long& jumps) {
  const Generator1D& gen = *sim.gen1d();
  // Three-point Gauss-Legendre on [0, 1].
  static const double kNodes[3] = {0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)};
  static const double kWeights[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  auto du_ds = [&](double s, double x) {
    const double d = 1e-3;
    return (-u(s + 2 * d, x) + 8 * u(s + d, x) - 8 * u(s - d, x) + u(s - 2 * d, x)) / (12 * d);
  };
  double t = 0.0;
  long double acc = 0.0L;
  PathOptions opt;
  opt.on_hold = [&](const Vec& x, double dt) {
    ChannelSet cs = gen.channels(gen.mesh().nearest_index(x[0]));
    double sum = 0.0;
    for (int k = 0; k < 3; ++k) {
      double s = t + kNodes[k] * dt;
      double ux = u(s, x[0]);
      double g = du_ds(s, x[0]);
      for (size_t j = 0; j < cs.rates.size(); ++j) g += cs.rates[j] * (u(s, cs.targets[j][0]) - ux);
      sum += kWeights[k] * g;
    }
    acc += sum * dt;
    t += dt;
  };
  Vec start = sim.snap(x0);
  PathResult r = sim.simulate(start, T, rng, opt);
  jumps = r.jump_count;
  double xT = r.final_state[0];
  return {u(0.0, start[0]) + static_cast<double>(acc), u(T, xT)};
}

}  // namespace

StudyResult run_weak_study(const StudySpec& spec) {
  validate_spec(spec);
  SdeProblem p = make_problem(spec.problem, spec.problem_params);
  if (!p.reference.moment) raise(ErrorKind::InvalidParams, spec.problem + " has no closed-form moment");
  if (p.dim != 1) raise(ErrorKind::ValidationError, "weak study needs a 1D problem");
  Vec x0 = Vec::Constant(1, spec.options.num("x0", 2.0));
  std::string obs = spec.options.get("observable", "x^2");
  auto ref = p.reference.moment(obs, x0, spec.T);
  if (!ref) raise(ErrorKind::InvalidParams, "no closed form for observable " + obs);
  std::string estimator = spec.options.get("estimator", "dynkin");
  if (estimator != "dynkin" && estimator != "plain")
    raise(ErrorKind::ValidationError, "estimator must be dynkin or plain");
  const double T = spec.T;
  auto u = [&](double s, double x) {
    auto v = p.reference.moment(obs, Vec::Constant(1, x), T - s);
    if (!v) raise(ErrorKind::InvalidParams, "no closed form for observable " + obs);
    return *v;
  };
  std::string mesh = spec.options.get("mesh", "log");
  StudyResult r =
      start(spec, "weak", {"h", "estimate", "stderr", "bias", "mean_lag", "resolved", "plain_estimate", "plain_stderr"});
  r.metrics["reference"] = *ref;
  std::vector<double> hs, bias;
  for (double h : spec.h) {
    Simulator sim(p, make_discretization(p, spec.scheme, h, x0, mesh));
    if (!sim.gen1d()) raise(ErrorKind::ValidationError, "weak study needs a gridded 1D scheme");
    std::vector<double> plain(static_cast<size_t>(spec.n_paths));
    Estimate e = estimate_samples(spec.n_paths, spec.seed, [&](long path, RngStream& rng, long long& jumps) {
      DynkinSample d = dynkin_path(sim, u, x0, T, rng, jumps);
      plain[static_cast<size_t>(path)] = d.plain;
      return estimator == "dynkin" ? d.dynkin : d.plain;
    });
    long double ps = 0.0L, ps2 = 0.0L;
    for (double v : plain) ps += v;
    long double pm = ps / spec.n_paths;
    for (double v : plain) ps2 += (v - pm) * (v - pm);
    double pse = static_cast<double>(std::sqrt(ps2 / (spec.n_paths - 1) / spec.n_paths));
    double b = std::abs(e.mean - *ref);
    bool resolved = b > 3.0 * e.stderr_;
    double lag = e.mean_jumps > 0.0 ? T / e.mean_jumps : kInf;
    r.add_row({h, e.mean, e.stderr_, b, lag, resolved ? 1.0 : 0.0, static_cast<double>(pm), pse});
    if (resolved) {
      hs.push_back(h);
      bias.push_back(b);
    } else {
      r.notes.push_back("bias at h = " + format_double(h) + " is within 3 standard errors (noise plateau)");
    }
  }
  if (hs.empty()) raise(ErrorKind::InsufficientPaths, "bias is indistinguishable from Monte Carlo noise at every h");
  if (hs.size() >= 2) {
    r.fit = fit_loglog(hs, bias);
    r.has_fit = true;
  } else {
    r.notes.push_back("only one resolved h: no slope");
  }
  r.judge(spec.options.num("expected", default_expected(spec.scheme)), spec.options.num("tolerance", 0.5));
  r.metrics["resolved_points"] = double(hs.size());
  return r;
}

// ---------------------------------------------------------------- holding times

StudyResult run_holding_time_study(const SdeProblem& problem, double h, const std::vector<double>& xs) {
  if (problem.dim != 1) raise(ErrorKind::ValidationError, "holding-time study needs a 1D problem");
  if (!(h > 0.0)) raise(ErrorKind::ValidationError, "h must be positive");
  StudyResult r;
  r.study = "holding_time";
  r.params.set("problem", problem.name);
  r.params.set("h", h);
  r.columns = {"x", "t_star", "t_e", "t_u", "t_c", "rel_e", "rel_u", "rel_c"};
  for (double x : xs) {
    double mu = problem.mu1(x);
    if (mu == 0.0) raise(ErrorKind::ValidationError, "holding-time study needs nonzero drift");
    Mesh1D mesh = Mesh1D::uniform(x, h, -2, 2);
    Rates1D ru = Generator1D(problem, mesh, SchemeId::u1d).rates(0);
    Rates1D rc = Generator1D(problem, mesh, SchemeId::c1d).rates(0);
    double ts = h / std::abs(mu);
    // Downhill neighbour: the ODE moves from x towards x - sign(x) h.
    double lo = mu < 0.0 ? x - h : x, hi = mu < 0.0 ? x : x + h;
    double te = integrate([&](double s) { return 1.0 / std::abs(problem.mu1(s)); }, lo, hi, 1e-12);
    double tu = 1.0 / ru.total(), tc = 1.0 / rc.total();
    r.add_row({x, ts, te, tu, tc, std::abs(te - ts) / ts, std::abs(tu - ts) / ts, std::abs(tc - ts) / ts});
  }
  r.pass = true;
  return r;
}

// ---------------------------------------------------------------- complexity

StudyResult run_complexity_study(const StudySpec& spec) {
  require_fit_list(spec);
  SdeProblem p = make_problem(spec.problem, spec.problem_params);
  Vec x0 = Vec::Constant(p.dim, spec.options.num("x0", p.dim == 1 ? 2.0 : 1.0));
  std::string mesh = spec.options.get("mesh", "log");
  auto rows = complexity_profile(
      [&](double h) { return Simulator(p, make_discretization(p, spec.scheme, h, x0, mesh)); }, x0, spec.T, spec.h,
      spec.n_paths, spec.seed);
  StudyResult r = start(spec, "complexity", {"h", "mean_jumps", "mean_holding"});
  std::vector<double> hs, jumps, hold;
  for (const auto& row : rows) {
    r.add_row({row.h, row.mean_jumps, row.mean_holding});
    hs.push_back(row.h);
    jumps.push_back(row.mean_jumps);
    hold.push_back(row.mean_holding);
  }
  r.fit = fit_loglog(hs, jumps);
  r.has_fit = true;
  SlopeFit fh = fit_loglog(hs, hold);
  r.metrics["holding_slope"] = fh.slope;
  r.metrics["holding_residual"] = fh.residual;
  double tol = spec.options.num("tolerance", 0.1);
  r.judge(-2.0, tol);
  r.pass = r.pass && std::abs(fh.slope - 2.0) <= tol && fh.residual <= kMaxFitResidual;
  return r;
}

// ---------------------------------------------------------------- spectrum

StudyResult run_spectrum_study(const StudySpec& spec) {
  require_fit_list(spec);
  SdeProblem p = make_problem(spec.problem, spec.problem_params);
  if (!p.linear_drift) raise(ErrorKind::InvalidParams, spec.problem + " has no linear drift");
  const int k = static_cast<int>(spec.options.integer("k", 20));
  const double radius = spec.options.num("radius", 6.0);
  std::vector<Complex> ref = ou_spectrum(*p.linear_drift, 4 * k);
  StudyResult r = start(spec, "spectrum", {"h", "k", "re", "im", "re_ref", "im_ref"});
  std::vector<double> errs;
  double max_res = 0.0;
  std::vector<Complex> finest;
  for (double h : spec.h) {
    Window2D w = spectral_window(p, h, radius);
    Generator2D gen(p, w.mx, w.my, spec.scheme);
    TruncatedQMatrix m = assemble(gen, w.e_star);
    EigenResult eig = leading_eigenvalues(m, k);
    auto match = greedy_match(eig.values, ref);
    for (int i = 0; i < k; ++i) {
      const Complex& c = eig.values[i];
      const Complex& rr = ref[match[i]];
      r.add_row({h, double(i), c.real(), c.imag(), rr.real(), rr.imag()});
    }
    for (double res : eig.residuals) max_res = std::max(max_res, res);
    double e = matched_relative_error(eig.values, ref);
    errs.push_back(e);
    r.metrics["error@" + format_double(h)] = e;
    r.metrics["states@" + format_double(h)] = double(m.size());
    finest = eig.values;
  }
  bool decreasing = true;
  for (size_t i = 1; i < errs.size(); ++i) decreasing = decreasing && errs[i] < errs[i - 1];
  r.fit = fit_loglog(spec.h, errs);
  r.has_fit = true;
  r.metrics["lambda0_abs"] = std::abs(finest[0]);
  Complex ref1 = ref[1];
  r.metrics["lambda1_re"] = finest[1].real();
  r.metrics["lambda1_rel_error"] = std::abs(finest[1].real() - ref1.real()) / std::abs(ref1.real());
  r.metrics["max_residual"] = max_res;
  r.metrics["strictly_decreasing"] = decreasing ? 1.0 : 0.0;
  bool estar_ok = true;
  if (spec.options.integer("estar_check", 1) != 0) {
    double h = spec.h.back();
    Window2D w = spectral_window(p, h, 2.0 * radius);
    Generator2D gen(p, w.mx, w.my, spec.scheme);
    TruncatedQMatrix m = assemble(gen, w.e_star);
    EigenResult eig = leading_eigenvalues(m, k);
    r.metrics["estar_doubling_change"] = matched_relative_error(eig.values, finest);
    double err_change = std::abs(matched_relative_error(eig.values, ref) - errs.back());
    r.metrics["estar_doubling_error_change"] = err_change;
    estar_ok = err_change < 1e-4;
  }
  r.pass = decreasing && r.metrics["lambda0_abs"] <= 1e-8 && max_res <= 1e-8 && estar_ok;
  return r;
}

// ---------------------------------------------------------------- consistency

namespace {

// Cubic polynomial in y - x0 times the bump exp(-1 / (1 - |y - z|^2 / R^2)).
struct TestFunction {
  Vec x0, z, k, c, d;
  double a = 1.0;
  double R = 2.5;

  double poly(const Vec& y, Vec* grad, Mat* hess) const {
    Vec u = y - x0;
    double cu = c.dot(u), du = d.dot(u);
    if (grad) *grad = k + 2.0 * cu * c + 3.0 * du * du * d;
    if (hess) *hess = 2.0 * c * c.transpose() + 6.0 * du * d * d.transpose();
    return a + k.dot(u) + cu * cu + du * du * du;
  }
  double bump(const Vec& y, Vec* grad, Mat* hess) const {
    Vec w = y - z;
    double s = w.squaredNorm() / (R * R);
    if (s >= 1.0) {
      if (grad) *grad = Vec::Zero(y.size());
      if (hess) *hess = Mat::Zero(y.size(), y.size());
      return 0.0;
    }
    double b = std::exp(-1.0 / (1.0 - s));
    double g1 = -1.0 / ((1.0 - s) * (1.0 - s)), g2 = -2.0 / ((1.0 - s) * (1.0 - s) * (1.0 - s));
    Vec ds = 2.0 * w / (R * R);
    if (grad) *grad = b * g1 * ds;
    if (hess)
      *hess = b * ((g1 * g1 + g2) * ds * ds.transpose() + g1 * 2.0 / (R * R) * Mat::Identity(y.size(), y.size()));
    return b;
  }
  double value(const Vec& y) const { return poly(y, nullptr, nullptr) * bump(y, nullptr, nullptr); }
  double generator(const Vec& y, const Vec& mu, const Mat& M) const {
    Vec gp, gb;
    Mat hp, hb;
    double P = poly(y, &gp, &hp), B = bump(y, &gb, &hb);
    Vec grad = B * gp + P * gb;
    Mat hess = B * hp + gp * gb.transpose() + gb * gp.transpose() + P * hb;
    return mu.dot(grad) + (M.cwiseProduct(hess)).sum();
  }
};

}  // namespace

StudyResult run_consistency_study(const StudySpec& spec) {
  require_fit_list(spec);
  SdeProblem p = make_problem(spec.problem, spec.problem_params);
  const int n_states = static_cast<int>(spec.options.integer("n_states", 20));
  const double lo = spec.options.num("lo", -1.5), hi = spec.options.num("hi", 1.5);
  const std::string mesh = spec.options.get("mesh", "uniform");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> U(lo, hi), K(-1.0, 1.0), C(1.0, 1.5), Off(-0.3, 0.3);
  std::bernoulli_distribution Sign(0.5);
  StudyResult r = start(spec, "consistency", {"state", "h", "error"});
  std::vector<double> slopes, fit_slopes;
  std::vector<double> sup_err(spec.h.size(), 0.0), sup_h(spec.h.size(), 0.0);
  double worst_residual = 0.0;
  const int sd = scheme_dim(spec.scheme);
  for (int s = 0; s < n_states; ++s) {
    Vec x(p.dim);
    for (int d = 0; d < p.dim; ++d) x[d] = U(rng);
    TestFunction tf;
    tf.x0 = x;
    tf.z = Vec(p.dim);
    tf.k = Vec(p.dim);
    tf.c = Vec(p.dim);
    tf.d = Vec(p.dim);
    for (int d = 0; d < p.dim; ++d) {
      tf.z[d] = x[d] + Off(rng) / std::sqrt(double(p.dim));
      tf.k[d] = K(rng);
      tf.c[d] = (Sign(rng) ? 1.0 : -1.0) * C(rng) / std::sqrt(double(p.dim));
      tf.d[d] = K(rng);
    }
    auto f = [&](const Vec& y) { return tf.value(y); };
    LocalCoeffs lc;
    p.local(x, lc);
    double Lf = tf.generator(x, lc.mu, lc.M);
    std::vector<double> hs, errs;
    for (double h : spec.h) {
      ChannelSet cs;
      double heff = h;
      if (sd == 1) {
        Mesh1D m = mesh == "log" ? Mesh1D::log(h, std::log(x[0]), -2, 2) : Mesh1D::uniform(x[0], h, -2, 2);
        cs = Generator1D(p, m, spec.scheme, spec.options.integer("averaged", 0) != 0).channels(0);
      } else if (sd == 2) {
        Mesh1D mx, my;
        if (mesh == "log") {
          LogMesh2D lm = log_mesh_2d(std::stod(p.info.at("m11")), std::stod(p.info.at("m12")),
                                     std::stod(p.info.at("m22")), h, x[0], x[1], 2, 2);
          mx = lm.x;
          my = lm.y;
          heff = lm.eps;
        } else {
          mx = Mesh1D::uniform(x[0], h, -2, 2);
          my = Mesh1D::uniform(x[1], h, -2, 2);
        }
        cs = Generator2D(p, mx, my, spec.scheme).channels(0, 0);
      } else {
        GeneratorND g(p, spec.scheme, StepField::uniform(h));
        if (spec.scheme == SchemeId::gridless) g.set_gridless(spec.seed, spec.options.integer("degenerate_xi", 0) != 0);
        cs = g.channels(x);
      }
      double e = std::abs(apply(cs, f) - Lf);
      sup_err[hs.size()] = std::max(sup_err[hs.size()], e);
      sup_h[hs.size()] = std::max(sup_h[hs.size()], heff);
      hs.push_back(heff);
      errs.push_back(std::max(e, 1e-300));
      r.add_row({double(s), heff, e});
    }
    SlopeFit fit = fit_loglog(hs, errs);
    fit_slopes.push_back(fit.slope);
    worst_residual = std::max(worst_residual, fit.residual);
    size_t n = hs.size();
    slopes.push_back(std::log(errs[n - 2] / errs[n - 1]) / std::log(hs[n - 2] / hs[n - 1]));
  }
  double threshold = spec.options.num("min_slope", scheme_second_order(spec.scheme) ? 1.7 : 0.8);
  size_t n = sup_err.size();
  double sup_slope = std::log(sup_err[n - 2] / sup_err[n - 1]) / std::log(sup_h[n - 2] / sup_h[n - 1]);
  r.metrics["sup_slope"] = sup_slope;
  r.metrics["min_slope"] = *std::min_element(slopes.begin(), slopes.end());
  r.metrics["median_slope"] = median(slopes);
  r.metrics["min_fit_slope"] = *std::min_element(fit_slopes.begin(), fit_slopes.end());
  r.metrics["states_below_threshold"] =
      double(std::count_if(slopes.begin(), slopes.end(), [&](double v) { return v < threshold; }));
  r.metrics["max_fit_residual"] = worst_residual;
  r.metrics["threshold"] = threshold;
  r.expected_slope = threshold;
  r.pass = sup_slope >= threshold;
  return r;
}

// ---------------------------------------------------------------- Lotka-Volterra

namespace {

struct LvAccumulator {
  std::map<long, double> hist;  // time-weighted occupation per x1 grid index
  std::vector<double> above;  // x2 > floor time per decay window
  std::vector<double> window_time;
  double interior = 0.0;
  double post_burn = 0.0;
  double min_coord = kInf;
  long long jumps = 0;
};

double overlap(double a0, double a1, double b0, double b1) { return std::max(0.0, std::min(a1, b1) - std::max(a0, b0)); }

}  // namespace

StudyResult run_lv_study(const StudySpec& spec) {
  validate_spec(spec);
  SdeProblem p = make_problem(spec.problem.empty() ? "lotka_volterra" : spec.problem, spec.problem_params);
  if (p.name != "lotka_volterra") raise(ErrorKind::ValidationError, "lv study needs the lotka_volterra problem");
  const std::string regime = p.info.at("regime");
  const double h = spec.h.front();
  Vec x0(2);
  x0 << spec.options.num("x1", 1.0), spec.options.num("x2", 1.0);
  const double T = spec.T;
  const double burn = spec.options.num("burn", 0.25 * T);
  const double floor = spec.options.num("floor", 1e-6);
  const double boundary = spec.options.num("boundary", 1e-3);
  std::vector<double> win_end;
  for (double fr : {0.125, 0.25, 0.5, 1.0}) win_end.push_back(fr * T);

  Discretization disc = make_discretization(p, SchemeId::c2d, h, x0, "log");
  Simulator sim(p, disc);
  const Mesh1D& mx = *disc.mesh_x;
  std::vector<LvAccumulator> acc(static_cast<size_t>(spec.n_paths));
  parallel_for(spec.n_paths, [&](long i) {
    LvAccumulator& a = acc[static_cast<size_t>(i)];
    a.above.assign(win_end.size(), 0.0);
    a.window_time.assign(win_end.size(), 0.0);
    double t = 0.0;
    PathOptions opt;
    opt.on_hold = [&](const Vec& x, double dt) {
      double t1 = t + dt;
      a.min_coord = std::min(a.min_coord, x.minCoeff());
      double post = overlap(t, t1, burn, T);
      if (post > 0.0) {
        a.post_burn += post;
        if (x.minCoeff() >= boundary) a.interior += post;
        a.hist[mx.nearest_index(x[0])] += post;
      }
      for (size_t w = 0; w < win_end.size(); ++w) {
        double o = overlap(t, t1, 0.5 * win_end[w], win_end[w]);
        a.window_time[w] += o;
        if (x[1] > floor) a.above[w] += o;
      }
      t = t1;
    };
    RngStream rng(spec.seed, static_cast<uint64_t>(i));
    PathResult res = sim.simulate(x0, T, rng, opt);
    a.jumps = res.jump_count;
    a.min_coord = std::min(a.min_coord, res.final_state.minCoeff());
  });

  LvAccumulator tot;
  tot.above.assign(win_end.size(), 0.0);
  tot.window_time.assign(win_end.size(), 0.0);
  double jumps = 0.0;
  for (const auto& a : acc) {
    for (const auto& [k, v] : a.hist) tot.hist[k] += v;
    for (size_t w = 0; w < win_end.size(); ++w) {
      tot.above[w] += a.above[w];
      tot.window_time[w] += a.window_time[w];
    }
    tot.interior += a.interior;
    tot.post_burn += a.post_burn;
    tot.min_coord = std::min(tot.min_coord, a.min_coord);
    jumps += double(a.jumps);
  }

  StudyResult r = start(spec, "lv", {"x1", "cell_lo", "cell_hi", "occupation", "reference"});
  r.metrics["interior_fraction"] = tot.interior / tot.post_burn;
  r.metrics["min_coordinate"] = tot.min_coord;
  r.metrics["mean_jumps"] = jumps / double(spec.n_paths);
  r.metrics["eps"] = disc.mesh_y->step();
  const bool positive = tot.min_coord > 0.0;
  double l1 = 0.0;
  bool have_ref = static_cast<bool>(p.reference.marginal_density) && !tot.hist.empty();
  if (have_ref) {
    auto mass = [&](double lo, double hi) {
      return integrate_singular([&](double s) { return p.reference.marginal_density(0, s); }, lo, hi);
    };
    const long first = tot.hist.begin()->first, last = tot.hist.rbegin()->first;
    double covered = 0.0;
    for (long k = first; k <= last; ++k) {
      double lo = 0.5 * (mx.point(k - 1) + mx.point(k)), hi = 0.5 * (mx.point(k) + mx.point(k + 1));
      auto it = tot.hist.find(k);
      double occ = it == tot.hist.end() ? 0.0 : it->second / tot.post_burn;
      double ref = mass(lo, hi);
      covered += ref;
      l1 += std::abs(occ - ref);
      r.add_row({mx.point(k), lo, hi, occ, ref});
    }
    r.metrics["reference_tail_mass"] = std::max(0.0, 1.0 - covered);
    l1 += std::max(0.0, 1.0 - covered);
  }
  for (size_t w = 0; w < win_end.size(); ++w)
    r.metrics["x2_above_floor@" + format_double(win_end[w])] = tot.above[w] / tot.window_time[w];
  r.metrics["regime_" + regime] = 1.0;
  if (regime == "interior") {
    r.pass = positive && r.metrics["interior_fraction"] > 0.95;
  } else if (regime == "extinction") {
    bool decays = true;
    for (size_t w = 1; w < win_end.size(); ++w) decays = decays && tot.above[w] / tot.window_time[w] <= tot.above[w - 1] / tot.window_time[w - 1];
    decays = decays && tot.above.back() / tot.window_time.back() < tot.above.front() / tot.window_time.front();
    r.metrics["x1_marginal_l1"] = l1;
    r.metrics["x2_decays"] = decays ? 1.0 : 0.0;
    r.pass = positive && have_ref && l1 < 0.1 && decays;
  } else {
    r.pass = positive;
    r.notes.push_back("regime " + regime + " has no quantitative check");
  }
  return r;
}

// ---------------------------------------------------------------- colloid

StudyResult run_colloid_study(const StudySpec& spec) {
  validate_spec(spec);
  SdeProblem p = make_problem("colloid_cluster", spec.problem_params);
  const double tB = std::stod(p.info.at("t_B"));
  const double T = spec.options.num("horizon", 20.0) * tB;
  const double h_main = spec.options.num("h_main", 0.32);
  const double edge = spec.options.num("edge", 8.08);
  const int samples = static_cast<int>(spec.options.integer("samples", 20));
  const std::string steps = spec.options.get("steps", "physical");
  Vec x0 = icosahedron_cluster(edge);
  const double rg0 = radius_of_gyration(x0);
  StudyResult r = start(spec, "colloid", {"t", "mean_rg"});
  r.metrics["initial_rg"] = rg0;
  r.metrics["horizon"] = T;

  auto run = [&](double h, bool sample, std::vector<double>& rg_sum, double& jump_sum, bool& finite) {
    Simulator sim(p, make_discretization(p, spec.scheme, h, x0, steps));
    std::vector<std::vector<double>> per(static_cast<size_t>(spec.n_paths), std::vector<double>(samples + 1, 0.0));
    std::vector<long long> jumps(static_cast<size_t>(spec.n_paths), 0);
    std::vector<char> ok(static_cast<size_t>(spec.n_paths), 1);
    parallel_for(spec.n_paths, [&](long i) {
      auto& rg = per[static_cast<size_t>(i)];
      double t = 0.0;
      int next = 0;
      PathOptions opt;
      opt.on_hold = [&](const Vec& x, double dt) {
        if (!x.allFinite()) ok[static_cast<size_t>(i)] = 0;
        double t1 = t + dt;
        if (sample)
          while (next <= samples && next * T / samples <= t1) {
            if (next * T / samples >= t) rg[next] = radius_of_gyration(x);
            ++next;
          }
        t = t1;
      };
      RngStream rng(spec.seed, static_cast<uint64_t>(i));
      PathResult res = sim.simulate(x0, T, rng, opt);
      if (!res.final_state.allFinite()) ok[static_cast<size_t>(i)] = 0;
      if (sample) rg[samples] = radius_of_gyration(res.final_state);
      jumps[static_cast<size_t>(i)] = res.jump_count;
    });
    rg_sum.assign(samples + 1, 0.0);
    jump_sum = 0.0;
    for (long i = 0; i < spec.n_paths; ++i) {
      for (int k = 0; k <= samples; ++k) rg_sum[k] += per[i][k] / double(spec.n_paths);
      jump_sum += double(jumps[i]) / double(spec.n_paths);
      finite = finite && ok[i];
    }
  };

  bool finite = true;
  std::vector<double> rg;
  double main_jumps = 0.0;
  run(h_main, true, rg, main_jumps, finite);
  for (int k = 0; k <= samples; ++k) r.add_row({k * T / samples, rg[k]});
  r.metrics["final_mean_rg"] = rg[samples];
  r.metrics["mean_jumps@" + format_double(h_main)] = main_jumps;

  std::vector<double> hs, js;
  for (double h : spec.h) {
    double j = main_jumps;
    if (h != h_main) {
      std::vector<double> unused;
      run(h, false, unused, j, finite);
    }
    r.metrics["mean_jumps@" + format_double(h)] = j;
    hs.push_back(h);
    js.push_back(j);
  }
  r.metrics["finite"] = finite ? 1.0 : 0.0;
  bool complexity_ok = true;
  if (hs.size() >= 3) {
    r.fit = fit_loglog(hs, js);
    r.has_fit = true;
    r.judge(-2.0, spec.options.num("tolerance", 0.3));
    complexity_ok = r.pass;
  }
  r.pass = complexity_ok && finite && rg[samples] < rg0;
  return r;
}

// ---------------------------------------------------------------- log-mesh realizability

StudyResult run_log_mesh_realizability(uint64_t seed, int n_admissible, int n_inadmissible, int n_points) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> logm(std::log(0.1), std::log(10.0)), rho(-0.99, 0.99), bad(1.01, 3.0),
      coin(0.0, 1.0);
  // Sample grid points with |log x|, |log y| <= L; the index range depends on the mesh steps.
  const long W = 200;
  const double L = 10.0;
  StudyResult r;
  r.study = "log_mesh_realizability";
  r.params.set("seed", std::to_string(seed));
  r.columns = {"case", "m11", "m12", "m22", "admissible", "accepted", "alpha", "eps", "min_rate"};
  int good = 0, rejected = 0;
  for (int c = 0; c < n_admissible; ++c) {
    double m11 = std::exp(logm(rng)), m22 = std::exp(logm(rng));
    double m12 = rho(rng) * std::sqrt(m11 * m22);
    Params pp;
    pp.set("m11", m11);
    pp.set("m12", m12);
    pp.set("m22", m22);
    SdeProblem p = make_problem("lognormal_2d", pp);
    double min_rate = kInf;
    bool ok = true;
    LogMesh2D lm;
    try {
      lm = log_mesh_2d(m11, m12, m22, 0.2, 1.0, 1.0, W, W);
      Generator2D gen(p, lm.x, lm.y, SchemeId::c2d);
      long wx = std::min(W, static_cast<long>(L / lm.x.step())), wy = std::min(W, static_cast<long>(L / lm.y.step()));
      std::uniform_int_distribution<long> ix(-wx, wx), iy(-wy, wy);
      for (int k = 0; k < n_points; ++k) {
        long i = ix(rng), j = iy(rng);
        Rates2D q = gen.rates(i, j);
        for (double v : q.rate) min_rate = std::min(min_rate, v);
      }
    } catch (const Error&) {
      ok = false;
    }
    ok = ok && min_rate >= 0.0;
    good += ok;
    r.add_row({double(c), m11, m12, m22, 1.0, ok ? 1.0 : 0.0, lm.alpha, lm.eps, min_rate});
  }
  for (int c = 0; c < n_inadmissible; ++c) {
    double m11 = std::exp(logm(rng)), m22 = std::exp(logm(rng));
    double m12 = bad(rng) * std::sqrt(m11 * m22) * (coin(rng) < 0.5 ? -1.0 : 1.0);
    if (c % 3 == 2) {  // negative trace with positive determinant
      m11 = -m11;
      m22 = -m22;
      m12 = 0.5 * std::sqrt(m11 * m22);
    }
    bool accepted = true;
    try {
      log_mesh_2d(m11, m12, m22, 0.2, 1.0, 1.0, W, W);
    } catch (const Error& e) {
      accepted = e.kind() != ErrorKind::InadmissibleDiffusion;
    }
    rejected += !accepted;
    r.add_row({double(n_admissible + c), m11, m12, m22, 0.0, accepted ? 1.0 : 0.0, kNaN, kNaN, kNaN});
  }
  r.metrics["admissible_realizable"] = good;
  r.metrics["inadmissible_rejected"] = rejected;
  r.pass = good == n_admissible && rejected == n_inadmissible;
  return r;
}

// ---------------------------------------------------------------- dispatch

std::vector<std::string> study_names() {
  return {"density", "mfpt", "committor", "weak", "holding_time", "complexity", "spectrum", "consistency", "lv",
          "colloid", "realizability"};
}

StudyResult run_study(const StudySpec& spec) {
  StudyResult r;
  if (spec.study == "density")
    r = run_density_study(spec);
  else if (spec.study == "mfpt" || spec.study == "committor")
    r = run_bvp_study(spec, spec.study);
  else if (spec.study == "weak")
    r = run_weak_study(spec);
  else if (spec.study == "holding_time") {
    validate_spec(spec);
    r = run_holding_time_study(make_problem(spec.problem, spec.problem_params), spec.h.front(),
                               spec.options.list("x", {2.0, 5.0, 10.0}));
  } else if (spec.study == "complexity")
    r = run_complexity_study(spec);
  else if (spec.study == "spectrum")
    r = run_spectrum_study(spec);
  else if (spec.study == "consistency")
    r = run_consistency_study(spec);
  else if (spec.study == "lv")
    r = run_lv_study(spec);
  else if (spec.study == "colloid")
    r = run_colloid_study(spec);
  else if (spec.study == "realizability")
    r = run_log_mesh_realizability(spec.seed, static_cast<int>(spec.options.integer("n_admissible", 50)),
                                   static_cast<int>(spec.options.integer("n_inadmissible", 10)),
                                   static_cast<int>(spec.options.integer("n_points", 1000)));
  else {
    std::string names;
    for (const auto& n : study_names()) names += (names.empty() ? "" : ", ") + n;
    raise(ErrorKind::ValidationError, "unknown study '" + spec.study + "'; valid: " + names);
  }
  if (!spec.out_dir.empty()) write_study(r, spec.out_dir, r.study);
  return r;
}

}  // namespace ctrw
