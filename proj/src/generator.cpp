#include "ctrw/generator.hpp"

#include <algorithm>
#include <cmath>

#include "ctrw/errors.hpp"
#include "ctrw/quadrature.hpp"
#include "ctrw/tridiag.hpp"

namespace ctrw {

namespace {

const std::vector<std::pair<std::string, SchemeId>>& scheme_table() {
  static const std::vector<std::pair<std::string, SchemeId>> t{
      {"u1d", SchemeId::u1d},     {"c1d", SchemeId::c1d},
      {"fv1d", SchemeId::fv1d},   {"milestone1d", SchemeId::milestone1d},
      {"u2d", SchemeId::u2d},     {"c2d", SchemeId::c2d},
      {"c_nd", SchemeId::c_nd},   {"u_nd", SchemeId::u_nd},
      {"uu_nd", SchemeId::uu_nd}, {"generalized", SchemeId::generalized},
      {"diagdom", SchemeId::diagdom}, {"gridless", SchemeId::gridless}};
  return t;
}

uint64_t splitmix(uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

bool target_allowed(const SdeProblem& p, const Vec& y) {
  if (p.domain.contains(y)) return true;
  if (p.domain.kind == DomainKind::box) return false;
  raise(ErrorKind::DomainViolation, "channel target leaves the domain of " + p.name);
}

}  // namespace

SchemeId parse_scheme(const std::string& name) {
  for (const auto& [n, id] : scheme_table())
    if (n == name) return id;
  raise(ErrorKind::ValidationError, "unknown scheme '" + name + "' (valid: u1d, c1d, fv1d, milestone1d, u2d, "
                                    "c2d, c_nd, u_nd, uu_nd, generalized, diagdom, gridless)");
}

std::string scheme_name(SchemeId s) {
  for (const auto& [n, id] : scheme_table())
    if (id == s) return n;
  return "?";
}

std::vector<std::string> scheme_names() {
  std::vector<std::string> out;
  for (const auto& [n, id] : scheme_table()) out.push_back(n);
  return out;
}

int scheme_dim(SchemeId s) {
  switch (s) {
    case SchemeId::u1d:
    case SchemeId::c1d:
    case SchemeId::fv1d:
    case SchemeId::milestone1d:
      return 1;
    case SchemeId::u2d:
    case SchemeId::c2d:
      return 2;
    default:
      return 0;
  }
}

bool scheme_second_order(SchemeId s) {
  switch (s) {
    case SchemeId::u1d:
    case SchemeId::u2d:
    case SchemeId::u_nd:
    case SchemeId::uu_nd:
      return false;
    default:
      return true;
  }
}

void ChannelSet::add(Vec target, double rate) {
  if (rate <= 0.0) return;
  targets.push_back(std::move(target));
  rates.push_back(rate);
  total_rate += rate;
}

double clamp_rate(double rate, double scale, ErrorKind kind, const char* what) {
  if (!std::isfinite(rate)) raise(ErrorKind::RealizabilityViolation, std::string("non-finite rate in ") + what);
  if (rate >= 0.0) return rate;
  if (rate >= -1e-12 * scale) return 0.0;
  raise(kind, std::string("negative rate in ") + what);
}

// ---------------------------------------------------------------- 1D

Generator1D::Generator1D(const SdeProblem& problem, Mesh1D mesh, SchemeId scheme, bool averaged)
    : problem_(std::make_shared<SdeProblem>(problem)),
      mesh_(std::move(mesh)),
      scheme_(scheme),
      averaged_(averaged),
      cache_(std::make_shared<Cache>()) {
  if (scheme_dim(scheme) != 1) raise(ErrorKind::ValidationError, scheme_name(scheme) + " is not a 1D scheme");
  if (problem.dim != 1) raise(ErrorKind::ValidationError, "1D scheme needs a 1D problem");
  if (averaged && scheme != SchemeId::u1d && scheme != SchemeId::c1d)
    raise(ErrorKind::ValidationError, "averaged variant exists only for u1d and c1d");
}

double Generator1D::mu_eff(long i) const {
  double x = mesh_.point(i);
  double d = 1e-4 * std::min(mesh_.dx_plus(i), mesh_.dx_minus(i));
  double dM = (problem_->m1(x + d) - problem_->m1(x - d)) / (2.0 * d);
  return problem_->mu1(x) - dM;
}

Rates1D Generator1D::compute(long i) const {
  const SdeProblem& p = *problem_;
  double x = mesh_.point(i);
  double xp = mesh_.point(i + 1);
  double xm = mesh_.point(i - 1);
  double dp = mesh_.dx_plus(i);
  double dm = mesh_.dx_minus(i);
  double d = 0.5 * (dp + dm);
  Vec vx = Vec::Constant(1, x);
  if (!p.domain.contains(vx)) raise(ErrorKind::DomainViolation, "grid point outside the domain");
  bool up_ok = target_allowed(p, Vec::Constant(1, xp));
  bool down_ok = target_allowed(p, Vec::Constant(1, xm));
  double M = p.m1(x);
  if (!(M > 0.0)) raise(ErrorKind::SingularDiffusion, "M(x) <= 0 at a grid point");
  Rates1D r;
  switch (scheme_) {
    case SchemeId::u1d: {
      if (averaged_) {
        double mu = mu_eff(i);
        double Mp = up_ok ? p.m1(xp) : M;
        double Mm = down_ok ? p.m1(xm) : M;
        r.up = (std::max(mu, 0.0) + 0.5 * (Mp + M) / d) / dp;
        r.down = (-std::min(mu, 0.0) + 0.5 * (Mm + M) / d) / dm;
      } else {
        double mu = p.mu1(x);
        r.up = (std::max(mu, 0.0) + M / d) / dp;
        r.down = (-std::min(mu, 0.0) + M / d) / dm;
      }
      break;
    }
    case SchemeId::c1d: {
      if (averaged_) {
        double a = mu_eff(i) / M;  // -U'
        double Mp = up_ok ? p.m1(xp) : M;
        double Mm = down_ok ? p.m1(xm) : M;
        r.up = 0.5 * (Mp + M) * std::exp(a * dp / 2.0) / (d * dp);
        r.down = 0.5 * (Mm + M) * std::exp(-a * dm / 2.0) / (d * dm);
      } else {
        double a = p.mu1(x) / M;
        r.up = M * std::exp(a * dp / 2.0) / (d * dp);
        r.down = M * std::exp(-a * dm / 2.0) / (d * dm);
      }
      break;
    }
    case SchemeId::fv1d: {
      auto ratio = [&](double y) {
        // nu(y)/nu(x) = exp(int_x^y mu/M) M(x)/M(y)
        double g = integrate([&](double s) { return p.mu1(s) / p.m1(s); }, x, y, 1e-10);
        return std::exp(g) * M / p.m1(y);
      };
      if (up_ok) r.up = 0.5 * (p.m1(xp) + M) * 0.5 * (ratio(xp) + 1.0) / (d * dp);
      if (down_ok) r.down = 0.5 * (p.m1(xm) + M) * 0.5 * (ratio(xm) + 1.0) / (d * dm);
      break;
    }
    case SchemeId::milestone1d: {
      if (!up_ok || !down_ok) raise(ErrorKind::DomainViolation, "milestone interval leaves the domain");
      double q = exact_committor_quadrature(p, xm, xp, x);
      double u = exact_mfpt_quadrature(p, xm, xp, x);
      if (!(u > 0.0)) raise(ErrorKind::QuadratureFailure, "non-positive local exit time");
      r.up = q / u;
      r.down = (1.0 - q) / u;
      break;
    }
    default:
      break;
  }
  if (!up_ok) r.up = 0.0;
  if (!down_ok) r.down = 0.0;
  double scale = std::abs(r.up) + std::abs(r.down);
  r.up = clamp_rate(r.up, scale, ErrorKind::RealizabilityViolation, "1D generator");
  r.down = clamp_rate(r.down, scale, ErrorKind::RealizabilityViolation, "1D generator");
  return r;
}

Rates1D Generator1D::rates(long i) const {
  if (scheme_ != SchemeId::milestone1d) return compute(i);
  {
    std::lock_guard<std::mutex> lock(cache_->mutex);
    auto it = cache_->rates.find(i);
    if (it != cache_->rates.end()) return it->second;
  }
  Rates1D r = compute(i);
  std::lock_guard<std::mutex> lock(cache_->mutex);
  cache_->rates.emplace(i, r);
  return r;
}

void Generator1D::prepopulate() const {
  if (scheme_ != SchemeId::milestone1d) return;
  for (long i = mesh_.lo(); i <= mesh_.hi(); ++i) rates(i);
}

ChannelSet Generator1D::channels(long i) const {
  Rates1D r = rates(i);
  ChannelSet cs;
  cs.origin = Vec::Constant(1, mesh_.point(i));
  cs.add(Vec::Constant(1, mesh_.point(i + 1)), r.up);
  cs.add(Vec::Constant(1, mesh_.point(i - 1)), r.down);
  return cs;
}

// ---------------------------------------------------------------- 2D

Generator2D::Generator2D(const SdeProblem& problem, Mesh1D mx, Mesh1D my, SchemeId scheme)
    : problem_(std::make_shared<SdeProblem>(problem)), mx_(std::move(mx)), my_(std::move(my)), scheme_(scheme) {
  if (scheme_dim(scheme) != 2) raise(ErrorKind::ValidationError, scheme_name(scheme) + " is not a 2D scheme");
  if (problem.dim != 2) raise(ErrorKind::ValidationError, "2D scheme needs a 2D problem");
}

Vec Generator2D::point(long i, long j) const {
  Vec v(2);
  v << mx_.point(i), my_.point(j);
  return v;
}

Rates2D Generator2D::potential_rates(long i, long j) const {
  const SdeProblem& p = *problem_;
  Vec x = point(i, j);
  double Ux = p.potential(x);
  Vec b = p.flow(x);
  double hx = mx_.step(), hy = my_.step();
  Rates2D r;
  for (int c = 0; c < 4; ++c) {
    Vec disp(2);
    disp << kOffsets2D[c][0] * hx, kOffsets2D[c][1] * hy;
    Vec y = point(i + kOffsets2D[c][0], j + kOffsets2D[c][1]);
    double h2 = disp.squaredNorm();
    double e = -0.5 * p.beta * (p.potential(y) - Ux - b.dot(disp));
    r.rate[c] = std::exp(e) / (p.beta * h2);
  }
  return r;
}

Rates2D Generator2D::rates(long i, long j) const {
  const SdeProblem& p = *problem_;
  Vec x = point(i, j);
  if (!mx_.periodic() && !p.domain.contains(x)) raise(ErrorKind::DomainViolation, "grid point outside the domain");
  Rates2D r;
  if (p.potential_rates && scheme_ == SchemeId::c2d) {
    r = potential_rates(i, j);
  } else {
    LocalCoeffs c;
    p.local(x, c);
    const double dxp = mx_.dx_plus(i), dxm = mx_.dx_minus(i), dx = 0.5 * (dxp + dxm);
    const double dyp = my_.dx_plus(j), dym = my_.dx_minus(j), dy = 0.5 * (dyp + dym);
    const double m11 = c.M(0, 0), m22 = c.M(1, 1), m12 = 0.5 * (c.M(0, 1) + c.M(1, 0));
    const double P = std::max(m12, 0.0), N = std::min(m12, 0.0);
    std::array<double, 8> k{};
    k[0] = m11 / (dx * dxp) - P / (dxp * dyp) + N / (dxp * dym);
    k[1] = m11 / (dx * dxm) - P / (dxm * dym) + N / (dxm * dyp);
    k[2] = m22 / (dy * dyp) - P / (dxp * dyp) + N / (dxm * dyp);
    k[3] = m22 / (dy * dym) - P / (dxm * dym) + N / (dxp * dym);
    k[4] = P / (dxp * dyp);
    k[5] = P / (dxm * dym);
    k[6] = -N / (dxp * dym);
    k[7] = -N / (dxm * dyp);
    if (scheme_ == SchemeId::c2d) {
      Vec mt = c.has_mu_tilde ? c.mu_tilde : transformed_drift(c.M, c.mu);
      for (int ch = 0; ch < 8; ++ch) {
        if (k[ch] == 0.0) continue;
        int a = kOffsets2D[ch][0], b = kOffsets2D[ch][1];
        double sx = a > 0 ? dxp : (a < 0 ? -dxm : 0.0);
        double sy = b > 0 ? dyp : (b < 0 ? -dym : 0.0);
        k[ch] *= std::exp(0.5 * (mt[0] * sx + mt[1] * sy));
      }
    } else {
      k[0] += std::max(c.mu[0], 0.0) / dxp;
      k[1] += -std::min(c.mu[0], 0.0) / dxm;
      k[2] += std::max(c.mu[1], 0.0) / dyp;
      k[3] += -std::min(c.mu[1], 0.0) / dym;
    }
    r.rate = k;
  }
  double scale = 0.0;
  for (double v : r.rate) scale += std::abs(v);
  for (int ch = 0; ch < 8; ++ch) {
    double v = clamp_rate(r.rate[ch], scale, ErrorKind::RealizabilityViolation, "2D generator");
    if (v > 0.0 && !mx_.periodic()) {
      Vec y = point(i + kOffsets2D[ch][0], j + kOffsets2D[ch][1]);
      if (!target_allowed(p, y)) v = 0.0;
    }
    r.rate[ch] = v;
  }
  return r;
}

ChannelSet Generator2D::channels(long i, long j) const {
  Rates2D r = rates(i, j);
  ChannelSet cs;
  cs.origin = point(i, j);
  for (int ch = 0; ch < 8; ++ch) cs.add(point(i + kOffsets2D[ch][0], j + kOffsets2D[ch][1]), r.rate[ch]);
  return cs;
}

// ---------------------------------------------------------------- nD

std::pair<double, double> StepField::steps(int i, const Vec& x, const Vec& dir) const {
  switch (mode) {
    case Mode::uniform:
      return {h, h};
    case Mode::physical: {
      double n = dir.norm();
      if (!(n > 0.0)) raise(ErrorKind::SingularDiffusion, "zero noise direction");
      return {h / n, h / n};
    }
    case Mode::custom:
      return custom(i, x, dir);
  }
  return {h, h};
}

Decomposition diagdom_decomposition(const Mat& M) {
  const Eigen::Index n = M.rows();
  std::vector<double> w;
  std::vector<Vec> eta;
  for (Eigen::Index i = 0; i < n; ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) off += std::abs(M(i, j));
    w.push_back(M(i, i) - off);
    eta.push_back(Vec::Unit(n, i));
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (M(i, j) > 0.0) {
        w.push_back(M(i, j));
        eta.push_back(Vec::Unit(n, i) + Vec::Unit(n, j));
      } else if (M(i, j) < 0.0) {
        w.push_back(-M(i, j));
        eta.push_back(Vec::Unit(n, i) - Vec::Unit(n, j));
      }
    }
  Decomposition d;
  d.w = Eigen::Map<Vec>(w.data(), static_cast<Eigen::Index>(w.size()));
  d.eta.resize(n, static_cast<Eigen::Index>(eta.size()));
  for (size_t k = 0; k < eta.size(); ++k) d.eta.col(static_cast<Eigen::Index>(k)) = eta[k];
  return d;
}

LatticeNoise::LatticeNoise(uint64_t seed, double cell, bool degenerate)
    : seed_(seed), cell_(cell), degenerate_(degenerate) {
  if (!(cell > 0.0)) raise(ErrorKind::InvalidParams, "lattice cell must be positive");
}

double LatticeNoise::node(int axis, long k) const {
  uint64_t z = splitmix(seed_ ^ splitmix(static_cast<uint64_t>(axis) * 0x632BE59BD9B4E019ULL ^
                                         static_cast<uint64_t>(k)));
  return 0.5 + 0.5 * (double(z >> 11) * 0x1.0p-53);
}

double LatticeNoise::operator()(const Vec& x) const {
  if (degenerate_) return 1.0;
  double s = 0.0;
  for (Eigen::Index a = 0; a < x.size(); ++a) {
    double t = x[a] / cell_;
    double f = std::floor(t);
    long k = static_cast<long>(f);
    double u = t - f;
    double blend = u * u * u * (u * (6.0 * u - 15.0) + 10.0);  // C2 quintic
    s += node(int(a), k) + blend * (node(int(a), k + 1) - node(int(a), k));
  }
  return s / double(x.size());
}

GeneratorND::GeneratorND(const SdeProblem& problem, SchemeId scheme, StepField steps)
    : problem_(std::make_shared<SdeProblem>(problem)), scheme_(scheme), steps_(std::move(steps)) {
  if (scheme_dim(scheme) != 0)
    raise(ErrorKind::ValidationError, scheme_name(scheme) + " is a gridded scheme; use the 1D/2D generators");
  if (!(steps_.h > 0.0)) raise(ErrorKind::InvalidParams, "step h must be positive");
  if (scheme == SchemeId::gridless) set_gridless(0, false);
}

void GeneratorND::set_gridless(uint64_t seed, bool degenerate_xi) {
  xi_ = std::make_shared<LatticeNoise>(seed, steps_.h, degenerate_xi);
}

void GeneratorND::along_columns(const Vec& x, const LocalCoeffs& c, ChannelSet& out) const {
  const Eigen::Index n = x.size();
  Vec mt;
  if (scheme_ != SchemeId::uu_nd) mt = c.has_mu_tilde ? c.mu_tilde : transformed_drift(c.M, c.mu);
  for (Eigen::Index i = 0; i < n; ++i) {
    Vec s = c.sigma.col(i);
    auto [hp, hm] = steps_.steps(int(i), x, s);
    double hi = 0.5 * (hp + hm);
    double up = 1.0 / (hp * hi), down = 1.0 / (hm * hi);
    if (scheme_ == SchemeId::c_nd) {
      double a = mt.dot(s);
      up *= std::exp(0.5 * hp * a);
      down *= std::exp(-0.5 * hm * a);
    } else if (scheme_ == SchemeId::u_nd) {
      double a = mt.dot(s);
      up += std::max(a, 0.0) / hp;
      down += -std::min(a, 0.0) / hm;
    }
    Vec yp = x + hp * s, ym = x - hm * s;
    if (target_allowed(*problem_, yp)) out.add(yp, up);
    if (target_allowed(*problem_, ym)) out.add(ym, down);
  }
  if (scheme_ == SchemeId::uu_nd) {
    for (Eigen::Index i = 0; i < n; ++i) {
      Vec e = Vec::Unit(n, i);
      auto [hp, hm] = steps_.steps(int(i), x, e);
      Vec yp = x + hp * e, ym = x - hm * e;
      double up = std::max(c.mu[i], 0.0) / hp;
      double down = -std::min(c.mu[i], 0.0) / hm;
      if (up > 0.0 && target_allowed(*problem_, yp)) out.add(yp, up);
      if (down > 0.0 && target_allowed(*problem_, ym)) out.add(ym, down);
    }
  }
}

void GeneratorND::generalized(const Vec& x, const LocalCoeffs& c, const Decomposition& d, ChannelSet& out) const {
  Mat R = Mat::Zero(c.M.rows(), c.M.cols());
  for (Eigen::Index k = 0; k < d.w.size(); ++k) {
    if (d.w[k] < 0.0) raise(ErrorKind::DecompositionMismatch, "negative decomposition weight");
    R += d.w[k] * d.eta.col(k) * d.eta.col(k).transpose();
  }
  if ((R - c.M).norm() > 1e-8 * std::max(c.M.norm(), 1e-300))
    raise(ErrorKind::DecompositionMismatch, "weights and directions do not reconstruct M");
  Vec mt = c.has_mu_tilde ? c.mu_tilde : transformed_drift(c.M, c.mu);
  for (Eigen::Index k = 0; k < d.w.size(); ++k) {
    if (d.w[k] == 0.0) continue;
    Vec e = d.eta.col(k);
    auto [hp, hm] = steps_.steps(int(k), x, e);
    double hi = 0.5 * (hp + hm);
    double a = mt.dot(e);
    Vec yp = x + hp * e, ym = x - hm * e;
    if (target_allowed(*problem_, yp)) out.add(yp, d.w[k] / (hp * hi) * std::exp(0.5 * hp * a));
    if (target_allowed(*problem_, ym)) out.add(ym, d.w[k] / (hm * hi) * std::exp(-0.5 * hm * a));
  }
}

Vec diagdom_axis_steps(const Mat& M, double h) {
  const Eigen::Index n = M.rows();
  Vec p(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(M(i, i) > 0.0)) raise(ErrorKind::NotDiagonallyDominant, "non-positive diagonal entry");
    p[i] = 1.0 / std::sqrt(M(i, i));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) off += std::abs(p[i] * M(i, j) * p[j]);
    if (off > 1.0 + 1e-12) raise(ErrorKind::NotDiagonallyDominant, "scaled diffusion is not diagonally dominant");
  }
  Vec delta(n);
  for (Eigen::Index i = 0; i < n; ++i) delta[i] = h / p[i];
  return delta;
}

void GeneratorND::diagdom(const Vec& x, const LocalCoeffs& c, ChannelSet& out) const {
  const Eigen::Index n = x.size();
  const Mat& M = c.M;
  Vec D = delta_.size() == n ? delta_ : diagdom_axis_steps(M, steps_.h);
  struct Pending {
    Vec disp;
    double coeff;
  };
  std::vector<Pending> list;
  double scale = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double k = M(i, i) / (D[i] * D[i]);
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) k -= std::abs(M(i, j)) / (D[i] * D[j]);
    list.push_back({D[i] * Vec::Unit(n, i), k});
    list.push_back({-D[i] * Vec::Unit(n, i), k});
    scale += 2.0 * std::abs(k);
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double k = std::abs(M(i, j)) / (D[i] * D[j]);
      if (k == 0.0) continue;
      double sj = M(i, j) > 0.0 ? 1.0 : -1.0;
      Vec v = D[i] * Vec::Unit(n, i) + sj * D[j] * Vec::Unit(n, j);
      list.push_back({v, k});
      list.push_back({-v, k});
      scale += 2.0 * k;
    }
  for (auto& e : list) e.coeff = clamp_rate(e.coeff, scale, ErrorKind::NotDiagonallyDominant, "diagdom");
  Vec mt = c.has_mu_tilde ? c.mu_tilde : transformed_drift(c.M, c.mu);
  for (const auto& e : list) {
    if (e.coeff == 0.0) continue;
    Vec y = x + e.disp;
    if (target_allowed(*problem_, y)) out.add(y, e.coeff * std::exp(0.5 * mt.dot(e.disp)));
  }
}

void GeneratorND::gridless(const Vec& x, const LocalCoeffs& c, ChannelSet& out) const {
  const Eigen::Index n = x.size();
  double s = c.M(0, 0);
  if (!(s > 0.0) || (c.M - s * Mat::Identity(n, n)).norm() > 1e-12 * s)
    raise(ErrorKind::InvalidParams, "gridless scheme needs additive isotropic noise");
  double xi = (*xi_)(x);
  double step = xi * steps_.h;
  int r = problem_->growth_m + 1;
  // Rates in log form.
  double log_base = std::log(s / (step * step)) - step * step * std::pow(x.norm(), 2 * r);
  for (Eigen::Index i = 0; i < n; ++i) {
    double a = c.mu[i] / s;
    Vec e = Vec::Unit(n, i);
    Vec yp = x + step * e, ym = x - step * e;
    if (target_allowed(*problem_, yp)) out.add(yp, std::exp(log_base + 0.5 * step * a));
    if (target_allowed(*problem_, ym)) out.add(ym, std::exp(log_base - 0.5 * step * a));
  }
}

ChannelSet GeneratorND::channels(const Vec& x) const {
  const SdeProblem& p = *problem_;
  if (!p.domain.contains(x)) raise(ErrorKind::DomainViolation, "state outside the domain");
  LocalCoeffs c;
  p.local(x, c);
  ChannelSet cs;
  cs.origin = x;
  switch (scheme_) {
    case SchemeId::c_nd:
    case SchemeId::u_nd:
    case SchemeId::uu_nd:
      along_columns(x, c, cs);
      break;
    case SchemeId::generalized: {
      Decomposition d;
      if (decomposition_) {
        d = decomposition_(x, c.M);
      } else {
        d.w = Vec::Ones(c.sigma.cols());
        d.eta = c.sigma;
      }
      generalized(x, c, d, cs);
      break;
    }
    case SchemeId::diagdom:
      diagdom(x, c, cs);
      break;
    case SchemeId::gridless:
      gridless(x, c, cs);
      break;
    default:
      break;
  }
  return cs;
}

double lyapunov_drift_ratio(const ChannelSet& cs, const std::function<double(const Vec&)>& log_v) {
  double lx = log_v(cs.origin);
  double s = 0.0;
  for (size_t k = 0; k < cs.rates.size(); ++k) s += cs.rates[k] * std::expm1(log_v(cs.targets[k]) - lx);
  return s;
}

std::function<double(const Vec&)> polynomial_log_lyapunov(double a, int m) {
  return [a, m](const Vec& x) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += std::pow(std::abs(x[i]), 2 * m + 2);
    return a * s;
  };
}

double apply(const ChannelSet& cs, const std::function<double(const Vec&)>& f) {
  double fx = f(cs.origin);
  double s = 0.0;
  for (size_t k = 0; k < cs.rates.size(); ++k) s += cs.rates[k] * (f(cs.targets[k]) - fx);
  return s;
}

}  // namespace ctrw
