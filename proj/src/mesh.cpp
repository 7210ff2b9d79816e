#include "ctrw/mesh.hpp"

#include <algorithm>
#include <cmath>

#include "ctrw/errors.hpp"

namespace ctrw {

Mesh1D Mesh1D::uniform(double x0, double h, long lo, long hi) {
  if (!(h > 0.0) || !std::isfinite(h)) raise(ErrorKind::InvalidParams, "mesh step h must be positive");
  if (hi < lo) raise(ErrorKind::InvalidParams, "empty mesh window");
  Mesh1D m;
  m.kind_ = Kind::uniform;
  m.origin_ = x0;
  m.step_ = h;
  m.lo_ = lo;
  m.hi_ = hi;
  return m;
}

Mesh1D Mesh1D::log(double dxi, double xi0, long lo, long hi) {
  if (!(dxi > 0.0) || !std::isfinite(dxi)) raise(ErrorKind::InvalidParams, "log step must be positive");
  if (hi < lo) raise(ErrorKind::InvalidParams, "empty mesh window");
  Mesh1D m;
  m.kind_ = Kind::log;
  m.origin_ = xi0;
  m.step_ = dxi;
  m.lo_ = lo;
  m.hi_ = hi;
  return m;
}

Mesh1D Mesh1D::periodic(double a, double b, long n) {
  if (!(b > a) || n < 3) raise(ErrorKind::InvalidParams, "periodic mesh needs b > a and n >= 3");
  double h = (b - a) / double(n);
  Mesh1D m = uniform(a + 0.5 * h, h, 0, n - 1);
  m.period_ = n;
  return m;
}

Mesh1D Mesh1D::from_points(std::vector<double> pts) {
  if (pts.size() < 2) raise(ErrorKind::InvalidParams, "need at least two mesh points");
  for (size_t k = 1; k < pts.size(); ++k)
    if (!(pts[k] > pts[k - 1])) raise(ErrorKind::InvalidParams, "mesh points must be strictly increasing");
  Mesh1D m;
  m.kind_ = Kind::points;
  m.lo_ = 0;
  m.hi_ = static_cast<long>(pts.size()) - 1;
  m.pts_ = std::move(pts);
  return m;
}

Mesh1D Mesh1D::with_window(long lo, long hi) const {
  if (hi < lo) raise(ErrorKind::InvalidParams, "empty mesh window");
  if (kind_ == Kind::points && (lo < 0 || hi >= static_cast<long>(pts_.size())))
    raise(ErrorKind::InvalidParams, "window exceeds explicit mesh");
  Mesh1D m = *this;
  m.lo_ = lo;
  m.hi_ = hi;
  return m;
}

long Mesh1D::wrap(long i) const {
  if (period_ == 0) return i;
  long r = i % period_;
  return r < 0 ? r + period_ : r;
}

double Mesh1D::point(long i) const {
  switch (kind_) {
    case Kind::uniform:
      return origin_ + double(wrap(i)) * step_;
    case Kind::log:
      return std::exp(origin_ + double(i) * step_);
    case Kind::points:
      if (i < 0 || i >= static_cast<long>(pts_.size())) raise(ErrorKind::DomainViolation, "index outside mesh");
      return pts_[i];
  }
  return 0.0;
}

double Mesh1D::dx_plus(long i) const {
  switch (kind_) {
    case Kind::uniform:
      return step_;
    case Kind::log:
      return std::expm1(step_) * point(i);
    case Kind::points:
      return point(i + 1) - point(i);
  }
  return 0.0;
}

double Mesh1D::dx_minus(long i) const {
  switch (kind_) {
    case Kind::uniform:
      return step_;
    case Kind::log:
      return -std::expm1(-step_) * point(i);
    case Kind::points:
      return point(i) - point(i - 1);
  }
  return 0.0;
}

long Mesh1D::nearest_index(double x) const {
  switch (kind_) {
    case Kind::uniform: {
      long i = std::lround((x - origin_) / step_);
      return period_ ? wrap(i) : i;
    }
    case Kind::log:
      if (!(x > 0.0)) raise(ErrorKind::DomainViolation, "log mesh needs x > 0");
      return std::lround((std::log(x) - origin_) / step_);
    case Kind::points: {
      auto it = std::lower_bound(pts_.begin(), pts_.end(), x);
      long j = static_cast<long>(it - pts_.begin());
      if (j == static_cast<long>(pts_.size())) return j - 1;
      if (j > 0 && x - pts_[j - 1] < pts_[j] - x) return j - 1;
      return j;
    }
  }
  return 0;
}

std::vector<double> Mesh1D::points() const {
  std::vector<double> out;
  out.reserve(size());
  for (long i = lo_; i <= hi_; ++i) out.push_back(point(i));
  return out;
}

Mesh1D uniform_mesh_1d(double x0, double h, long lo, long hi) { return Mesh1D::uniform(x0, h, lo, hi); }

Mesh1D log_mesh_1d(double dxi, double xi0, long lo, long hi) { return Mesh1D::log(dxi, xi0, lo, hi); }

bool log_mesh_2d_conditions(double m11, double m12, double m22, double alpha, double eps) {
  double a = std::abs(m12);
  if (a == 0.0) return true;
  bool first = std::sinh(alpha * eps) / (-std::expm1(-eps)) <= m11 / a;
  bool second = a / m22 <= -std::expm1(-alpha * eps) / std::sinh(eps);
  return first && second;
}

LogMesh2D log_mesh_2d(double m11, double m12, double m22, double eps, double x_anchor, double y_anchor,
                      long half_width_x, long half_width_y) {
  if (!(m11 * m22 - m12 * m12 > 0.0) || !(m11 + m22 > 0.0))
    raise(ErrorKind::InadmissibleDiffusion, "need det M > 0 and tr M > 0");
  if (!(eps > 0.0)) raise(ErrorKind::InvalidParams, "eps must be positive");
  if (!(x_anchor > 0.0 && y_anchor > 0.0)) raise(ErrorKind::InvalidParams, "anchors must be positive");
  double a = std::abs(m12);
  double alpha = a == 0.0 ? 1.0 : 0.5 * (m11 / a + a / m22);
  LogMesh2D out;
  out.alpha = alpha;
  int k = 0;
  while (!log_mesh_2d_conditions(m11, m12, m22, alpha, eps)) {
    if (++k > 60) raise(ErrorKind::InadmissibleDiffusion, "no admissible eps after 60 halvings");
    eps *= 0.5;
  }
  out.eps = eps;
  out.halvings = k;
  out.x = Mesh1D::log(alpha * eps, std::log(x_anchor), -half_width_x, half_width_x);
  out.y = Mesh1D::log(eps, std::log(y_anchor), -half_width_y, half_width_y);
  return out;
}

std::optional<size_t> PrunedWindow::find(const GridIndex& g) const {
  auto it = index.find(g);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

PrunedWindow prune(const std::vector<GridIndex>& candidates, const std::function<Vec(const GridIndex&)>& point,
                   const SdeProblem& problem, double e_star, int dim) {
  if (!(e_star > 0.0)) raise(ErrorKind::InvalidParams, "E* must be positive");
  PrunedWindow w;
  w.dim = dim;
  w.e_star = e_star;
  for (const auto& g : candidates) {
    if (w.index.count(g)) continue;
    Vec x = point(g);
    if (!problem.domain.contains(x)) continue;
    Vec mu = problem.drift(x);
    if (!(mu.norm() <= e_star)) continue;
    w.index.emplace(g, w.states.size());
    w.states.push_back(g);
  }
  if (w.states.empty()) raise(ErrorKind::EmptyWindow, "no grid point has |mu| <= E*");
  return w;
}

std::vector<GridIndex> window_indices_1d(const Mesh1D& m) {
  std::vector<GridIndex> out;
  for (long i = m.lo(); i <= m.hi(); ++i) out.push_back({i, 0});
  return out;
}

std::vector<GridIndex> window_indices_2d(const Mesh1D& mx, const Mesh1D& my) {
  std::vector<GridIndex> out;
  for (long i = mx.lo(); i <= mx.hi(); ++i)
    for (long j = my.lo(); j <= my.hi(); ++j) out.push_back({i, j});
  return out;
}

}  // namespace ctrw
