#include "ctrw/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <sstream>

#include "ctrw/errors.hpp"

namespace ctrw {

namespace {

std::string describe(double a, double b) {
  std::ostringstream os;
  os << "[" << a << ", " << b << "]";
  return os.str();
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol) {
  if (a == b) return 0.0;
  if (!std::isfinite(a) || !std::isfinite(b))
    raise(ErrorKind::QuadratureFailure, "infinite limits " + describe(a, b));
  // Boost's error estimate degrades on very narrow intervals, so integrate
  // over [0, 1] and rescale.
  const double w = b - a;
  auto guarded = [&](double t) {
    double v = f(a + w * t);
    if (!std::isfinite(v)) raise(ErrorKind::QuadratureFailure, "non-finite integrand on " + describe(a, b));
    return v;
  };
  double err = 0.0;
  double l1 = 0.0;
  double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(guarded, 0.0, 1.0, 25, rel_tol,
                                                                               &err, &l1);
  if (err > rel_tol * l1 + 1e-300 && err > 10 * rel_tol * std::abs(value))
    raise(ErrorKind::QuadratureFailure, "tolerance not met on " + describe(a, b));
  return w * value;
}

double integrate_singular(const std::function<double(double)>& f, double a, double b, double rel_tol) {
  if (a == b) return 0.0;
  boost::math::quadrature::tanh_sinh<double> ts;
  double err = 0.0;
  double l1 = 0.0;
  double value = 0.0;
  try {
    value = ts.integrate(f, a, b, rel_tol, &err, &l1);
  } catch (const std::exception& e) {
    raise(ErrorKind::QuadratureFailure, std::string(e.what()) + " on " + describe(a, b));
  }
  if (!std::isfinite(value)) raise(ErrorKind::QuadratureFailure, "non-finite result on " + describe(a, b));
  return value;
}

}  // namespace ctrw
