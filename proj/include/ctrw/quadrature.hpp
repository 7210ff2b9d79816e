#pragma once

#include <functional>

namespace ctrw {

// Adaptive Gauss-Kronrod quadrature. Throws QuadratureFailure if the
// integrand is non-finite or the tolerance is not met.
double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol = 1e-8);

// Double-exponential quadrature for integrable endpoint singularities.
double integrate_singular(const std::function<double(double)>& f, double a, double b,
                          double rel_tol = 1e-8);

}  // namespace ctrw
