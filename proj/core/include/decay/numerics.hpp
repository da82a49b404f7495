#pragma once

#include <cmath>
#include <functional>

#include "decay/errors.hpp"

namespace decay {

/// Root of a monotone increasing function f on [lo, hi] by plain bisection.
/// Assumes f(lo) <= 0 <= f(hi); returns the midpoint once the bracket is
/// below rel_tol * max(1, |x|) or max_iter halvings have been spent.
double bisect_increasing(const std::function<double(double)>& f, double lo, double hi,
                         double rel_tol = 1e-12, int max_iter = 200);

/// Adaptive Simpson quadrature with Richardson correction.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol = 1e-10, double rel_tol = 1e-10, int max_depth = 48);

/// Least-squares fit of y = slope*x + intercept; r2 is the coefficient of
/// determination (1 for an exact fit).
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LineFit fit_line(const double* x, const double* y, int count);

}  // namespace decay
