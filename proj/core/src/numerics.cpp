#include "decay/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace decay {

double bisect_increasing(const std::function<double(double)>& f, double lo, double hi,
                         double rel_tol, int max_iter) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo > 0.0) return lo;
  if (fhi < 0.0) return hi;
  for (int i = 0; i < max_iter; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= rel_tol * std::max(1.0, std::abs(mid))) return mid;
    const double fm = f(mid);
    if (fm <= 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace {

double simpson(double fa, double fm, double fb, double h) {
  return (fa + 4.0 * fm + fb) * (h / 6.0);
}

double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                   double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(fa, flm, fm, m - a);
  const double right = simpson(fm, frm, fb, b - m);
  const double err = (left + right - whole) / 15.0;
  if (depth <= 0 || std::abs(err) <= tol) return left + right + err;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol, double rel_tol, int max_depth) {
  if (a == b) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = simpson(fa, fm, fb, b - a);
  const double tol = std::max(abs_tol, rel_tol * std::abs(whole));
  return simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

LineFit fit_line(const double* x, const double* y, int count) {
  LineFit out;
  if (count < 2) return out;
  double sx = 0, sy = 0;
  for (int i = 0; i < count; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / count, my = sy / count;
  double sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < count; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  if (syy > 0.0) {
    double ss_res = 0;
    for (int i = 0; i < count; ++i) {
      const double r = y[i] - (out.slope * x[i] + out.intercept);
      ss_res += r * r;
    }
    out.r2 = 1.0 - ss_res / syy;
  } else {
    out.r2 = 1.0;  // constant data, exactly reproduced
  }
  return out;
}

}  // namespace decay
