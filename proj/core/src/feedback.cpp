#include "decay/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "decay/errors.hpp"

namespace decay {

namespace {

constexpr double kPi = 3.14159265358979323846;

double fd_derivative(const std::function<double(double, double)>& f, double x, double s) {
  const double h = 1e-7 * (1.0 + std::abs(s));
  return (f(x, s + h) - f(x, s - h)) / (2.0 * h);
}

}  // namespace

FeedbackMap catalog_feedback(const std::string& name,
                             const std::map<std::string, double>& params) {
  FeedbackMap map;
  map.name = name;

  if (name == "power" || name == "power_linear_tail") {
    double p = 3.0;
    if (auto it = params.find("p"); it != params.end()) p = it->second;
    if (p <= 1.0) throw ConfigError("feedback 'power' requires p > 1");
    // sign(s) min(|s|^p, |s|): the pure power law near 0 patched with the
    // linear tail demanded by the sector condition for |s| >= 1. Both
    // branches meet at |s| = 1 with value 1.
    map.rho = [p](double, double s) {
      const double a = std::abs(s);
      const double v = a <= 1.0 ? std::pow(a, p) : a;
      return s < 0.0 ? -v : v;
    };
    map.rho_ds = [p](double, double s) {
      const double a = std::abs(s);
      if (a == 0.0) return 0.0;
      return a <= 1.0 ? p * std::pow(a, p - 1.0) : 1.0;
    };
    map.growth = make_growth("power", {{"p", p}});
    map.lipschitz_bound = p;
  } else if (name == "linear") {
    map.rho = [](double, double s) { return s; };
    map.rho_ds = [](double, double) { return 1.0; };
    map.growth = make_growth("linear");
    map.lipschitz_bound = 1.0;
  } else if (name == "nonlocal_sine_arctan") {
    map.kind = FeedbackKind::Nonlocal;
    map.phi1 = [](double s) { return s - std::sin(s); };
    map.phi1_prime = [](double s) { return 1.0 - std::cos(s); };
    map.phi2 = [](double tau) { return kPi + std::atan(tau); };
    double chi_val = 1.0;
    if (auto it = params.find("chi"); it != params.end()) chi_val = it->second;
    map.chi = [chi_val](double) { return chi_val; };  // uniform kernel 1/|Omega|
    // phi1(s) ~ s^3/6 at 0 and ~ s at infinity, phi2 in (pi/2, 3pi/2):
    // sectored by g = s^3 with c1 = 0.2 (phi1(s)/s^3 >= 1 - sin 1 = 0.158 on
    // [0,1], times pi/2) and c2 = 3 pi (phi1(s) <= s, times the phi2 cap).
    map.growth = make_growth("power", {{"p", 3.0}, {"c1", 0.2}, {"c2", 3.0 * kPi}});
    map.lipschitz_bound = 12.0;
  } else {
    throw ConfigError("unknown feedback name '" + name + "'");
  }
  return map;
}

Vec apply(const FeedbackMap& map, const Vec& positions, const Vec& values, double dx) {
  if (positions.size() != values.size())
    throw std::invalid_argument("feedback apply: positions/values length mismatch");
  Vec out(values.size());
  if (map.kind == FeedbackKind::Local) {
    for (Eigen::Index i = 0; i < values.size(); ++i)
      out[i] = map.rho(positions[i], values[i]);
    return out;
  }
  // Nonlocal: one reduction N(f) = dx sum chi(x_j) f_j shared by all nodes.
  double functional = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i)
    functional += map.chi(positions[i]) * values[i];
  functional *= dx;
  const double outer = map.phi2(functional);
  for (Eigen::Index i = 0; i < values.size(); ++i)
    out[i] = map.phi1(values[i]) * outer;
  return out;
}

Vec apply_jacobian_diag(const FeedbackMap& map, const Vec& positions, const Vec& values,
                        double dx) {
  if (positions.size() != values.size())
    throw std::invalid_argument("feedback jacobian: positions/values length mismatch");
  Vec out(values.size());
  if (map.kind == FeedbackKind::Local) {
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      out[i] = map.rho_ds ? map.rho_ds(positions[i], values[i])
                          : fd_derivative(map.rho, positions[i], values[i]);
    }
    return out;
  }
  double functional = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i)
    functional += map.chi(positions[i]) * values[i];
  functional *= dx;
  const double outer = map.phi2(functional);
  for (Eigen::Index i = 0; i < values.size(); ++i)
    out[i] = map.phi1_prime(values[i]) * outer;
  return out;
}

SectorReport verify_sector(const FeedbackMap& map, int samples, Lcg64& rng) {
  SectorReport report;
  report.samples = std::max(samples, 100);
  const GrowthFunction& g = map.growth;

  auto g_inverse = [&](double y) {
    // g is increasing with g(1) <= 1; bisection on [0, 1] suffices for y <= g(1).
    if (y <= 0.0) return 0.0;
    double lo = 0.0, hi = 1.0;
    if (g.g(1.0) <= y) return 1.0;
    for (int i = 0; i < 120; ++i) {
      const double mid = 0.5 * (lo + hi);
      (g.g(mid) < y ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };

  double worst_sign = std::numeric_limits<double>::infinity();
  double worst_sector = std::numeric_limits<double>::infinity();

  auto probe = [&](double x, double s, double rho_val) {
    worst_sign = std::min(worst_sign, s * rho_val);
    if (s * rho_val < 0.0) report.sign_ok = false;
    const double a = std::abs(s);
    const double r = std::abs(rho_val);
    double lower, upper;
    if (a <= 1.0) {
      lower = g.c1 * g.g(a);
      upper = g.c2 * g_inverse(std::min(a, 1.0));
    } else {
      lower = g.c1 * a;
      upper = g.c2 * a;
    }
    const double margin = std::min(r - lower, upper - r);
    worst_sector = std::min(worst_sector, margin);
    if (margin < -1e-12) report.sector_ok = false;
    (void)x;
  };

  const int per_grid = report.samples;
  if (map.kind == FeedbackKind::Local) {
    for (int i = 0; i < per_grid; ++i) {
      // half log-spaced in (1e-6, 1], half linear in [-10, 10]
      double s;
      if (i % 2 == 0) {
        const double expo = -6.0 + 6.0 * (i / static_cast<double>(per_grid));
        s = std::pow(10.0, expo) * (i % 4 == 0 ? 1.0 : -1.0);
      } else {
        s = -10.0 + 20.0 * (i / static_cast<double>(per_grid));
      }
      const double x = rng.next_double();
      if (s != 0.0) probe(x, s, map.rho ? map.rho(x, s) : 0.0);
    }
  } else {
    // Random grid functions; check the pointwise values of phi1 * phi2(N(f)).
    const int grid = 64;
    Vec pos(grid);
    for (int i = 0; i < grid; ++i) pos[i] = (i + 1.0) / (grid + 1.0);
    const int rounds = std::max(1, per_grid / grid);
    for (int r = 0; r < rounds; ++r) {
      Vec f(grid);
      const double scale = std::pow(10.0, rng.uniform(-3.0, 1.0));
      for (int i = 0; i < grid; ++i) f[i] = scale * rng.uniform(-1.0, 1.0);
      Vec rho_vals = apply(map, pos, f, 1.0 / (grid + 1.0));
      for (int i = 0; i < grid; ++i) {
        if (f[i] != 0.0) probe(pos[i], f[i], rho_vals[i]);
      }
    }
  }

  report.worst_sign_margin = worst_sign;
  report.worst_sector_margin = worst_sector;
  return report;
}

}  // namespace decay
