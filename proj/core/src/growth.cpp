#include "decay/growth.hpp"

#include <cmath>
#include <string>

#include "decay/errors.hpp"

namespace decay {

namespace {

double get_param(const std::map<std::string, double>& params, const std::string& key,
                 double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

double require_param(const std::map<std::string, double>& params, const std::string& key,
                     const std::string& name) {
  auto it = params.find(key);
  if (it == params.end())
    throw ConfigError("growth '" + name + "' requires parameter '" + key + "'");
  return it->second;
}

// Odd extension of a profile defined for s >= 0.
std::function<double(double)> odd(std::function<double(double)> pos) {
  return [pos = std::move(pos)](double s) {
    if (s == 0.0) return 0.0;
    return s > 0.0 ? pos(s) : -pos(-s);
  };
}

std::function<double(double)> even(std::function<double(double)> pos) {
  return [pos = std::move(pos)](double s) { return pos(std::abs(s)); };
}

}  // namespace

GrowthFunction make_growth(const std::string& name,
                           const std::map<std::string, double>& params) {
  GrowthFunction gf;
  gf.name = name;

  if (name == "power") {
    const double p = get_param(params, "p", 3.0);
    if (p <= 1.0) throw ConfigError("growth 'power' requires p > 1");
    gf.params = {{"p", p}};
    gf.s0 = get_param(params, "s0", 1.0);
    gf.g = odd([p](double s) { return std::pow(s, p); });
    gf.g_prime = even([p](double s) { return s == 0.0 ? 0.0 : p * std::pow(s, p - 1.0); });
    gf.slope_ratio = [p](double) { return p; };
  } else if (name == "power_log") {
    const double p = require_param(params, "p", name);
    const double q = require_param(params, "q", name);
    if (p <= 1.0 || q <= 0.0) throw ConfigError("growth 'power_log' requires p > 1, q > 0");
    gf.params = {{"p", p}, {"q", q}};
    // s^p ln^q(1/s) peaks at exp(-q/p); continue linearly past 90% of that
    // point so the catalog function is increasing on all of [0,1].
    const double sc = 0.9 * std::exp(-q / p);
    auto raw = [p, q](double s) { return std::pow(s, p) * std::pow(std::log(1.0 / s), q); };
    auto raw_prime = [p, q](double s) {
      const double l = std::log(1.0 / s);
      return std::pow(s, p - 1.0) * std::pow(l, q - 1.0) * (p * l - q);
    };
    gf.g = odd([raw, raw_prime, sc](double s) {
      return s <= sc ? raw(s) : raw(sc) + raw_prime(sc) * (s - sc);
    });
    gf.g_prime = even([raw_prime, sc](double s) {
      if (s == 0.0) return 0.0;
      return s <= sc ? raw_prime(s) : raw_prime(sc);
    });
    gf.slope_ratio = [p, q, sc, raw, raw_prime](double s) {
      if (s <= sc) return p - q / std::log(1.0 / s);
      const double g = raw(sc) + raw_prime(sc) * (s - sc);
      return s * raw_prime(sc) / g;
    };
    gf.s0 = get_param(params, "s0", std::min(0.35, 0.5 * std::exp(-q / p)));
  } else if (name == "exp_inv_sq") {
    gf.g = odd([](double s) { return std::exp(-1.0 / (s * s)); });
    gf.g_prime = even([](double s) {
      if (s == 0.0) return 0.0;
      return std::exp(-1.0 / (s * s)) * 2.0 / (s * s * s);
    });
    gf.slope_ratio = [](double s) { return 2.0 / (s * s); };
    gf.s0 = get_param(params, "s0", 0.8);
  } else if (name == "log_weak") {
    const double p = get_param(params, "p", 1.0);
    if (p <= 0.0) throw ConfigError("growth 'log_weak' requires p > 0");
    gf.params = {{"p", p}};
    // s / ln^p(1/s) blows up at s -> 1; continue linearly past 0.7.
    const double sc = 0.7;
    auto raw = [p](double s) { return s / std::pow(std::log(1.0 / s), p); };
    auto raw_prime = [p](double s) {
      const double l = std::log(1.0 / s);
      return (l + p) / std::pow(l, p + 1.0);
    };
    gf.g = odd([raw, raw_prime, sc](double s) {
      return s <= sc ? raw(s) : raw(sc) + raw_prime(sc) * (s - sc);
    });
    gf.g_prime = even([raw_prime, sc](double s) {
      if (s == 0.0) return 0.0;
      return s <= sc ? raw_prime(s) : raw_prime(sc);
    });
    gf.slope_ratio = [p, sc, raw, raw_prime](double s) {
      if (s <= sc) return 1.0 + p / std::log(1.0 / s);
      const double g = raw(sc) + raw_prime(sc) * (s - sc);
      return s * raw_prime(sc) / g;
    };
    double s0 = get_param(params, "s0", 0.5);
    while (s0 > 0.02 && gf.g(s0) > 0.9) s0 *= 0.8;
    gf.s0 = s0;
    // limsup Lambda_H = 1: the envelope formulas degenerate for this family.
    gf.envelope_supported = false;
  } else if (name == "exp_log_pow") {
    const double p = require_param(params, "p", name);
    if (p <= 2.0) throw ConfigError("growth 'exp_log_pow' requires p > 2");
    gf.params = {{"p", p}};
    gf.g = odd([p](double s) { return std::exp(-std::pow(std::log(1.0 / s), p)); });
    gf.g_prime = even([p](double s) {
      if (s == 0.0) return 0.0;
      const double l = std::log(1.0 / s);
      return std::exp(-std::pow(l, p)) * p * std::pow(l, p - 1.0) / s;
    });
    gf.slope_ratio = [p](double s) { return p * std::pow(std::log(1.0 / s), p - 1.0); };
    // H loses convexity near s = 0.14..0.17 across the family; stay below.
    gf.s0 = get_param(params, "s0", 0.35);
  } else if (name == "linear") {
    gf.kind = GrowthKind::LinearAtZero;
    gf.g = [](double s) { return s; };
    gf.g_prime = [](double) { return 1.0; };
    gf.slope_ratio = [](double) { return 1.0; };
    gf.s0 = get_param(params, "s0", 1.0);
  } else {
    throw ConfigError("unknown growth name '" + name + "'");
  }

  gf.c1 = get_param(params, "c1", 1.0);
  gf.c2 = get_param(params, "c2", 1.0);
  return gf;
}

void validate_growth(const GrowthFunction& gf) {
  if (!gf.g || !gf.g_prime) throw InvalidGrowthError("growth: g and g_prime must be set");
  if (!(gf.s0 > 0.0 && gf.s0 <= 1.0))
    throw InvalidGrowthError("growth '" + gf.name + "': s0 must lie in (0,1]");
  if (gf.c1 <= 0.0 || gf.c2 <= 0.0)
    throw InvalidGrowthError("growth '" + gf.name + "': sector constants must be positive");

  if (gf.g(0.0) != 0.0) throw InvalidGrowthError("growth '" + gf.name + "': g(0) != 0");
  if (gf.g(gf.s0) > 1.0 + 1e-12)
    throw InvalidGrowthError("growth '" + gf.name + "': g(s0) must not exceed 1");

  const int probes = 257;
  double prev = 0.0;
  for (int i = 1; i < probes; ++i) {
    const double s = static_cast<double>(i) / (probes - 1);
    const double v = gf.g(s);
    // Ties are only tolerated where g underflows to zero.
    if (v < prev || (v == prev && v > 1e-300))
      throw InvalidGrowthError("growth '" + gf.name +
                               "': g not strictly increasing on probe grid near s=" +
                               std::to_string(s));
    prev = v;
    const double w = gf.g(-s);
    if (std::abs(w + v) > 1e-12 * std::max(1.0, std::abs(v)))
      throw InvalidGrowthError("growth '" + gf.name + "': g not odd at s=" + std::to_string(s));
  }

  if (gf.kind == GrowthKind::SuperlinearAtZero) {
    if (std::abs(gf.g_prime(0.0)) > 1e-12)
      throw InvalidGrowthError("growth '" + gf.name + "': superlinear kind needs g'(0) = 0");
    // s g'(s)^2 / g(s) must tend to 0; sample decades 1e-1 .. 1e-8 and ask
    // for a clear decreasing trend (some catalog entries converge only
    // logarithmically, so no absolute threshold).
    double first = -1.0, last = -1.0;
    for (int k = 1; k <= 8; ++k) {
      const double s = std::pow(10.0, -k);
      const double ratio =
          gf.slope_ratio ? gf.slope_ratio(s)
                         : (gf.g(s) > 1e-300 ? s * gf.g_prime(s) / gf.g(s) : 0.0);
      const double q = ratio * gf.g_prime(s);
      if (k == 1) first = q;
      last = q;
    }
    if (!(last < 1e-3 || last <= first * (1.0 - 1e-6)))
      throw InvalidGrowthError("growth '" + gf.name +
                               "': s g'(s)^2/g(s) does not vanish at 0");
  } else {
    if (!(gf.g_prime(0.0) > 0.0))
      throw InvalidGrowthError("growth '" + gf.name + "': linear kind needs g'(0) > 0");
  }
}

}  // namespace decay
