#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace decay {

enum class GrowthKind {
  SuperlinearAtZero,  // g(0) = g'(0) = 0, s g'(s)^2 / g(s) -> 0
  LinearAtZero,       // g'(0) > 0, exponential-decay regime
};

/// A feedback growth law g on [-1,1]: increasing, odd, C^1, with the sector
/// constants (c1, c2) and the convexity horizon s0 used by the weight
/// construction. H(s) = sqrt(s) g(sqrt(s)) must be strictly convex on
/// [0, s0^2] and g(s0) < 1.
struct GrowthFunction {
  std::string name;
  std::vector<std::pair<std::string, double>> params;
  GrowthKind kind = GrowthKind::SuperlinearAtZero;

  double s0 = 1.0;
  double c1 = 1.0;
  double c2 = 1.0;

  std::function<double(double)> g;        // odd extension applied by catalog
  std::function<double(double)> g_prime;  // derivative, even in s

  /// s * g'(s) / g(s) in closed form where available; avoids 0/0 when g
  /// underflows near 0 (e.g. exp(-1/s^2)). Empty for custom growths.
  std::function<double(double)> slope_ratio;

  /// False for the limsup Lambda_H = 1 family (g = s/ln^p(1/s)): the decay
  /// envelope formulas degenerate there and envelope evaluation is refused.
  bool envelope_supported = true;

  double operator()(double s) const { return g(s); }
};

/// Catalog lookup. Known names: power (p), power_log (p, q), exp_inv_sq,
/// log_weak (p), exp_log_pow (p), linear. Throws ConfigError for unknown
/// names or out-of-range parameters.
GrowthFunction make_growth(const std::string& name,
                           const std::map<std::string, double>& params = {});

/// Probe-grid validation of the GrowthFunction invariants: oddness, g(0)=0,
/// strict monotonicity, g(s0) < 1, and the kind-specific conditions at 0.
/// Throws InvalidGrowthError naming the violated invariant.
void validate_growth(const GrowthFunction& gf);

}  // namespace decay
