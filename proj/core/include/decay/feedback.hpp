#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <string>

#include "decay/growth.hpp"
#include "decay/rng.hpp"

namespace decay {

using Vec = Eigen::VectorXd;

enum class FeedbackKind { Local, Nonlocal };

/// A damping nonlinearity rho. Local maps act nodewise, rho(x, s); nonlocal
/// maps have the product form rho(f)(x) = phi1(f(x)) * phi2(N(f)) with
/// N(f) = dx * sum_j chi(x_j) f(x_j) (rectangle rule, matching the discrete
/// inner products).
///
/// Immutable; apply() is pure and thread-safe.
struct FeedbackMap {
  FeedbackKind kind = FeedbackKind::Local;
  std::string name;

  // Local case.
  std::function<double(double x, double s)> rho;
  std::function<double(double x, double s)> rho_ds;  // d rho / d s, for Newton

  // Nonlocal case.
  std::function<double(double)> phi1, phi1_prime, phi2;
  std::function<double(double)> chi;  // kernel as a function of position

  GrowthFunction growth;    // the law this map is sectored by
  double lipschitz_bound = 1.0;  // on the unit ball
};

/// Catalog lookup: power (p), power_linear_tail (alias), linear,
/// nonlocal_sine_arctan. Power laws carry the linear tail
/// rho(s) = sign(s) min(|s|^p, |s|) so the sector condition holds globally.
FeedbackMap catalog_feedback(const std::string& name,
                             const std::map<std::string, double>& params = {});

/// Vectorized evaluation of rho over a grid. The nonlocal functional is a
/// single reduction reused for every component; dx is the quadrature weight.
Vec apply(const FeedbackMap& map, const Vec& positions, const Vec& values, double dx);

/// Diagonal of the state-space Jacobian of apply at the given values. For
/// nonlocal maps the (rank-one) variation through the functional is dropped;
/// the diagonal is phi2(N(f)) * phi1'(f_i). Missing analytic derivatives fall
/// back to central differences with step 1e-7 (1 + |v|).
Vec apply_jacobian_diag(const FeedbackMap& map, const Vec& positions, const Vec& values,
                        double dx);

struct SectorReport {
  bool sign_ok = true;
  bool sector_ok = true;
  double worst_sign_margin = 0.0;    // min of s * rho over probes (>= 0 wanted)
  double worst_sector_margin = 0.0;  // min slack of the two-sided bounds
  int samples = 0;
};

/// Samples the sign condition s rho(x,s) >= 0 and the sector bounds
/// c1 g(|s|) <= |rho| <= c2 g^{-1}(|s|) (|s| <= 1), c1 |s| <= |rho| <= c2 |s|
/// (|s| >= 1) on a log+linear grid of [-10, 10]; nonlocal maps are probed
/// with random grid functions. Reports, never throws.
SectorReport verify_sector(const FeedbackMap& map, int samples, Lcg64& rng);

}  // namespace decay
