#include "decay/convexity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "decay/errors.hpp"
#include "decay/numerics.hpp"

namespace decay {

namespace {

void check_domain(bool ok, const std::string& what) {
  if (!ok) throw std::domain_error(what);
}

}  // namespace

ConvexityProfile ConvexityProfile::build(GrowthFunction growth, double beta,
                                         Tolerances tol) {
  if (!(beta > 0.0)) throw std::domain_error("ConvexityProfile: beta must be positive");
  validate_growth(growth);

  ConvexityProfile p;
  p.growth_ = std::move(growth);
  p.beta_ = beta;
  p.tol_ = tol;
  p.s0sq_ = p.growth_.s0 * p.growth_.s0;
  p.hp_at_zero_ =
      p.growth_.kind == GrowthKind::LinearAtZero ? p.growth_.g_prime(0.0) : 0.0;

  // H'(s0^2) via the closed form g(s0)/(2 s0) + g'(s0)/2.
  const double s0 = p.growth_.s0;
  p.hp_s0sq_ = p.growth_.g(s0) / (2.0 * s0) + p.growth_.g_prime(s0) / 2.0;

  // Convexity probe: second differences of H on a uniform grid of [0, s0^2].
  // Strict positivity is required for superlinear kinds (away from the
  // underflowed-to-zero region near 0); the linear kind has H(s) = g'(0) s,
  // which is convex but not strictly so.
  {
    const int m = 129;
    const double h = p.s0sq_ / (m - 1);
    double hmax = 0.0;
    std::vector<double> vals(m);
    for (int i = 0; i < m; ++i) {
      vals[i] = p.H(i * h);
      hmax = std::max(hmax, std::abs(vals[i]));
    }
    const double slack = 1e-12 * std::max(1.0, hmax);
    for (int i = 1; i + 1 < m; ++i) {
      const double d2 = vals[i + 1] - 2.0 * vals[i] + vals[i - 1];
      if (d2 < -slack)
        throw InvalidGrowthError("growth '" + p.growth_.name +
                                 "': H not convex on probe grid near s=" +
                                 std::to_string(i * h));
      if (p.growth_.kind == GrowthKind::SuperlinearAtZero && d2 <= 0.0 &&
          vals[i + 1] > 1e-300)
        throw InvalidGrowthError("growth '" + p.growth_.name +
                                 "': H not strictly convex on probe grid near s=" +
                                 std::to_string(i * h));
    }
  }

  // limsup_{s->0} Lambda_H estimated by decade sampling; the max of the last
  // four samples decides between the simplified and general rates.
  {
    double est = 0.0;
    for (int k = 5; k <= 8; ++k) {
      est = std::max(est, p.Lambda_H(p.s0sq_ * std::pow(10.0, -k)));
    }
    p.lambda_limsup_ = est;
  }

  if (p.growth_.kind == GrowthKind::LinearAtZero) {
    p.mode_ = DecayMode::Exponential;
  } else if (p.lambda_limsup_ < 0.999) {
    p.mode_ = DecayMode::Simplified;
  } else {
    p.mode_ = DecayMode::General;
  }
  return p;
}

ConvexityProfile ConvexityProfile::with_beta(double beta) const {
  if (!(beta > 0.0)) throw std::domain_error("ConvexityProfile: beta must be positive");
  ConvexityProfile copy = *this;
  copy.beta_ = beta;
  return copy;
}

double ConvexityProfile::H(double s) const {
  check_domain(s >= -1e-15 && s <= s0sq_ * (1.0 + 1e-12),
               "H: argument outside [0, s0^2]");
  if (s <= 0.0) return 0.0;
  const double sigma = std::sqrt(s);
  return sigma * growth_.g(sigma);
}

double ConvexityProfile::H_prime(double s) const {
  check_domain(s >= -1e-15 && s <= s0sq_ * (1.0 + 1e-12),
               "H_prime: argument outside [0, s0^2]");
  if (s < 1e-300) return hp_at_zero_;  // limit value at 0
  const double sigma = std::sqrt(s);
  return growth_.g(sigma) / (2.0 * sigma) + growth_.g_prime(sigma) / 2.0;
}

double ConvexityProfile::H_prime_inv(double r) const {
  check_domain(r >= 0.0, "H_prime_inv: negative argument");
  if (r <= hp_at_zero_) return 0.0;
  if (r >= hp_s0sq_) return s0sq_;
  auto f = [&](double s) { return H_prime(s) - r; };
  return bisect_increasing(f, 0.0, s0sq_, tol_.root, tol_.root_max_iter);
}

double ConvexityProfile::Lambda_H(double s) const {
  check_domain(s > 0.0 && s <= s0sq_ * (1.0 + 1e-12),
               "Lambda_H: argument outside (0, s0^2]");
  const double sigma = std::sqrt(s);
  if (growth_.slope_ratio) {
    // H/(s H') = 2 / (1 + s g'(s)/g(s) at s = sqrt(arg)); immune to g
    // underflowing near 0.
    return 2.0 / (1.0 + growth_.slope_ratio(sigma));
  }
  const double h = H(s);
  const double hp = H_prime(s);
  if (h <= 0.0 || hp <= 0.0)
    throw NumericsError("Lambda_H: H underflow; provide growth.slope_ratio");
  return h / (s * hp);
}

double ConvexityProfile::conjugate(double r) const {
  check_domain(r >= 0.0, "conjugate: negative argument");
  if (r == 0.0) return 0.0;
  if (r >= hp_s0sq_) return r * s0sq_ - H(s0sq_);
  if (r <= hp_at_zero_) return 0.0;  // maximizer at 0 for linear-at-zero kinds
  const double s_star = H_prime_inv(r);
  return std::max(0.0, r * s_star - H(s_star));
}

double ConvexityProfile::L(double r) const {
  check_domain(r >= 0.0, "L: negative argument");
  if (r == 0.0) return 0.0;
  return conjugate(r) / r;
}

double ConvexityProfile::L_inv(double y) const {
  check_domain(y >= 0.0, "L_inv: negative argument");
  if (y >= s0sq_)
    throw std::out_of_range("L_inv: argument >= s0^2 (L never attains s0^2)");
  if (y == 0.0) return 0.0;
  double hi = std::max(1.0, hp_s0sq_);
  int guard = 0;
  while (L(hi) < y) {
    hi *= 2.0;
    if (++guard > 200) throw NumericsError("L_inv: bracket expansion failed");
  }
  double lo = 0.0;
  double mid = 0.5 * hi;
  for (int i = 0; i < tol_.root_max_iter; ++i) {
    mid = 0.5 * (lo + hi);
    const double v = L(mid);
    if (std::abs(v - y) <= tol_.root * std::max(1.0, y)) return mid;
    if (v < y) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return mid;
}

double ConvexityProfile::psi(double s) const {
  const double s_min = 1.0 / hp_s0sq_;
  check_domain(s >= s_min * (1.0 - 1e-12), "psi: argument below 1/H'(s0^2)");
  if (s <= s_min) return s_min;  // empty integration interval

  // After the substitution v = 1/u the defining integral becomes
  //   psi(s) = 1/H'(s0^2) + int_{1/H'(s0^2)}^{s} du / (1 - Lambda_H((H')^{-1}(1/u))),
  // which has no 1/v^2 weight left.
  const bool guard = mode_ != DecayMode::Simplified;
  auto integrand = [&](double u) {
    const double lam = Lambda_H(H_prime_inv(1.0 / u));
    const double denom = 1.0 - lam;
    if (denom <= 0.0 || (guard && denom < tol_.singular))
      throw SingularityError(
          "psi: integrand singular (Lambda_H within " + std::to_string(tol_.singular) +
          " of 1); use the exponential-mode envelope for near-linear growths");
    return 1.0 / denom;
  };
  return s_min + adaptive_simpson(integrand, s_min, s, tol_.quad, tol_.quad);
}

double ConvexityProfile::psi_inv(double t) const {
  const double s_min = 1.0 / hp_s0sq_;
  check_domain(t >= s_min * (1.0 - 1e-12), "psi_inv: argument below 1/H'(s0^2)");
  if (t <= s_min) return s_min;
  double hi = std::max(2.0 * s_min, 1.0);
  int guard = 0;
  while (psi(hi) < t) {
    hi *= 2.0;
    if (++guard > 200) throw NumericsError("psi_inv: bracket expansion failed");
  }
  auto f = [&](double s) { return psi(s) - t; };
  return bisect_increasing(f, s_min, hi, tol_.root, tol_.root_max_iter);
}

double ConvexityProfile::weight(double s) const {
  check_domain(s >= 0.0, "weight: negative argument");
  if (s >= beta_ * s0sq_)
    throw std::out_of_range(
        "weight: argument >= beta*s0^2; beta too small for this energy (see "
        "recommended_beta)");
  return L_inv(s / beta_);
}

DecayEnvelope make_envelope(const ConvexityProfile& profile, double E0, double T_obs,
                            double C_T, double normB, double prefactor,
                            EnvelopeVariant variant, std::optional<DecayMode> mode_override) {
  if (!(E0 > 0.0 && T_obs > 0.0 && C_T > 0.0 && normB > 0.0 && prefactor > 0.0))
    throw std::domain_error("make_envelope: all arguments must be positive");
  if (!profile.growth().envelope_supported)
    throw NumericsError("make_envelope: envelope unsupported for growth '" +
                        profile.growth().name +
                        "' (limsup Lambda_H = 1; no general-mode rate applies)");

  DecayEnvelope env(profile);
  env.E0_ = E0;
  env.T_obs_ = T_obs;
  env.prefactor_ = prefactor;
  env.gamma3_ = 1.0;
  env.mode_ = mode_override.value_or(profile.mode());

  const double T = T_obs;
  switch (variant) {
    case EnvelopeVariant::Continuous:
      env.gamma2_ = C_T / (T * T * T * normB * normB + T);
      break;
    case EnvelopeVariant::Space:
      env.gamma2_ = C_T / (T * (T * T * normB * normB + 1.0));
      break;
    case EnvelopeVariant::Time:
      env.gamma2_ =
          C_T / (T * (1.0 + std::exp(2.0 * T * normB) * std::max(1.0, T * normB)));
      break;
  }
  env.gamma1_ = normB / env.gamma2_;
  if (env.mode_ == DecayMode::General) {
    env.onset_ = 1.0 / (profile.hp_at_s0sq() * env.gamma2_);
  }
  return env;
}

DecayEnvelope DecayEnvelope::with_prefactor(double prefactor) const {
  if (!(prefactor > 0.0)) throw std::domain_error("with_prefactor: must be positive");
  DecayEnvelope copy = *this;
  copy.prefactor_ = prefactor;
  return copy;
}

double DecayEnvelope::eval(double t) const {
  const double level = std::max(gamma1_, E0_);
  switch (mode_) {
    case DecayMode::Exponential:
      check_domain(t >= 0.0, "envelope: negative time");
      return prefactor_ * level * std::exp(-gamma2_ * t);
    case DecayMode::Simplified: {
      check_domain(t > 0.0, "envelope: simplified rate needs t > 0");
      const double r = gamma3_ / t;
      const double s0sq = profile_.growth().s0 * profile_.growth().s0;
      const double s = r >= profile_.hp_at_s0sq() ? s0sq : profile_.H_prime_inv(r);
      return prefactor_ * T_obs_ * level * s;
    }
    case DecayMode::General: {
      check_domain(t >= onset_,
                   "envelope: undefined before onset time (see onset())");
      const double s = profile_.psi_inv(gamma2_ * t);
      return prefactor_ * T_obs_ * level * profile_.L(1.0 / s);
    }
  }
  return 0.0;  // unreachable
}

double recommended_beta(const ConvexityProfile& profile, double E0, double T_obs,
                        double normB, double C_T) {
  if (!(E0 > 0.0 && T_obs > 0.0 && normB > 0.0 && C_T > 0.0))
    throw std::domain_error("recommended_beta: all arguments must be positive");
  const double b1 = E0 / profile.L(profile.hp_at_s0sq() * (1.0 - 1e-6));
  const double k_T = 8.0 * T_obs * T_obs * normB * normB + 2.0;
  const double b2 = 2.0 * k_T * T_obs * normB / C_T;
  return std::max(b1, b2);
}

}  // namespace decay
