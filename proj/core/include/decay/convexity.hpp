#pragma once

#include <optional>

#include "decay/growth.hpp"

namespace decay {

enum class DecayMode {
  General,      // E(t) <~ T max(g1,E0) L(1/psi^{-1}(g2 t))
  Simplified,   // limsup Lambda_H < 1: E(t) <~ T max(g1,E0) (H')^{-1}(g3/t)
  Exponential,  // linear growth at zero: E(t) <~ max(g1,E0) exp(-g2 t)
};

struct Tolerances {
  double root = 1e-12;      // relative tolerance of bisection root finds
  int root_max_iter = 200;  // bisection iteration cap
  double quad = 1e-10;      // adaptive Simpson abs/rel tolerance
  double singular = 1e-6;   // psi integrand guard on 1 - Lambda_H
};

/// Numeric realization of the optimal-weight convexity machinery for one
/// growth law: H(s) = sqrt(s) g(sqrt(s)) on [0, s0^2], its convex conjugate,
/// L(r) = H*(r)/r, Lambda_H(s) = H(s)/(s H'(s)), the rescaling function psi,
/// and the weight w(s) = L^{-1}(s/beta).
///
/// Profiles are immutable after construction; every evaluator is pure and
/// safe to call concurrently.
class ConvexityProfile {
 public:
  /// Validates the growth on a probe grid (monotone g, strictly convex H),
  /// caches H'(s0^2), estimates limsup_{s->0} Lambda_H(s) by decade sampling,
  /// and selects the decay mode: Exponential for linear-at-zero growths,
  /// Simplified when the limsup estimate is below 0.999, General otherwise.
  static ConvexityProfile build(GrowthFunction growth, double beta, Tolerances tol = {});

  double H(double s) const;        // domain [0, s0^2]
  double H_prime(double s) const;  // one-sided limit at 0 (0 for superlinear)
  double H_prime_inv(double r) const;
  double Lambda_H(double s) const;  // domain (0, s0^2]

  /// Convex conjugate of H extended by +infinity outside [0, s0^2], i.e.
  /// max over s in [0, s0^2] of (r s - H(s)). Domain r >= 0.
  double conjugate(double r) const;

  double L(double r) const;      // H*(r)/r, increasing [0,inf) -> [0, s0^2)
  double L_inv(double y) const;  // domain [0, s0^2)

  double psi(double s) const;      // domain [1/H'(s0^2), inf)
  double psi_inv(double t) const;  // of the increasing psi

  double weight(double s) const;  // w(s) = L_inv(s / beta), domain [0, beta s0^2)

  double beta() const { return beta_; }
  double hp_at_s0sq() const { return hp_s0sq_; }
  double lambda_limsup_estimate() const { return lambda_limsup_; }
  DecayMode mode() const { return mode_; }
  const GrowthFunction& growth() const { return growth_; }
  const Tolerances& tolerances() const { return tol_; }

  /// Same profile with a different weight scale.
  ConvexityProfile with_beta(double beta) const;

 private:
  ConvexityProfile() = default;

  GrowthFunction growth_;
  double beta_ = 1.0;
  double s0sq_ = 1.0;
  double hp_s0sq_ = 0.0;
  double hp_at_zero_ = 0.0;
  double lambda_limsup_ = 0.0;
  DecayMode mode_ = DecayMode::General;
  Tolerances tol_;
};

enum class EnvelopeVariant {
  Continuous,  // gamma2 = C_T / (T^3 |B|^2 + T)
  Space,       // gamma2 = C_T / (T (T^2 |B|^2 + 1))
  Time,        // gamma2 = C_T / (T (1 + e^{2T|B|} max(1, T|B|)))
};

/// A theoretical decay envelope eval(t) built from a profile and the
/// observability data (C_T, |B|, T). All hidden proportionality constants
/// are folded into a single prefactor calibration knob.
class DecayEnvelope {
 public:
  double eval(double t) const;   // nonincreasing on [onset(), inf)
  double onset() const { return onset_; }

  double gamma1() const { return gamma1_; }
  double gamma2() const { return gamma2_; }
  double gamma3() const { return gamma3_; }
  double prefactor() const { return prefactor_; }
  DecayMode mode() const { return mode_; }
  double E0() const { return E0_; }
  double T_obs() const { return T_obs_; }
  const ConvexityProfile& profile() const { return profile_; }

  DecayEnvelope with_prefactor(double prefactor) const;

 private:
  friend DecayEnvelope make_envelope(const ConvexityProfile&, double, double, double,
                                     double, double, EnvelopeVariant,
                                     std::optional<DecayMode>);
  explicit DecayEnvelope(ConvexityProfile p) : profile_(std::move(p)) {}
  ConvexityProfile profile_;
  double E0_ = 0.0, T_obs_ = 0.0;
  double gamma1_ = 0.0, gamma2_ = 0.0, gamma3_ = 1.0;
  double prefactor_ = 1.0;
  double onset_ = 0.0;
  DecayMode mode_ = DecayMode::General;
};

/// Builds the decay envelope with gamma2 given by the selected variant
/// formula (proportionality constants set to 1), gamma1 = normB/gamma2 and
/// gamma3 = 1. mode_override is a diagnostic hook (e.g. to evaluate the
/// general-rate formula for a profile that selected the simplified mode).
DecayEnvelope make_envelope(const ConvexityProfile& profile, double E0, double T_obs,
                            double C_T, double normB, double prefactor,
                            EnvelopeVariant variant = EnvelopeVariant::Space,
                            std::optional<DecayMode> mode_override = {});

/// Smallest beta satisfying both "beta large enough" constraints of the
/// one-step estimate: beta >= E0 / L(H'(s0^2)(1-1e-6)) and
/// beta >= 2 k_T T |B| / C_T with the continuous-case k_T = 8 T^2 |B|^2 + 2.
double recommended_beta(const ConvexityProfile& profile, double E0, double T_obs,
                        double normB, double C_T);

}  // namespace decay
