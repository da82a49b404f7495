#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "decay/convexity.hpp"
#include "decay/integrate.hpp"
#include "decay/models.hpp"

namespace decay {

struct GramianReport {
  double T_obs = 0.0;
  double C_T = 0.0;  // smallest eigenvalue of the Gramian against E_phi(0)
  bool include_viscosity = false;
  int dim = 0;
  std::string method;  // records propagation scheme and included terms
};

/// Observability constant of the conservative flow: assembles the Gramian
/// G = dt sum_k Phi_mid,k^T (M B + dx^sigma M V) Phi_mid,k (+ the
/// time-viscosity sums when the scheme carries a time viscosity) by dense
/// propagation through the midpoint scheme, and returns
/// C_T = lambda_min(G, M/2), i.e. the constant normalized against the
/// energy E_phi(0) = (1/2)|phi0|_M^2. Desk scale: dim <= 512.
GramianReport gramian_constant(const SemiDiscreteSystem& sys, double T_obs,
                               bool include_viscosity, const TimeScheme& scheme);

struct HalfTimeResult {
  bool reached = false;
  double t = 0.0;           // first time with E(t) <= q E(0), interpolated
  double final_ratio = 1.0; // E(end)/E(0) when not reached
};

HalfTimeResult half_time(const TrajectoryRecord& traj, double q);

enum class FitModel { Exponential, Algebraic };

struct FitResult {
  double slope = 0.0;  // decay rate (exponential) or exponent (algebraic)
  double r_squared = 0.0;
  int points = 0;
};

/// Least squares on (t, ln E) or (ln t, ln E) over [t_a, t_b]. Requires at
/// least 10 in-window points with positive energy.
FitResult fit_decay(const TrajectoryRecord& traj, double t_a, double t_b, FitModel model);

struct EnvelopeCheckResult {
  double max_ratio = 0.0;             // max E(t)/env(t) with env's own prefactor
  double calibrated_prefactor = 0.0;  // max E(t)/env(t) at prefactor 1
  double onset_used = 0.0;
  int samples = 0;
};

/// Compares a measured trajectory against a decay envelope for t >= onset
/// (the onset is pushed up to the envelope's own onset when needed, and the
/// adjustment is reported).
EnvelopeCheckResult envelope_check(const TrajectoryRecord& traj, const DecayEnvelope& env,
                                   double onset);

struct AuditLine {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;   // rhs - lhs; the inequalities are theorems, so >= 0
  double constant = 0.0;  // the k_T entering rhs (1 when none)
  bool ok = false;
};

struct AuditReport {
  std::vector<AuditLine> lines;
  double T_obs = 0.0;
  double dt = 0.0;
  bool all_ok() const {
    for (const auto& l : lines)
      if (!l.ok) return false;
    return true;
  }
};

/// Numerical audit of the four discrete comparison inequalities
/// (nonlinear vs linear damped, and linear damped vs conservative, for the
/// space semi-discrete and time-discrete settings) with their explicit
/// constants. Space-setting integrals are left-endpoint Riemann sums over
/// companion runs without time viscosity; time-setting sums are evaluated
/// exactly on runs with the scheme's time viscosity.
AuditReport lemma_audit(const SemiDiscreteSystem& sys, const TimeScheme& scheme,
                        const Vec& u0, double T_obs);

enum class DtRule { HalfDx, Fixed };

struct SweepSpec {
  ModelSpec base;                 // n is overridden per mesh
  std::vector<int> meshes;
  DtRule dt_rule = DtRule::HalfDx;
  double fixed_dt = 0.0;
  bool viscosity_on = true;       // toggles both space and time viscosity
  InitialDataRule u0_rule = InitialDataRule::Smooth;
  double T_final = 10.0;
  double q = 0.5;
  FitModel fit_model = FitModel::Algebraic;
  double fit_t0_frac = 0.1;       // fit window as fractions of T_final
  double fit_t1_frac = 1.0;
  StageSolverOpts solver;
  std::uint64_t seed = 1;
  int jobs = 1;

  // Optional envelope metric: profile built from the feedback growth,
  // observability data measured on the coarsest mesh, prefactor calibrated
  // there once and reused across the sweep.
  bool envelope = false;
  double envelope_T_obs = 4.0;
  EnvelopeVariant envelope_variant = EnvelopeVariant::Space;
  double envelope_onset = 1.0;
};

struct SweepCell {
  int n = 0;
  double dx = 0.0, dt = 0.0;
  HalfTimeResult half_time;
  FitResult fit;
  double envelope_max_ratio = 0.0;
  double energy_drop = 0.0;  // E(0)/E(end)
  std::string manifest_hash;
  bool failed = false;
  std::string message;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  /// max/min of half-times across meshes; cells that never reach the
  /// threshold enter with the horizon T_final, so the ratio is a lower
  /// bound in that case (flagged by lower_bound_only).
  double uniformity_ratio = 0.0;
  bool lower_bound_only = false;
  double calibrated_prefactor = 0.0;
};

/// Runs one trajectory per mesh (concurrently when jobs > 1) and aggregates
/// half-time, decay-fit and envelope metrics. Needs at least 3 meshes.
SweepResult uniformity_sweep(const SweepSpec& spec);

struct IterationRow {
  int window = 0;        // p: window index, t = p * T
  double energy = 0.0;   // measured E(pT)
  double measured_M = 0.0;  // M(E_p) with E_p = E(pT)/beta
  double bound = 0.0;       // (1/rho_T) min_l K_r^{-1}(rho_T (p-l)) / (l+1)
};

struct IterationReport {
  double rho_T = 0.0;
  double beta = 0.0;
  std::vector<IterationRow> rows;
};

/// Consistency display of the one-step decay iteration
/// E_{k+1} - E_k + rho_T M(E_k) <= 0 with M(x) = x L^{-1}(x): rho_T is
/// calibrated to make the first window tight, and the implied sequence bound
/// on M(E_p) is evaluated via K_r(tau) = int_tau^r dy/M(y).
IterationReport onestep_iteration_report(const ConvexityProfile& profile, double beta,
                                         const std::vector<double>& window_energies);

}  // namespace decay
