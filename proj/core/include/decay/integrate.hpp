#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <Eigen/SparseCholesky>
#include <memory>
#include <string>
#include <vector>

#include "decay/models.hpp"

namespace decay {

enum class TimeViscosityKind {
  None,
  Squared,         // V_dt = (dt)^2 A*A = -(dt)^2 A^2
  BoundedSquared,  // V_dt = (I - (dt)^2 A^2)^{-1} (dt)^2 A*A
};

enum class StageMethod { Newton, FixedPoint };

struct StageSolverOpts {
  StageMethod method = StageMethod::Newton;
  double tol = 1e-12;  // M-norm of the stage residual, relative to max(1, |u|_M)
  int max_iter = 50;
};

struct TimeScheme {
  double dt = 0.0;
  TimeViscosityKind time_viscosity = TimeViscosityKind::Squared;
  StageSolverOpts solver;
  bool space_viscosity_in_stage = true;  // full scheme: stage carries dx^sigma V m
};

struct RecordOptions {
  bool snapshots = false;  // keep full states u^k and stages u~^{k+1}
};

/// Per-step energy accounting of one trajectory. Row k describes the state
/// at time k*dt; the dissipation entries of row k are the amounts removed by
/// the step arriving there (zero in row 0).
struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<double> energies;
  std::vector<double> diss_damping;     // dt <B F(m), m>_M
  std::vector<double> diss_space_visc;  // dt dx^sigma <V m, m>_M (stage term)
  std::vector<double> diss_time_visc;   // dt |Vdt^{1/2} u|^2 + dt^2/2 |Vdt u|^2
  std::vector<double> balance_residual; // |E_{k+1} - E_k + all recorded dissipation|
  std::vector<int> solver_iters;

  std::vector<Vec> states;        // u^k, when snapshots are on
  std::vector<Vec> stage_states;  // u~^{k+1}, index k
  bool has_snapshots = false;

  bool failed = false;
  int failure_index = -1;
  std::string failure_message;

  std::size_t steps() const { return times.empty() ? 0 : times.size() - 1; }
  double final_energy() const { return energies.empty() ? 0.0 : energies.back(); }
  double max_balance_residual() const;
};

/// Which right-hand side a trajectory integrates: the nonlinear system, its
/// linear damped companion (F replaced by the identity), or the conservative
/// flow u' + A u = 0 (no damping, no space viscosity; the time-viscosity
/// post-step still applies when the scheme asks for it).
enum class CompanionKind { Nonlinear, LinearDamped, Conservative };

/// One implicit-midpoint step with viscosity post-step. Factorization caches
/// live here, so reuse one Integrator per trajectory. Not thread-safe;
/// distinct simulations use distinct instances.
class Integrator {
 public:
  Integrator(const SemiDiscreteSystem& sys, const TimeScheme& scheme,
             CompanionKind companion = CompanionKind::Nonlinear);

  struct StepResult {
    Vec u_tilde;
    Vec u_next;
    int iters = 0;
    double residual = 0.0;
    bool converged = true;
    double diss_damping = 0.0;
    double diss_space_visc = 0.0;
    double diss_time_visc = 0.0;
  };

  /// Stage solve for u~ followed by the viscosity post-step
  /// (I + dt V_dt) u_next = u~. Throws SolverError only on a singular linear
  /// solve; stage non-convergence is reported through the result.
  StepResult step(const Vec& u_k);

  /// Dense propagation of the same one-step map (for Gramians): returns
  /// (Phi_tilde, Phi_next) for a matrix of initial columns.
  std::pair<Mat, Mat> propagate(const Mat& states);

  const TimeScheme& scheme() const { return scheme_; }

 private:
  void factorize_stage(const SpMat& jac);
  Vec stage_rhs_velocity(const Vec& mid) const;  // A m + damping(m) + visc(m)

  const SemiDiscreteSystem& sys_;
  TimeScheme scheme_;
  CompanionKind companion_;
  bool include_damping_ = true;
  bool linear_damping_ = false;
  bool include_space_visc_ = true;
  bool nonlinear_ = false;

  SpMat K_const_;        // A (+ B + dx^s V) for linear stages
  SpMat stage_jac_const_;
  bool stage_const_ready_ = false;
  Eigen::SparseLU<SpMat> stage_lu_;
  bool stage_lu_ready_ = false;

  // Viscosity post-step, M-weighted SPD form.
  Eigen::SimplicialLDLT<SpMat> post_ldlt_;
  SpMat post_rhs_;  // M (Squared) or M + dt^2 A^T M A (BoundedSquared)
  bool post_ready_ = false;
  SpMat MB_, MV_;
};

/// Runs ceil(T_final/dt) steps from u0. Step failures abort and return the
/// partial record with the failure index set.
TrajectoryRecord simulate(const SemiDiscreteSystem& sys, const TimeScheme& scheme,
                          const Vec& u0, double T_final, RecordOptions opts = {},
                          CompanionKind companion = CompanionKind::Nonlinear);

struct CompanionTrajectories {
  TrajectoryRecord nonlinear;
  TrajectoryRecord linear_damped;
  TrajectoryRecord conservative;
};

/// The nonlinear trajectory plus the two linear comparison systems from the
/// same initial state, integrated by the same scheme, with full snapshots
/// (the comparison-lemma audits need every state).
CompanionTrajectories simulate_linear_companions(const SemiDiscreteSystem& sys,
                                                 const TimeScheme& scheme, const Vec& u0,
                                                 double T_final);

/// dt = dx/2 unless the scheme pins dt explicitly.
double default_dt(const SemiDiscreteSystem& sys);

}  // namespace decay
