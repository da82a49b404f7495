#include "decay/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "decay/errors.hpp"

namespace decay {

double TrajectoryRecord::max_balance_residual() const {
  double m = 0.0;
  for (double r : balance_residual) m = std::max(m, r);
  return m;
}

double default_dt(const SemiDiscreteSystem& sys) { return 0.5 * sys.dx; }

Integrator::Integrator(const SemiDiscreteSystem& sys, const TimeScheme& scheme,
                       CompanionKind companion)
    : sys_(sys), scheme_(scheme), companion_(companion) {
  if (!(scheme_.dt > 0.0)) throw std::invalid_argument("Integrator: dt must be positive");

  include_damping_ = companion != CompanionKind::Conservative;
  linear_damping_ = companion == CompanionKind::LinearDamped;
  include_space_visc_ = companion != CompanionKind::Conservative &&
                        scheme_.space_viscosity_in_stage && sys_.has_viscosity();
  // The linear catalog feedback satisfies B F(u) = B u in every model, so the
  // nonlinear system coincides with the linear damped companion and shares
  // its constant-matrix stage (this also makes the two runs bit-identical).
  // B = 0 kills the damping term outright, linear or not.
  nonlinear_ = companion == CompanionKind::Nonlinear &&
               sys_.feedback.name != "linear" && sys_.B.nonZeros() > 0;

  const double dt = scheme_.dt;
  const double s = std::pow(sys_.dx, sys_.sigma);
  const int dim = sys_.dim;

  SpMat K = sys_.A;
  if (include_damping_ && !nonlinear_) K = SpMat(K + sys_.B);
  if (include_space_visc_) K = SpMat(K + SpMat(s * sys_.V));
  K_const_ = K;

  SpMat ident(dim, dim);
  ident.setIdentity();
  if (!nonlinear_) {
    stage_jac_const_ = SpMat(ident + SpMat((dt / 2.0) * K_const_));
    stage_lu_.compute(stage_jac_const_);
    if (stage_lu_.info() != Eigen::Success)
      throw SolverError("Integrator: stage matrix factorization failed");
    stage_lu_ready_ = true;
  } else {
    // Newton base: I + (dt/2)(A + dx^sigma V); the damping Jacobian block is
    // added per iteration.
    SpMat base = sys_.A;
    if (include_space_visc_) base = SpMat(base + SpMat(s * sys_.V));
    stage_jac_const_ = SpMat(ident + SpMat((dt / 2.0) * base));
  }

  MB_ = SpMat(sys_.M * sys_.B);
  MV_ = SpMat(sys_.M * sys_.V);

  // Viscosity post-step (I + dt Vdt) u = u~ with Vdt = (dt)^2 A*A = -(dt)^2 A^2,
  // solved in the M-weighted SPD form (M + dt^3 A^T M A) u = M u~. The bounded
  // variant (I - dt^2 A^2)^{-1} dt^2 A*A folds into one SPD solve with matrix
  // M + (dt^2 + dt^3) A^T M A and right-hand side (M + dt^2 A^T M A) u~.
  if (scheme_.time_viscosity != TimeViscosityKind::None) {
    SpMat MA = SpMat(sys_.M * sys_.A);
    SpMat AtMA = SpMat(SpMat(sys_.A.transpose()) * MA);
    SpMat lhs;
    if (scheme_.time_viscosity == TimeViscosityKind::Squared) {
      lhs = SpMat(sys_.M + SpMat((dt * dt * dt) * AtMA));
      post_rhs_ = sys_.M;
    } else {
      lhs = SpMat(sys_.M + SpMat((dt * dt + dt * dt * dt) * AtMA));
      post_rhs_ = SpMat(sys_.M + SpMat((dt * dt) * AtMA));
    }
    post_ldlt_.compute(lhs);
    if (post_ldlt_.info() != Eigen::Success)
      throw SolverError("Integrator: viscosity post-step factorization failed");
    post_ready_ = true;
  }
}

Vec Integrator::stage_rhs_velocity(const Vec& mid) const {
  if (!nonlinear_) return K_const_ * mid;
  const double s = std::pow(sys_.dx, sys_.sigma);
  Vec out = sys_.A * mid;
  out += sys_.B * sys_.F(mid);
  if (include_space_visc_) out += s * (sys_.V * mid);
  return out;
}

Integrator::StepResult Integrator::step(const Vec& u_k) {
  const double dt = scheme_.dt;
  StepResult res;

  // Stage solve for u~: u~ - u_k + dt [A m + B F(m) + dx^s V m] = 0, m = (u_k+u~)/2.
  Vec u_tilde;
  if (!nonlinear_) {
    Vec rhs = u_k - (dt / 2.0) * (K_const_ * u_k);
    u_tilde = stage_lu_.solve(rhs);
    if (stage_lu_.info() != Eigen::Success)
      throw SolverError("Integrator: stage solve failed");
    res.iters = 1;
    Vec mid = 0.5 * (u_k + u_tilde);
    res.residual = sys_.m_norm(u_tilde - u_k + dt * stage_rhs_velocity(mid));
    res.converged = true;
  } else {
    const double tol = scheme_.solver.tol * std::max(1.0, sys_.m_norm(u_k));
    Vec w = u_k;
    double resid = std::numeric_limits<double>::infinity();
    bool done = false;
    const double s = std::pow(sys_.dx, sys_.sigma);

    auto residual_vec = [&](const Vec& w_) {
      Vec mid = 0.5 * (u_k + w_);
      return Vec(w_ - u_k + dt * stage_rhs_velocity(mid));
    };

    if (scheme_.solver.method == StageMethod::Newton) {
      double prev = std::numeric_limits<double>::infinity();
      for (int it = 0; it < scheme_.solver.max_iter; ++it) {
        Vec G = residual_vec(w);
        resid = sys_.m_norm(G);
        if (resid <= tol) {
          done = true;
          break;
        }
        if (it > 3 && resid > 0.9 * prev) break;  // stagnating; fall back below
        prev = resid;
        Vec mid = 0.5 * (u_k + w);
        SpMat J = SpMat(stage_jac_const_ +
                        SpMat((dt / 2.0) * SpMat(sys_.B * sys_.F_jacobian(mid))));
        stage_lu_.compute(J);
        if (stage_lu_.info() != Eigen::Success)
          throw SolverError("Integrator: Newton Jacobian factorization failed");
        Vec delta = stage_lu_.solve(G);
        w -= delta;
        ++res.iters;
      }
    }
    if (!done) {
      // Damped fixed point, relaxation 1/2.
      (void)s;
      for (int it = 0; it < 4 * scheme_.solver.max_iter; ++it) {
        Vec G = residual_vec(w);
        resid = sys_.m_norm(G);
        if (resid <= tol) {
          done = true;
          break;
        }
        w -= 0.5 * G;
        ++res.iters;
      }
    }
    res.converged = done;
    res.residual = resid;
    u_tilde = w;
  }

  // Per-step dissipation at the converged midpoint:
  // dt <B F(m), m>_M = dt m . (M B F(m)), plus the stage space-viscosity term.
  {
    Vec mid = 0.5 * (u_k + u_tilde);
    if (include_damping_) {
      Vec Fm = nonlinear_ ? sys_.F(mid) : Vec(mid);
      res.diss_damping = dt * mid.dot(MB_ * Fm);
    }
    if (include_space_visc_) {
      const double s = std::pow(sys_.dx, sys_.sigma);
      res.diss_space_visc = dt * s * mid.dot(MV_ * mid);
    }
  }

  // Viscosity post-step.
  if (!post_ready_) {
    res.u_next = u_tilde;
  } else {
    Vec rhs = post_rhs_ * u_tilde;
    res.u_next = post_ldlt_.solve(rhs);
    if (post_ldlt_.info() != Eigen::Success)
      throw SolverError("Integrator: viscosity post-step solve failed");
    // Vdt u^{k+1} = (u~ - u^{k+1})/dt exactly, for both viscosity kinds.
    Vec w = (u_tilde - res.u_next) / dt;
    const double quad = w.dot(sys_.M * res.u_next);   // |Vdt^{1/2} u|_M^2
    const double sq = w.dot(sys_.M * w);              // |Vdt u|_M^2
    res.diss_time_visc = dt * quad + 0.5 * dt * dt * sq;
  }
  res.u_tilde = std::move(u_tilde);
  return res;
}

std::pair<Mat, Mat> Integrator::propagate(const Mat& states) {
  if (nonlinear_)
    throw NumericsError("Integrator::propagate: only linear stages can be propagated");
  const double dt = scheme_.dt;
  Mat rhs = states - (dt / 2.0) * (K_const_ * states);
  Mat tilde = stage_lu_.solve(rhs);
  Mat next;
  if (!post_ready_) {
    next = tilde;
  } else {
    next = post_ldlt_.solve(post_rhs_ * tilde);
  }
  return {std::move(tilde), std::move(next)};
}

TrajectoryRecord simulate(const SemiDiscreteSystem& sys, const TimeScheme& scheme,
                          const Vec& u0, double T_final, RecordOptions opts,
                          CompanionKind companion) {
  if (!(T_final >= scheme.dt))
    throw std::invalid_argument("simulate: T_final must be at least dt");
  Integrator integ(sys, scheme, companion);
  const double dt = scheme.dt;
  const long steps = static_cast<long>(std::ceil(T_final / dt - 1e-9));

  TrajectoryRecord traj;
  traj.times.reserve(steps + 1);
  traj.energies.reserve(steps + 1);
  traj.has_snapshots = opts.snapshots;

  Vec u = u0;
  traj.times.push_back(0.0);
  traj.energies.push_back(sys.energy(u));
  traj.diss_damping.push_back(0.0);
  traj.diss_space_visc.push_back(0.0);
  traj.diss_time_visc.push_back(0.0);
  traj.balance_residual.push_back(0.0);
  traj.solver_iters.push_back(0);
  if (opts.snapshots) traj.states.push_back(u);

  for (long k = 0; k < steps; ++k) {
    Integrator::StepResult r = integ.step(u);
    if (!r.converged) {
      traj.failed = true;
      traj.failure_index = static_cast<int>(k);
      traj.failure_message = "stage solver did not converge (residual " +
                             std::to_string(r.residual) + ")";
      return traj;
    }
    const double e_prev = traj.energies.back();
    const double e_next = sys.energy(r.u_next);
    traj.times.push_back((k + 1) * dt);
    traj.energies.push_back(e_next);
    traj.diss_damping.push_back(r.diss_damping);
    traj.diss_space_visc.push_back(r.diss_space_visc);
    traj.diss_time_visc.push_back(r.diss_time_visc);
    traj.balance_residual.push_back(std::abs(e_next - e_prev + r.diss_damping +
                                             r.diss_space_visc + r.diss_time_visc));
    traj.solver_iters.push_back(r.iters);
    if (opts.snapshots) {
      traj.stage_states.push_back(r.u_tilde);
      traj.states.push_back(r.u_next);
    }
    u = std::move(r.u_next);
  }
  return traj;
}

CompanionTrajectories simulate_linear_companions(const SemiDiscreteSystem& sys,
                                                 const TimeScheme& scheme, const Vec& u0,
                                                 double T_final) {
  RecordOptions opts;
  opts.snapshots = true;
  CompanionTrajectories out;
  out.nonlinear = simulate(sys, scheme, u0, T_final, opts, CompanionKind::Nonlinear);
  out.linear_damped =
      simulate(sys, scheme, u0, T_final, opts, CompanionKind::LinearDamped);
  out.conservative =
      simulate(sys, scheme, u0, T_final, opts, CompanionKind::Conservative);
  return out;
}

}  // namespace decay
