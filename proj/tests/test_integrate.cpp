#include "decay/integrate.hpp"

#include <algorithm>
#include <cmath>

#include "decay/errors.hpp"
#include "doctest.h"

using namespace decay;

namespace {

ModelSpec wave_spec(int n, const std::string& feedback_name, double alpha,
                    ViscosityKind visc = ViscosityKind::LaplacianBlock) {
  ModelSpec spec;
  spec.kind = ModelKind::Wave1D;
  spec.n = n;
  spec.damping.support = {{0.2, 0.5}};
  spec.damping.alpha = alpha;
  spec.feedback = catalog_feedback(feedback_name, {{"p", 3.0}});
  spec.viscosity = visc;
  return spec;
}

TimeScheme scheme_for(const SemiDiscreteSystem& sys,
                      TimeViscosityKind tv = TimeViscosityKind::Squared) {
  TimeScheme s;
  s.dt = default_dt(sys);
  s.time_viscosity = tv;
  return s;
}

// Minimal 1-state system u' + b F(u) = 0 with M = 1.
SemiDiscreteSystem scalar_system(const std::string& feedback_name, double b_coef = 1.0) {
  SemiDiscreteSystem sys;
  sys.kind = "custom";
  sys.dim = 1;
  sys.grid_n = 1;
  sys.dx = 1.0;
  sys.sigma = 2.0;
  sys.length = 1.0;
  sys.A = SpMat(1, 1);
  sys.B = SpMat(1, 1);
  sys.B.insert(0, 0) = b_coef;
  sys.V = SpMat(1, 1);
  sys.M = SpMat(1, 1);
  sys.M.insert(0, 0) = 1.0;
  sys.positions = Vec::Constant(1, 0.5);
  sys.damping_b = Vec::Constant(1, b_coef);
  sys.labels = {"state"};
  sys.damped_block = 0;
  sys.normB = b_coef;
  sys.feedback = catalog_feedback(feedback_name, {{"p", 3.0}});
  return sys;
}

}  // namespace

TEST_CASE("scalar midpoint stage: hand-solved value") {
  SemiDiscreteSystem sys = scalar_system("linear");
  TimeScheme scheme;
  scheme.dt = 0.1;
  scheme.time_viscosity = TimeViscosityKind::None;
  Integrator integ(sys, scheme);
  Vec u = Vec::Constant(1, 1.0);
  auto r = integ.step(u);
  CHECK(r.u_tilde[0] == doctest::Approx(0.95 / 1.05).epsilon(1e-14));
  CHECK(r.u_next[0] == r.u_tilde[0]);

  // Newton and damped fixed point agree on the cubic stage equation.
  SemiDiscreteSystem cubic = scalar_system("power");
  Integrator newton(cubic, scheme);
  TimeScheme fp_scheme = scheme;
  fp_scheme.solver.method = StageMethod::FixedPoint;
  Integrator fixed_point(cubic, fp_scheme);
  auto rn = newton.step(u);
  auto rf = fixed_point.step(u);
  CHECK(rn.converged);
  CHECK(rf.converged);
  CHECK(rn.u_tilde[0] == doctest::Approx(rf.u_tilde[0]).epsilon(1e-11));
}

TEST_CASE("zero state is a fixed point") {
  SemiDiscreteSystem sys = build_model(wave_spec(20, "power", 1.0));
  TimeScheme scheme = scheme_for(sys);
  Integrator integ(sys, scheme);
  auto r = integ.step(Vec::Zero(sys.dim));
  CHECK(r.u_next.norm() == 0.0);
  CHECK(r.converged);
}

TEST_CASE("midpoint conserves energy of the undamped skew flow") {
  ModelSpec spec = wave_spec(50, "power", 0.0, ViscosityKind::None);
  SemiDiscreteSystem sys = build_model(spec);
  TimeScheme scheme = scheme_for(sys, TimeViscosityKind::None);
  Lcg64 rng(31);
  Vec u0 = initial_state(sys, InitialDataRule::Smooth, rng);

  Integrator integ(sys, scheme);
  Vec u = u0;
  const double norm0 = sys.m_norm(u0);
  for (int k = 0; k < 50; ++k) {
    auto r = integ.step(u);
    CHECK(std::abs(sys.m_norm(r.u_next) - norm0) <= 1e-13 * norm0);
    u = r.u_next;
  }

  TrajectoryRecord traj = simulate(sys, scheme, u0, 10000 * scheme.dt);
  CHECK(traj.steps() == 10000);
  double drift = 0.0;
  for (double e : traj.energies) drift = std::max(drift, std::abs(e - traj.energies[0]));
  CHECK(drift <= 1e-12 * traj.energies[0]);
}

TEST_CASE("per-step dissipation identity and monotone decay") {
  SemiDiscreteSystem sys = build_model(wave_spec(50, "linear", 1.0));
  TimeScheme scheme = scheme_for(sys);
  Lcg64 rng(32);
  Vec u0 = initial_state(sys, InitialDataRule::Smooth, rng);
  TrajectoryRecord traj = simulate(sys, scheme, u0, 2.0);
  REQUIRE_FALSE(traj.failed);
  CHECK(traj.max_balance_residual() <= 1e-11);
  for (std::size_t k = 1; k < traj.energies.size(); ++k) {
    CHECK(traj.energies[k] <= traj.energies[k - 1] + 1e-11);
    CHECK(traj.diss_damping[k] >= -1e-13);
    CHECK(traj.diss_space_visc[k] >= -1e-13);
    CHECK(traj.diss_time_visc[k] >= -1e-13);
  }
  CHECK(traj.final_energy() < 0.9 * traj.energies[0]);

  // Same run with the cubic law and Newton stages.
  SemiDiscreteSystem cubic = build_model(wave_spec(50, "power", 1.0));
  TrajectoryRecord traj3 = simulate(cubic, scheme, u0, 2.0);
  REQUIRE_FALSE(traj3.failed);
  CHECK(traj3.max_balance_residual() <= 1e-11);
  std::vector<int> iters(traj3.solver_iters.begin() + 1, traj3.solver_iters.end());
  std::nth_element(iters.begin(), iters.begin() + iters.size() / 2, iters.end());
  CHECK(iters[iters.size() / 2] <= 5);  // median Newton iterations

  // Bounded time viscosity: still monotone with an exact balance.
  TimeScheme bounded = scheme_for(sys, TimeViscosityKind::BoundedSquared);
  TrajectoryRecord trajb = simulate(sys, bounded, u0, 1.0);
  REQUIRE_FALSE(trajb.failed);
  CHECK(trajb.max_balance_residual() <= 1e-11);
  for (std::size_t k = 1; k < trajb.energies.size(); ++k)
    CHECK(trajb.energies[k] <= trajb.energies[k - 1] + 1e-11);
}

TEST_CASE("tiny data with superlinear damping is effectively conservative") {
  ModelSpec spec = wave_spec(40, "power", 1.0, ViscosityKind::None);
  SemiDiscreteSystem sys = build_model(spec);
  TimeScheme scheme = scheme_for(sys, TimeViscosityKind::None);
  Lcg64 rng(33);
  Vec u0 = initial_state(sys, InitialDataRule::Smooth, rng) * 1e-8;
  TrajectoryRecord traj = simulate(sys, scheme, u0, 100 * scheme.dt);
  REQUIRE_FALSE(traj.failed);
  // Cubic sector: the dissipation rate is O(|u|^4), invisible at |u| = 1e-8.
  CHECK(std::abs(traj.final_energy() - traj.energies[0]) <= 1e-12 * traj.energies[0]);
}

TEST_CASE("time viscosity alone contracts the conservative flow") {
  ModelSpec spec = wave_spec(30, "power", 0.0, ViscosityKind::None);
  SemiDiscreteSystem sys = build_model(spec);
  TimeScheme scheme = scheme_for(sys, TimeViscosityKind::Squared);
  Lcg64 rng(34);
  Vec u0 = initial_state(sys, InitialDataRule::Smooth, rng);
  TrajectoryRecord traj = simulate(sys, scheme, u0, 100 * scheme.dt);
  REQUIRE_FALSE(traj.failed);
  for (std::size_t k = 1; k < traj.energies.size(); ++k)
    CHECK(traj.energies[k] < traj.energies[k - 1]);  // A u != 0 along this run
}

TEST_CASE("companion trajectories") {
  SemiDiscreteSystem sys = build_model(wave_spec(24, "linear", 1.0));
  TimeScheme scheme = scheme_for(sys);
  Lcg64 rng(35);
  Vec u0 = initial_state(sys, InitialDataRule::Smooth, rng);

  // F = id: the nonlinear system and the linear damped companion coincide,
  // bit for bit (they share the constant-matrix stage).
  CompanionTrajectories c = simulate_linear_companions(sys, scheme, u0, 1.0);
  REQUIRE(c.nonlinear.states.size() == c.linear_damped.states.size());
  for (std::size_t k = 0; k < c.nonlinear.states.size(); ++k)
    CHECK((c.nonlinear.states[k] - c.linear_damped.states[k]).norm() == 0.0);

  // B = 0 and no space viscosity: all three companions coincide.
  ModelSpec undamped = wave_spec(24, "power", 0.0, ViscosityKind::None);
  SemiDiscreteSystem sys0 = build_model(undamped);
  CompanionTrajectories c0 = simulate_linear_companions(sys0, scheme_for(sys0), u0, 1.0);
  for (std::size_t k = 0; k < c0.nonlinear.states.size(); ++k) {
    CHECK((c0.nonlinear.states[k] - c0.conservative.states[k]).norm() == 0.0);
    CHECK((c0.linear_damped.states[k] - c0.conservative.states[k]).norm() == 0.0);
  }

  // Cubic damping: the conservative companion keeps its energy (modulo its
  // own time viscosity), the damped ones lose more.
  SemiDiscreteSystem sys3 = build_model(wave_spec(24, "power", 1.0));
  CompanionTrajectories c3 = simulate_linear_companions(sys3, scheme_for(sys3), u0, 4.0);
  const double e0 = c3.conservative.energies[0];
  for (std::size_t k = 1; k < c3.conservative.energies.size(); ++k)
    CHECK(c3.conservative.energies[k] <= c3.conservative.energies[k - 1] + 1e-12);
  CHECK(c3.nonlinear.final_energy() < 0.95 * e0);
  CHECK(c3.linear_damped.final_energy() < c3.nonlinear.final_energy());
  CHECK(c3.nonlinear.has_snapshots);
  CHECK(c3.nonlinear.stage_states.size() == c3.nonlinear.steps());
  for (std::size_t k = 1; k < c3.nonlinear.diss_damping.size(); ++k)
    CHECK(c3.nonlinear.diss_damping[k] >= -1e-14);
}

TEST_CASE("wave time viscosity acts blockwise as the squared Laplacian") {
  // (dt)^2 A*A = -(dt)^2 A^2 restricted to the wave blocks is the same
  // -Laplacian acting on each component.
  SemiDiscreteSystem sys = build_model(wave_spec(12, "power", 1.0));
  const int n = sys.grid_n;
  Mat A2 = Mat(sys.A) * Mat(sys.A);
  SpMat lap = laplacian_1d(n, sys.dx, BoundaryCondition::Dirichlet);
  Mat expected = Mat::Zero(2 * n, 2 * n);
  expected.topLeftCorner(n, n) = -Mat(lap);
  expected.bottomRightCorner(n, n) = -Mat(lap);
  CHECK((Mat(-A2) - expected).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("stage failure aborts with a partial record") {
  SemiDiscreteSystem sys = build_model(wave_spec(20, "power", 1.0));
  TimeScheme scheme;
  scheme.dt = 10.0;  // far beyond any contraction regime
  scheme.solver.max_iter = 1;
  Lcg64 rng(36);
  Vec u0 = initial_state(sys, InitialDataRule::Smooth, rng);
  TrajectoryRecord traj = simulate(sys, scheme, u0, 50.0);
  CHECK(traj.failed);
  CHECK(traj.failure_index == 0);
  CHECK(!traj.failure_message.empty());
}

TEST_CASE("record bookkeeping") {
  SemiDiscreteSystem sys = build_model(wave_spec(16, "power", 1.0));
  CHECK(default_dt(sys) == doctest::Approx(0.5 * sys.dx));
  TimeScheme scheme = scheme_for(sys);
  Lcg64 rng(37);
  Vec u0 = initial_state(sys, InitialDataRule::Smooth, rng);
  TrajectoryRecord traj = simulate(sys, scheme, u0, 20 * scheme.dt);
  REQUIRE(traj.times.size() == 21);
  for (std::size_t k = 1; k < traj.times.size(); ++k)
    CHECK(traj.times[k] - traj.times[k - 1] == doctest::Approx(scheme.dt).epsilon(1e-12));
  CHECK(traj.energies[0] == doctest::Approx(1.0).epsilon(1e-12));
}
