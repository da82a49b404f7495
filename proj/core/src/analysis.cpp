#include "decay/analysis.hpp"

#include <Eigen/Eigenvalues>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "decay/errors.hpp"
#include "decay/io.hpp"
#include "decay/numerics.hpp"

namespace decay {

GramianReport gramian_constant(const SemiDiscreteSystem& sys, double T_obs,
                               bool include_viscosity, const TimeScheme& scheme) {
  if (sys.dim > 512)
    throw std::invalid_argument("gramian_constant: dimension exceeds the dense cap (512)");
  if (!(T_obs > 0.0)) throw std::invalid_argument("gramian_constant: T_obs must be positive");

  Integrator integ(sys, scheme, CompanionKind::Conservative);
  const double dt = scheme.dt;
  const long N = static_cast<long>(std::floor(T_obs / dt + 1e-9));
  if (N < 1) throw std::invalid_argument("gramian_constant: T_obs shorter than dt");

  const int dim = sys.dim;
  const double s = std::pow(sys.dx, sys.sigma);
  Mat Mdense = Mat(sys.M);

  // Observed quadratic form at the stage midpoints.
  Mat W_obs = Mat(SpMat(sys.M * sys.B));
  if (include_viscosity) W_obs += s * Mat(SpMat(sys.M * sys.V));

  const bool time_terms = scheme.time_viscosity != TimeViscosityKind::None;

  Mat Phi = Mat::Identity(dim, dim);
  Mat G = Mat::Zero(dim, dim);
  for (long k = 0; k < N; ++k) {
    auto [tilde, next] = integ.propagate(Phi);
    Mat mid = 0.5 * (Phi + tilde);
    G += dt * (mid.transpose() * W_obs * mid);
    if (time_terms) {
      // Vdt phi^{k+1} = (phi~ - phi^{k+1})/dt columnwise.
      Mat W = (tilde - next) / dt;
      Mat cross = next.transpose() * Mdense * W;
      G += dt * 0.5 * (cross + cross.transpose());
      G += (dt * dt) * (W.transpose() * Mdense * W);
    }
    Phi = std::move(next);
  }
  G = 0.5 * (G + G.transpose());

  Eigen::SelfAdjointEigenSolver<Mat> check(G);
  const double gscale = std::max(1.0, G.cwiseAbs().maxCoeff());
  if (check.eigenvalues().minCoeff() < -1e-10 * gscale)
    throw NumericsError("gramian_constant: Gramian has a significantly negative eigenvalue");

  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(G, 0.5 * Mdense);
  GramianReport report;
  report.T_obs = T_obs;
  report.C_T = std::max(0.0, es.eigenvalues().minCoeff());
  report.include_viscosity = include_viscosity;
  report.dim = dim;
  std::ostringstream method;
  method << "midpoint dt=" << dt << (time_terms ? " +time-viscosity-sums" : "")
         << (include_viscosity ? " +space-viscosity-observation" : "")
         << ", C_T normalized against E_phi(0)";
  report.method = method.str();
  return report;
}

HalfTimeResult half_time(const TrajectoryRecord& traj, double q) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("half_time: q must be in (0,1)");
  HalfTimeResult out;
  if (traj.energies.empty()) return out;
  const double e0 = traj.energies.front();
  if (!(e0 > 0.0)) return out;
  const double target = q * e0;
  for (std::size_t k = 0; k < traj.energies.size(); ++k) {
    if (traj.energies[k] <= target) {
      if (k == 0) {
        out.t = traj.times[0];
      } else {
        const double e_prev = traj.energies[k - 1], e_k = traj.energies[k];
        const double f = e_prev > e_k ? (e_prev - target) / (e_prev - e_k) : 1.0;
        out.t = traj.times[k - 1] + f * (traj.times[k] - traj.times[k - 1]);
      }
      out.reached = true;
      out.final_ratio = traj.energies.back() / e0;
      return out;
    }
  }
  out.final_ratio = traj.energies.back() / e0;
  return out;
}

FitResult fit_decay(const TrajectoryRecord& traj, double t_a, double t_b, FitModel model) {
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const double t = traj.times[k];
    if (t < t_a || t > t_b) continue;
    const double e = traj.energies[k];
    if (!(e > 0.0))
      throw std::invalid_argument("fit_decay: nonpositive energy inside the fit window");
    if (model == FitModel::Algebraic && !(t > 0.0)) continue;
    xs.push_back(model == FitModel::Algebraic ? std::log(t) : t);
    ys.push_back(std::log(e));
  }
  if (xs.size() < 10)
    throw NumericsError("fit_decay: fewer than 10 points in the fit window");
  LineFit lf = fit_line(xs.data(), ys.data(), static_cast<int>(xs.size()));
  FitResult out;
  out.slope = lf.slope;
  out.r_squared = lf.r2;
  out.points = static_cast<int>(xs.size());
  return out;
}

EnvelopeCheckResult envelope_check(const TrajectoryRecord& traj, const DecayEnvelope& env,
                                   double onset) {
  EnvelopeCheckResult out;
  out.onset_used = std::max(onset, env.onset());
  const std::size_t count = traj.times.size();
  std::size_t first = count;
  for (std::size_t k = 0; k < count; ++k) {
    if (traj.times[k] >= out.onset_used && traj.times[k] > 0.0) {
      first = k;
      break;
    }
  }
  if (first >= count)
    throw NumericsError("envelope_check: no trajectory samples at or after the onset");

  const std::size_t max_samples = 2048;
  const std::size_t stride = std::max<std::size_t>(1, (count - first) / max_samples);
  double max_ratio = 0.0;
  int used = 0;
  for (std::size_t k = first; k < count; k += stride) {
    const double v = env.eval(traj.times[k]);
    if (v > 0.0) {
      max_ratio = std::max(max_ratio, traj.energies[k] / v);
      ++used;
    }
  }
  {  // always include the final sample
    const double v = env.eval(traj.times[count - 1]);
    if (v > 0.0) max_ratio = std::max(max_ratio, traj.energies[count - 1] / v);
  }
  out.max_ratio = max_ratio;
  out.calibrated_prefactor = max_ratio * env.prefactor();
  out.samples = used;
  return out;
}

namespace {

struct QuadForms {
  SpMat MB, MV;
  double s = 0.0;  // dx^sigma
  const SemiDiscreteSystem* sys = nullptr;

  double bq(const Vec& x) const { return x.dot(MB * x); }      // |B^{1/2} x|_M^2
  double bFq(const Vec& f) const { return f.dot(MB * f); }     // |B^{1/2} f|_M^2
  double vq(const Vec& x) const { return s * x.dot(MV * x); }  // dx^s |V^{1/2} x|_M^2
};

}  // namespace

AuditReport lemma_audit(const SemiDiscreteSystem& sys, const TimeScheme& scheme,
                        const Vec& u0, double T_obs) {
  if (!(sys.normB > 0.0))
    throw NumericsError("lemma_audit: |B| unavailable (model too large or B = 0)");
  const double dt = scheme.dt;
  const long N = static_cast<long>(std::floor(T_obs / dt + 1e-9));
  if (N < 1) throw std::invalid_argument("lemma_audit: T_obs shorter than dt");

  QuadForms q;
  q.MB = SpMat(sys.M * sys.B);
  q.MV = SpMat(sys.M * sys.V);
  q.s = std::pow(sys.dx, sys.sigma);
  q.sys = &sys;

  AuditReport report;
  report.T_obs = N * dt;
  report.dt = dt;
  const double T = N * dt;
  const double nb = sys.normB;  // |B| = |B^{1/2}|^2

  auto ok_line = [](const std::string& name, double lhs, double rhs, double constant) {
    AuditLine l;
    l.name = name;
    l.lhs = lhs;
    l.rhs = rhs;
    l.slack = rhs - lhs;
    l.constant = constant;
    l.ok = l.slack >= -1e-12 * std::max(1.0, std::abs(rhs));
    return l;
  };

  // Space-setting comparisons: continuous-time integrals evaluated as
  // left-endpoint Riemann sums on companion runs without time viscosity.
  {
    TimeScheme plain = scheme;
    plain.time_viscosity = TimeViscosityKind::None;
    CompanionTrajectories c = simulate_linear_companions(sys, plain, u0, T_obs);
    if (c.nonlinear.failed || c.linear_damped.failed || c.conservative.failed)
      throw NumericsError("lemma_audit: companion simulation failed");

    double lhs1 = 0.0, rhs1 = 0.0, lhs2 = 0.0, rhs2 = 0.0;
    for (long k = 0; k < N; ++k) {
      const Vec& uk = c.nonlinear.states[k];
      const Vec& zk = c.linear_damped.states[k];
      const Vec& pk = c.conservative.states[k];
      const double obs_z = q.bq(zk) + q.vq(zk);
      lhs1 += dt * obs_z;
      rhs1 += 2.0 * dt * (q.bq(uk) + q.bFq(sys.F(uk)) + 2.0 * q.vq(uk));
      lhs2 += dt * (q.bq(pk) + q.vq(pk));
      rhs2 += dt * obs_z;
    }
    const double kT2 = 1.0 + T * T + T * T * nb + T * T * nb * nb;
    report.lines.push_back(ok_line("space_nonlinear_vs_damped", lhs1, rhs1, 2.0));
    report.lines.push_back(
        ok_line("space_damped_vs_conservative", lhs2, kT2 * rhs2, kT2));
  }

  // Time-setting comparisons: exact sums on runs with the scheme's own time
  // viscosity; Vdt x^{k+1} is recovered from the snapshots as (x~ - x)/dt.
  {
    CompanionTrajectories c = simulate_linear_companions(sys, scheme, u0, T_obs);
    if (c.nonlinear.failed || c.linear_damped.failed || c.conservative.failed)
      throw NumericsError("lemma_audit: companion simulation failed");

    auto mid = [](const TrajectoryRecord& t, long k) {
      return Vec(0.5 * (t.states[k] + t.stage_states[k]));
    };
    auto visc = [dt](const TrajectoryRecord& t, long k) {
      return Vec((t.stage_states[k] - t.states[k + 1]) / dt);
    };

    double b_mid_u = 0.0, bF_mid_u = 0.0, tv_u = 0.0, tv2_u = 0.0;
    double b_mid_z = 0.0, tv_z = 0.0, tv2_z = 0.0;
    double b_mid_p = 0.0, tv_p = 0.0, tv2_p = 0.0;
    for (long k = 0; k < N; ++k) {
      Vec mu = mid(c.nonlinear, k);
      Vec mz = mid(c.linear_damped, k);
      Vec mp = mid(c.conservative, k);
      b_mid_u += q.bq(mu);
      bF_mid_u += q.bFq(sys.F(mu));
      b_mid_z += q.bq(mz);
      b_mid_p += q.bq(mp);

      Vec wu = visc(c.nonlinear, k);
      Vec wz = visc(c.linear_damped, k);
      Vec wp = visc(c.conservative, k);
      tv_u += wu.dot(sys.M * c.nonlinear.states[k + 1]);
      tv_z += wz.dot(sys.M * c.linear_damped.states[k + 1]);
      tv_p += wp.dot(sys.M * c.conservative.states[k + 1]);
      tv2_u += wu.dot(sys.M * wu);
      tv2_z += wz.dot(sys.M * wz);
      tv2_p += wp.dot(sys.M * wp);
    }

    const double lhs3 = b_mid_z + tv_z + 0.5 * dt * tv2_z;
    const double rhs3 = 2.0 * b_mid_u + 2.0 * bF_mid_u + 2.0 * tv_u + dt * tv2_u;
    report.lines.push_back(ok_line("time_nonlinear_vs_damped", lhs3, rhs3, 2.0));

    const double kT4 =
        std::max(1.0 + std::pow(4.0 * T * T + 1.0, 2.0) * nb * nb, 2.0);
    const double lhs4 = 0.5 * b_mid_p + tv_p + 0.5 * dt * tv2_p;
    const double rhs4 = kT4 * (b_mid_z + tv_z + 0.5 * dt * tv2_z);
    report.lines.push_back(ok_line("time_damped_vs_conservative", lhs4, rhs4, kT4));
  }
  return report;
}

SweepResult uniformity_sweep(const SweepSpec& spec) {
  if (spec.meshes.size() < 3)
    throw std::invalid_argument("uniformity_sweep: need at least 3 meshes");

  SweepResult result;
  result.cells.resize(spec.meshes.size());

  // Calibration mesh = coarsest (largest dx).
  std::size_t cal_index = 0;
  for (std::size_t i = 1; i < spec.meshes.size(); ++i)
    if (spec.meshes[i] < spec.meshes[cal_index]) cal_index = i;

  struct CellRun {
    SemiDiscreteSystem sys;
    TrajectoryRecord traj;
    TimeScheme scheme;
    bool ok = false;
    std::string message;
  };
  std::vector<CellRun> runs(spec.meshes.size());

  auto run_cell = [&](std::size_t i) {
    CellRun& run = runs[i];
    SweepCell& cell = result.cells[i];
    cell.n = spec.meshes[i];
    try {
      ModelSpec ms = spec.base;
      ms.n = spec.meshes[i];
      if (!spec.viscosity_on) ms.viscosity = ViscosityKind::None;
      run.sys = build_model(ms);

      TimeScheme scheme;
      scheme.dt = spec.dt_rule == DtRule::HalfDx ? default_dt(run.sys) : spec.fixed_dt;
      scheme.time_viscosity =
          spec.viscosity_on ? TimeViscosityKind::Squared : TimeViscosityKind::None;
      scheme.solver = spec.solver;
      run.scheme = scheme;

      cell.dx = run.sys.dx;
      cell.dt = scheme.dt;
      {
        std::ostringstream manifest;
        manifest << "model=" << run.sys.kind << ";n=" << cell.n << ";dt=" << cell.dt
                 << ";visc=" << (spec.viscosity_on ? 1 : 0)
                 << ";u0=" << static_cast<int>(spec.u0_rule) << ";seed=" << spec.seed
                 << ";T=" << spec.T_final << ";q=" << spec.q;
        cell.manifest_hash = hash_hex(fnv1a64(manifest.str()));
      }

      Lcg64 rng(spec.seed);
      Vec u0 = initial_state(run.sys, spec.u0_rule, rng);
      run.traj = simulate(run.sys, scheme, u0, spec.T_final);
      if (run.traj.failed) {
        cell.failed = true;
        cell.message = run.traj.failure_message;
        return;
      }
      run.ok = true;
    } catch (const std::exception& e) {
      cell.failed = true;
      cell.message = e.what();
    }
  };

  if (spec.jobs > 1) {
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      for (std::size_t i = next.fetch_add(1); i < spec.meshes.size();
           i = next.fetch_add(1))
        run_cell(i);
    };
    std::vector<std::thread> pool;
    const int threads = std::min<int>(spec.jobs, static_cast<int>(spec.meshes.size()));
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  } else {
    for (std::size_t i = 0; i < spec.meshes.size(); ++i) run_cell(i);
  }

  // Optional single-calibration envelope metric.
  std::optional<DecayEnvelope> env;
  if (spec.envelope && runs[cal_index].ok) {
    try {
      const CellRun& cal = runs[cal_index];
      GramianReport gram =
          gramian_constant(cal.sys, spec.envelope_T_obs, spec.viscosity_on, cal.scheme);
      ConvexityProfile profile = ConvexityProfile::build(spec.base.feedback.growth, 1.0);
      const double E0 = cal.traj.energies.empty() ? 1.0 : cal.traj.energies.front();
      DecayEnvelope unit =
          make_envelope(profile, E0, spec.envelope_T_obs, std::max(gram.C_T, 1e-12),
                        std::max(cal.sys.normB, 1e-12), 1.0, spec.envelope_variant);
      EnvelopeCheckResult cal_check =
          envelope_check(cal.traj, unit, spec.envelope_onset);
      result.calibrated_prefactor = cal_check.calibrated_prefactor;
      env = unit.with_prefactor(std::max(cal_check.calibrated_prefactor, 1e-300));
    } catch (const std::exception& e) {
      result.cells[cal_index].message = std::string("envelope calibration: ") + e.what();
    }
  }

  double ht_min = std::numeric_limits<double>::infinity();
  double ht_max = 0.0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    SweepCell& cell = result.cells[i];
    if (!runs[i].ok) continue;
    const TrajectoryRecord& traj = runs[i].traj;
    cell.half_time = half_time(traj, spec.q);
    if (!traj.energies.empty() && traj.energies.back() > 0.0)
      cell.energy_drop = traj.energies.front() / traj.energies.back();
    try {
      cell.fit = fit_decay(traj, spec.fit_t0_frac * spec.T_final,
                           spec.fit_t1_frac * spec.T_final, spec.fit_model);
    } catch (const std::exception& e) {
      if (cell.message.empty()) cell.message = e.what();
    }
    if (env) {
      try {
        cell.envelope_max_ratio =
            envelope_check(traj, *env, spec.envelope_onset).max_ratio;
      } catch (const std::exception& e) {
        if (cell.message.empty()) cell.message = e.what();
      }
    }
    // Unreached thresholds enter at the horizon: the ratio is then only a
    // lower bound, which is the conservative direction for pathology checks.
    const double ht = cell.half_time.reached ? cell.half_time.t : spec.T_final;
    if (!cell.half_time.reached) result.lower_bound_only = true;
    ht_min = std::min(ht_min, ht);
    ht_max = std::max(ht_max, ht);
  }
  if (ht_min > 0.0 && std::isfinite(ht_min) && ht_max > 0.0)
    result.uniformity_ratio = ht_max / ht_min;
  return result;
}

IterationReport onestep_iteration_report(const ConvexityProfile& profile, double beta,
                                         const std::vector<double>& window_energies) {
  if (window_energies.size() < 2)
    throw std::invalid_argument("onestep_iteration_report: need at least two windows");
  const double s0sq = profile.growth().s0 * profile.growth().s0;
  ConvexityProfile prof = profile.with_beta(beta);

  auto big_m = [&](double x) { return x * prof.L_inv(x); };  // M(x) = x L^{-1}(x)

  std::vector<double> scaled(window_energies.size());
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    scaled[i] = window_energies[i] / beta;
    if (scaled[i] >= s0sq * (1.0 - 1e-12))
      throw std::domain_error(
          "onestep_iteration_report: beta too small, scaled energy reaches s0^2");
  }

  const double r = std::max(scaled[0], 1e-300);
  // rho_T makes the first window tight: E1 = E0 (1 - rho_T L^{-1}(E0)).
  double rho = 0.0;
  if (scaled[0] > 0.0 && big_m(scaled[0]) > 0.0)
    rho = (scaled[0] - scaled[1]) / big_m(scaled[0]);
  rho = std::min(std::max(rho, 1e-12), 1.0);

  auto K = [&](double tau) {
    return adaptive_simpson([&](double y) { return 1.0 / big_m(y); }, tau, r, 1e-10,
                            1e-10);
  };
  auto K_inv = [&](double v) {
    if (v <= 0.0) return r;
    double lo = r;
    int guard = 0;
    while (K(lo) < v) {
      lo *= 0.5;
      if (lo < 1e-280 || ++guard > 1000) return 0.0;
    }
    auto f = [&](double tau) { return v - K(tau); };  // increasing in tau
    return bisect_increasing(f, lo, r, 1e-10, 120);
  };

  IterationReport report;
  report.rho_T = rho;
  report.beta = beta;
  for (std::size_t p = 0; p < scaled.size(); ++p) {
    IterationRow row;
    row.window = static_cast<int>(p);
    row.energy = window_energies[p];
    row.measured_M = big_m(scaled[p]);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l <= p; ++l) {
      const double v = K_inv(rho * static_cast<double>(p - l)) / (l + 1.0);
      best = std::min(best, v);
    }
    row.bound = best / rho;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace decay
