// Command-line front end: configuration-driven simulate / sweep / audit /
// gramian / envelope runs with reproducible, hash-stamped outputs.

#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "decay/analysis.hpp"
#include "decay/errors.hpp"
#include "decay/io.hpp"
#include "decay/run.hpp"

namespace {

using namespace decay;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitThreshold = 4;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  bool assert_thresholds = false;
};

struct Loaded {
  Config cfg;
  std::string out_dir;
  std::string hash;
  Lcg64 rng;
};

Loaded load(const CommonArgs& args) {
  Config cfg = Config::parse_file(args.config_path);
  if (args.seed) cfg.set("seed", std::to_string(*args.seed));
  std::string out = !args.out_dir.empty() ? args.out_dir
                                          : cfg.get_string("output.dir", "out");
  ensure_directory(out);
  const std::string hash = manifest_hash_for(cfg);
  write_manifest(out + "/manifest.txt", cfg.canonical_text(), hash);
  return Loaded{cfg, out, hash, Lcg64(cfg.get_u64("seed", 1))};
}

int cmd_simulate(const CommonArgs& args) {
  Loaded run = load(args);
  const Config& cfg = run.cfg;

  SemiDiscreteSystem sys = build_model(model_from_config(cfg));
  TimeScheme scheme = scheme_from_config(cfg, sys.dx);
  Vec u0 = initial_state(sys, u0_rule_from_config(cfg), run.rng);
  const double T_final = cfg.get_double("experiment.T_final");

  RecordOptions opts;
  opts.snapshots = cfg.get_bool("record.snapshots", false);
  TrajectoryRecord traj = simulate(sys, scheme, u0, T_final, opts);

  write_trajectory_csv(run.out_dir + "/trajectory.csv", traj, run.hash);
  if (opts.snapshots) write_snapshots(run.out_dir + "/snapshots.txt", traj, run.hash);

  if (traj.failed) {
    std::cerr << "simulate: step " << traj.failure_index << " failed: "
              << traj.failure_message << "\n";
    return kExitNumerical;
  }

  std::cout << "final_energy = " << format_double(traj.final_energy()) << "\n";
  HalfTimeResult ht = half_time(traj, cfg.get_double("experiment.q", 0.5));
  if (ht.reached) {
    std::cout << "half_time = " << format_double(ht.t) << "\n";
  } else {
    std::cout << "half_time = not reached (final ratio "
              << format_double(ht.final_ratio) << ")\n";
  }
  std::cout << "max_balance_residual = " << format_double(traj.max_balance_residual())
            << "\n";
  if (sys.B.nonZeros() == 0) {
    double drift = 0.0;
    for (double e : traj.energies)
      drift = std::max(drift, std::abs(e - traj.energies[0]));
    std::cout << "conservation: max |E - E0|/E0 = "
              << format_double(drift / std::max(traj.energies[0], 1e-300)) << "\n";
  }
  return kExitOk;
}

int cmd_gramian(const CommonArgs& args) {
  Loaded run = load(args);
  const Config& cfg = run.cfg;
  SemiDiscreteSystem sys = build_model(model_from_config(cfg));
  TimeScheme scheme = scheme_from_config(cfg, sys.dx);
  GramianReport rep = gramian_constant(
      sys, cfg.get_double("experiment.T_obs"),
      cfg.get_bool("experiment.include_viscosity", true), scheme);
  write_gramian_report(run.out_dir + "/gramian.txt", rep, run.hash);
  std::cout << "C_T = " << format_double(rep.C_T) << "\n";
  return kExitOk;
}

int cmd_audit(const CommonArgs& args) {
  Loaded run = load(args);
  const Config& cfg = run.cfg;
  if (!cfg.get_bool("record.snapshots", true))
    throw ConfigError("record.snapshots: the audit needs full state snapshots");

  SemiDiscreteSystem sys = build_model(model_from_config(cfg));
  TimeScheme scheme = scheme_from_config(cfg, sys.dx);
  Vec u0 = initial_state(sys, u0_rule_from_config(cfg), run.rng);
  AuditReport rep = lemma_audit(sys, scheme, u0, cfg.get_double("experiment.T_obs"));
  write_audit_report(run.out_dir + "/audit.txt", rep, run.hash);
  for (const auto& line : rep.lines)
    std::cout << line.name << ": slack = " << format_double(line.slack) << " "
              << (line.ok ? "OK" : "VIOLATED") << "\n";
  if (!rep.all_ok()) {
    std::cerr << "audit: a comparison inequality is violated\n";
    return kExitNumerical;
  }
  return kExitOk;
}

int cmd_envelope(const CommonArgs& args) {
  Loaded run = load(args);
  const Config& cfg = run.cfg;

  SemiDiscreteSystem sys = build_model(model_from_config(cfg));
  TimeScheme scheme = scheme_from_config(cfg, sys.dx);
  Vec u0 = initial_state(sys, u0_rule_from_config(cfg), run.rng);
  const double T_final = cfg.get_double("experiment.T_final");
  const double T_obs = cfg.get_double("experiment.T_obs", 4.0);

  TrajectoryRecord traj = simulate(sys, scheme, u0, T_final);
  if (traj.failed) {
    std::cerr << "envelope: simulation failed at step " << traj.failure_index << "\n";
    return kExitNumerical;
  }

  double C_T = cfg.get_double("experiment.C_T", 0.0);
  if (C_T <= 0.0)
    C_T = gramian_constant(sys, T_obs, cfg.get_bool("experiment.include_viscosity", true),
                           scheme)
              .C_T;

  ConvexityProfile profile =
      ConvexityProfile::build(sys.feedback.growth, cfg.get_double("experiment.beta", 1.0));
  const double E0 = traj.energies.front();
  DecayEnvelope unit = make_envelope(profile, E0, T_obs, C_T, sys.normB, 1.0,
                                     envelope_variant_from_config(cfg));
  const double onset = cfg.get_double("experiment.onset", 1.0);
  EnvelopeCheckResult cal = envelope_check(traj, unit, onset);
  double prefactor = cfg.get_double("experiment.prefactor", 0.0);
  if (prefactor <= 0.0) prefactor = cal.calibrated_prefactor;
  DecayEnvelope env = unit.with_prefactor(prefactor);
  EnvelopeCheckResult chk = envelope_check(traj, env, onset);

  {
    std::ofstream out(run.out_dir + "/envelope.csv");
    out << "# manifest_hash=" << run.hash << "\n";
    out << "time,energy,envelope\n";
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
      const double t = traj.times[k];
      if (t < chk.onset_used) continue;
      out << format_double(t) << ',' << format_double(traj.energies[k]) << ','
          << format_double(env.eval(t)) << "\n";
    }
  }

  // One-step iteration display on the window energies E(k T_obs).
  std::vector<double> window_energies;
  for (double t = 0.0; t <= T_final + 1e-9; t += T_obs) {
    const std::size_t idx = std::min<std::size_t>(
        traj.times.size() - 1,
        static_cast<std::size_t>(std::llround(t / scheme.dt)));
    window_energies.push_back(traj.energies[idx]);
  }
  if (window_energies.size() >= 2) {
    const double beta =
        cfg.has("experiment.beta")
            ? cfg.get_double("experiment.beta")
            : recommended_beta(profile, E0, T_obs, std::max(sys.normB, 1e-12),
                               std::max(C_T, 1e-12));
    try {
      IterationReport rep =
          onestep_iteration_report(profile, beta, window_energies);
      std::ofstream out(run.out_dir + "/iteration.txt");
      out << "# manifest_hash=" << run.hash << "\n";
      out << "# one-step iteration E_{k+1} - E_k + rho_T M(E_k) <= 0, rho_T calibrated\n";
      out << "rho_T = " << format_double(rep.rho_T) << "\n";
      out << "beta = " << format_double(rep.beta) << "\n";
      out << "window energy measured_M bound\n";
      for (const auto& row : rep.rows)
        out << row.window << ' ' << format_double(row.energy) << ' '
            << format_double(row.measured_M) << ' ' << format_double(row.bound) << "\n";
    } catch (const std::exception& e) {
      std::cerr << "iteration display skipped: " << e.what() << "\n";
    }
  }

  std::cout << "C_T = " << format_double(C_T) << "\n";
  std::cout << "calibrated_prefactor = " << format_double(cal.calibrated_prefactor)
            << "\n";
  std::cout << "max_ratio = " << format_double(chk.max_ratio) << "\n";
  return kExitOk;
}

int cmd_sweep(const CommonArgs& args) {
  Loaded run = load(args);
  const Config& cfg = run.cfg;
  SweepSpec spec = sweep_from_config(cfg);
  spec.jobs = args.jobs > 0 ? args.jobs : 1;

  SweepResult sweep = uniformity_sweep(spec);
  write_sweep_csv(run.out_dir, sweep, run.hash);

  std::cout << "uniformity_ratio = " << format_double(sweep.uniformity_ratio)
            << (sweep.lower_bound_only ? " (lower bound)" : "") << "\n";
  for (const auto& cell : sweep.cells) {
    std::cout << "n=" << cell.n << " half_time="
              << (cell.half_time.reached ? format_double(cell.half_time.t)
                                         : std::string("not-reached"))
              << " fit_slope=" << format_double(cell.fit.slope)
              << " envelope_ratio=" << format_double(cell.envelope_max_ratio)
              << (cell.failed ? " FAILED" : "") << "\n";
    if (cell.failed) std::cerr << "cell n=" << cell.n << ": " << cell.message << "\n";
  }
  for (const auto& cell : sweep.cells)
    if (cell.failed) return kExitNumerical;

  if (args.assert_thresholds) {
    bool ok = true;
    if (cfg.has("experiment.assert_uniformity_le") &&
        !(sweep.uniformity_ratio <= cfg.get_double("experiment.assert_uniformity_le"))) {
      std::cerr << "assert: uniformity_ratio above "
                << cfg.get_double("experiment.assert_uniformity_le") << "\n";
      ok = false;
    }
    if (cfg.has("experiment.assert_uniformity_ge") &&
        !(sweep.uniformity_ratio >= cfg.get_double("experiment.assert_uniformity_ge"))) {
      std::cerr << "assert: uniformity_ratio below "
                << cfg.get_double("experiment.assert_uniformity_ge") << "\n";
      ok = false;
    }
    if (cfg.has("experiment.assert_envelope_ratio_le")) {
      const double cap = cfg.get_double("experiment.assert_envelope_ratio_le");
      for (const auto& cell : sweep.cells)
        if (!(cell.envelope_max_ratio <= cap)) {
          std::cerr << "assert: envelope ratio above " << cap << " at n=" << cell.n
                    << "\n";
          ok = false;
        }
    }
    if (!ok) return kExitThreshold;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decay: nonlinearly damped evolution systems, viscous "
               "discretizations, and sharp energy-decay envelopes"};
  app.require_subcommand(1);

  CommonArgs args;
  auto add_common = [&args](CLI::App* cmd) {
    cmd->add_option("--config", args.config_path, "config file (key = value)")
        ->required();
    cmd->add_option("--out", args.out_dir, "output directory (default: output.dir)");
    cmd->add_option("--jobs", args.jobs, "concurrent sweep cells");
    cmd->add_option("--seed", args.seed, "override the config seed");
  };

  CLI::App* simulate_cmd = app.add_subcommand("simulate", "run one trajectory");
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "mesh-uniformity sweep");
  CLI::App* audit_cmd = app.add_subcommand("audit", "comparison-lemma audit");
  CLI::App* gramian_cmd = app.add_subcommand("gramian", "observability constant");
  CLI::App* envelope_cmd = app.add_subcommand("envelope", "decay-envelope check");
  for (CLI::App* cmd : {simulate_cmd, sweep_cmd, audit_cmd, gramian_cmd, envelope_cmd})
    add_common(cmd);
  sweep_cmd->add_flag("--assert", args.assert_thresholds,
                      "exit 4 when configured thresholds fail");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate_cmd->parsed()) return cmd_simulate(args);
    if (sweep_cmd->parsed()) return cmd_sweep(args);
    if (audit_cmd->parsed()) return cmd_audit(args);
    if (gramian_cmd->parsed()) return cmd_gramian(args);
    if (envelope_cmd->parsed()) return cmd_envelope(args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitConfig;
}
