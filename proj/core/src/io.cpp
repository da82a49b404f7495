#include "decay/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "decay/errors.hpp"

namespace decay {

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write output file '" + path + "'");
  return out;
}

}  // namespace

void write_manifest(const std::string& path, const std::string& canonical_config,
                    const std::string& hash) {
  auto out = open_out(path);
  out << "# run manifest\n";
  out << "hash = " << hash << "\n";
  out << canonical_config;
}

void write_trajectory_csv(const std::string& path, const TrajectoryRecord& traj,
                          const std::string& manifest_hash) {
  auto out = open_out(path);
  out << "# manifest_hash=" << manifest_hash << "\n";
  out << "time,energy,diss_damping,diss_space_visc,diss_time_visc,residual,iters\n";
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    out << format_double(traj.times[k]) << ',' << format_double(traj.energies[k]) << ','
        << format_double(traj.diss_damping[k]) << ','
        << format_double(traj.diss_space_visc[k]) << ','
        << format_double(traj.diss_time_visc[k]) << ','
        << format_double(traj.balance_residual[k]) << ',' << traj.solver_iters[k]
        << "\n";
  }
}

void write_snapshots(const std::string& path, const TrajectoryRecord& traj,
                     const std::string& manifest_hash) {
  auto out = open_out(path);
  out << "# manifest_hash=" << manifest_hash << "\n";
  out << "# rows: step time state_components...\n";
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    out << k << ' ' << format_double(traj.times[k]);
    const Vec& u = traj.states[k];
    for (Eigen::Index i = 0; i < u.size(); ++i) out << ' ' << format_double(u[i]);
    out << "\n";
  }
}

void write_sweep_csv(const std::string& dir, const SweepResult& sweep,
                     const std::string& manifest_hash) {
  {
    auto out = open_out(dir + "/half_time.csv");
    out << "# manifest_hash=" << manifest_hash << "\n";
    out << "n,dx,dt,half_time,reached,final_ratio,cell_hash\n";
    for (const auto& c : sweep.cells) {
      out << c.n << ',' << format_double(c.dx) << ',' << format_double(c.dt) << ','
          << format_double(c.half_time.t) << ',' << (c.half_time.reached ? 1 : 0) << ','
          << format_double(c.half_time.final_ratio) << ',' << c.manifest_hash << "\n";
    }
  }
  {
    auto out = open_out(dir + "/fit.csv");
    out << "# manifest_hash=" << manifest_hash << "\n";
    out << "n,dx,dt,slope,r_squared,points,cell_hash\n";
    for (const auto& c : sweep.cells) {
      out << c.n << ',' << format_double(c.dx) << ',' << format_double(c.dt) << ','
          << format_double(c.fit.slope) << ',' << format_double(c.fit.r_squared) << ','
          << c.fit.points << ',' << c.manifest_hash << "\n";
    }
  }
  {
    auto out = open_out(dir + "/envelope_ratio.csv");
    out << "# manifest_hash=" << manifest_hash << "\n";
    out << "n,dx,dt,max_ratio,calibrated_prefactor,energy_drop,cell_hash\n";
    for (const auto& c : sweep.cells) {
      out << c.n << ',' << format_double(c.dx) << ',' << format_double(c.dt) << ','
          << format_double(c.envelope_max_ratio) << ','
          << format_double(sweep.calibrated_prefactor) << ','
          << format_double(c.energy_drop) << ',' << c.manifest_hash << "\n";
    }
  }
  {
    auto out = open_out(dir + "/summary.txt");
    out << "# manifest_hash=" << manifest_hash << "\n";
    out << "uniformity_ratio = " << format_double(sweep.uniformity_ratio)
        << (sweep.lower_bound_only ? " (lower bound: some cells never reached q E0)"
                                   : "")
        << "\n";
    out << "calibrated_prefactor = " << format_double(sweep.calibrated_prefactor) << "\n";
    for (const auto& c : sweep.cells) {
      if (c.failed) out << "cell n=" << c.n << " FAILED: " << c.message << "\n";
      else if (!c.message.empty()) out << "cell n=" << c.n << " note: " << c.message << "\n";
    }
  }
}

void write_audit_report(const std::string& path, const AuditReport& report,
                        const std::string& manifest_hash) {
  auto out = open_out(path);
  out << "# manifest_hash=" << manifest_hash << "\n";
  out << "# comparison-lemma audit, T = " << format_double(report.T_obs)
      << ", dt = " << format_double(report.dt) << "\n";
  for (const auto& l : report.lines) {
    out << l.name << ": lhs = " << format_double(l.lhs)
        << ", rhs = " << format_double(l.rhs) << ", slack = " << format_double(l.slack)
        << ", constant = " << format_double(l.constant) << ", "
        << (l.ok ? "OK" : "VIOLATED") << "\n";
  }
}

void write_gramian_report(const std::string& path, const GramianReport& report,
                          const std::string& manifest_hash) {
  auto out = open_out(path);
  out << "# manifest_hash=" << manifest_hash << "\n";
  out << "C_T = " << format_double(report.C_T) << "\n";
  out << "T_obs = " << format_double(report.T_obs) << "\n";
  out << "dim = " << report.dim << "\n";
  out << "include_viscosity = " << (report.include_viscosity ? "true" : "false") << "\n";
  out << "method = " << report.method << "\n";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "'");
}

}  // namespace decay
