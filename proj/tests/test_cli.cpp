#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "decay/io.hpp"
#include "decay/models.hpp"
#include "doctest.h"

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run_cli(const std::string& args, const std::string& dir) {
  const std::string out_file = dir + "/stdout.txt";
  const std::string err_file = dir + "/stderr.txt";
  const std::string cmd =
      std::string(DECAY_CLI_PATH) + " " + args + " > " + out_file + " 2> " + err_file;
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

std::string fresh_dir(const std::string& name) {
  const std::string dir = "/tmp/decay_cli/" + name;
  std::system(("rm -rf " + dir + " && mkdir -p " + dir).c_str());
  return dir;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

const char* kWaveConfig = R"(
model.kind = wave1d
model.n = 24
model.damping.support = 0.2,0.5
model.damping.alpha = 1.0
feedback.name = power
feedback.p = 3
scheme.dt_rule = half_dx
experiment.T_final = 1.0
seed = 7
)";

}  // namespace

TEST_CASE("simulate: output files, manifest hash, monotone energy") {
  const std::string dir = fresh_dir("simulate");
  write_file(dir + "/run.cfg", kWaveConfig);
  RunResult r = run_cli("simulate --config " + dir + "/run.cfg --out " + dir, dir);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("final_energy") != std::string::npos);
  CHECK(r.out.find("max_balance_residual") != std::string::npos);

  const std::string traj = slurp(dir + "/trajectory.csv");
  CHECK(traj.find("# manifest_hash=") == 0);
  CHECK(traj.find("time,energy,diss_damping,diss_space_visc,diss_time_visc,residual,"
                  "iters") != std::string::npos);
  const std::string manifest = slurp(dir + "/manifest.txt");
  CHECK(manifest.find("hash = ") != std::string::npos);
  CHECK(manifest.find("model.kind = wave1d") != std::string::npos);
}

TEST_CASE("missing feedback name exits 2 and names the key") {
  const std::string dir = fresh_dir("missing_key");
  write_file(dir + "/run.cfg", R"(
model.kind = wave1d
model.n = 16
experiment.T_final = 1.0
)");
  RunResult r = run_cli("simulate --config " + dir + "/run.cfg --out " + dir, dir);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("feedback.name") != std::string::npos);
}

TEST_CASE("undamped run prints a conservation report") {
  const std::string dir = fresh_dir("conservation");
  write_file(dir + "/run.cfg", R"(
model.kind = wave1d
model.n = 24
model.damping.alpha = 0.0
model.damping.support = 0.2,0.5
model.viscosity = none
feedback.name = power
feedback.p = 3
scheme.time_viscosity = none
experiment.T_final = 1.0
)");
  RunResult r = run_cli("simulate --config " + dir + "/run.cfg --out " + dir, dir);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("conservation: max |E - E0|/E0") != std::string::npos);
}

TEST_CASE("gramian on the 1-state observer prints C_T = 4") {
  const std::string dir = fresh_dir("gramian");
  // A = 0, B = 1, M = 1 as coordinate files.
  write_file(dir + "/A.txt", "1 0\n");
  write_file(dir + "/B.txt", "1 1\n0 0 1\n");
  write_file(dir + "/M.txt", "1 1\n0 0 1\n");
  write_file(dir + "/run.cfg", std::string(R"(
model.kind = custom
model.A_file = )") + dir + R"(/A.txt
model.B_file = )" + dir +
                                   R"(/B.txt
model.M_file = )" + dir + R"(/M.txt
feedback.name = linear
scheme.dt = 0.0625
scheme.time_viscosity = none
experiment.T_obs = 2.0
experiment.include_viscosity = false
)");
  RunResult r = run_cli("gramian --config " + dir + "/run.cfg --out " + dir, dir);
  CHECK(r.exit_code == 0);
  REQUIRE(r.out.find("C_T = ") == 0);
  const double ct = std::strtod(r.out.c_str() + 6, nullptr);
  CHECK(ct == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(slurp(dir + "/gramian.txt").find("C_T = ") != std::string::npos);
}

TEST_CASE("audit refuses disabled snapshots") {
  const std::string dir = fresh_dir("audit_snapshots");
  write_file(dir + "/run.cfg", std::string(kWaveConfig) +
                                   "record.snapshots = false\nexperiment.T_obs = 2.0\n");
  RunResult r = run_cli("audit --config " + dir + "/run.cfg --out " + dir, dir);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("record.snapshots") != std::string::npos);
}

TEST_CASE("audit runs clean on the wave model") {
  const std::string dir = fresh_dir("audit");
  write_file(dir + "/run.cfg", std::string(kWaveConfig) + "experiment.T_obs = 2.0\n");
  RunResult r = run_cli("audit --config " + dir + "/run.cfg --out " + dir, dir);
  CHECK(r.exit_code == 0);
  const std::string report = slurp(dir + "/audit.txt");
  CHECK(report.find("VIOLATED") == std::string::npos);
  CHECK(report.find("OK") != std::string::npos);
}

TEST_CASE("sweep determinism and assert thresholds") {
  const std::string dir_a = fresh_dir("sweep_a");
  const std::string dir_b = fresh_dir("sweep_b");
  const std::string cfg = R"(
model.kind = wave1d
model.n = 12
model.damping.support = 0.2,0.5
feedback.name = linear
experiment.T_final = 4.0
experiment.meshes = 12,16,24
experiment.q = 0.8
experiment.fit = exponential
experiment.fit_t0_frac = 0.3
seed = 11
)";
  write_file(dir_a + "/run.cfg", cfg);
  write_file(dir_b + "/run.cfg", cfg);
  RunResult ra =
      run_cli("sweep --config " + dir_a + "/run.cfg --out " + dir_a + " --jobs 2", dir_a);
  RunResult rb =
      run_cli("sweep --config " + dir_b + "/run.cfg --out " + dir_b + " --jobs 1", dir_b);
  CHECK(ra.exit_code == 0);
  CHECK(rb.exit_code == 0);
  for (const char* name : {"half_time.csv", "fit.csv", "envelope_ratio.csv"}) {
    const std::string a = slurp(dir_a + "/" + name);
    CHECK(!a.empty());
    CHECK(a == slurp(dir_b + "/" + name));  // byte-identical across runs and job counts
  }

  // Threshold assertion: these viscous cells are mesh-uniform, so demanding
  // a ratio >= 3 must fail with exit code 4.
  const std::string dir_c = fresh_dir("sweep_assert");
  write_file(dir_c + "/run.cfg",
             std::string(cfg) + "experiment.assert_uniformity_ge = 3.0\n");
  RunResult rc = run_cli(
      "sweep --config " + dir_c + "/run.cfg --out " + dir_c + " --assert", dir_c);
  CHECK(rc.exit_code == 4);
}
