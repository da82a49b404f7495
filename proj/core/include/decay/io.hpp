#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "decay/analysis.hpp"
#include "decay/integrate.hpp"

namespace decay {

/// FNV-1a 64-bit hash, used as the run manifest content hash.
std::uint64_t fnv1a64(const std::string& text);
std::string hash_hex(std::uint64_t h);

/// Doubles are always written with "%.17g" so outputs are byte-stable.
std::string format_double(double v);

/// Manifest: the canonical config text plus its content hash. Every other
/// output file carries the same hash in a leading comment line.
void write_manifest(const std::string& path, const std::string& canonical_config,
                    const std::string& hash);

/// Trajectory CSV: header time,energy,diss_damping,diss_space_visc,
/// diss_time_visc,residual,iters after a "# manifest_hash=..." comment.
void write_trajectory_csv(const std::string& path, const TrajectoryRecord& traj,
                          const std::string& manifest_hash);

/// State snapshots as plain text: one "k t v_0 ... v_{dim-1}" row per kept step.
void write_snapshots(const std::string& path, const TrajectoryRecord& traj,
                     const std::string& manifest_hash);

void write_sweep_csv(const std::string& dir, const SweepResult& sweep,
                     const std::string& manifest_hash);

void write_audit_report(const std::string& path, const AuditReport& report,
                        const std::string& manifest_hash);

void write_gramian_report(const std::string& path, const GramianReport& report,
                          const std::string& manifest_hash);

std::string read_file(const std::string& path);
void ensure_directory(const std::string& dir);

}  // namespace decay
