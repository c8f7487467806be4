#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "membrane/config.hpp"
#include "membrane/diagnostics.hpp"
#include "membrane/hyperboloid.hpp"

namespace membrane::bundle {

// ---------------------------------------------------------------------------
// A run bundle is a directory holding everything needed to reread a run:
//   config.cfg    canonical config snapshot (reparsing reproduces the run)
//   energy.csv    one row per completed slice, frozen column set
//   identity.csv  energy-identity rows (planar runs; header only otherwise)
//   verdicts.json claim/anchor/statistic/threshold/pass objects
//   run.json      provenance: version, status, grid stats, wall time
// Numbers are written with round-trip precision, so a re-run at the same
// thread count reproduces the CSV bitwise.
// ---------------------------------------------------------------------------

struct GridStats {
    std::string geometry;  // "planar" | "radial"
    int points = 0;        // per axis (planar) or total (radial)
    double spacing = 0.0;
    double dt = 0.0;
    double extent = 0.0;  // half-width of the computational domain
};

struct RunOutcome {
    std::string status = "completed";  // completed | degeneracy | blowup
    std::string error;                 // human-readable cause when aborted
    double last_time = 0.0;            // coordinate time reached
    int steps = 0;
    double wall_seconds = 0.0;
};

// The frozen energy.csv column list, in order.
const std::vector<std::string>& energy_columns();

// Orders above m_diag are not measured and are written as nan.
void write_energy_csv(const std::filesystem::path& path,
                      const std::vector<EnergyRecord>& records, int m_diag);
std::vector<EnergyRecord> read_energy_csv(const std::filesystem::path& path);

void write_identity_csv(const std::filesystem::path& path,
                        const std::vector<IdentityRow>& rows);
std::vector<IdentityRow> read_identity_csv(const std::filesystem::path& path);

// Radial monitors measure the scalar columns only; the remaining columns are
// written as nan.  Radial runs are linear on the flat background, where the
// coefficient corrections vanish identically, so generalized = energy and
// ratio = 1 exactly.
std::vector<EnergyRecord> lift_radial_records(const std::vector<RadialEnergyRecord>& records);

// Every verdict derivable from one run: boundedness per order, decay-rate
// fits of the weighted sup-norms, energy equivalence, and the norm-ratio
// comparison between the end and the start of the run.
std::vector<Verdict> run_verdicts(const RunSeries& series);

// Writes the whole bundle; creates the directory.  Returns the verdicts it
// stored so the caller can echo them.
std::vector<Verdict> write_bundle(const std::filesystem::path& dir, const LabConfig& config,
                                  const GridStats& grid,
                                  const std::vector<EnergyRecord>& records,
                                  const std::vector<IdentityRow>& identity,
                                  const RunOutcome& outcome);

// Reread side: provenance fields needed to rebuild a RunSeries.
struct BundleInfo {
    std::filesystem::path dir;
    LabConfig config;
    GridStats grid;
    RunOutcome outcome;
    std::uint64_t scenario_hash = 0;
};

// Loads run.json + config.cfg (IoError when either is unreadable).
BundleInfo read_bundle_info(const std::filesystem::path& dir);

// Rebuilds the diagnostic series from a bundle's CSV (IoError when absent).
RunSeries read_series(const BundleInfo& info);

}  // namespace membrane::bundle
